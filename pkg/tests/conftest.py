from dataclasses import replace

import pytest

from consip.simulator import LossParams, ScenarioConfig

DAY_S = 86400.0


@pytest.fixture
def short_cfg() -> ScenarioConfig:
    return ScenarioConfig(duration=2 * DAY_S)


@pytest.fixture
def lossless_cfg() -> ScenarioConfig:
    return ScenarioConfig(duration=DAY_S, losses=LossParams(0.0, 0.0))


def days(cfg: ScenarioConfig, n: float) -> ScenarioConfig:
    return replace(cfg, duration=n * DAY_S)
