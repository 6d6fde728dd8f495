"""Per-attempt link outcomes: seeded random losses or a replayed trace.

Random mode draws one uniform per attempt from numpy's PCG64 generator
(``numpy.random.default_rng(seed)``), in blocks.  Thresholds are applied so
that the frame is lost with probability ``eps_f`` and, given delivery, the ACK
is lost with probability ``eps_a``.

Trace files hold one token per line: ``F`` (frame lost), ``A`` (ACK lost),
``D`` (delivered).  Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

_BLOCK = 4096


class Outcome(enum.Enum):
    FRAME_LOST = "F"
    ACK_LOST = "A"
    DELIVERED = "D"

    @property
    def frame_delivered(self) -> bool:
        return self is not Outcome.FRAME_LOST

    @property
    def acked(self) -> bool:
        return self is Outcome.DELIVERED


class TraceExhausted(RuntimeError):
    pass


class LossModel:
    """Source of :class:`Outcome` values, one per transmission attempt."""

    def __init__(
        self,
        eps_f: float = 0.126,
        eps_a: float = 0.08,
        seed: int = 0,
        trace: Optional[Sequence[Outcome]] = None,
    ):
        if not 0.0 <= eps_f < 1.0 and trace is None:
            raise ValueError(f"eps_f must be in [0, 1), got {eps_f}")
        if not 0.0 <= eps_a < 1.0 and trace is None:
            raise ValueError(f"eps_a must be in [0, 1), got {eps_a}")
        self.eps_f = eps_f
        self.eps_a = eps_a
        self.seed = seed
        self.trace = None if trace is None else list(trace)
        self.calls = 0
        # u < t_frame: frame lost; u < t_ack: ACK lost; else delivered
        self.t_frame = eps_f
        self.t_ack = eps_f + (1.0 - eps_f) * eps_a
        self._rng = np.random.default_rng(seed)
        self._buf: list[float] = []
        self._pos = 0

    @property
    def mode(self) -> str:
        return "random" if self.trace is None else "trace"

    @classmethod
    def from_trace(cls, outcomes: Iterable[Outcome]) -> "LossModel":
        return cls(trace=list(outcomes))

    def uniform(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._rng.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def attempt_outcome(self) -> Outcome:
        i = self.calls
        self.calls += 1
        if self.trace is not None:
            if i >= len(self.trace):
                raise TraceExhausted(f"trace exhausted after {len(self.trace)} outcomes")
            return self.trace[i]
        u = self.uniform()
        if u < self.t_frame:
            return Outcome.FRAME_LOST
        if u < self.t_ack:
            return Outcome.ACK_LOST
        return Outcome.DELIVERED


def attempt_outcome(m: LossModel) -> Outcome:
    return m.attempt_outcome()


def parse_trace(text: str) -> list[Outcome]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        token = line.split("#", 1)[0].strip()
        if not token:
            continue
        try:
            out.append(Outcome(token.upper()))
        except ValueError:
            raise ValueError(f"line {lineno}: unknown outcome token {token!r}") from None
    return out


def format_trace(outcomes: Iterable[Outcome], comment: Optional[str] = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.extend(o.value for o in outcomes)
    return "\n".join(lines) + "\n"


def read_trace(path: str | Path) -> list[Outcome]:
    return parse_trace(Path(path).read_text())


def write_trace(path: str | Path, outcomes: Iterable[Outcome], comment: Optional[str] = None) -> None:
    Path(path).write_text(format_trace(outcomes, comment))
