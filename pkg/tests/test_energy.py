import pytest
from hypothesis import given, strategies as st

from consip.energy import (
    EnergyLedger,
    EnergyParams,
    FrameSizeModel,
    SlotEvent,
    charge_slot_events,
    data_rx_energy,
    data_tx_energy,
)


def test_frame_sizes():
    fs = FrameSizeModel()
    assert fs.l_tot(False) == 59
    assert fs.l_tot(True) == 77


@pytest.mark.parametrize("l_tot, tx, rx", [(59, 125.0, 141.7), (77, 161.0, 165.1), (1, 9.0, 66.3)])
def test_per_frame_energy(l_tot, tx, rx):
    assert data_tx_energy(l_tot) == pytest.approx(tx, abs=1e-9)
    assert data_rx_energy(l_tot) == pytest.approx(rx, abs=1e-9)


def test_zero_length_frame_rejected():
    with pytest.raises(ValueError):
        data_tx_energy(0)
    with pytest.raises(ValueError):
        data_rx_energy(0)


def test_negative_params_rejected():
    with pytest.raises(ValueError):
        EnergyParams(e_listen=-1.0)


def test_slot_event_charges():
    led = charge_slot_events(EnergyLedger(), SlotEvent.RX_IDLE)
    assert led.idle_listen == 138.0 and led.total == 138.0

    led = charge_slot_events(EnergyLedger(), SlotEvent.RX_FRAME, 59)
    assert led.data_rx == pytest.approx(141.7) and led.ack_tx == 106.0

    led = charge_slot_events(EnergyLedger(), SlotEvent.TX_ACKED, 59)
    assert led.data_tx == 125.0 and led.ack_rx == 79.0

    led = charge_slot_events(EnergyLedger(), SlotEvent.TX_NO_ACK, 59)
    assert led.data_tx == 125.0 and led.ack_rx == 0.0 and led.idle_listen == 138.0


def test_lossless_packet_costs_204_at_sender():
    led = charge_slot_events(EnergyLedger(), SlotEvent.TX_ACKED, 59)
    assert led.total == 204.0


events = st.lists(
    st.tuples(st.sampled_from(list(SlotEvent)), st.integers(1, 200), st.integers(1, 50)),
    max_size=40,
)


def _fill(ledger: EnergyLedger, evs) -> EnergyLedger:
    for ev, l_tot, n in evs:
        charge_slot_events(ledger, ev, l_tot, n)
    return ledger


@given(events)
def test_total_is_sum_of_categories(evs):
    led = _fill(EnergyLedger(), evs)
    parts = led.data_tx + led.data_rx + led.ack_tx + led.ack_rx + led.idle_listen
    assert led.total == parts


@given(events, events, st.floats(1.0, 1e6), st.floats(1.0, 1e6))
def test_power_invariant_under_splitting(a, b, ta, tb):
    first = _fill(EnergyLedger(elapsed_s=ta), a)
    second = _fill(EnergyLedger(elapsed_s=tb), b)
    whole = _fill(_fill(EnergyLedger(elapsed_s=ta + tb), a), b)
    merged = first.merge(second)
    assert merged.total == whole.total
    assert merged.power(merged.total) == pytest.approx(whole.power(whole.total), rel=1e-12)


@given(events)
def test_accumulators_never_decrease(evs):
    led = EnergyLedger()
    prev = (0.0,) * 5
    for ev, l_tot, n in evs:
        charge_slot_events(led, ev, l_tot, n)
        now = (led.data_tx, led.data_rx, led.ack_tx, led.ack_rx, led.idle_listen)
        assert all(x >= y for x, y in zip(now, prev))
        prev = now


def test_merge_rejects_mixed_params():
    with pytest.raises(ValueError):
        EnergyLedger().merge(EnergyLedger(EnergyParams(e_listen=1.0)))
