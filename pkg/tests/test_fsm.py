import pytest
from hypothesis import given, strategies as st

from consip.fsm import (
    ConsistencyError,
    EventKind,
    ExchangeBook,
    ExchangeEvent,
    ExchangeRecord,
    Frame,
    RxMode,
    TxMode,
    Via,
    check_record,
    check_rx,
    check_tx,
    initial_states,
    match_listener,
    rx_listening_set,
    rx_on_frame,
    swap,
    tx_abort,
    tx_on_ack,
    tx_request_update,
    tx_slot_action,
)
from consip.hopping import ALL_CHANNELS, Cell, HoppingFunction, SlotframeConfig, hop_channel

CFG = SlotframeConfig()
NU_O = HoppingFunction(0, ALL_CHANNELS)
NU_N = HoppingFunction(1, tuple(reversed(ALL_CHANNELS)))
NU_N2 = HoppingFunction(2, ALL_CHANNELS[8:] + ALL_CHANNELS[:8])
I, J = 1, 51


def slot(cycle: int, offset: int) -> int:
    return cycle * CFG.n_slots + offset


@pytest.fixture
def steady():
    return initial_states(NU_O, I, J)


def kinds(events):
    return [e.kind for e in events]


# ---- TX


def test_request_enters_exchange_pending(steady):
    tx, _ = steady
    tx2, ev = tx_request_update(tx, NU_N, 100)
    assert tx2.mode is TxMode.EXCHANGE_PENDING and tx2.pending_nu == NU_N
    assert ev == (ExchangeEvent(EventKind.UPDATE_REQUEST, 1, 100),)
    act = tx_slot_action(tx2, slot(2, I), Frame(0), CFG)
    assert act.frame.ie == NU_N


def test_request_while_pending_replaces_function(steady):
    tx, _ = steady
    tx, _ = tx_request_update(tx, NU_N, 100)
    tx, ev = tx_request_update(tx, NU_N2, 200)
    assert tx.pending_nu == NU_N2
    assert kinds(ev) == [EventKind.SUPERSEDED, EventKind.UPDATE_REQUEST]
    assert tx_slot_action(tx, slot(3, I), Frame(0), CFG).frame.ie == NU_N2


def test_request_rejections(steady):
    tx, _ = steady
    with pytest.raises(ValueError):
        tx_request_update(tx, HoppingFunction(0, (11, 12)), 0)
    with pytest.raises(ValueError):
        tx_request_update(tx, HoppingFunction(5, (11, 11)), 0)
    tx, _ = tx_request_update(tx, NU_N, 0)
    with pytest.raises(ValueError):
        tx_request_update(tx, NU_N, 1)


def test_steady_transmits_without_ie(steady):
    tx, _ = steady
    act = tx_slot_action(tx, slot(1, I), Frame(3), CFG)
    assert act.cell == tx.c_curr and act.frame.ie is None
    assert act.channel == hop_channel(slot(1, I), 0, NU_O)


def test_tx_sleeps_in_backup_slot_and_without_data(steady):
    tx, _ = steady
    tx, _ = tx_request_update(tx, NU_N, 0)
    assert tx_slot_action(tx, slot(1, J), Frame(0), CFG) is None
    assert tx_slot_action(tx, slot(1, I), None, CFG) is None


def test_ack_of_ie_frame_swaps(steady):
    tx, _ = steady
    tx, _ = tx_request_update(tx, NU_N, 0)
    act = tx_slot_action(tx, slot(2, I), Frame(0), CFG)
    tx, ev = tx_on_ack(tx, act.frame, slot(2, I))
    assert tx.mode is TxMode.STEADY
    assert tx.c_curr == Cell(J, 0, NU_N) and tx.c_back == Cell(I, 0, None)
    assert ev == (ExchangeEvent(EventKind.SWAP, 1, slot(2, I)),)


def test_ack_of_plain_frame_is_noop(steady):
    tx, _ = steady
    assert tx_on_ack(tx, Frame(0), 5) == (tx, ())


def test_lost_ack_keeps_retransmitting_same_ie(steady):
    tx, _ = steady
    tx, _ = tx_request_update(tx, NU_N2, 0)
    for cycle in range(5, 9):
        assert tx_slot_action(tx, slot(cycle, I), Frame(1), CFG).frame.ie == NU_N2


def test_ack_of_superseded_ie_is_ignored(steady):
    tx, _ = steady
    tx, _ = tx_request_update(tx, NU_N, 0)
    old = tx_slot_action(tx, slot(1, I), Frame(0), CFG).frame
    tx, _ = tx_request_update(tx, NU_N2, 150)
    assert tx_on_ack(tx, old, 200) == (tx, ())


def test_abort(steady):
    tx, _ = steady
    assert tx_abort(tx) == (tx, ())
    pend, _ = tx_request_update(tx, NU_N, 0)
    back, ev = tx_abort(pend, 10)
    assert back == tx
    assert ev == (ExchangeEvent(EventKind.ABORT, 1, 10),)


def test_abort_after_receiver_double_listens(steady):
    tx, rx = steady
    tx, _ = tx_request_update(tx, NU_N, 0)
    x = slot(2, I)
    act = tx_slot_action(tx, x, Frame(0), CFG)
    rx, _ = rx_on_frame(rx, act.frame, Via.CURR, x)  # ACK lost
    tx, _ = tx_abort(tx, x + 1)
    assert tx.mode is TxMode.STEADY and rx.mode is RxMode.DOUBLE_LISTENING
    # TX keeps using the old function and RX still hears it
    y = slot(3, I)
    act = tx_slot_action(tx, y, Frame(1), CFG)
    assert match_listener(act, rx_listening_set(rx, y, CFG), rx) is Via.CURR


# ---- RX


def test_listening_sets(steady):
    _, rx = steady
    assert rx_listening_set(rx, slot(0, I), CFG) == [(rx.c_curr, hop_channel(slot(0, I), 0, NU_O))]
    dl, _ = rx_on_frame(rx, Frame(0, ie=NU_N), Via.CURR, slot(2, I))
    assert rx_listening_set(dl, slot(2, J), CFG) == [(dl.c_back, hop_channel(slot(2, J), 0, NU_N))]
    assert rx_listening_set(dl, slot(2, 30), CFG) == []


def test_ie_starts_double_listening(steady):
    _, rx = steady
    rx2, ev = rx_on_frame(rx, Frame(0, ie=NU_N), Via.CURR, slot(2, I))
    assert rx2.mode is RxMode.DOUBLE_LISTENING
    assert rx2.c_curr == rx.c_curr and rx2.c_back == Cell(J, 0, NU_N)
    assert kinds(ev) == [EventKind.DOUBLE_LISTEN]


def test_plain_frame_in_backup_ends_exchange(steady):
    _, rx = steady
    rx, _ = rx_on_frame(rx, Frame(0, ie=NU_N), Via.CURR, slot(2, I))
    rx, ev = rx_on_frame(rx, Frame(1), Via.BACK, slot(3, J))
    assert rx.mode is RxMode.STEADY
    assert rx.c_curr == Cell(J, 0, NU_N) and rx.c_back == Cell(I, 0, None)
    assert ev == (ExchangeEvent(EventKind.END, 1, slot(3, J)),)


def test_plain_frame_in_current_while_double_listening(steady):
    _, rx = steady
    rx, _ = rx_on_frame(rx, Frame(0, ie=NU_N), Via.CURR, slot(2, I))
    assert rx_on_frame(rx, Frame(1), Via.CURR, slot(3, I)) == (rx, ())
    assert rx_on_frame(rx, Frame(1, ie=NU_N), Via.CURR, slot(3, I)) == (rx, ())


def test_replacement_ie_rebinds_backup(steady):
    _, rx = steady
    rx, _ = rx_on_frame(rx, Frame(0, ie=NU_N), Via.CURR, slot(2, I))
    rx, ev = rx_on_frame(rx, Frame(1, ie=NU_N2), Via.CURR, slot(3, I))
    assert rx.mode is RxMode.DOUBLE_LISTENING and rx.c_back.binding == NU_N2
    assert kinds(ev) == [EventKind.DOUBLE_LISTEN]


def test_ie_in_backup_chains_exchanges(steady):
    _, rx = steady
    rx, _ = rx_on_frame(rx, Frame(0, ie=NU_N), Via.CURR, slot(2, I))
    rx, ev = rx_on_frame(rx, Frame(1, ie=NU_N2), Via.BACK, slot(3, J))
    assert rx.mode is RxMode.DOUBLE_LISTENING
    assert rx.c_curr == Cell(J, 0, NU_N) and rx.c_back == Cell(I, 0, NU_N2)
    assert kinds(ev) == [EventKind.END, EventKind.DOUBLE_LISTEN]


def test_reception_through_inactive_cell_raises(steady):
    _, rx = steady
    with pytest.raises(ConsistencyError):
        rx_on_frame(rx, Frame(0), Via.BACK, slot(1, J))
    with pytest.raises(ConsistencyError):
        rx_on_frame(rx, Frame(0, ie=NU_O), Via.CURR, slot(1, I))


# ---- swap and invariants


def test_swap():
    a, b = Cell(I, 0, NU_O), Cell(J, 0, NU_N)
    c, d = swap(a, b)
    assert (c, d) == (b, a)
    assert (c, d.bound_to(None)) == (Cell(J, 0, NU_N), Cell(I, 0, None))
    with pytest.raises(ValueError):
        swap(Cell(3), Cell(3, 1))
    with pytest.raises(ValueError):
        initial_states(NU_O, 4, 4)


@given(st.integers(0, 100), st.integers(0, 100))
def test_swap_is_an_involution(i, j):
    a, b = Cell(i, 0, NU_O), Cell(j, 0, None)
    if i == j:
        with pytest.raises(ValueError):
            swap(a, b)
    else:
        assert swap(*swap(a, b)) == (a, b)


def test_state_checks(steady):
    tx, rx = steady
    check_tx(tx)
    check_rx(rx)
    with pytest.raises(ConsistencyError):
        check_tx(tx.__class__(tx.mode, tx.c_curr, tx.c_back.bound_to(NU_N)))
    with pytest.raises(ConsistencyError):
        check_rx(rx.__class__(RxMode.DOUBLE_LISTENING, rx.c_curr, rx.c_back))


# ---- exchange bookkeeping


def test_exchange_book_timestamps():
    book = ExchangeBook()
    book.apply([ExchangeEvent(EventKind.UPDATE_REQUEST, 1, 100)])
    book.apply([ExchangeEvent(EventKind.DOUBLE_LISTEN, 1, 203)])
    book.apply([ExchangeEvent(EventKind.DOUBLE_LISTEN, 1, 304)])  # first one wins
    book.apply([ExchangeEvent(EventKind.SWAP, 1, 304)])
    done = book.apply([ExchangeEvent(EventKind.END, 1, 1600)])
    (rec,) = done
    assert (rec.t_ur, rec.t_dl, rec.t_sw, rec.t_e) == (100, 203, 304, 1600)
    assert (rec.d_sw, rec.d_dl, rec.d_tot) == (204, 1397, 1500)
    check_record(rec)
    assert book.completed() == [rec]


def test_exchange_book_marks_superseded_and_aborted():
    book = ExchangeBook()
    book.apply([ExchangeEvent(EventKind.UPDATE_REQUEST, 1, 0)])
    book.apply([ExchangeEvent(EventKind.SUPERSEDED, 1, 50), ExchangeEvent(EventKind.UPDATE_REQUEST, 2, 50)])
    book.apply([ExchangeEvent(EventKind.ABORT, 2, 60)])
    assert [r.nu_id for r in book.aborted()] == [1, 2]
    assert book.completed() == []


def test_check_record_rejects_bad_order():
    with pytest.raises(ConsistencyError):
        check_record(ExchangeRecord(1, t_ur=10, t_dl=20, t_sw=5, t_e=30))
