"""Sender and receiver state machines of the hopping-function exchange protocol.

Every link owns two cells at distinct slot offsets: the current cell, used for
traffic, and a backup cell that is only bound to a hopping function while an
exchange is in progress.  The sender piggybacks the new hopping function on
data frames sent in its current cell and swaps cells as soon as one of them is
acknowledged.  The receiver listens on both cells (double listening) from the
moment it learns the new function until a frame shows up in the backup cell,
which proves the sender has switched.

All transitions are pure: they take a state and return ``(new_state, events)``
where ``events`` is a tuple of :class:`ExchangeEvent` used for timestamping.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from consip.hopping import (
    Cell,
    HoppingFunction,
    SlotframeConfig,
    cell_fires,
    hop_channel,
    validate_hopping,
)


class ConsistencyError(AssertionError):
    """A protocol invariant was violated; always a bug, never a runtime condition."""


class TxMode(enum.Enum):
    STEADY = "steady"
    EXCHANGE_PENDING = "exchange_pending"


class RxMode(enum.Enum):
    STEADY = "steady"
    DOUBLE_LISTENING = "double_listening"


class Via(enum.Enum):
    """Which receiver cell a frame arrived in."""

    CURR = "curr"
    BACK = "back"


class EventKind(enum.Enum):
    UPDATE_REQUEST = "UR"
    DOUBLE_LISTEN = "DL"
    SWAP = "SW"
    END = "E"
    ABORT = "ABORT"
    SUPERSEDED = "SUPERSEDED"


@dataclass(frozen=True)
class ExchangeEvent:
    kind: EventKind
    nu_id: int
    asn: Optional[int]


@dataclass(frozen=True)
class Frame:
    seq: int
    payload_len: int = 30
    ie: Optional[HoppingFunction] = None
    generated_at: int = 0


@dataclass(frozen=True)
class Transmit:
    cell: Cell
    channel: int
    frame: Frame


@dataclass(frozen=True)
class TxNodeState:
    mode: TxMode
    c_curr: Cell
    c_back: Cell
    pending_nu: Optional[HoppingFunction] = None

    @property
    def nu_id(self) -> int:
        return self.c_curr.binding.id


@dataclass(frozen=True)
class RxNodeState:
    mode: RxMode
    c_curr: Cell
    c_back: Cell

    @property
    def nu_id(self) -> int:
        return self.c_curr.binding.id


def initial_states(
    nu0: HoppingFunction, slot_i: int = 1, slot_j: int = 51, channel_offset: int = 0
) -> tuple[TxNodeState, RxNodeState]:
    if slot_i == slot_j:
        raise ValueError("current and backup cells need distinct slot offsets")
    c_curr = Cell(slot_i, channel_offset, nu0)
    c_back = Cell(slot_j, channel_offset, None)
    return TxNodeState(TxMode.STEADY, c_curr, c_back), RxNodeState(RxMode.STEADY, c_curr, c_back)


def swap(a: Cell, b: Cell) -> tuple[Cell, Cell]:
    """Exchange the roles of two cells; the caller rebinds them afterwards."""
    if a.slot_offset == b.slot_offset:
        raise ValueError("swap() needs cells at distinct slot offsets")
    return b, a


# --------------------------------------------------------------------------- TX


def tx_request_update(
    s: TxNodeState, nu_new: HoppingFunction, now: int
) -> tuple[TxNodeState, tuple[ExchangeEvent, ...]]:
    problem = validate_hopping(nu_new)
    if problem is not None:
        raise ValueError(f"invalid hopping function: {problem}")
    if nu_new.id == s.c_curr.binding.id:
        raise ValueError("new hopping function has the id already in use")
    events: tuple[ExchangeEvent, ...] = ()
    if s.mode is TxMode.EXCHANGE_PENDING:
        if nu_new.id == s.pending_nu.id:
            raise ValueError("hopping function is already being distributed")
        # on-the-fly replacement of the function being distributed
        events = (ExchangeEvent(EventKind.SUPERSEDED, s.pending_nu.id, now),)
    new = replace(s, mode=TxMode.EXCHANGE_PENDING, pending_nu=nu_new)
    return new, events + (ExchangeEvent(EventKind.UPDATE_REQUEST, nu_new.id, now),)


def tx_slot_action(
    s: TxNodeState, x: int, queue_head: Optional[Frame], cfg: SlotframeConfig
) -> Optional[Transmit]:
    """What the sender does in slot ``x``: a :class:`Transmit` or ``None`` (sleep).

    The backup cell is never used for transmission.
    """
    if queue_head is None or not cell_fires(x, s.c_curr, cfg):
        return None
    frame = queue_head
    if frame.ie is not s.pending_nu:
        frame = replace(frame, ie=s.pending_nu)
    ch = hop_channel(x, s.c_curr.channel_offset, s.c_curr.binding)
    return Transmit(s.c_curr, ch, frame)


def tx_on_ack(
    s: TxNodeState, acked_frame: Frame, now: int
) -> tuple[TxNodeState, tuple[ExchangeEvent, ...]]:
    ie = acked_frame.ie
    if ie is None or s.mode is not TxMode.EXCHANGE_PENDING or ie.id != s.pending_nu.id:
        return s, ()
    new_curr, new_back = swap(s.c_curr, s.c_back)
    new = TxNodeState(
        TxMode.STEADY,
        new_curr.bound_to(s.pending_nu),
        new_back.bound_to(None),
        None,
    )
    return new, (ExchangeEvent(EventKind.SWAP, ie.id, now),)


def tx_abort(
    s: TxNodeState, now: Optional[int] = None
) -> tuple[TxNodeState, tuple[ExchangeEvent, ...]]:
    if s.mode is TxMode.STEADY:
        return s, ()
    new = replace(s, mode=TxMode.STEADY, pending_nu=None)
    return new, (ExchangeEvent(EventKind.ABORT, s.pending_nu.id, now),)


# --------------------------------------------------------------------------- RX


def rx_listening_set(s: RxNodeState, x: int, cfg: SlotframeConfig) -> list[tuple[Cell, int]]:
    out = []
    if cell_fires(x, s.c_curr, cfg):
        out.append((s.c_curr, hop_channel(x, s.c_curr.channel_offset, s.c_curr.binding)))
    if s.mode is RxMode.DOUBLE_LISTENING and cell_fires(x, s.c_back, cfg):
        out.append((s.c_back, hop_channel(x, s.c_back.channel_offset, s.c_back.binding)))
    return out


def rx_on_frame(
    s: RxNodeState, f: Frame, via: Via, now: int
) -> tuple[RxNodeState, tuple[ExchangeEvent, ...]]:
    cell = s.c_curr if via is Via.CURR else s.c_back
    if not cell.active or (via is Via.BACK and s.mode is not RxMode.DOUBLE_LISTENING):
        raise ConsistencyError(f"frame {f.seq} received at ASN {now} through inactive cell {cell}")
    ie = f.ie

    if s.mode is RxMode.STEADY:
        if ie is None:
            return s, ()
        if ie.id == s.c_curr.binding.id:
            raise ConsistencyError(f"IE at ASN {now} announces the hopping function already in use")
        new = RxNodeState(RxMode.DOUBLE_LISTENING, s.c_curr, s.c_back.bound_to(ie))
        return new, (ExchangeEvent(EventKind.DOUBLE_LISTEN, ie.id, now),)

    if via is Via.CURR:
        if ie is None or ie.id == s.c_back.binding.id:
            # plain traffic on the old function, or a retransmitted IE
            return s, ()
        new = replace(s, c_back=s.c_back.bound_to(ie))
        return new, (ExchangeEvent(EventKind.DOUBLE_LISTEN, ie.id, now),)

    # arrival in the backup cell: the sender has switched
    finished = s.c_back.binding.id
    new_curr, new_back = swap(s.c_curr, s.c_back)
    if ie is None:
        new = RxNodeState(RxMode.STEADY, new_curr, new_back.bound_to(None))
        return new, (ExchangeEvent(EventKind.END, finished, now),)
    if ie.id == finished:
        raise ConsistencyError(f"IE at ASN {now} re-announces the function it was received on")
    new = RxNodeState(RxMode.DOUBLE_LISTENING, new_curr, new_back.bound_to(ie))
    return new, (
        ExchangeEvent(EventKind.END, finished, now),
        ExchangeEvent(EventKind.DOUBLE_LISTEN, ie.id, now),
    )


# --------------------------------------------------------------------------- invariants


def check_tx(s: TxNodeState) -> None:
    if s.c_curr.slot_offset == s.c_back.slot_offset:
        raise ConsistencyError("TX cells share a slot offset")
    if not s.c_curr.active or s.c_back.active:
        raise ConsistencyError("TX must have exactly one active cell (the current one)")
    if (s.mode is TxMode.STEADY) != (s.pending_nu is None):
        raise ConsistencyError("TX pending hopping function does not match its mode")


def check_rx(s: RxNodeState) -> None:
    if s.c_curr.slot_offset == s.c_back.slot_offset:
        raise ConsistencyError("RX cells share a slot offset")
    if not s.c_curr.active:
        raise ConsistencyError("RX current cell is inactive")
    if s.mode is RxMode.STEADY and s.c_back.active:
        raise ConsistencyError("RX backup cell active while steady")
    if s.mode is RxMode.DOUBLE_LISTENING:
        if not s.c_back.active:
            raise ConsistencyError("RX double listening without a bound backup cell")
        if s.c_back.binding.id == s.c_curr.binding.id:
            raise ConsistencyError("RX double listening on the same hopping function twice")


def match_listener(tx: Transmit, listening: Iterable[tuple[Cell, int]], rx: RxNodeState) -> Optional[Via]:
    """Receiver cell that hears ``tx``, or ``None`` if the two ends disagree.

    Agreement requires the same slot offset, the same physical channel and the
    same hopping-function version.
    """
    off = tx.cell.slot_offset
    hid = tx.cell.binding.id
    for cell, ch in listening:
        if cell.slot_offset == off and ch == tx.channel and cell.binding.id == hid:
            return Via.CURR if off == rx.c_curr.slot_offset else Via.BACK
    return None


# --------------------------------------------------------------------------- timestamps


@dataclass
class ExchangeRecord:
    nu_id: int
    t_ur: int
    t_dl: Optional[int] = None
    t_sw: Optional[int] = None
    t_e: Optional[int] = None
    aborted: bool = False

    @property
    def complete(self) -> bool:
        return self.t_e is not None and not self.aborted

    @property
    def d_sw(self) -> int:
        return self.t_sw - self.t_ur

    @property
    def d_dl(self) -> int:
        return self.t_e - self.t_dl

    @property
    def d_tot(self) -> int:
        return self.t_e - self.t_ur


@dataclass
class ExchangeBook:
    """Builds :class:`ExchangeRecord` objects from FSM events."""

    records: dict[int, ExchangeRecord] = field(default_factory=dict)

    def apply(self, events: Iterable[ExchangeEvent]) -> list[ExchangeRecord]:
        """Apply events; return the records completed by them."""
        done = []
        for ev in events:
            if ev.kind is EventKind.UPDATE_REQUEST:
                self.records[ev.nu_id] = ExchangeRecord(ev.nu_id, ev.asn)
                continue
            rec = self.records[ev.nu_id]
            if ev.kind is EventKind.DOUBLE_LISTEN:
                if rec.t_dl is None:
                    rec.t_dl = ev.asn
            elif ev.kind is EventKind.SWAP:
                rec.t_sw = ev.asn
            elif ev.kind is EventKind.END:
                rec.t_e = ev.asn
                if not rec.aborted:
                    check_record(rec)
                    done.append(rec)
            else:
                rec.aborted = True
        return done

    def completed(self) -> list[ExchangeRecord]:
        return [r for r in self.records.values() if r.complete]

    def aborted(self) -> list[ExchangeRecord]:
        return [r for r in self.records.values() if r.aborted]


def check_record(rec: ExchangeRecord) -> None:
    if None in (rec.t_dl, rec.t_sw, rec.t_e):
        raise ConsistencyError(f"exchange {rec.nu_id} ended without all timestamps: {rec}")
    if not (rec.t_ur <= rec.t_dl <= rec.t_e and rec.t_ur <= rec.t_sw <= rec.t_e):
        raise ConsistencyError(f"exchange {rec.nu_id} timestamps out of order: {rec}")
