"""Event-driven single-link TSCH simulation with hopping-function exchanges.

The loop only visits slots in which the sender's current cell fires while a
frame is queued; everything in between is accounted for arithmetically
(receiver idle listening is the number of firings of its listened cells minus
the frames it actually received).

Timing conventions:

* frame ``k`` is generated at ASN ``k * t_app`` and may be sent in that slot;
* update requests happen at ASN ``m * t_update`` (m >= 1), together with a
  frame generation and before any transmission in that slot;
* application latency runs from generation to the end of the slot in which
  the frame is first received, i.e. ``asn - generated_at + 1`` slots;
* exchange timestamps are raw ASNs.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from consip.energy import EnergyLedger, EnergyParams, FrameSizeModel, SlotEvent, charge_slot_events
from consip.fsm import (
    ConsistencyError,
    ExchangeBook,
    Frame,
    HoppingFunction,
    RxMode,
    TxMode,
    check_rx,
    check_tx,
    initial_states,
    match_listener,
    rx_listening_set,
    rx_on_frame,
    tx_on_ack,
    tx_request_update,
    tx_slot_action,
)
from consip.hopping import ALL_CHANNELS, SlotframeConfig, count_firings, random_hopping
from consip.medium import LossModel, Outcome, read_trace
from consip.metrics import SlotHistogram, Summary, summarize

YEAR_S = 365 * 24 * 3600.0


@dataclass(frozen=True)
class LossParams:
    eps_f: float = 0.126
    eps_a: float = 0.08
    trace_file: Optional[str] = None


@dataclass(frozen=True)
class ScenarioConfig:
    slotframe: SlotframeConfig = field(default_factory=SlotframeConfig)
    n_ch: int = 16
    t_app: float = 30.0  # s
    t_update: Optional[float] = 30.0  # min; None disables update requests
    duration: float = YEAR_S  # simulated s
    consip_enabled: bool = True
    slot_i: int = 1
    slot_j: int = 51
    channel_offset: int = 0
    frames: FrameSizeModel = field(default_factory=FrameSizeModel)
    losses: LossParams = field(default_factory=LossParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    seed: int = 1

    def validate(self) -> None:
        n = self.slotframe.n_slots
        if self.slot_i == self.slot_j:
            raise ValueError("slot_i and slot_j must differ")
        for name in ("slot_i", "slot_j"):
            if not 0 <= getattr(self, name) < n:
                raise ValueError(f"{name} must be in [0, {n})")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        if self.t_app <= 0:
            raise ValueError("t_app must be > 0")
        t_app = self.slotframe.to_slots(self.t_app)
        if self.consip_enabled and self.t_update is not None:
            if self.t_update <= 0:
                raise ValueError("t_update must be > 0")
            t_upd = self.slotframe.to_slots(self.t_update * 60.0)
            if t_upd % t_app:
                raise ValueError("t_update must be an integer multiple of t_app")
        if not 1 <= self.n_ch <= len(ALL_CHANNELS):
            raise ValueError("n_ch must be in [1, 16]")

    @property
    def n_nu(self) -> Optional[float]:
        """Samples per channel available between two updates (informational)."""
        if self.t_update is None:
            return None
        return self.t_update * 60.0 / (self.t_app * self.n_ch)


@dataclass
class PowerRow:
    """Average power per category, µW."""

    p_tx_tot_tx: float
    p_rx_rx: float
    p_listen_rx: float
    delta_pct: Optional[float] = None

    @property
    def p_tot_rx(self) -> float:
        return self.p_rx_rx + self.p_listen_rx

    @property
    def p_tot(self) -> float:
        return self.p_tx_tot_tx + self.p_tot_rx


@dataclass
class SimReport:
    config: ScenarioConfig
    power: PowerRow
    tx_ledger: EnergyLedger
    rx_ledger: EnergyLedger
    latency_hist: SlotHistogram
    d_sw_hist: SlotHistogram
    d_dl_hist: SlotHistogram
    d_tot_hist: SlotHistogram
    generated: int = 0
    delivered: int = 0
    duplicates: int = 0
    backlog: int = 0
    attempts: int = 0
    exchanges_requested: int = 0
    exchanges_completed: int = 0
    exchanges_aborted: int = 0
    elapsed_slots: int = 0

    @property
    def slot_s(self) -> float:
        return self.config.slotframe.slot_s

    @property
    def latency(self) -> Optional[Summary]:
        return summarize(self.latency_hist, self.slot_s)

    @property
    def d_sw(self) -> Optional[Summary]:
        return summarize(self.d_sw_hist, self.slot_s)

    @property
    def d_dl(self) -> Optional[Summary]:
        return summarize(self.d_dl_hist, self.slot_s)

    @property
    def d_tot(self) -> Optional[Summary]:
        return summarize(self.d_tot_hist, self.slot_s)


class _Listening:
    """Tracks which receiver slot offsets are listened to, and since when."""

    def __init__(self, n_slots: int, offsets: Sequence[int]):
        self.n_slots = n_slots
        self.since = {o: 0 for o in offsets}
        self.firings = 0

    def update(self, offsets: set[int], asn: int) -> None:
        # a change made in slot asn takes effect from slot asn + 1
        for o in list(self.since):
            if o not in offsets:
                self.firings += count_firings(o, self.since.pop(o), asn + 1, self.n_slots)
        for o in offsets:
            if o not in self.since:
                self.since[o] = asn + 1

    def close(self, end: int) -> int:
        for o, start in self.since.items():
            self.firings += count_firings(o, start, end, self.n_slots)
        self.since = {}
        return self.firings


def _rx_offsets(rx) -> set[int]:
    if rx.mode is RxMode.DOUBLE_LISTENING:
        return {rx.c_curr.slot_offset, rx.c_back.slot_offset}
    return {rx.c_curr.slot_offset}


def run(cfg: ScenarioConfig, fast: bool = True, check_states: bool = False) -> SimReport:
    """Simulate one scenario.

    ``fast`` enables an inlined loop for stretches in which both nodes are
    steady; it yields results identical to the reference path.  With
    ``check_states`` every FSM state is checked against its invariants.
    Raises :class:`ConsistencyError` on any protocol violation.
    """
    cfg.validate()
    sf = cfg.slotframe
    n = sf.n_slots
    end = sf.to_slots(cfg.duration)
    T = sf.to_slots(cfg.t_app)
    U = None
    if cfg.consip_enabled and cfg.t_update is not None:
        U = sf.to_slots(cfg.t_update * 60.0)
    n_gen = -(-end // T)  # frames k with k*T < end

    if cfg.losses.trace_file:
        loss = LossModel.from_trace(read_trace(cfg.losses.trace_file))
        fast = False
    else:
        loss = LossModel(cfg.losses.eps_f, cfg.losses.eps_a, seed=cfg.seed)
    nu_rng = np.random.default_rng([cfg.seed, 0x6E75])

    sizes = cfg.frames
    l_plain = sizes.l_tot(False)
    l_ie = sizes.l_tot(True)
    tx_led = EnergyLedger(cfg.energy)
    rx_led = EnergyLedger(cfg.energy)
    lat: dict[int, int] = {}
    book = ExchangeBook()
    log: deque = deque(maxlen=48)

    nu0 = HoppingFunction(0, ALL_CHANNELS[: cfg.n_ch])
    tx, rx = initial_states(nu0, cfg.slot_i, cfg.slot_j, cfg.channel_offset)
    listening = _Listening(n, [cfg.slot_i])

    next_hid = 1
    next_u = U if U is not None else math.inf
    head = 0
    head_delivered = False
    cursor = 0
    attempts = duplicates = requested = 0

    def fail(msg: str) -> None:
        raise ConsistencyError(msg + "\nrecent steps:\n  " + "\n  ".join(log))

    tf, ta = loss.t_frame, loss.t_ack
    uniform = loss.uniform

    while head < n_gen:
        steady = tx.mode is TxMode.STEADY and rx.mode is RxMode.STEADY
        if steady and tx.c_curr != rx.c_curr:
            fail(f"both nodes steady on different cells/functions: {tx.c_curr} vs {rx.c_curr}")

        if steady and fast:
            off = tx.c_curr.slot_offset
            limit = min(next_u, end)
            n_ok = n_nolack = n_rx = 0
            while head < n_gen:
                gen = head * T
                t = cursor if cursor > gen else gen
                x = t + (off - t) % n
                if x >= limit:
                    break
                u = uniform()
                if u < tf:
                    n_nolack += 1
                else:
                    n_rx += 1
                    if head_delivered:
                        duplicates += 1
                    else:
                        d = x - gen + 1
                        lat[d] = lat.get(d, 0) + 1
                        head_delivered = True
                    if u < ta:
                        n_nolack += 1
                    else:
                        n_ok += 1
                        head += 1
                        head_delivered = False
                cursor = x + 1
            attempts += n_ok + n_nolack
            if n_ok:
                charge_slot_events(tx_led, SlotEvent.TX_ACKED, l_plain, n_ok)
            if n_nolack:
                charge_slot_events(tx_led, SlotEvent.TX_NO_ACK, l_plain, n_nolack)
            if n_rx:
                charge_slot_events(rx_led, SlotEvent.RX_FRAME, l_plain, n_rx)
            if head >= n_gen:
                break
            # fall through: the next slot holds an update request or lies past the end

        gen = head * T
        t = cursor if cursor > gen else gen
        off = tx.c_curr.slot_offset
        x = t + (off - t) % n
        if next_u <= x and next_u < end:
            nu = random_hopping(nu_rng, next_hid)
            next_hid += 1
            tx, events = tx_request_update(tx, nu, next_u)
            book.apply(events)
            requested += 1
            log.append(f"ASN {next_u}: update request -> nu#{nu.id}")
            next_u += U
            continue
        if x >= end:
            break

        # reference path: one attempt through the state machines
        frame = Frame(head, sizes.l_payload, None, gen)
        act = tx_slot_action(tx, x, frame, sf)
        if act is None:
            fail(f"sender idle at ASN {x} although its current cell fires with a frame queued")
        heard = rx_listening_set(rx, x, sf)
        via = match_listener(act, heard, rx)
        if via is None:
            fail(
                f"channel disagreement at ASN {x}: TX sends on offset {act.cell.slot_offset} "
                f"ch {act.channel} (nu#{act.cell.binding.id}), RX listens {[(c.slot_offset, ch, c.binding.id) for c, ch in heard]}"
            )
        outcome = loss.attempt_outcome()
        attempts += 1
        l_tot = l_ie if act.frame.ie is not None else l_plain
        ie_txt = f" IE nu#{act.frame.ie.id}" if act.frame.ie is not None else ""
        log.append(f"ASN {x}: F{head}{ie_txt} off {off} ch {act.channel} via {via.value} -> {outcome.value}")

        if outcome.frame_delivered:
            charge_slot_events(rx_led, SlotEvent.RX_FRAME, l_tot)
            if head_delivered:
                duplicates += 1
            else:
                d = x - gen + 1
                lat[d] = lat.get(d, 0) + 1
                head_delivered = True
            before = rx.mode, rx.c_curr, rx.c_back
            rx, events = rx_on_frame(rx, act.frame, via, x)
            if (rx.mode, rx.c_curr, rx.c_back) != before:
                listening.update(_rx_offsets(rx), x)
            book.apply(events)
        if outcome is Outcome.DELIVERED:
            charge_slot_events(tx_led, SlotEvent.TX_ACKED, l_tot)
            tx, events = tx_on_ack(tx, act.frame, x)
            book.apply(events)
            head += 1
            head_delivered = False
        else:
            charge_slot_events(tx_led, SlotEvent.TX_NO_ACK, l_tot)
        if check_states:
            check_tx(tx)
            check_rx(rx)
        cursor = x + 1

    listens = listening.close(end)
    idle = listens - rx_led.n_data_rx
    if idle < 0:
        raise ConsistencyError("more receptions than listened cell firings")
    charge_slot_events(rx_led, SlotEvent.RX_IDLE, count=idle)
    elapsed = end * sf.slot_s
    tx_led.elapsed_s = rx_led.elapsed_s = elapsed

    lat_hist = SlotHistogram()
    for d, c in lat.items():
        lat_hist.record(d, c)
    sw, dl, tot = SlotHistogram(), SlotHistogram(), SlotHistogram()
    done = book.completed()
    for r in done:
        sw.record(r.d_sw)
        dl.record(r.d_dl)
        tot.record(r.d_tot)

    power = PowerRow(
        p_tx_tot_tx=tx_led.power(tx_led.total),
        p_rx_rx=rx_led.power(rx_led.data_rx + rx_led.ack_tx),
        p_listen_rx=rx_led.power(rx_led.idle_listen),
    )
    return SimReport(
        config=cfg,
        power=power,
        tx_ledger=tx_led,
        rx_ledger=rx_led,
        latency_hist=lat_hist,
        d_sw_hist=sw,
        d_dl_hist=dl,
        d_tot_hist=tot,
        generated=n_gen,
        delivered=lat_hist.total,
        duplicates=duplicates,
        backlog=n_gen - head,
        attempts=attempts,
        exchanges_requested=requested,
        exchanges_completed=len(done),
        exchanges_aborted=len(book.aborted()),
        elapsed_slots=end,
    )


def _run_many(cfgs: Sequence[ScenarioConfig], jobs: int = 1) -> list[SimReport]:
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(run, cfgs))
    return [run(c) for c in cfgs]


def paired_sweep(base: ScenarioConfig, t_updates: Sequence[float], jobs: int = 1) -> list[SimReport]:
    """Disabled baseline followed by one enabled run per update period.

    All runs share ``base.seed``; each enabled report carries the relative
    change of total power against the baseline, in percent.
    """
    cfgs = [replace(base, consip_enabled=False)]
    cfgs += [replace(base, consip_enabled=True, t_update=tu) for tu in t_updates]
    reports = _run_many(cfgs, jobs)
    ref = reports[0].power.p_tot
    for r in reports[1:]:
        r.power.delta_pct = (r.power.p_tot - ref) / ref * 100.0 if ref > 0 else None
    return reports


def ie_size_sweep(
    base: ScenarioConfig, sizes: Sequence[int], jobs: int = 1
) -> tuple[SimReport, list[SimReport]]:
    """Baseline plus one enabled run per IE payload size, paired seeds."""
    cfgs = [replace(base, consip_enabled=False)]
    cfgs += [replace(base, consip_enabled=True, frames=replace(base.frames, l_ie_p=s)) for s in sizes]
    reports = _run_many(cfgs, jobs)
    ref = reports[0].power.p_tot
    for r in reports[1:]:
        r.power.delta_pct = (r.power.p_tot - ref) / ref * 100.0
    return reports[0], reports[1:]


@dataclass
class PlacementReport:
    spaced: SimReport
    contiguous: SimReport

    @property
    def mean_latency_diff_s(self) -> float:
        return abs(self.spaced.latency.mean - self.contiguous.latency.mean)

    @property
    def p_tot_diff_pct(self) -> float:
        a, b = self.spaced.power.p_tot, self.contiguous.power.p_tot
        return abs(a - b) / a * 100.0


def placement_experiment(
    base: ScenarioConfig, spaced_j: int = 51, contiguous_j: int = 2, jobs: int = 1
) -> PlacementReport:
    cfgs = [replace(base, consip_enabled=True, slot_j=j) for j in (spaced_j, contiguous_j)]
    for c in cfgs:
        c.validate()
    a, b = _run_many(cfgs, jobs)
    return PlacementReport(a, b)


# --------------------------------------------------------------------------- table rows

POWER_COLUMNS = ("P_tx_tot_TX", "P_rx_RX", "P_listen_RX", "P_tot_RX", "P_tot")
LATENCY_COLUMNS = ("mu_d", "sigma_d", "d_p99", "d_p99_9", "d_max")


def _q3(v: float) -> int:
    return int(round(v * 1000.0))


def _fmt_q3(q: int) -> str:
    sign = "-" if q < 0 else ""
    q = abs(q)
    return f"{sign}{q // 1000}.{q % 1000:03d}"


def fmt3(v: Optional[float]) -> str:
    return "" if v is None else _fmt_q3(_q3(v))


def power_cells(p: PowerRow) -> dict[str, str]:
    """Power columns at 3 decimals; totals are sums of the rounded parts, so
    the row identities hold exactly in the printed table."""
    tx, rx, lis = _q3(p.p_tx_tot_tx), _q3(p.p_rx_rx), _q3(p.p_listen_rx)
    return {
        "P_tx_tot_TX": _fmt_q3(tx),
        "P_rx_RX": _fmt_q3(rx),
        "P_listen_RX": _fmt_q3(lis),
        "P_tot_RX": _fmt_q3(rx + lis),
        "P_tot": _fmt_q3(tx + rx + lis),
    }


def latency_cells(s: Optional[Summary]) -> dict[str, str]:
    if s is None:
        return dict.fromkeys(LATENCY_COLUMNS, "")
    return {
        "mu_d": fmt3(s.mean),
        "sigma_d": fmt3(s.stddev),
        "d_p99": fmt3(s.p99),
        "d_p99_9": fmt3(s.p999),
        "d_max": fmt3(s.max),
    }


def table1_row(r: SimReport) -> dict[str, str]:
    c = r.config
    enabled = c.consip_enabled
    row = {
        "listing": "enabled" if enabled else "disabled",
        "t_app_s": f"{c.t_app:g}",
        "t_update_min": f"{c.t_update:g}" if enabled and c.t_update is not None else "-",
        "n_nu": f"{c.n_nu:.2f}" if enabled and c.n_nu is not None else "-",
    }
    row.update(power_cells(r.power))
    d = r.power.delta_pct
    row["delta_pct"] = "-" if d is None else f"{d:+.3f}"
    row.update(latency_cells(r.latency))
    row["duration_years"] = f"{c.duration / YEAR_S:g}"
    return row
