"""Bounded exhaustive checking of the exchange protocol over all loss patterns.

The link is modelled with saturated traffic: the sender has a frame for
every firing of its current cell.  Firing ``k`` happens in slotframe ``k``, at
the slot offset of whatever cell the sender currently uses.  Each firing has
one of three outcomes (frame lost, ACK lost, delivered); a horizon of ``h``
firings therefore has ``3**h`` outcome paths, all of which are enumerated.
Update requests and aborts are scripted at chosen firings.

Checked on every step:

* channel agreement: the sender's slot offset, channel and function version
  are among what the receiver listens to;
* no joint state where both ends are steady on different functions;
* completion bound: after the sender swaps, the next frame the receiver gets
  leaves the receiver's current cell on the sender's new function.

Checked at the end of each path: if the sender had an exchange pending and
the last two firings were both delivered (with no scripted event in between),
both ends are steady on the same cell and function.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from consip.fsm import (
    ConsistencyError,
    Frame,
    RxMode,
    RxNodeState,
    TxMode,
    TxNodeState,
    Via,
    check_rx,
    check_tx,
    initial_states,
    match_listener,
    rx_listening_set,
    rx_on_frame,
    tx_abort,
    tx_on_ack,
    tx_request_update,
    tx_slot_action,
)
from consip.hopping import ALL_CHANNELS, HoppingFunction, SlotframeConfig
from consip.medium import LossModel, Outcome, format_trace

MAX_HORIZON = 12
OUTCOMES = (Outcome.DELIVERED, Outcome.ACK_LOST, Outcome.FRAME_LOST)

RxTransition = Callable[[RxNodeState, Frame, Via, int], tuple]


@dataclass(frozen=True)
class ScriptEvent:
    firing: int
    action: str  # "request" or "abort"

    def __post_init__(self) -> None:
        if self.action not in ("request", "abort"):
            raise ValueError(f"unknown scripted action {self.action!r}")
        if self.firing < 0:
            raise ValueError("scripted firing index must be >= 0")


@dataclass(frozen=True)
class ExchangeScript:
    events: tuple[ScriptEvent, ...] = (ScriptEvent(0, "request"),)

    @classmethod
    def parse(cls, text: str) -> "ExchangeScript":
        """Parse ``"request@0,abort@2"``; a request while one is pending replaces it."""
        events = []
        for part in filter(None, (p.strip() for p in text.split(","))):
            action, _, at = part.partition("@")
            events.append(ScriptEvent(int(at or 0), action.strip()))
        return cls(tuple(sorted(events, key=lambda e: e.firing)))

    def at(self, firing: int) -> list[str]:
        return [e.action for e in self.events if e.firing == firing]

    def __str__(self) -> str:
        return ",".join(f"{e.action}@{e.firing}" for e in self.events)


def scripted_hopping(hid: int) -> HoppingFunction:
    k = (5 * hid) % len(ALL_CHANNELS)
    return HoppingFunction(hid, ALL_CHANNELS[k:] + ALL_CHANNELS[:k])


@dataclass(frozen=True)
class JointState:
    tx: TxNodeState
    rx: RxNodeState
    next_id: int = 1
    awaiting: Optional[int] = None  # function the sender swapped to, unconfirmed by a frame


@dataclass
class Counterexample:
    outcomes: list[Outcome]
    reason: str
    states: list[str]
    script: str

    def trace_text(self) -> str:
        comment = [f"counterexample: {self.reason}", f"script: {self.script}"]
        comment += [f"state[{k}]: {s}" for k, s in enumerate(self.states)]
        return format_trace(self.outcomes, "\n".join(comment))


@dataclass
class VerifyResult:
    horizon: int
    script: str
    paths: int = 0
    transitions: int = 0
    distinct_states: int = 0
    counterexample: Optional[Counterexample] = None

    @property
    def ok(self) -> bool:
        return self.counterexample is None


def describe(js: JointState) -> str:
    def cell(c):
        return f"({c.slot_offset},{'-' if c.binding is None else 'nu#%d' % c.binding.id})"

    tx, rx = js.tx, js.rx
    pend = f" pending nu#{tx.pending_nu.id}" if tx.pending_nu is not None else ""
    return (
        f"TX {tx.mode.value} curr={cell(tx.c_curr)} back={cell(tx.c_back)}{pend} | "
        f"RX {rx.mode.value} curr={cell(rx.c_curr)} back={cell(rx.c_back)}"
    )


def initial_joint(slot_i: int = 1, slot_j: int = 51) -> JointState:
    tx, rx = initial_states(HoppingFunction(0, ALL_CHANNELS), slot_i, slot_j)
    return JointState(tx, rx)


def apply_script(js: JointState, actions: Sequence[str], now: int) -> JointState:
    tx, next_id = js.tx, js.next_id
    for action in actions:
        if action == "request":
            tx, _ = tx_request_update(tx, scripted_hopping(next_id), now)
            next_id += 1
        else:
            tx, _ = tx_abort(tx, now)
    return replace(js, tx=tx, next_id=next_id)


def step(
    js: JointState,
    k: int,
    outcome: Outcome,
    cfg: SlotframeConfig,
    rx_transition: RxTransition = rx_on_frame,
) -> tuple[JointState, Optional[str]]:
    """One firing with a given outcome. Returns the new state and a violation, if any."""
    x = k * cfg.n_slots + js.tx.c_curr.slot_offset
    act = tx_slot_action(js.tx, x, Frame(k, generated_at=x), cfg)
    heard = rx_listening_set(js.rx, x, cfg)
    via = match_listener(act, heard, js.rx)
    if via is None:
        return js, (
            f"channel disagreement at firing {k} (ASN {x}): TX on offset {act.cell.slot_offset} "
            f"ch {act.channel} nu#{act.cell.binding.id}, RX hears "
            f"{[(c.slot_offset, ch, c.binding.id) for c, ch in heard]}"
        )
    tx, rx, awaiting = js.tx, js.rx, js.awaiting
    try:
        if outcome.frame_delivered:
            rx, _ = rx_transition(rx, act.frame, via, x)
            if awaiting is not None:
                if rx.c_curr.binding.id != awaiting:
                    return js, f"frame after swap to nu#{awaiting} did not complete the exchange at firing {k}"
                awaiting = None
        if outcome.acked:
            tx, events = tx_on_ack(tx, act.frame, x)
            if events:
                awaiting = tx.c_curr.binding.id
        check_tx(tx)
        check_rx(rx)
    except ConsistencyError as e:
        return js, f"invariant violated at firing {k}: {e}"
    if tx.mode is TxMode.STEADY and rx.mode is RxMode.STEADY and tx.c_curr != rx.c_curr:
        return js, f"both ends steady on different functions after firing {k}"
    return JointState(tx, rx, js.next_id, awaiting), None


def _progress_violation(path: list[JointState], outcomes: list[Outcome], script: ExchangeScript) -> Optional[str]:
    h = len(outcomes)
    if h < 2 or outcomes[-1] is not Outcome.DELIVERED or outcomes[-2] is not Outcome.DELIVERED:
        return None
    if script.at(h - 2) or script.at(h - 1):
        return None
    before = path[-3]
    if before.tx.mode is not TxMode.EXCHANGE_PENDING:
        return None
    target = before.tx.pending_nu.id
    end = path[-1]
    if not (
        end.tx.mode is TxMode.STEADY
        and end.rx.mode is RxMode.STEADY
        and end.tx.c_curr == end.rx.c_curr
        and end.tx.c_curr.binding.id == target
    ):
        return f"two deliveries did not complete the exchange to nu#{target}: {describe(end)}"
    return None


def verify(
    horizon: int,
    script: Optional[ExchangeScript] = None,
    slot_i: int = 1,
    slot_j: int = 51,
    cfg: Optional[SlotframeConfig] = None,
    rx_transition: RxTransition = rx_on_frame,
) -> VerifyResult:
    if not 1 <= horizon <= MAX_HORIZON:
        raise ValueError(f"horizon must be in [1, {MAX_HORIZON}] (3**horizon paths)")
    script = script or ExchangeScript()
    cfg = cfg or SlotframeConfig()
    res = VerifyResult(horizon, str(script))
    seen: set = set()
    best: list = []  # [len, outcomes, reason, states]

    def fail(outcomes, reason, states):
        if not best or len(outcomes) < best[0]:
            best[:] = [len(outcomes), list(outcomes), reason, [describe(s) for s in states]]

    def explore(js: JointState, outcomes: list[Outcome], path: list[JointState]) -> None:
        k = len(outcomes)
        if best and k >= best[0]:
            return
        if k == horizon:
            res.paths += 1
            msg = _progress_violation(path, outcomes, script)
            if msg:
                fail(outcomes, msg, path)
            return
        try:
            js = apply_script(js, script.at(k), k * cfg.n_slots)
        except ValueError as e:
            raise ValueError(f"script cannot be applied at firing {k}: {e}") from None
        for o in OUTCOMES:
            nxt, msg = step(js, k, o, cfg, rx_transition)
            res.transitions += 1
            outcomes.append(o)
            if msg:
                fail(outcomes, msg, path + [js])
            else:
                seen.add(nxt)
                path.append(nxt)
                explore(nxt, outcomes, path)
                path.pop()
            outcomes.pop()

    start = initial_joint(slot_i, slot_j)
    seen.add(start)
    explore(start, [], [start])
    res.distinct_states = len(seen)
    if best:
        res.counterexample = Counterexample(best[1], best[2], best[3], str(script))
    return res


def replay(
    outcomes: Sequence[Outcome],
    script: Optional[ExchangeScript] = None,
    slot_i: int = 1,
    slot_j: int = 51,
    cfg: Optional[SlotframeConfig] = None,
    rx_transition: RxTransition = rx_on_frame,
) -> tuple[list[str], Optional[str]]:
    """Re-run one outcome sequence; returns the state log and the first violation."""
    script = script or ExchangeScript()
    cfg = cfg or SlotframeConfig()
    loss = LossModel.from_trace(outcomes)
    js = initial_joint(slot_i, slot_j)
    log = [describe(js)]
    for k in range(len(outcomes)):
        js = apply_script(js, script.at(k), k * cfg.n_slots)
        js, msg = step(js, k, loss.attempt_outcome(), cfg, rx_transition)
        log.append(describe(js))
        if msg:
            return log, msg
    return log, None


def rx_on_frame_skip_double_listening(s: RxNodeState, f: Frame, via: Via, now: int):
    """Broken receiver that adopts a new function immediately (mutation-test fixture)."""
    if f.ie is not None and via is Via.CURR and s.mode is RxMode.STEADY:
        return RxNodeState(RxMode.STEADY, s.c_back.bound_to(f.ie), s.c_curr.bound_to(None)), ()
    return rx_on_frame(s, f, via, now)


MUTANTS: dict[str, RxTransition] = {
    "skip-double-listening": rx_on_frame_skip_double_listening,
}


# --------------------------------------------------------------------------- soak


@dataclass
class SoakResult:
    ok: bool
    seed: int
    exchanges_requested: int
    exchanges_completed: int
    message: str = ""


def random_soak(n_exchanges: int, seed: int, base=None, eps_f: Optional[float] = None, eps_a: Optional[float] = None) -> SoakResult:
    """Long simulated run with every protocol assertion armed.

    The run lasts long enough for ``n_exchanges`` update requests.
    """
    from consip.simulator import ScenarioConfig, run

    cfg = base or ScenarioConfig()
    losses = cfg.losses
    if eps_f is not None:
        losses = replace(losses, eps_f=eps_f)
    if eps_a is not None:
        losses = replace(losses, eps_a=eps_a)
    period_s = (cfg.t_update or 0.0) * 60.0
    if cfg.consip_enabled and period_s > 0:
        duration = (n_exchanges + 1) * period_s - cfg.t_app
    else:
        duration = cfg.duration
    cfg = replace(cfg, seed=seed, losses=losses, duration=duration)
    try:
        r = run(cfg, check_states=True)
    except ConsistencyError as e:
        return SoakResult(False, seed, 0, 0, f"violation (reproduce with seed {seed}): {e}")
    return SoakResult(True, seed, r.exchanges_requested, r.exchanges_completed)
