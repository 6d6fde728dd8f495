"""Per-event radio energy costs and per-node ledgers.

Ledgers store integer event and byte counts; energies in µJ are derived from
them on demand, so accumulation is exact and merging runs is lossless.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from typing import Optional


@dataclass(frozen=True)
class EnergyParams:
    e_tx0: float = 7.0  # µJ
    e_tx_per_byte: float = 2.0  # µJ/B
    e_rx0: float = 65.0
    e_rx_per_byte: float = 1.3
    e_tx_ack: float = 106.0
    e_rx_ack: float = 79.0
    e_listen: float = 138.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be nonnegative")


@dataclass(frozen=True)
class FrameSizeModel:
    l_header: int = 29  # B, PHY + MAC
    l_payload: int = 30
    l_ie_h: int = 2
    l_ie_p: int = 16

    def l_tot(self, with_ie: bool) -> int:
        n = self.l_header + self.l_payload
        return n + self.l_ie_h + self.l_ie_p if with_ie else n


def data_tx_energy(l_tot: int, p: Optional[EnergyParams] = None) -> float:
    p = p or EnergyParams()
    if l_tot <= 0:
        raise ValueError("frame length must be positive")
    return p.e_tx0 + p.e_tx_per_byte * l_tot


def data_rx_energy(l_tot: int, p: Optional[EnergyParams] = None) -> float:
    p = p or EnergyParams()
    if l_tot <= 0:
        raise ValueError("frame length must be positive")
    return p.e_rx0 + p.e_rx_per_byte * l_tot


class SlotEvent(enum.Enum):
    TX_ACKED = "tx_acked"  # data sent, ACK received
    TX_NO_ACK = "tx_no_ack"  # data sent, ACK awaited in vain
    RX_FRAME = "rx_frame"  # data received, ACK sent
    RX_IDLE = "rx_idle"  # cell listened, nothing arrived


@dataclass
class EnergyLedger:
    params: EnergyParams = field(default_factory=EnergyParams)
    n_data_tx: int = 0
    bytes_tx: int = 0
    n_ack_rx: int = 0
    n_ack_wait: int = 0
    n_data_rx: int = 0
    bytes_rx: int = 0
    n_ack_tx: int = 0
    n_idle: int = 0
    elapsed_s: float = 0.0

    # µJ accumulators
    @property
    def data_tx(self) -> float:
        return self.n_data_tx * self.params.e_tx0 + self.bytes_tx * self.params.e_tx_per_byte

    @property
    def data_rx(self) -> float:
        return self.n_data_rx * self.params.e_rx0 + self.bytes_rx * self.params.e_rx_per_byte

    @property
    def ack_tx(self) -> float:
        return self.n_ack_tx * self.params.e_tx_ack

    @property
    def ack_rx(self) -> float:
        return self.n_ack_rx * self.params.e_rx_ack

    @property
    def idle_listen(self) -> float:
        # idle radio-on time is charged at e_listen on both sides
        return (self.n_idle + self.n_ack_wait) * self.params.e_listen

    @property
    def total(self) -> float:
        return self.data_tx + self.data_rx + self.ack_tx + self.ack_rx + self.idle_listen

    def power(self, microjoules: float) -> float:
        """µJ over the elapsed time, in µW; 0 for an empty ledger."""
        return microjoules / self.elapsed_s if self.elapsed_s > 0 else 0.0

    def merge(self, other: "EnergyLedger") -> "EnergyLedger":
        if other.params != self.params:
            raise ValueError("cannot merge ledgers with different energy parameters")
        kw = {f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self) if f.name != "params"}
        return EnergyLedger(self.params, **kw)


def charge_slot_events(ledger: EnergyLedger, event: SlotEvent, l_tot: int = 0, count: int = 1) -> EnergyLedger:
    """Charge ``count`` occurrences of a slot event (in place; the ledger is returned)."""
    if event is SlotEvent.TX_ACKED or event is SlotEvent.TX_NO_ACK:
        if l_tot <= 0:
            raise ValueError("TX events need a positive frame length")
        ledger.n_data_tx += count
        ledger.bytes_tx += count * l_tot
        if event is SlotEvent.TX_ACKED:
            ledger.n_ack_rx += count
        else:
            ledger.n_ack_wait += count
    elif event is SlotEvent.RX_FRAME:
        if l_tot <= 0:
            raise ValueError("RX events need a positive frame length")
        ledger.n_data_rx += count
        ledger.bytes_rx += count * l_tot
        ledger.n_ack_tx += count
    else:
        ledger.n_idle += count
    return ledger
