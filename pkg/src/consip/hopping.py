"""TSCH time/cell model and the per-link channel-hopping computation.

A hopping function maps (ASN, channel offset) to a physical IEEE 802.15.4
channel by indexing a hopping sequence with ``(asn + offset) mod len(seq)``.
White/black listing shortens or reorders that sequence; any permutation of a
subset of channels 11..26 is a valid sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

MIN_CHANNEL = 11
MAX_CHANNEL = 26
ALL_CHANNELS: tuple[int, ...] = tuple(range(MIN_CHANNEL, MAX_CHANNEL + 1))

# 64-bit unsigned ASN space
ASN_MAX = 2**64 - 1


@dataclass(frozen=True)
class SlotframeConfig:
    n_slots: int = 101
    slot_duration_ms: float = 20.0

    def __post_init__(self) -> None:
        if self.n_slots < 2:
            raise ValueError("n_slots must be >= 2 (current and backup cells need distinct offsets)")
        if not self.slot_duration_ms > 0:
            raise ValueError("slot_duration_ms must be > 0")

    @property
    def slot_s(self) -> float:
        return self.slot_duration_ms / 1000.0

    @property
    def slotframe_s(self) -> float:
        return self.n_slots * self.slot_s

    def to_slots(self, seconds: float) -> int:
        """Convert a duration to a whole number of slots; reject non-integral results."""
        slots = seconds * 1000.0 / self.slot_duration_ms
        n = round(slots)
        if abs(slots - n) > 1e-6:
            raise ValueError(f"{seconds} s is not a whole number of {self.slot_duration_ms} ms slots")
        return n


@dataclass(frozen=True)
class HoppingFunction:
    """A versioned hopping sequence. ``id`` is what the protocol compares."""

    id: int
    sequence: tuple[int, ...] = ALL_CHANNELS

    def __post_init__(self) -> None:
        object.__setattr__(self, "sequence", tuple(self.sequence))

    def __len__(self) -> int:
        return len(self.sequence)


@dataclass(frozen=True)
class Cell:
    slot_offset: int
    channel_offset: int = 0
    binding: Optional[HoppingFunction] = field(default=None, compare=True)

    @property
    def active(self) -> bool:
        return self.binding is not None

    def bound_to(self, h: Optional[HoppingFunction]) -> "Cell":
        return Cell(self.slot_offset, self.channel_offset, h)


def validate_hopping(h: HoppingFunction) -> Optional[str]:
    """Return ``None`` when ``h`` is a valid hopping function, else the violated rule."""
    seq = h.sequence
    if len(seq) == 0:
        return "empty"
    if len(seq) > len(ALL_CHANNELS):
        return "too long"
    for ch in seq:
        if not isinstance(ch, int) or not MIN_CHANNEL <= ch <= MAX_CHANNEL:
            return f"channel out of range: {ch!r}"
    if len(set(seq)) != len(seq):
        return "duplicate channel"
    if h.id < 0:
        return "negative id"
    return None


def hop_channel(asn: int, channel_offset: int, h: HoppingFunction) -> int:
    """Physical channel used in slot ``asn`` by a cell with ``channel_offset`` under ``h``."""
    seq = h.sequence
    return seq[(asn + channel_offset) % len(seq)]


def cell_fires(asn: int, cell: Cell, cfg: SlotframeConfig) -> bool:
    return cell.binding is not None and asn % cfg.n_slots == cell.slot_offset


def next_firing(asn: int, slot_offset: int, n_slots: int) -> int:
    """Smallest ASN >= ``asn`` whose slot offset is ``slot_offset``."""
    return asn + (slot_offset - asn) % n_slots


def count_firings(slot_offset: int, start: int, stop: int, n_slots: int) -> int:
    """Number of ASNs in ``[start, stop)`` with the given slot offset."""
    if stop <= start:
        return 0
    return (stop - 1 - slot_offset) // n_slots - (start - 1 - slot_offset) // n_slots


def random_hopping(rng, hid: int, min_len: int = 8, max_len: int = 16) -> HoppingFunction:
    """Random permutation of a random-size channel subset; content is opaque to the protocol."""
    n = int(rng.integers(min_len, max_len + 1))
    seq = rng.permutation(ALL_CHANNELS)[:n]
    return HoppingFunction(hid, tuple(int(c) for c in seq))

