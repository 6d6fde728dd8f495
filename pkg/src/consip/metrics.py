"""Exact slot-resolution histograms and their summary statistics.

Every latency in the simulator is a whole number of slots, so the full
distribution is kept as integer counts and percentiles are exact.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

PERCENTILES = (99.0, 99.9)


@dataclass
class SlotHistogram:
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    def record(self, value_in_slots: int, n: int = 1) -> None:
        if value_in_slots < 0:
            raise ValueError(f"negative latency: {value_in_slots}")
        self.counts[value_in_slots] += n
        self.total += n

    def extend(self, values: Iterable[int]) -> None:
        for v in values:
            self.record(v)

    def merge(self, other: "SlotHistogram") -> "SlotHistogram":
        out = SlotHistogram(Counter(self.counts), self.total)
        out.counts.update(other.counts)
        out.total += other.total
        return out

    def __len__(self) -> int:
        return self.total

    def items(self) -> list[tuple[int, int]]:
        return sorted(self.counts.items())

    def percentile(self, p: float) -> int:
        """Nearest rank: smallest v with CDF(v) >= p/100."""
        if self.total == 0:
            raise ValueError("percentile of an empty histogram")
        need = math.ceil(Fraction(str(p)) * self.total / 100)
        need = max(need, 1)
        cum = 0
        for v, c in self.items():
            cum += c
            if cum >= need:
                return v
        raise AssertionError("unreachable: counts do not sum to total")


@dataclass(frozen=True)
class Summary:
    """Statistics of one histogram, in the unit requested from :func:`summarize`."""

    count: int
    mean: float
    stddev: float
    min: float
    max: float
    p99: float
    p999: float


def summarize(h: SlotHistogram, scale: float = 1.0) -> Optional[Summary]:
    """Summary in slots times ``scale`` (e.g. the slot duration in seconds).

    Returns ``None`` for an empty histogram.
    """
    n = h.total
    if n == 0:
        return None
    s = ss = 0
    for v, c in h.counts.items():
        s += v * c
        ss += v * v * c
    mean = s / n
    var = (n * ss - s * s) / (n * n)  # exact integer numerator
    lo = min(h.counts)
    hi = max(h.counts)
    return Summary(
        count=n,
        mean=mean * scale,
        stddev=math.sqrt(var) * scale,
        min=lo * scale,
        max=hi * scale,
        p99=h.percentile(99.0) * scale,
        p999=h.percentile(99.9) * scale,
    )


def export_pdf_cdf(h: SlotHistogram, slot_s: float = 1.0) -> list[tuple[float, float, float]]:
    """Rows of (value in seconds, pdf mass, cdf) for every observed slot value."""
    if h.total == 0:
        return []
    rows = []
    cum = 0
    for v, c in h.items():
        cum += c
        rows.append((v * slot_s, c / h.total, cum / h.total))
    return rows


def plateau_masses(h: SlotHistogram, width: int) -> list[float]:
    """Probability mass in consecutive bins ``[k*width, (k+1)*width)``."""
    if h.total == 0:
        return []
    bins: Counter = Counter()
    for v, c in h.counts.items():
        bins[v // width] += c
    top = max(bins)
    return [bins.get(k, 0) / h.total for k in range(top + 1)]


def pdf_cdf_csv(rows: list[tuple[float, float, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value_s", "pdf", "cdf"])
    for v, pdf, cdf in rows:
        w.writerow([f"{v:.3f}", f"{pdf:.9f}", f"{cdf:.9f}"])
    return buf.getvalue()


def histogram_csv(h: SlotHistogram, slot_s: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slots", "value_s", "count"])
    for v, c in h.items():
        w.writerow([v, f"{v * slot_s:.3f}", c])
    return buf.getvalue()
