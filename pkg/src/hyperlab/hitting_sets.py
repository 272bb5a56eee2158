"""Exact integer-set combinatorics for visit-time analysis.

Everything here is windowed: a set lives inside [0, N) and every
density-like quantity is a window functional standing in for the
asymptotic one, reported together with its window.  All counting is
exact integer arithmetic (the FFT autocorrelation used by
difference_set is thresholded at 0.5 against integer-valued exact
counts, so it is exact too).

Gap semantics: max_gap counts the leading gap as (first element + 1)
and the trailing gap as (N - last element).  With that convention the
coverage statement is exact: max_gap(S) <= g if and only if every
length-g subwindow of [0, N) meets S.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .jsonio import check_schema


class WindowMismatchError(ValueError):
    """Binary operation on sets with different windows."""


@dataclass(frozen=True, eq=False)
class WindowedSet:
    """Strictly increasing integers inside the window [0, N)."""

    window: int
    elements: np.ndarray

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be a positive integer")
        e = self.elements
        if e.ndim != 1 or e.dtype.kind != "i":
            raise ValueError("elements must be a 1d integer array")
        if e.size:
            if e[0] < 0 or e[-1] >= self.window:
                raise ValueError("elements must lie in [0, window)")
            if np.any(np.diff(e) <= 0):
                raise ValueError("elements must be strictly increasing")

    @classmethod
    def from_iterable(cls, window: int, items) -> "WindowedSet":
        arr = np.unique(np.asarray(sorted(items), dtype=np.int64))
        return cls(window=window, elements=arr)

    @classmethod
    def full(cls, window: int) -> "WindowedSet":
        return cls(window=window, elements=np.arange(window, dtype=np.int64))

    @classmethod
    def empty(cls, window: int) -> "WindowedSet":
        return cls(window=window, elements=np.empty(0, dtype=np.int64))

    @property
    def size(self) -> int:
        return int(self.elements.size)

    def __contains__(self, value: int) -> bool:
        idx = np.searchsorted(self.elements, value)
        return bool(idx < self.size and self.elements[idx] == value)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WindowedSet):
            return NotImplemented
        return self.window == other.window and np.array_equal(
            self.elements, other.elements
        )

    def __repr__(self) -> str:
        return f"WindowedSet(window={self.window}, size={self.size})"

    def indicator(self) -> np.ndarray:
        x = np.zeros(self.window, dtype=np.int64)
        x[self.elements] = 1
        return x

    def to_dict(self) -> dict:
        return {
            "schema": "windowed-set/1",
            "window": self.window,
            "elements": [int(v) for v in self.elements],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WindowedSet":
        check_schema(doc, "windowed-set")
        return cls.from_iterable(int(doc["window"]), doc["elements"])

    @classmethod
    def from_lines(cls, text: str, window: int = None) -> "WindowedSet":
        """Parse a newline-delimited integer log (orbit visit indices)."""
        items = [int(line) for line in text.split() if line.strip()]
        if window is None:
            window = max(items) + 1 if items else 1
        return cls.from_iterable(window, items)

    def to_lines(self) -> str:
        return "".join(f"{int(v)}\n" for v in self.elements)


def _prefix_counts(L: WindowedSet) -> np.ndarray:
    """counts[n] = |L intersect [0, n)| for n = 0..N."""
    counts = np.zeros(L.window + 1, dtype=np.int64)
    counts[L.elements + 1] = 1
    return np.cumsum(counts)


def density_ladder(N: int) -> list:
    """Nine prefix lengths stepping geometrically from N down to ceil(N/2)."""
    lengths = sorted({int(ceil(N * 2.0 ** (-k / 8.0))) for k in range(9)})
    return [n for n in lengths if n >= 1]


def upper_density(L: WindowedSet) -> float:
    """Largest prefix density over the geometric ladder; window proxy
    for the upper asymptotic density."""
    counts = _prefix_counts(L)
    return float(max(counts[n] / n for n in density_ladder(L.window)))


def lower_density(L: WindowedSet) -> float:
    counts = _prefix_counts(L)
    return float(min(counts[n] / n for n in density_ladder(L.window)))


def upper_banach_density(L: WindowedSet, min_len: int) -> float:
    """Exact maximum of |L intersect I|/|I| over subintervals I of the
    window with |I| >= min_len.  Only lengths in [min_len, 2*min_len)
    are scanned: an interval of length >= 2*min_len splits into two
    halves of admissible length, one of which is at least as dense, so
    the maximum is already attained below 2*min_len."""
    if not 1 <= min_len <= L.window:
        raise ValueError(f"min_len must lie in [1, {L.window}]")
    counts = _prefix_counts(L)
    best = 0.0
    for length in range(min_len, min(2 * min_len, L.window + 1)):
        window_counts = counts[length:] - counts[:-length]
        best = max(best, float(np.max(window_counts)) / length)
    return best


def difference_set(L: WindowedSet) -> WindowedSet:
    """{a - b : a, b in L, a >= b} over the same window, always
    containing 0.  Computed by exact FFT autocorrelation of the
    indicator (integer counts, thresholded at 1/2)."""
    if L.size == 0:
        raise ValueError("difference set needs a nonempty input")
    x = L.indicator().astype(float)
    n = 2 * L.window
    spectrum = np.fft.rfft(x, n)
    corr = np.fft.irfft(spectrum * np.conj(spectrum), n)[: L.window]
    diffs = np.nonzero(corr > 0.5)[0]
    return WindowedSet(window=L.window, elements=diffs.astype(np.int64))


def max_gap(S: WindowedSet) -> int:
    """Largest gap, counting first + 1 at the front and N - last at the
    back; N for the empty set.  Exactly the smallest g such that every
    length-g subwindow of [0, N) meets S."""
    if S.size == 0:
        return S.window
    e = S.elements
    lead = int(e[0]) + 1
    trail = S.window - int(e[-1])
    inner = int(np.max(np.diff(e))) if S.size > 1 else 0
    return max(lead, trail, inner)


def longest_interval(S: WindowedSet) -> int:
    """Length of the longest run of consecutive integers in S."""
    if S.size == 0:
        return 0
    breaks = np.nonzero(np.diff(S.elements) != 1)[0]
    run_starts = np.concatenate([[0], breaks + 1])
    run_ends = np.concatenate([breaks, [S.size - 1]])
    return int(np.max(run_ends - run_starts) + 1)


@dataclass(frozen=True)
class TransferReport:
    passed: bool
    checked: int
    overflowed: int
    first_violation: int = -1

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        return {
            "check": "transfer-witness",
            "passed": self.passed,
            "checked": self.checked,
            "overflowed": self.overflowed,
            "first_violation": self.first_violation,
        }


def transfer_witness(NUV: WindowedSet, NWW: WindowedSet, n: int) -> TransferReport:
    """Verify n + NWW is contained in NUV inside the shared window.
    Shifted elements that leave the window are not evidence either way;
    they are skipped and counted."""
    if NUV.window != NWW.window:
        raise WindowMismatchError(
            f"windows differ: {NUV.window} vs {NWW.window}"
        )
    shifted = NWW.elements + int(n)
    inside = shifted[(shifted >= 0) & (shifted < NUV.window)]
    overflowed = int(NWW.size - inside.size)
    member = np.isin(inside, NUV.elements)
    if np.all(member):
        return TransferReport(passed=True, checked=int(inside.size),
                              overflowed=overflowed)
    first = int(inside[np.argmin(member)])
    return TransferReport(passed=False, checked=int(inside.size),
                          overflowed=overflowed, first_violation=first)
