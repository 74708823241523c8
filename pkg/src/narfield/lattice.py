"""Integer spatio-temporal lattice with the Chebyshev metric.

Sites are ``(i, t)`` pairs: ``i`` indexes a node and ``t`` a time point.  A
sample region holds the sites ``1 <= i <= N`` and ``1 <= t <= T``.  The
lattice dimension is fixed at 2.
"""

from dataclasses import dataclass
from typing import Iterator, List, NamedTuple

from .errors import DomainError

DIMENSION = 2


class SiteIndex(NamedTuple):
    i: int
    t: int


@dataclass(frozen=True)
class SampleRegion:
    """The finite region ``{(i, t): 1 <= i <= N, 1 <= t <= T}``."""

    N: int
    T: int

    def __post_init__(self):
        if int(self.N) != self.N or int(self.T) != self.T or self.N < 1 or self.T < 1:
            raise DomainError(f"region extents must be positive integers, got N={self.N}, T={self.T}")

    @property
    def cardinality(self) -> int:
        return self.N * self.T

    @property
    def diameter(self) -> int:
        return max(self.N, self.T) - 1

    def __contains__(self, site) -> bool:
        i, t = site
        return 1 <= i <= self.N and 1 <= t <= self.T

    def __iter__(self) -> Iterator[SiteIndex]:
        for t in range(1, self.T + 1):
            for i in range(1, self.N + 1):
                yield SiteIndex(i, t)

    def __len__(self) -> int:
        return self.cardinality


def chebyshev_distance(a, b) -> int:
    """``max(|a.i - b.i|, |a.t - b.t|)``."""
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def shell_sites(region: SampleRegion, center, h: int) -> List[SiteIndex]:
    """Sites of ``region`` at Chebyshev distance exactly ``h`` from ``center``.

    On the integer lattice ``h <= rho < h + 1`` collapses to ``rho == h``.
    Sites are returned in time-major order.
    """
    if center not in region:
        raise DomainError(f"center {tuple(center)} lies outside region N={region.N}, T={region.T}")
    if h < 0:
        raise DomainError("shell radius must be nonnegative")
    ci, ct = center
    if h == 0:
        return [SiteIndex(ci, ct)]
    out = []
    for t in range(max(1, ct - h), min(region.T, ct + h) + 1):
        if abs(t - ct) == h:
            cols = range(max(1, ci - h), min(region.N, ci + h) + 1)
        else:
            cols = [c for c in (ci - h, ci + h) if 1 <= c <= region.N]
        out.extend(SiteIndex(i, t) for i in cols)
    return out


def shell_count_bound(h: int, d: int = DIMENSION) -> int:
    """Upper bound on the shell size of the unbounded ``Z^d`` lattice."""
    if h == 0:
        return 1
    return (2 * h + 1) ** d - (2 * h - 1) ** d


def tail_sum_bound(alpha: float, s: float) -> float:
    """Closed-form majorant of ``sum_{h >= floor(s)} h**(-alpha - 1)``.

    Returns ``2**(alpha + 1) / alpha * s**(-alpha)``, valid for ``alpha > 0``
    and ``s >= 2``.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if not s >= 2:
        raise DomainError(f"s must be at least 2, got {s}")
    return 2.0 ** (alpha + 1) / alpha * s ** (-alpha)
