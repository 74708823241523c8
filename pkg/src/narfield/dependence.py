"""Weak-dependence bounds and empirical dependence diagnostics.

Two kinds of tools live here:

* calculators for theoretical coefficient bounds (Bernoulli-shift heredity,
  its power and exponential closed forms, and the coupling-to-eta bridge);
* Monte Carlo diagnostics on simulated NAR fields: the coupling coefficient
  ``delta(s) = sup_site E|y - y^(s)|``, ensemble covariance decay, the
  truncation-covariance inequality and heredity under power transforms.

All theoretical bounds fix the unnamed multiplicative constants to 1, so only
their shapes (exponents, rates) are meaningful.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple
import math

import mpmath
import numpy as np
from scipy import special

from .errors import DomainError
from .lattice import SampleRegion, shell_sites
from .nar_model import (MomentOracle, NarParams, Panel, coupled_truncation,
                        simulate_recursive)
from .network import WeightMatrix
from .seeding import derive_replication_seed

PROFILE_KINDS = ("eta", "theta", "delta", "cov")


@dataclass
class DecayProfile:
    """Values of a dependence coefficient (or bound) on an increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    kind: str
    stderr: Optional[np.ndarray] = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in PROFILE_KINDS:
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise DomainError("grid and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.grid) <= 0) or np.any(self.grid <= 0):
            raise DomainError("grid must be positive and strictly increasing")
        if np.any(self.values < 0):
            raise DomainError("profile values must be nonnegative")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)

    @property
    def is_nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    def log_slope(self) -> float:
        """Least-squares slope of ``log value`` against ``log s``."""
        return log_log_slope(self.grid, self.values)


def log_log_slope(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (y > 0) & (x > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def semilog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``x``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = y > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(x[keep], np.log(y[keep]), 1)[0])


# ---------------------------------------------------------------------------
# theoretical bounds


@dataclass(frozen=True)
class ShiftRegularity:
    """Regularity data of a Bernoulli shift and its innovations.

    ``B(h)`` is ``b_scale * h**(-b)`` (``b_kind='power'``) or
    ``b_scale * exp(-b h)`` (``b_kind='exponential'``); the innovation
    coefficients decay as ``eps_scale * r**(-mu)``.
    """

    d: int = 2
    l: float = 0.0
    p: float = 4.0
    b_kind: str = "power"
    b: float = 3.0
    b_scale: float = 1.0
    mu: float = 3.0
    eps_scale: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("lattice dimension must be positive")
        if self.l < 0:
            raise DomainError("l must be nonnegative")
        if not self.p > self.l + 1:
            raise DomainError(f"moment order must satisfy p > l + 1 (got p={self.p}, l={self.l})")
        if self.b_kind not in ("power", "exponential"):
            raise DomainError(f"unknown B kind {self.b_kind!r}")
        if self.b_kind == "power" and not self.b > self.d:
            raise DomainError(f"power B(h) needs b > d for a finite C_B (got b={self.b}, d={self.d})")
        if self.b_kind == "exponential" and not self.b > 0:
            raise DomainError("exponential B(h) needs a positive rate")
        if not self.mu > 0:
            raise DomainError("mu must be positive")

    @property
    def moment_exponent(self) -> float:
        """``(p - 1 - l) / (p - 1)``."""
        return (self.p - 1 - self.l) / (self.p - 1)

    def tail_constant(self, s: int) -> float:
        """``C(s) = sum_{h >= s} B(h) h**(d - 1)`` in closed form."""
        return _tail_constant(self.b_kind, float(self.b), float(self.b_scale), int(self.d), int(s))

    @property
    def c_b(self) -> float:
        return self.tail_constant(1)

    def innovation_coefficient(self, r: float) -> float:
        # the coefficient at separation 0 is capped at the r = 1 value
        return self.eps_scale * max(float(r), 1.0) ** (-self.mu)


@lru_cache(maxsize=65536)
def _tail_constant(kind: str, b: float, scale: float, d: int, s: int) -> float:
    s = max(s, 1)
    if kind == "power":
        # sum_{h >= s} h^{d-1-b} is a Hurwitz zeta value
        return scale * float(special.zeta(b - d + 1, s))
    x = mpmath.exp(-b)
    return scale * float(x**s * mpmath.lerchphi(x, 1 - d, s))


def shift_objective(reg: ShiftRegularity, r: int, s: int) -> float:
    """``max{C(s), s**d * eta_eps(r - 2s)**((p-1-l)/(p-1))}``."""
    return max(reg.tail_constant(s), s**reg.d * reg.innovation_coefficient(r - 2 * s) ** reg.moment_exponent)


def shift_bound(reg: ShiftRegularity, r: int) -> float:
    """Output coefficient bound of a Bernoulli shift at separation ``r``.

    Minimizes :func:`shift_objective` over every integer ``s`` in
    ``[1, floor(r/2)]``.
    """
    if r < 2:
        raise DomainError(f"r must be at least 2, got {r}")
    return min(shift_objective(reg, r, s) for s in range(1, int(r) // 2 + 1))


def power_decay_bound(d: float, p: float, l: float, mu: float, r: float,
                      b: Optional[float] = None) -> Tuple[float, float]:
    """Closed-form bound ``r**(d - (p-1-l)/(p-1) * mu)`` for power decay.

    Returns ``(exponent, value)``.  Needs ``p > l + 1`` and
    ``mu > (p-1)/(p-1-l) * d``; if ``b`` is given it must satisfy
    ``b >= (p-1-l)/(p-1) * mu``.
    """
    if not p > l + 1:
        raise DomainError(f"p > l + 1 violated (p={p}, l={l})")
    kappa = (p - 1 - l) / (p - 1)
    if not mu > d / kappa:
        raise DomainError(f"mu > (p-1)/(p-1-l) * d violated: mu={mu} <= {d / kappa}")
    if b is not None and not b >= kappa * mu:
        raise DomainError(f"b >= (p-1-l)/(p-1) * mu violated: b={b} < {kappa * mu}")
    exponent = d - kappa * mu
    return exponent, float(r) ** exponent


def exp_decay_bound(p: float, l: float, mu: float, r: float) -> float:
    """``(log r)**2 * r**(-(p-1-l)/(p-1) * mu)`` on the 2-d lattice."""
    if not p > l + 1:
        raise DomainError(f"p > l + 1 violated (p={p}, l={l})")
    if not mu > 0:
        raise DomainError("mu must be positive")
    if r < 3:
        raise DomainError(f"r must be at least 3, got {r}")
    kappa = (p - 1 - l) / (p - 1)
    return math.log(r) ** 2 * float(r) ** (-kappa * mu)


def delta_to_eta(delta: DecayProfile) -> DecayProfile:
    """``eta(s) = delta(floor(s/2))`` evaluated on the doubled grid."""
    if delta.kind != "delta":
        raise DomainError(f"expected a delta profile, got kind {delta.kind!r}")
    return DecayProfile(2 * delta.grid, delta.values.copy(), "eta",
                        None if delta.stderr is None else delta.stderr.copy())


# ---------------------------------------------------------------------------
# Monte Carlo diagnostics


def sample_sites(region: SampleRegion, count: int, seed: int) -> List[Tuple[int, int]]:
    """Corners, centre, then distinct seeded random sites of the region."""
    fixed = [(1, 1), (region.N, 1), (1, region.T), (region.N, region.T),
             ((region.N + 1) // 2, (region.T + 1) // 2)]
    sites = list(dict.fromkeys(fixed))
    rng = np.random.default_rng(seed)
    total = region.cardinality
    order = rng.permutation(total)
    for flat in order:
        if len(sites) >= min(count, total):
            break
        site = (int(flat % region.N) + 1, int(flat // region.N) + 1)
        if site not in sites:
            sites.append(site)
    return sites[:count]


@dataclass
class DeltaEstimate:
    profile: DecayProfile
    sites: List[Tuple[int, int]]
    argmax_sites: List[Tuple[int, int]]
    replications: int


def estimate_delta(params: NarParams, w: WeightMatrix, Z, region: SampleRegion,
                   s_grid: Sequence[int], replications: int, seed: int,
                   n_sites: int = 32, burn_in: Optional[int] = None) -> DeltaEstimate:
    """Monte Carlo ``delta(s) = max over sampled sites of E|y - y^(s)|``.

    Each replication simulates a panel on ``region`` with a seed derived from
    ``seed`` and its index, then evaluates the coupled truncation at every
    ``s``.  The reported standard error is that of the maximizing site's mean.
    """
    s_grid = [int(s) for s in s_grid]
    if any(b <= a for a, b in zip(s_grid, s_grid[1:])):
        raise DomainError("s_grid must be strictly increasing")
    if replications < 2:
        raise DomainError("need at least two replications")
    sites = sample_sites(region, n_sites, seed)
    rows = np.array([i - 1 for i, _ in sites])
    cols = np.array([t for _, t in sites])
    diffs = np.empty((replications, len(s_grid), len(sites)))
    for r in range(replications):
        panel = simulate_recursive(params, w, Z, region.T, burn_in, derive_replication_seed(seed, 0, r))
        target = panel.y[rows, cols]
        for k, s in enumerate(s_grid):
            coupled = coupled_truncation(panel, s)
            diffs[r, k] = np.abs(target - coupled.y[rows, cols])
    means = diffs.mean(axis=0)
    ses = diffs.std(axis=0, ddof=1) / math.sqrt(replications)
    best = np.argmax(means, axis=1)
    k_idx = np.arange(len(s_grid))
    profile = DecayProfile(np.array(s_grid), means[k_idx, best], "delta", ses[k_idx, best])
    return DeltaEstimate(profile, sites, [sites[b] for b in best], replications)


def stack_panels(panels: Sequence[Panel]) -> np.ndarray:
    if len(panels) < 2:
        raise DomainError("need at least two panels for ensemble moments")
    shape = panels[0].y.shape
    if any(p.y.shape != shape for p in panels):
        raise DomainError("panels must share a region")
    return np.stack([p.y for p in panels])


def _site_pairs(region: SampleRegion, lag: int, anchors, mode: str):
    pairs = []
    for a in anchors:
        if mode == "temporal":
            if a[1] - lag >= 1:
                pairs.append((a, (a[0], a[1] - lag)))
            continue
        for b in shell_sites(region, a, lag):
            # half shell: each unordered pair is kept once per anchor
            if b[1] < a[1] or (b[1] == a[1] and b[0] > a[0]):
                pairs.append((a, tuple(b)))
    return pairs


@dataclass
class CovDecay:
    profile: DecayProfile
    slope: float
    intercept: float
    argmax_pairs: List[Tuple[Tuple[int, int], Tuple[int, int]]]
    pair_counts: List[int]


def _ensemble_cov(xa, xb, centered: bool):
    """Mean product (known zero means) or sample covariance, with its standard error."""
    R = xa.shape[0]
    if centered:
        prod = xa * xb
        return prod.mean(axis=0), prod.std(axis=0, ddof=1) / math.sqrt(R)
    da = xa - xa.mean(axis=0)
    db = xb - xb.mean(axis=0)
    prod = da * db
    return prod.sum(axis=0) / (R - 1), prod.std(axis=0, ddof=1) / math.sqrt(R)


def covariance_decay_from_array(field_values: np.ndarray, lag_grid: Sequence[int], centered: bool,
                                n_anchors: int = 8, seed: int = 0, mode: str = "shell") -> CovDecay:
    """Ensemble covariance decay of an ``(R, N, T + 1)`` field array.

    For every lag the profile holds the largest absolute covariance among
    sampled site pairs at that Chebyshev distance, with that pair's standard
    error.  ``centered`` means the array already has zero mean.
    """
    if mode not in ("shell", "temporal"):
        raise DomainError(f"unknown pair mode {mode!r}")
    R, N, T1 = field_values.shape
    region = SampleRegion(N, T1 - 1)
    anchors = sample_sites(region, n_anchors, seed)
    values, errs, best_pairs, counts = [], [], [], []
    for lag in lag_grid:
        pairs = _site_pairs(region, int(lag), anchors, mode)
        if not pairs:
            raise DomainError(f"no site pairs at distance {lag} inside the region")
        ai = np.array([[p[0][0] - 1, p[0][1]] for p in pairs])
        bi = np.array([[p[1][0] - 1, p[1][1]] for p in pairs])
        xa = field_values[:, ai[:, 0], ai[:, 1]]
        xb = field_values[:, bi[:, 0], bi[:, 1]]
        cov, se = _ensemble_cov(xa, xb, centered)
        j = int(np.argmax(np.abs(cov)))
        values.append(abs(cov[j]))
        errs.append(se[j])
        best_pairs.append(pairs[j])
        counts.append(len(pairs))
    grid = np.asarray(lag_grid, dtype=float)
    vals = np.array(values)
    keep = vals > 0
    if keep.sum() >= 2:
        slope, intercept = np.polyfit(np.log(grid[keep]), np.log(vals[keep]), 1)
    else:
        slope = intercept = float("nan")
    return CovDecay(DecayProfile(grid, vals, "cov", np.array(errs)), float(slope), float(intercept),
                    best_pairs, counts)


def empirical_cov_decay(panels: Sequence[Panel], center_fn: Optional[MomentOracle], lag_grid: Sequence[int],
                        n_anchors: int = 8, seed: int = 0, mode: str = "shell") -> CovDecay:
    """Cross-replication covariance decay of a set of panels.

    With a moment oracle the field is centred by its exact means; otherwise
    sample means across panels are used.
    """
    y = stack_panels(panels)
    if center_fn is not None:
        return covariance_decay_from_array(y - center_fn.mean[None, :, None], lag_grid, True,
                                           n_anchors, seed, mode)
    return covariance_decay_from_array(y, lag_grid, False, n_anchors, seed, mode)


def truncation_cov_check(panels: Sequence[Panel], k_grid: Sequence[float],
                         site_pairs: Sequence[Tuple[Tuple[int, int], Tuple[int, int]]],
                         p: float = 4.0, center_fn: Optional[MomentOracle] = None) -> dict:
    """Check ``|cov(X_i, X_j) - cov(X_i(k), X_j(k))| <= 4 ||X||_p^p k^(2-p)``.

    ``X(k)`` clips ``X`` to ``[-k, k]``.  ``||X||_p`` is the largest sample
    ``L^p`` norm over the sites involved.  Returns per-``k`` worst ratios of
    the observed difference to the bound.
    """
    if not p > 2:
        raise DomainError("p must exceed 2")
    y = stack_panels(panels)
    if center_fn is not None:
        y = y - center_fn.mean[None, :, None]
    sites = sorted({s for pair in site_pairs for s in pair})
    norm_p = max(float(np.mean(np.abs(y[:, i - 1, t]) ** p)) ** (1 / p) for i, t in sites)
    worst = []
    rows = []
    for k in k_grid:
        clipped = np.clip(y, -k, k)
        bound = 4.0 * norm_p**p * float(k) ** (2 - p)
        ratios = []
        for a, b in site_pairs:
            xa, xb = y[:, a[0] - 1, a[1]], y[:, b[0] - 1, b[1]]
            ca, cb = clipped[:, a[0] - 1, a[1]], clipped[:, b[0] - 1, b[1]]
            diff = abs(np.cov(xa, xb)[0, 1] - np.cov(ca, cb)[0, 1])
            ratios.append(diff / bound)
            rows.append({"k": float(k), "pair": [list(a), list(b)], "difference": float(diff),
                         "bound": bound, "ratio": float(diff / bound)})
        worst.append(max(ratios))
    return {
        "norm_p": norm_p,
        "p": p,
        "k_grid": [float(k) for k in k_grid],
        "worst_ratio_per_k": worst,
        "worst_ratio": max(worst),
        "holds": bool(max(worst) <= 1.0),
        "rows": rows,
    }


def power_transform(x, a: float):
    """``H(x) = sign(x) |x|**a``."""
    return np.sign(x) * np.abs(x) ** a


def heredity_check(panels: Sequence[Panel], transform_exponent: float, p: float, lag_grid: Sequence[int],
                   center_fn: MomentOracle, tolerance: float = 0.5, n_anchors: int = 8,
                   seed: int = 0) -> dict:
    """Compare covariance decay before and after ``H(x) = sign(x)|x|^a``.

    ``H`` is applied to the field centred by its exact means.  The check
    passes when the transformed log-log slope is at least
    ``(p - a)/(p - 1)`` times the original slope minus ``tolerance``.
    """
    a = transform_exponent
    if a < 1:
        raise DomainError("transform exponent must be at least 1")
    if not a < p:
        raise DomainError(f"transform exponent must be below the moment order (a={a}, p={p})")
    x = stack_panels(panels) - center_fn.mean[None, :, None]
    original = covariance_decay_from_array(x, lag_grid, True, n_anchors, seed)
    transformed = covariance_decay_from_array(power_transform(x, a), lag_grid, False, n_anchors, seed)
    factor = (p - a) / (p - 1)
    threshold = factor * original.slope - tolerance
    return {
        "exponent": a,
        "p": p,
        "factor": factor,
        "original_slope": original.slope,
        "transformed_slope": transformed.slope,
        "threshold": threshold,
        "passed": bool(transformed.slope >= threshold),
        "original": original,
        "transformed": transformed,
    }
