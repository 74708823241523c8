"""Monte Carlo verification of the limit theorems and of QMLE normality.

Every replication draws innovations from a seed derived from
``(master_seed, size_index, rep)``.  Replications are evaluated in fixed-size
chunks whose composition depends only on the replication indices, and
results are stored by index before any reduction.  Reports are therefore
bitwise identical for any worker count or execution order.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import math

import numpy as np
from scipy import special

from .errors import DomainError, SingularityError
from .estimation import qmle, standardized_statistic
from .nar_model import (NarParams, Panel, generate_covariates,
                        simulate_batch, theoretical_moments)
from .network import Network, WeightMatrix, generate_power_decay_network, row_normalized_weights
from .seeding import derive_replication_seed

CHUNK = 50
KS_TERMS = 100
KS_MIN_RELIABLE = 8


def ks_normality_test(samples) -> Tuple[float, float, bool]:
    """One-sample Kolmogorov-Smirnov test against N(0, 1).

    The p-value uses the asymptotic Kolmogorov series
    ``2 sum_{k=1}^{100} (-1)^(k-1) exp(-2 k^2 lambda^2)`` at
    ``lambda = sqrt(n) D``.  Returns ``(D, p, reliable)`` where ``reliable``
    is false below eight samples.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("KS test needs at least one sample")
    cdf = special.ndtr(x)
    ranks = np.arange(1, n + 1)
    stat = float(max(np.max(ranks / n - cdf), np.max(cdf - (ranks - 1) / n)))
    return stat, kolmogorov_pvalue(math.sqrt(n) * stat), n >= KS_MIN_RELIABLE


def kolmogorov_pvalue(lam: float) -> float:
    # below 0.2 the survival function equals 1 to double precision while the
    # truncated alternating series has not yet converged
    if lam < 0.2:
        return 1.0
    k = np.arange(1, KS_TERMS + 1)
    terms = (-1.0) ** (k - 1) * np.exp(-2.0 * k**2 * lam**2)
    return float(min(1.0, max(0.0, 2.0 * terms.sum())))


@dataclass(frozen=True)
class ExperimentConfig:
    """Model, network, size grid, replication budget and verdict thresholds.

    ``moment_scale`` is the constant ``c`` of the declared moment bounds
    ``c_{i,n}``; with ``innovation_scaling='time_linear'`` the bounds become
    ``c (1 + t/T)`` and ``M_n = 2c``.
    """

    params: NarParams
    sizes: Tuple[Tuple[int, int], ...] = ((20, 20), (40, 40), (80, 80))
    replications: int = 200
    master_seed: int = 2024
    network_alpha: float = 2.0
    network_band: int = 3
    network_seed: int = 11
    z_seed: int = 5
    moment_scale: float = 1.0
    innovation_scaling: Optional[str] = None
    burn_in: Optional[int] = None
    ks_floor: float = 0.01
    lln_threshold: float = 0.05
    lln_slope_band: Tuple[float, float] = (-0.7, -0.3)
    variance_ratio_floor: float = 0.1
    coverage_band: Tuple[float, float] = (0.92, 0.98)
    singular_limit: float = 0.01
    workers: int = 1

    def __post_init__(self):
        sizes = tuple((int(n), int(t)) for n, t in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise DomainError("at least one size is required")
        if any(n < 1 or t < 1 for n, t in sizes):
            raise DomainError("sizes must be positive")
        counts = [n * t for n, t in sizes]
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise DomainError("sizes must be strictly increasing in N*T")
        if self.replications < 2:
            raise DomainError("replications must be at least 2")
        if not self.moment_scale > 0:
            raise DomainError("moment_scale must be positive")
        if self.innovation_scaling not in (None, "time_linear"):
            raise DomainError(f"unknown innovation scaling {self.innovation_scaling!r}")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")
        if not 0 < self.ks_floor < 1:
            raise DomainError("ks_floor must lie in (0, 1)")

    @property
    def moment_bound(self) -> float:
        """``M_n = sup c_{i,n}``."""
        return self.moment_scale * (2.0 if self.innovation_scaling == "time_linear" else 1.0)

    def network(self, N: int) -> Network:
        return generate_power_decay_network(N, self.network_alpha, self.network_band, self.network_seed)

    def weights(self, N: int) -> WeightMatrix:
        return row_normalized_weights(self.network(N))

    def covariates(self, N: int) -> np.ndarray:
        return generate_covariates(N, self.params.m, self.z_seed)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = asdict(self.params)
        out["sizes"] = [list(s) for s in self.sizes]
        return out


# ---------------------------------------------------------------------------
# replication scheduling


def _chunks(R: int, reverse: bool) -> List[List[int]]:
    chunks = [list(range(a, min(a + CHUNK, R))) for a in range(0, R, CHUNK)]
    if reverse:
        chunks = [c[::-1] for c in chunks[::-1]]
    return chunks


def _simulate_chunk(config: ExperimentConfig, size_index: int, reps: Sequence[int]):
    N, T = config.sizes[size_index]
    seeds = [derive_replication_seed(config.master_seed, size_index, r) for r in reps]
    y, eps = simulate_batch(config.params, config.weights(N), config.covariates(N), T, seeds,
                            config.burn_in, config.innovation_scaling)
    return y, eps


def _lln_task(args):
    config, size_index, reps, mean = args
    y, _ = _simulate_chunk(config, size_index, reps)
    dev = (y[:, :, 1:] - mean[None, :, None]).sum(axis=(1, 2))
    return reps, dev[:, None]


def _clt_task(args):
    config, size_index, reps, mean, statistic = args
    y, eps = _simulate_chunk(config, size_index, reps)
    if statistic == "field_sum":
        return reps, (y[:, :, 1:] - mean[None, :, None]).sum(axis=(1, 2))[:, None]
    N = y.shape[1]
    w = config.weights(N)
    Z = config.covariates(N)
    out = []
    for k in range(len(reps)):
        panel = Panel(y[k], Z, eps[k], config.params, w)
        out.append(np.einsum("it,itk->k", eps[k], panel.regressors(w)))
    return reps, np.array(out)


def _qmle_task(args):
    config, size_index, reps = args
    y, eps = _simulate_chunk(config, size_index, reps)
    N = y.shape[1]
    w = config.weights(N)
    Z = config.covariates(N)
    theta0 = config.params.theta
    k = theta0.size
    stats = np.full((len(reps), k), np.nan)
    cover = np.zeros((len(reps), k), dtype=bool)
    singular = np.zeros(len(reps), dtype=bool)
    for j in range(len(reps)):
        panel = Panel(y[j], Z, eps[j], config.params, w)
        try:
            res = qmle(panel, w)
            stats[j] = standardized_statistic(res, theta0)
            cover[j] = np.abs(res.theta_hat - theta0) <= 1.959963984540054 * res.standard_errors()
        except (SingularityError, DomainError):
            singular[j] = True
    return reps, (stats, cover, singular)


def _run_tasks(func, tasks, workers: int):
    if workers == 1 or len(tasks) == 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def _gather(results, R: int, width: int) -> np.ndarray:
    out = np.empty((R, width))
    for reps, vals in results:
        out[np.asarray(reps)] = vals
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    kind: str
    config: ExperimentConfig
    metrics: dict
    verdict: str
    raw: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "metrics": self.metrics, "verdict": self.verdict}

    def raw_rows(self):
        """``(size_index, rep, component, value)`` tuples of per-replication statistics."""
        for si in sorted(self.raw):
            arr = np.atleast_2d(self.raw[si].T).T
            for rep in range(arr.shape[0]):
                for comp in range(arr.shape[1]):
                    yield si, rep, comp, float(arr[rep, comp])


LlnReport = CltReport = QmleReport = ExperimentReport


def _fit_slope(sizes, values) -> float:
    x = np.log([n * t for n, t in sizes])
    v = np.asarray(values, dtype=float)
    if len(x) < 2 or np.any(v <= 0):
        return float("nan")
    return float(np.polyfit(x, np.log(v), 1)[0])


def run_lln_experiment(config: ExperimentConfig, reverse: bool = False) -> ExperimentReport:
    """L1 error of ``(M_n |D_n|)^{-1} sum (X - E X)`` across the size grid.

    Verdict PASS requires strictly decreasing errors, a final error below
    ``lln_threshold`` and a log-log rate inside ``lln_slope_band``.
    """
    R = config.replications
    rows, raw = [], {}
    for si, (N, T) in enumerate(config.sizes):
        oracle = theoretical_moments(config.params, config.weights(N), config.covariates(N))
        tasks = [(config, si, c, oracle.mean) for c in _chunks(R, reverse)]
        dev = _gather(_run_tasks(_lln_task, tasks, config.workers), R, 1)[:, 0]
        scaled = np.abs(dev) / (config.moment_bound * N * T)
        raw[si] = scaled
        rows.append({
            "N": N, "T": T, "nt": N * T,
            "l1_error": float(scaled.mean()),
            "stderr": float(scaled.std(ddof=1) / math.sqrt(R)),
            "half_normal_reference": math.sqrt(2 * oracle.sum_variance(T, config.innovation_scaling) / math.pi)
            / (config.moment_bound * N * T),
        })
    errors = [r["l1_error"] for r in rows]
    slope = _fit_slope(config.sizes, errors)
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    below = errors[-1] < config.lln_threshold
    lo, hi = config.lln_slope_band
    in_band = len(errors) < 2 or (lo <= slope <= hi)
    metrics = {
        "sizes": rows,
        "fitted_slope": slope,
        "moment_bound": config.moment_bound,
        "strictly_decreasing": decreasing,
        "final_below_threshold": below,
        "slope_in_band": in_band,
    }
    verdict = "PASS" if decreasing and below and in_band else "FAIL"
    return ExperimentReport("lln", config, metrics, verdict, raw)


def projection_directions(k: int) -> List[np.ndarray]:
    """Coordinate axes followed by the normalized all-ones direction."""
    dirs = [np.eye(k)[j] for j in range(k)]
    dirs.append(np.ones(k) / math.sqrt(k))
    return dirs


def run_clt_experiment(config: ExperimentConfig, statistic: str = "field_sum",
                       reverse: bool = False) -> ExperimentReport:
    """KS check of ``S_n / sigma_n`` with the exact ``sigma_n`` from the moment oracle.

    ``field_sum`` uses ``S_n = sum (y - E y)``.  ``projected`` uses the score
    field ``eps_it x_{i,t-1}`` (a mean-zero vector field) projected on the
    axes and the diagonal.  The summand-dominance ratio
    ``sigma_n^2 / (|D_n| M_n^2)`` is reported per size.
    """
    if statistic not in ("field_sum", "projected"):
        raise DomainError(f"unknown CLT statistic {statistic!r}")
    R = config.replications
    rows, raw = [], {}
    reliable = R >= KS_MIN_RELIABLE
    for si, (N, T) in enumerate(config.sizes):
        w, Z = config.weights(N), config.covariates(N)
        oracle = theoretical_moments(config.params, w, Z)
        tasks = [(config, si, c, oracle.mean, statistic) for c in _chunks(R, reverse)]
        if statistic == "field_sum":
            sums = _gather(_run_tasks(_clt_task, tasks, config.workers), R, 1)
            var = np.array([[oracle.sum_variance(T, config.innovation_scaling)]])
            dirs = [np.ones(1)]
        else:
            k = config.params.m + 3
            sums = _gather(_run_tasks(_clt_task, tasks, config.workers), R, k)
            _, var = oracle.population_gram(w, Z, T, config.innovation_scaling)
            dirs = projection_directions(k)
        directions = []
        standardized = []
        for lam in dirs:
            v = float(lam @ var @ lam)
            if not v > 0:
                raise DomainError(f"oracle variance is not positive ({v})")
            z = sums @ lam / math.sqrt(v)
            standardized.append(z)
            d, pval, _ = ks_normality_test(z)
            directions.append({
                "direction": lam.tolist(),
                "oracle_variance": v,
                "sample_variance": float(np.var(sums @ lam, ddof=1)),
                "ks_statistic": d,
                "ks_pvalue": pval,
                "variance_ratio": v / (N * T * config.moment_bound**2),
            })
        raw[si] = np.column_stack(standardized)
        rows.append({"N": N, "T": T, "nt": N * T, "directions": directions})
    last = rows[-1]["directions"]
    min_ratio = min(d["variance_ratio"] for r in rows for d in r["directions"])
    ks_ok = all(d["ks_pvalue"] > config.ks_floor for d in last)
    ratio_ok = min_ratio > config.variance_ratio_floor
    metrics = {
        "statistic": statistic,
        "sizes": rows,
        "min_variance_ratio": min_ratio,
        "ks_reliable": reliable,
        "ks_pass_at_largest": ks_ok,
        "variance_ratio_pass": ratio_ok,
    }
    if not reliable:
        verdict = "FLAGGED"
    else:
        verdict = "PASS" if ks_ok and ratio_ok else "FAIL"
    return ExperimentReport("clt", config, metrics, verdict, raw)


def run_qmle_experiment(config: ExperimentConfig, reverse: bool = False) -> ExperimentReport:
    """Normality and Wald coverage of the standardized QMLE with ``Z`` held fixed.

    PASS requires every component KS p-value above ``ks_floor`` and every
    coverage inside ``coverage_band`` at the largest size, with at most
    ``singular_limit`` of replications singular.  Below eight usable
    replications the verdict is FLAGGED.
    """
    R = config.replications
    k = config.params.m + 3
    rows, raw = [], {}
    for si, (N, T) in enumerate(config.sizes):
        tasks = [(config, si, c) for c in _chunks(R, reverse)]
        stats = np.empty((R, k))
        cover = np.empty((R, k), dtype=bool)
        singular = np.empty(R, dtype=bool)
        for reps, (s, c, g) in _run_tasks(_qmle_task, tasks, config.workers):
            idx = np.asarray(reps)
            stats[idx], cover[idx], singular[idx] = s, c, g
        ok = ~singular
        comps = []
        for j in range(k):
            col = stats[ok, j]
            d, pval, rel = ks_normality_test(col) if col.size else (float("nan"), float("nan"), False)
            comps.append({
                "component": j,
                "mean": float(col.mean()) if col.size else float("nan"),
                "variance": float(col.var(ddof=1)) if col.size > 1 else float("nan"),
                "ks_statistic": d,
                "ks_pvalue": pval,
                "ks_reliable": rel,
                "coverage": float(cover[ok, j].mean()) if col.size else float("nan"),
            })
        raw[si] = stats
        rows.append({"N": N, "T": T, "nt": N * T, "singular": int(singular.sum()),
                     "singular_fraction": float(singular.mean()), "components": comps})
    last = rows[-1]
    frac_ok = all(r["singular_fraction"] <= config.singular_limit for r in rows)
    reliable = all(c["ks_reliable"] for c in last["components"])
    ks_ok = all(c["ks_pvalue"] > config.ks_floor for c in last["components"])
    lo, hi = config.coverage_band
    cov_ok = all(lo <= c["coverage"] <= hi for c in last["components"])
    metrics = {
        "sizes": rows,
        "ks_reliable": reliable,
        "ks_pass_at_largest": ks_ok,
        "coverage_pass_at_largest": cov_ok,
        "singular_pass": frac_ok,
    }
    if not frac_ok:
        verdict = "FAIL"
    elif not reliable:
        verdict = "FLAGGED"
    else:
        verdict = "PASS" if ks_ok and cov_ok else "FAIL"
    return ExperimentReport("qmle", config, metrics, verdict, raw)
