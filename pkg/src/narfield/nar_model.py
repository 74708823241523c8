"""Network autoregression: simulation, coupled truncations and exact moments.

The model is

    y_t = beta0 * 1 + G y_{t-1} + Z gamma + eps_t,    G = beta1 * W + beta2 * I,

with node covariates ``Z`` (``N x m``, time invariant) and IID innovations.
Its stationary moving-average form is

    y_t = (I - G)^{-1} (beta0 * 1 + Z gamma) + sum_{k >= 0} G^k eps_{t-k}.

Innovations are drawn from a counter-based stream: ``eps_it`` is a pure
function of ``(seed, i, t)`` (see :mod:`narfield.seeding`), so the recursive
simulator, the truncated moving-average simulator and the coupled truncations
all see identical shocks at each site regardless of evaluation order.

Arrays are stored node-major: ``y[i - 1, t]`` holds ``y_it`` for
``t = 0..T``, with ``t = 0`` the pre-sample state.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple
import math
import warnings

import numpy as np
from scipy import linalg, special

from .errors import DomainError
from .lattice import SampleRegion
from .network import CompanionMatrix, WeightMatrix, companion_matrix
from .seeding import site_hash, to_unit_interval

INNOVATION_KINDS = ("gaussian", "rademacher", "centered_bernoulli")
SCALINGS = (None, "time_linear")


@dataclass(frozen=True)
class NarParams:
    beta0: float
    beta1: float
    beta2: float
    gamma: Tuple[float, ...] = ()
    sigma: float = 1.0
    innovation_kind: str = "gaussian"
    bernoulli_q: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in np.atleast_1d(self.gamma)))
        if not abs(self.beta1) + abs(self.beta2) < 1:
            raise DomainError(
                "stationarity (|beta1| + |beta2| < 1) violated: "
                f"|{self.beta1}| + |{self.beta2}| = {abs(self.beta1) + abs(self.beta2):.6g}"
            )
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.innovation_kind not in INNOVATION_KINDS:
            raise DomainError(f"unknown innovation kind {self.innovation_kind!r}; choose from {INNOVATION_KINDS}")
        if self.innovation_kind == "centered_bernoulli" and not 0 < self.bernoulli_q < 1:
            raise DomainError("bernoulli_q must lie in (0, 1)")

    @property
    def m(self) -> int:
        return len(self.gamma)

    @property
    def theta(self) -> np.ndarray:
        """``(beta0, beta1, beta2, gamma_1..gamma_m)``."""
        return np.array([self.beta0, self.beta1, self.beta2, *self.gamma])

    @property
    def contraction(self) -> float:
        return abs(self.beta1) + abs(self.beta2)


def default_truncation(rho: float, tol: float = 1e-12) -> int:
    """Smallest ``K >= 1`` with ``rho**K <= tol``."""
    if rho <= 0:
        return 1
    return max(1, math.ceil(math.log(tol) / math.log(rho)))


def _standard_draws(h, kind: str, q: float) -> np.ndarray:
    """Unit-variance, mean-zero variates from 64-bit hashes."""
    if kind == "gaussian":
        return special.ndtri(to_unit_interval(h))
    if kind == "rademacher":
        return np.where((h >> np.uint64(63)) == 1, 1.0, -1.0)
    u = to_unit_interval(h)
    return ((u < q).astype(float) - q) / math.sqrt(q * (1 - q))


def innovation_scale(t, T: int, scaling: Optional[str]):
    """Site scale ``c_it``: 1, or ``1 + t/T`` on ``1 <= t <= T`` for ``time_linear``."""
    t = np.asarray(t)
    if scaling is None:
        return np.ones(t.shape)
    if scaling == "time_linear":
        return 1.0 + np.clip(t, 0, T) / T
    raise DomainError(f"unknown scaling {scaling!r}")


@dataclass(frozen=True)
class InnovationStream:
    """``eps_it = sigma * c_it * xi(seed, i, t)``."""

    seed: int
    sigma: float = 1.0
    kind: str = "gaussian"
    bernoulli_q: float = 0.5
    scaling: Optional[str] = None
    T: int = 1

    @classmethod
    def for_params(cls, params: NarParams, seed: int, T: int, scaling: Optional[str] = None):
        return cls(int(seed), params.sigma, params.innovation_kind, params.bernoulli_q, scaling, T)

    def draw(self, nodes, times, seeds=None) -> np.ndarray:
        """Innovations on the broadcast grid of 1-based ``nodes`` and ``times``.

        ``seeds`` overrides the stream seed, allowing a batch of replications
        to be drawn at once.
        """
        seeds = self.seed if seeds is None else seeds
        h = site_hash(seeds, nodes, times)
        z = _standard_draws(h, self.kind, self.bernoulli_q)
        return self.sigma * innovation_scale(times, self.T, self.scaling) * z

    def block(self, N: int, t_first: int, t_last: int) -> np.ndarray:
        """``N x (t_last - t_first + 1)`` array of innovations, columns in time order."""
        nodes = np.arange(1, N + 1)[:, None]
        times = np.arange(t_first, t_last + 1)[None, :]
        return self.draw(nodes, times)


@dataclass
class Panel:
    """Observed (or simulated) NAR panel.

    ``y`` has shape ``(N, T + 1)`` (``t = 0..T``), ``Z`` shape ``(N, m)`` and
    ``eps`` (when stored) shape ``(N, T)`` for ``t = 1..T``.  Simulated panels
    also carry the parameters, weights and innovation stream they came from,
    plus the moving-average truncation used for coupled truncations.
    """

    y: np.ndarray
    Z: np.ndarray
    eps: Optional[np.ndarray] = None
    params: Optional[NarParams] = None
    weights: Optional[WeightMatrix] = field(default=None, repr=False)
    stream: Optional[InnovationStream] = None
    truncation: Optional[int] = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.Z = np.asarray(self.Z, dtype=float).reshape(self.y.shape[0], -1)
        if self.y.ndim != 2 or self.y.shape[1] < 2:
            raise DomainError("y must be an N x (T + 1) array with T >= 1")
        if self.eps is not None:
            self.eps = np.asarray(self.eps, dtype=float)
            if self.eps.shape != (self.N, self.T):
                raise DomainError(f"eps must have shape {(self.N, self.T)}, got {self.eps.shape}")

    @property
    def N(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1] - 1

    @property
    def m(self) -> int:
        return self.Z.shape[1]

    @property
    def region(self) -> SampleRegion:
        return SampleRegion(self.N, self.T)

    def regressors(self, w: Optional[WeightMatrix] = None) -> np.ndarray:
        """``x_{i,t-1} = (1, sum_j w_ij y_{j,t-1}, y_{i,t-1}, Z_i)`` for ``t = 1..T``.

        Returns an array of shape ``(N, T, m + 3)``.
        """
        w = self.weights if w is None else w
        if w is None:
            raise DomainError("regressors need a weight matrix")
        if w.N != self.N:
            raise DomainError(f"weight matrix has {w.N} nodes, panel has {self.N}")
        lag = self.y[:, :-1]
        x = np.empty((self.N, self.T, self.m + 3))
        x[:, :, 0] = 1.0
        x[:, :, 1] = w.matrix @ lag
        x[:, :, 2] = lag
        x[:, :, 3:] = self.Z[:, None, :]
        return x

    @property
    def responses(self) -> np.ndarray:
        return self.y[:, 1:]


def generate_covariates(N: int, m: int, seed: int) -> np.ndarray:
    """IID standard normal ``N x m`` covariates."""
    if N < 1 or m < 0:
        raise DomainError("need N >= 1 and m >= 0")
    return np.random.default_rng(seed).standard_normal((N, m))


def _check_inputs(params: NarParams, w: WeightMatrix, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1 and params.m == 0:
        Z = Z.reshape(-1, 0)
    if Z.ndim != 2 or Z.shape[0] != w.N:
        raise DomainError(f"Z must be {w.N} x {params.m}, got shape {Z.shape}")
    if Z.shape[1] != params.m:
        raise DomainError(f"Z has {Z.shape[1]} columns but gamma has length {params.m}")
    return Z


def intercept_vector(params: NarParams, Z) -> np.ndarray:
    """``B0 = beta0 * 1 + Z gamma``."""
    Z = np.asarray(Z, dtype=float)
    return params.beta0 + (Z @ np.asarray(params.gamma) if params.m else np.zeros(Z.shape[0]))


def _solve_mean(g: CompanionMatrix, b0: np.ndarray):
    a = np.eye(g.N) - g.to_dense()
    mu = linalg.solve(a, b0)
    residual = float(np.max(np.abs(a @ mu - b0), initial=0.0))
    return mu, residual


def simulate_batch(params: NarParams, w: WeightMatrix, Z, T: int, seeds: Sequence[int],
                   burn_in: Optional[int] = None, scaling: Optional[str] = None):
    """Recursive simulation of several replications at once.

    Each column of the state is advanced with its own seed; the sparse
    product treats columns independently, so a replication's output does not
    depend on which other replications share the batch.

    Returns ``(y, eps)`` with shapes ``(R, N, T + 1)`` and ``(R, N, T)``.
    """
    Z = _check_inputs(params, w, Z)
    if T < 1:
        raise DomainError("T must be at least 1")
    g = companion_matrix(w, params.beta1, params.beta2)
    if burn_in is None:
        burn_in = default_truncation(params.contraction)
    if burn_in < 0:
        raise DomainError("burn_in must be nonnegative")
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(1, -1)
    R, N = seeds.shape[1], w.N
    stream = InnovationStream.for_params(params, 0, T, scaling)
    b0 = intercept_vector(params, Z)[:, None]
    nodes = np.arange(1, N + 1)[:, None]
    state = np.zeros((N, R))
    y = np.empty((N, R, T + 1))
    eps = np.empty((N, R, T))
    for t in range(-burn_in + 1, T + 1):
        e = stream.draw(nodes, t, seeds)
        state = b0 + g.matrix @ state + e
        if t >= 0:
            y[:, :, t] = state
        if t >= 1:
            eps[:, :, t - 1] = e
    if burn_in == 0:
        y[:, :, 0] = 0.0
    return y.transpose(1, 0, 2), eps.transpose(1, 0, 2)


def simulate_recursive(params: NarParams, w: WeightMatrix, Z, T: int,
                       burn_in: Optional[int] = None, seed: int = 0,
                       scaling: Optional[str] = None) -> Panel:
    """Iterate the model from ``y_{-burn_in} = 0`` and keep ``t = 0..T``.

    ``burn_in`` defaults to the smallest count making the initial condition's
    influence fall below ``1e-12``.
    """
    if burn_in is None:
        burn_in = default_truncation(params.contraction)
    y, eps = simulate_batch(params, w, Z, T, [seed], burn_in, scaling)
    stream = InnovationStream.for_params(params, seed, T, scaling)
    return Panel(y[0], np.asarray(Z, dtype=float).reshape(w.N, -1), eps[0], params, w, stream, burn_in)


def simulate_ma_truncated(params: NarParams, w: WeightMatrix, Z, T: int, K: int,
                          seed: int = 0, scaling: Optional[str] = None) -> Panel:
    """``y_t = (I - G)^{-1} B0 + sum_{k=0}^{K} G^k eps_{t-k}`` for ``t = 0..T``."""
    Z = _check_inputs(params, w, Z)
    if K < 0:
        raise DomainError("K must be nonnegative")
    g = companion_matrix(w, params.beta1, params.beta2)
    stream = InnovationStream.for_params(params, seed, T, scaling)
    e = stream.block(w.N, -K, T)  # column c holds time c - K
    mu, _ = _solve_mean(g, intercept_vector(params, Z))
    acc = np.zeros((w.N, T + 1))
    a = e
    for k in range(K + 1):
        acc += a[:, K - k:K - k + T + 1]
        if k < K:
            a = g.matrix @ a
    return Panel(mu[:, None] + acc, Z, e[:, K + 1:], params, w, stream, K)


def coupled_truncation(panel: Panel, s: int) -> Panel:
    """Recompute the field from innovations within Chebyshev distance ``s``.

    Site ``(i, t)`` keeps only ``eps_{j, t-k}`` with ``max(|i - j|, k) <= s``;
    all other innovations are set to zero, so the result at ``(i, t)`` depends
    on the ``s``-neighbourhood alone.  The moving-average series is cut at the
    panel's recorded truncation.
    """
    if panel.stream is None or panel.params is None or panel.weights is None:
        raise DomainError("coupled truncation needs a panel with its innovation stream, parameters and weights")
    if s < 0:
        raise DomainError("s must be nonnegative")
    params, w = panel.params, panel.weights
    K = panel.truncation if panel.truncation is not None else default_truncation(params.contraction)
    gs = companion_matrix(w, params.beta1, params.beta2)
    g = gs.to_dense()
    mu, _ = _solve_mean(gs, intercept_vector(params, panel.Z))
    N, T = panel.N, panel.T
    kmax = min(s, K)
    e = panel.stream.block(N, -kmax, T)
    idx = np.arange(N)
    band = np.abs(idx[:, None] - idx[None, :]) <= s
    acc = np.zeros((N, T + 1))
    power = np.eye(N)
    for k in range(kmax + 1):
        acc += (power * band) @ e[:, kmax - k:kmax - k + T + 1]
        power = g @ power
    eps = panel.eps
    return replace(panel, y=mu[:, None] + acc, eps=None if eps is None else eps.copy())


@dataclass
class MomentOracle:
    """Exact first and second moments of the stationary NAR field given ``Z``.

    ``lag_cov[h]`` is ``Cov(y_{t+h}, y_t) = sigma^2 G^h V`` with
    ``V = sum_{k <= K} G^k (G')^k``.
    """

    mean: np.ndarray
    lag_cov: Dict[int, np.ndarray]
    truncation: int
    tail_bound: float
    G: np.ndarray = field(repr=False)
    sigma: float = 1.0
    solve_residual: float = 0.0

    @property
    def N(self) -> int:
        return self.mean.shape[0]

    def covariance(self, a, b) -> float:
        """``Cov(y_a, y_b)`` for sites ``a = (i, t)``, ``b = (j, u)``."""
        (i, t), (j, u) = a, b
        h = t - u
        if h >= 0:
            return float(self._lag(h)[i - 1, j - 1])
        return float(self._lag(-h)[j - 1, i - 1])

    def _lag(self, h: int) -> np.ndarray:
        if h not in self.lag_cov:
            self.lag_cov[h] = np.linalg.matrix_power(self.G, h) @ self.lag_cov[0]
        return self.lag_cov[h]

    def sum_variance(self, T: int, scaling: Optional[str] = None) -> float:
        """``Var(sum_{i, 1<=t<=T} y_it)`` including optional innovation scaling.

        Uses the exact coefficient of each ``eps_tau`` in the field sum,
        ``c_tau' = sum_{t=max(1,tau)}^{T} 1' G^{t - tau}``, summed back to
        ``tau = 1 - truncation``.
        """
        N = self.N
        coef = np.zeros(N)
        total = 0.0
        ones = np.ones(N)
        for tau in range(T, -self.truncation, -1):
            coef = coef @ self.G
            if tau >= 1:
                coef = coef + ones
            c = innovation_scale(tau, T, scaling)
            total += float(np.sum(coef**2)) * c**2
        return self.sigma**2 * total

    def state_covariances(self, T: int, scaling: Optional[str] = None):
        """``Var(y_t)`` for ``t = 0..T`` under optional innovation scaling."""
        gam = self.lag_cov[0].copy()
        out = [gam]
        for t in range(1, T + 1):
            c = innovation_scale(t, T, scaling)
            gam = self.G @ gam @ self.G.T + self.sigma**2 * c**2 * np.eye(self.N)
            out.append(gam)
        return out

    def population_gram(self, w: WeightMatrix, Z, T: int, scaling: Optional[str] = None):
        """Population ``Sigma_NT = (1/NT) sum E_Z[x_{i,t-1} x_{i,t-1}']``.

        Also returns ``Var(sum eps_it x_{i,t-1})``, the covariance of the
        score sum, which weights each site by its innovation variance.
        """
        Z = np.asarray(Z, dtype=float).reshape(self.N, -1)
        Wd = w.to_dense()
        mu = self.mean
        wmu = Wd @ mu
        k = Z.shape[1] + 3
        gram = np.zeros((k, k))
        score = np.zeros((k, k))
        for t, gam in enumerate(self.state_covariances(T, scaling)[:-1], start=1):
            second = np.outer(mu, mu) + gam
            mean_x = np.column_stack([np.ones(self.N), wmu, mu, Z])
            exx = np.einsum("ia,ib->iab", mean_x, mean_x)
            exx[:, 1, 1] = np.einsum("ij,jk,ik->i", Wd, second, Wd)
            exx[:, 1, 2] = exx[:, 2, 1] = np.einsum("ij,ji->i", Wd, second)
            exx[:, 2, 2] = np.diag(second)
            c2 = innovation_scale(t, T, scaling) ** 2
            gram += exx.sum(axis=0)
            score += c2 * exx.sum(axis=0)
        return gram / (self.N * T), self.sigma**2 * score


def theoretical_moments(params: NarParams, w: WeightMatrix, Z, h_max: int = 0,
                        K: Optional[int] = None) -> MomentOracle:
    """Moment oracle from the moving-average representation.

    ``K`` defaults to the smallest truncation whose recorded tail bound
    ``sigma^2 rho^{2K} / (1 - rho^2)`` is below ``1e-10``.
    """
    Z = _check_inputs(params, w, Z)
    rho = params.contraction
    if K is None:
        K = 1
        while params.sigma**2 * rho ** (2 * K) / (1 - rho**2) >= 1e-10:
            K += 1
    gs = companion_matrix(w, params.beta1, params.beta2)
    mu, residual = _solve_mean(gs, intercept_vector(params, Z))
    if residual > 1e-8:
        warnings.warn(f"mean solve residual {residual:.3e} exceeds 1e-8", RuntimeWarning)
    g = gs.to_dense()
    v = np.zeros_like(g)
    p = np.eye(g.shape[0])
    for _ in range(K + 1):
        v += p @ p.T
        p = g @ p
    v = 0.5 * (v + v.T)
    lag = {0: params.sigma**2 * v}
    p = np.eye(g.shape[0])
    for h in range(1, h_max + 1):
        p = g @ p
        lag[h] = params.sigma**2 * (p @ v)
    tail = params.sigma**2 * rho ** (2 * K) / (1 - rho**2)
    return MomentOracle(mu, lag, K, tail, g, params.sigma, residual)
