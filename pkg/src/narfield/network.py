"""Directed networks, row-normalized weights and the companion matrix.

The companion matrix ``G = beta1 * W + beta2 * I`` is the one-step propagator
of the network autoregression.  Besides building it, this module provides
finite-horizon certificates for the two network decay conditions used in the
asymptotic theory: off-diagonal power decay of ``G**k`` and geometric decay of
the diagonal of ``(G G')**k``.
"""

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Tuple, Union
import io
import math

import numpy as np
from scipy import sparse

from .errors import DomainError, ParseError


@dataclass(frozen=True)
class Network:
    """Directed graph on nodes ``1..N``; ``(i, j)`` means ``a_ij = 1``."""

    N: int
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("a network needs at least one node")
        object.__setattr__(self, "edges", frozenset((int(i), int(j)) for i, j in self.edges))
        for i, j in self.edges:
            if i == j:
                raise DomainError(f"self-loop at node {i}")
            if not (1 <= i <= self.N and 1 <= j <= self.N):
                raise DomainError(f"edge ({i}, {j}) outside nodes 1..{self.N}")

    def adjacency(self) -> sparse.csr_matrix:
        if not self.edges:
            return sparse.csr_matrix((self.N, self.N))
        rows, cols = zip(*sorted(self.edges))
        data = np.ones(len(rows))
        return sparse.csr_matrix((data, (np.array(rows) - 1, np.array(cols) - 1)), shape=(self.N, self.N))

    def out_degrees(self) -> np.ndarray:
        deg = np.zeros(self.N, dtype=int)
        for i, _ in self.edges:
            deg[i - 1] += 1
        return deg

    def to_edge_list(self) -> str:
        lines = [f"# nodes {self.N}"]
        lines.extend(f"{i} {j}" for i, j in sorted(self.edges))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class WeightMatrix:
    """Row-normalized weights ``w_ij = a_ij / out_degree(i)``."""

    matrix: sparse.csr_matrix = field(repr=False)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class CompanionMatrix:
    """``G = beta1 * W + beta2 * I`` stored sparse."""

    matrix: sparse.csr_matrix = field(repr=False)
    beta1: float
    beta2: float

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_sum_bound(self) -> float:
        return abs(self.beta1) + abs(self.beta2)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class SpectralRadius:
    value: float
    converged: bool
    iterations: int


@dataclass
class CheckReport:
    """Outcome of a finite-horizon network assumption check."""

    name: str
    passed: bool
    constant: float
    rate: float
    k_max: int
    binding: Optional[Tuple[int, int, int]] = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "constant": self.constant,
            "rate": self.rate,
            "k_max": self.k_max,
            "binding": None if self.binding is None else list(self.binding),
            "details": self.details,
        }


def load_edge_list(source: Union[str, bytes, Iterable[str], io.IOBase], N: Optional[int] = None) -> Network:
    """Parse a whitespace-separated, 1-based ``i j`` edge list.

    Blank lines and ``#`` comments are skipped, duplicate edges collapse.  A
    ``# nodes N`` header line fixes the node count when ``N`` is not given;
    otherwise the largest label seen is used.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = source.splitlines()
    edges = set()
    header_n = None
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nodes":
                try:
                    header_n = int(parts[1])
                except ValueError:
                    raise ParseError(f"bad node count {parts[1]!r}", lineno) from None
            continue
        line = line.split("#", 1)[0]
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected two node labels, got {len(tokens)} tokens", lineno)
        try:
            i, j = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ParseError(f"non-integer token in {line.strip()!r}", lineno) from None
        if i == j:
            raise ParseError(f"self-loop at node {i}", lineno)
        limit = N if N is not None else header_n
        if i < 1 or j < 1 or (limit is not None and (i > limit or j > limit)):
            raise ParseError(f"edge ({i}, {j}) outside nodes 1..{limit if limit is not None else 'N'}", lineno)
        edges.add((i, j))
    if N is None:
        N = header_n if header_n is not None else max((max(e) for e in edges), default=0)
    if N < 1:
        raise ParseError("empty edge list and no node count")
    return Network(N, frozenset(edges))


def row_normalized_weights(net: Network) -> WeightMatrix:
    """Rows with out-degree zero stay all-zero."""
    a = net.adjacency()
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    w = sparse.diags(inv) @ a
    return WeightMatrix(sparse.csr_matrix(w))


def companion_matrix(w: WeightMatrix, beta1: float, beta2: float) -> CompanionMatrix:
    if not abs(beta1) + abs(beta2) < 1:
        raise DomainError(
            f"stationarity requires |beta1| + |beta2| < 1, got {abs(beta1) + abs(beta2):.6g}"
        )
    g = beta1 * w.matrix + beta2 * sparse.identity(w.N, format="csr")
    g = sparse.csr_matrix(g)
    g.eliminate_zeros()
    return CompanionMatrix(g, float(beta1), float(beta2))


def spectral_radius(g: CompanionMatrix, tol: float = 1e-12, max_iter: int = 10_000,
                    absolute: bool = True) -> SpectralRadius:
    """Power-iteration estimate of the spectral radius.

    With ``absolute=True`` (the default) the iteration runs on ``|G|``, whose
    Perron root dominates ``rho(G)``; for nonnegative ``G`` the two coincide.
    Iteration stops once the relative change of the estimate drops below
    ``tol``; otherwise the last estimate is returned with ``converged=False``.
    """
    a = abs(g.matrix) if absolute else g.matrix
    n = g.N
    x = np.ones(n) / math.sqrt(n)
    estimate = 0.0
    for it in range(1, max_iter + 1):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return SpectralRadius(0.0, True, it)
        # Rayleigh-type ratio on consecutive iterates
        new = norm / np.linalg.norm(x)
        x = y / norm
        if it > 1 and abs(new - estimate) <= tol * max(new, 1e-300):
            return SpectralRadius(float(new), True, it)
        estimate = new
    return SpectralRadius(float(estimate), False, max_iter)


def matrix_powers(g: CompanionMatrix, k_max: int) -> List[sparse.csr_matrix]:
    """``[G**1, ..., G**k_max]`` by repeated sparse multiplication."""
    out = []
    p = g.matrix
    for _ in range(k_max):
        out.append(p)
        p = sparse.csr_matrix(p @ g.matrix)
    return out


def _rho1_candidates(g: CompanionMatrix, n: int = 8) -> np.ndarray:
    hi = g.row_sum_bound
    lo = spectral_radius(g, absolute=False, max_iter=2000).value
    lo = min(max(lo, 0.0), hi)
    if hi <= 0.0:
        return np.array([1e-12])
    return np.unique(np.linspace(max(lo, 1e-12), hi, n))


def check_network_decay(g: CompanionMatrix, alpha: float, k_max: int,
                        rho1_candidates=None, c1_max: float = 1e4) -> CheckReport:
    """Certify ``|G^k(i, j)| <= C1 * rho1**k * |j - i|**(-alpha - 2)`` for k <= k_max.

    For each candidate ``rho1`` the smallest admissible ``C1`` over the
    examined powers and all off-diagonal entries is computed; the candidate
    with the smallest ``C1`` is reported.  The check passes when that constant
    does not exceed ``c1_max``.  Diagonal entries are unconstrained because
    ``|i - i|**(-alpha - 2)`` is infinite.
    """
    if k_max < 1:
        raise DomainError("k_max must be at least 1")
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    rhos = np.asarray(_rho1_candidates(g) if rho1_candidates is None else rho1_candidates, dtype=float)
    if np.any((rhos <= 0) | (rhos >= 1)):
        raise DomainError("rho1 candidates must lie in (0, 1)")
    best_ratio = np.zeros(len(rhos))
    best_at = [None] * len(rhos)
    for k, pk in enumerate(matrix_powers(g, k_max), start=1):
        coo = pk.tocoo()
        off = (coo.row != coo.col) & (coo.data != 0)
        if not np.any(off):
            continue
        i, j, v = coo.row[off], coo.col[off], np.abs(coo.data[off])
        weight = v * np.abs(j - i).astype(float) ** (alpha + 2)
        idx = int(np.argmax(weight))
        for r, rho in enumerate(rhos):
            ratio = weight[idx] / rho**k
            if ratio > best_ratio[r]:
                best_ratio[r] = ratio
                best_at[r] = (k, int(i[idx]) + 1, int(j[idx]) + 1)
    r = int(np.argmin(best_ratio))
    c1 = float(best_ratio[r])
    return CheckReport(
        name="network_decay",
        passed=bool(np.isfinite(c1) and c1 <= c1_max),
        constant=c1,
        rate=float(rhos[r]),
        k_max=k_max,
        binding=best_at[r],
        details={
            "alpha": alpha,
            "c1_max": c1_max,
            "rho1_candidates": rhos.tolist(),
            "c1_per_candidate": best_ratio.tolist(),
        },
    )


def check_gram_diagonal_decay(g: CompanionMatrix, k_max: int) -> CheckReport:
    """Fit ``max_i (G G')^k(i, i) <= C2 * rho2**k`` over ``k = 1..k_max``.

    ``rho2`` comes from a least-squares line through ``log d_k``; ``C2`` is
    then raised until the envelope covers every point.  A single point is
    fitted exactly with ``C2 = 1``.  Passes when ``rho2 < 1``.
    """
    if k_max < 1:
        raise DomainError("k_max must be at least 1")
    gg = sparse.csr_matrix(g.matrix @ g.matrix.T)
    p = gg
    diag_max = []
    for _ in range(k_max):
        diag_max.append(float(np.max(np.abs(p.diagonal()))))
        p = sparse.csr_matrix(p @ gg)
    d = np.array(diag_max)
    ks = np.arange(1, k_max + 1)
    if np.all(d == 0):
        rho2, c2 = 0.0, 0.0
    elif k_max == 1:
        rho2, c2 = d[0], 1.0
    else:
        positive = d > 0
        slope, _ = np.polyfit(ks[positive], np.log(d[positive]), 1)
        rho2 = float(np.exp(slope))
        c2 = float(np.max(d / rho2**ks))
    binding = int(np.argmax(d / rho2**ks)) + 1 if rho2 > 0 else None
    return CheckReport(
        name="gram_diagonal_decay",
        passed=bool(rho2 < 1.0),
        constant=float(c2),
        rate=float(rho2),
        k_max=k_max,
        binding=None if binding is None else (binding, 0, 0),
        details={"max_diagonal": d.tolist()},
    )


def generate_power_decay_network(N: int, alpha: float, band: int, seed: int) -> Network:
    """Random network with edge probability ``min(1, |i - j|**(-alpha - 2))``.

    Only pairs with ``1 <= |i - j| <= band`` can connect, so nearest
    neighbours (probability one) are always linked and every node has an
    out-edge whenever ``N >= 2``.
    """
    if band < 1:
        raise DomainError("band must be at least 1")
    if N < 1:
        raise DomainError("N must be positive")
    rng = np.random.default_rng(seed)
    edges = set()
    for lag in range(1, min(band, N - 1) + 1):
        prob = min(1.0, float(lag) ** (-alpha - 2))
        i = np.arange(1, N - lag + 1)
        # forward (i -> i + lag) and backward (i + lag -> i) edges drawn separately
        fwd = rng.random(len(i)) < prob
        bwd = rng.random(len(i)) < prob
        edges.update(zip(i[fwd].tolist(), (i[fwd] + lag).tolist()))
        edges.update(zip((i[bwd] + lag).tolist(), i[bwd].tolist()))
    return Network(N, frozenset(edges))


def expected_edge_count(N: int, alpha: float, band: int) -> Tuple[float, float]:
    """Mean and variance of the edge count of :func:`generate_power_decay_network`."""
    mean = var = 0.0
    for lag in range(1, min(band, N - 1) + 1):
        p = min(1.0, float(lag) ** (-alpha - 2))
        pairs = 2 * (N - lag)
        mean += pairs * p
        var += pairs * p * (1 - p)
    return mean, var
