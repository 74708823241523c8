"""Independent reference computations used to freeze expected values.

Nothing here calls the package's numerical routines: the oracles rebuild
regressors with explicit loops and solve with full-pivot elimination.
"""

import math


def regressor_rows(y, Z, W):
    """Explicit-loop ``x_{i,t-1}`` rows and responses for a panel."""
    N = len(y)
    T = len(y[0]) - 1
    rows, resp = [], []
    for i in range(N):
        for t in range(1, T + 1):
            net = sum(W[i][j] * y[j][t - 1] for j in range(N))
            rows.append([1.0, net, y[i][t - 1], *Z[i]])
            resp.append(y[i][t])
    return rows, resp


def normal_equations(rows, resp):
    k = len(rows[0])
    A = [[sum(r[a] * r[b] for r in rows) for b in range(k)] for a in range(k)]
    b = [sum(r[a] * v for r, v in zip(rows, resp)) for a in range(k)]
    return A, b


def full_pivot_solve(A, b):
    """Gaussian elimination with complete pivoting on a copy of ``A x = b``."""
    n = len(A)
    M = [list(map(float, row)) + [float(v)] for row, v in zip(A, b)]
    perm = list(range(n))
    for c in range(n):
        piv = max(((abs(M[r][q]), r, q) for r in range(c, n) for q in range(c, n)))
        _, r, q = piv
        M[c], M[r] = M[r], M[c]
        for row in M:
            row[c], row[q] = row[q], row[c]
        perm[c], perm[q] = perm[q], perm[c]
        for r2 in range(c + 1, n):
            f = M[r2][c] / M[c][c]
            for q2 in range(c, n + 1):
                M[r2][q2] -= f * M[c][q2]
    x = [0.0] * n
    for c in range(n - 1, -1, -1):
        x[c] = (M[c][n] - sum(M[c][q] * x[q] for q in range(c + 1, n))) / M[c][c]
    out = [0.0] * n
    for c in range(n):
        out[perm[c]] = x[c]
    return out


def oracle_theta(y, Z, W):
    rows, resp = regressor_rows(y, Z, W)
    A, b = normal_equations(rows, resp)
    return full_pivot_solve(A, b)


def dense_weights(N, edges):
    W = [[0.0] * N for _ in range(N)]
    for i, j in edges:
        W[i - 1][j - 1] = 1.0
    for row in W:
        s = sum(row)
        if s:
            for j in range(N):
                row[j] /= s
    return W


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def inverse_iteration_min_eig(A, iters=500):
    """Smallest eigenvalue of an SPD matrix by inverse iteration."""
    n = len(A)
    v = [1.0 / math.sqrt(n)] * n
    lam = 0.0
    for _ in range(iters):
        w = full_pivot_solve(A, v)
        norm = math.sqrt(sum(x * x for x in w))
        v = [x / norm for x in w]
        Av = [sum(A[i][j] * v[j] for j in range(n)) for i in range(n)]
        lam = sum(a * b for a, b in zip(Av, v))
    return lam


def kolmogorov_survival(lam, terms=100):
    return 2 * sum((-1) ** (k - 1) * math.exp(-2 * k * k * lam * lam) for k in range(1, terms + 1))
