"""Acceptance suite: one check per criterion at its stated tolerance and runtime budget.

Run with ``pytest tests/test_acceptance.py`` (a PASS/FAIL line per criterion
is printed in the terminal summary) or directly as a script.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402
from narfield import cli  # noqa: E402
from narfield import dependence as dep  # noqa: E402
from narfield.estimation import qmle  # noqa: E402
from narfield.lattice import SampleRegion  # noqa: E402
from narfield.montecarlo import (ExperimentConfig, run_clt_experiment, run_lln_experiment,  # noqa: E402
                                 run_qmle_experiment)
from narfield.nar_model import (NarParams, Panel, default_truncation, generate_covariates,  # noqa: E402
                                simulate_batch, simulate_ma_truncated, simulate_recursive, theoretical_moments)
from narfield.network import generate_power_decay_network, row_normalized_weights  # noqa: E402
from narfield.seeding import derive_replication_seed  # noqa: E402

RESULTS = []

REF = NarParams(0.3, 0.2, 0.3, (0.5, -0.4))
NETWORK = dict(alpha=2.0, band=3, seed=11)
Z_SEED = 5
DECLARED_P = 8.0  # moment order declared for the gaussian field in the slope comparison


def ref_inputs(N):
    w = row_normalized_weights(generate_power_decay_network(N, NETWORK["alpha"], NETWORK["band"], NETWORK["seed"]))
    return w, generate_covariates(N, 2, Z_SEED)


def record(number, name, passed, detail, elapsed, budget):
    within = elapsed < budget
    ok = bool(passed and within)
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} [{number:2d}] {name}: {detail}; {elapsed:.2f}s (budget {budget:g}s)")
    return ok


def check_qmle_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(0, 4))
        # node-constant covariates plus intercept need m + 2 <= N for full column rank
        N, T = int(rng.integers(m + 2, 9)), int(rng.integers(4, 13))
        w = row_normalized_weights(generate_power_decay_network(N, 1.0, 3, int(rng.integers(1 << 30))))
        Z = rng.standard_normal((N, m))
        params = NarParams(rng.uniform(-1, 1), 0.3, 0.4, tuple(rng.uniform(-1, 1, m)))
        panel = simulate_recursive(params, w, Z, T, seed=int(rng.integers(1 << 30)))
        got = qmle(panel, w).theta_hat
        want = np.array(oracles.oracle_theta(panel.y.tolist(), Z.tolist(), w.to_dense().tolist()))
        worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))
    return record(1, "qmle oracle equivalence", worst <= 1e-10, f"max relative error {worst:.2e}",
                  time.perf_counter() - t0, 5)


def check_noiseless():
    t0 = time.perf_counter()
    N, T = 12, 15
    w, Z = ref_inputs(N)
    y = np.empty((N, T + 1))
    y[:, 0] = np.linspace(-3, 3, N)
    G = REF.beta1 * w.to_dense() + REF.beta2 * np.eye(N)
    for t in range(1, T + 1):
        y[:, t] = REF.beta0 + G @ y[:, t - 1] + Z @ REF.gamma
    res = qmle(Panel(y, Z, np.zeros((N, T))), w)
    err = float(np.max(np.abs(res.theta_hat - REF.theta)))
    return record(2, "noiseless exactness", err <= 1e-8 and res.sigma2_hat <= 1e-16,
                  f"max |theta_hat - theta0| {err:.1e}, sigma2_hat {res.sigma2_hat:.1e}",
                  time.perf_counter() - t0, 1)


def check_route_equivalence():
    t0 = time.perf_counter()
    w, Z = ref_inputs(50)
    K = default_truncation(REF.contraction)
    tail = REF.contraction ** (K + 1)
    a = simulate_recursive(REF, w, Z, 50, burn_in=K, seed=17)
    b = simulate_ma_truncated(REF, w, Z, 50, K, seed=17)
    err = float(np.max(np.abs(a.y - b.y)))
    return record(3, "route equivalence", tail < 1e-12 and err <= 1e-10,
                  f"K={K}, tail {tail:.1e}, max difference {err:.1e}", time.perf_counter() - t0, 5)


def check_moment_oracle():
    t0 = time.perf_counter()
    w, Z = ref_inputs(10)
    R = 2000
    y, _ = simulate_batch(REF, w, Z, 1, [derive_replication_seed(404, 0, r) for r in range(R)])
    oracle = theoretical_moments(REF, w, Z)
    x = y[:, :, 1] - oracle.mean
    prods = x[:, :, None] * x[:, None, :]
    est = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / math.sqrt(R)
    z = np.abs(est - oracle.lag_cov[0]) / se
    return record(4, "moment oracle vs ensemble covariance", bool(np.all(z < 3)),
                  f"max |z| {z.max():.2f} over {z.size} entries", time.perf_counter() - t0, 30)


def check_qmle_normality():
    t0 = time.perf_counter()
    rep = run_qmle_experiment(ExperimentConfig(REF, sizes=((50, 50),), replications=500, master_seed=2024,
                                               z_seed=Z_SEED, network_seed=NETWORK["seed"]))
    comps = rep.metrics["sizes"][-1]["components"]
    pmin = min(c["ks_pvalue"] for c in comps)
    cov = [c["coverage"] for c in comps]
    ok = pmin > 0.01 and all(0.92 <= c <= 0.98 for c in cov) and rep.verdict == "PASS"
    return record(5, "standardized QMLE normality", ok,
                  f"min KS p {pmin:.3f}, coverage {min(cov):.3f}..{max(cov):.3f}", time.perf_counter() - t0, 300)


def check_clt():
    t0 = time.perf_counter()
    params = NarParams(0.3, 0.2, 0.3, (0.5, -0.4), innovation_kind="rademacher")
    rep = run_clt_experiment(ExperimentConfig(params, sizes=((20, 20), (30, 30), (50, 50)), replications=500))
    p_last = rep.metrics["sizes"][-1]["directions"][0]["ks_pvalue"]
    ratio = rep.metrics["min_variance_ratio"]
    return record(6, "field-sum CLT with rademacher innovations", p_last > 0.01 and ratio > 0.1,
                  f"KS p at NT=2500 {p_last:.3f}, min variance ratio {ratio:.3f}", time.perf_counter() - t0, 180)


def check_lln():
    t0 = time.perf_counter()
    rep = run_lln_experiment(ExperimentConfig(REF, sizes=((20, 20), (40, 40), (80, 80)), replications=200))
    errs = [r["l1_error"] for r in rep.metrics["sizes"]]
    slope = rep.metrics["fitted_slope"]
    iid = run_lln_experiment(ExperimentConfig(NarParams(0.0, 0.0, 0.0, (0.0, 0.0)), sizes=((50, 50),),
                                              replications=200))
    got = iid.metrics["sizes"][0]["l1_error"]
    want = math.sqrt(2 / (math.pi * 2500))
    ok = all(b < a for a, b in zip(errs, errs[1:])) and -0.7 <= slope <= -0.3 and abs(got / want - 1) <= 0.15
    return record(7, "L1 law of large numbers", ok,
                  f"errors {[round(e, 4) for e in errs]}, slope {slope:.3f}, iid {got:.5f} vs {want:.5f}",
                  time.perf_counter() - t0, 120)


def check_bounds():
    t0 = time.perf_counter()
    exponent, _ = dep.power_decay_bound(2, 4, 1, 9, 10)
    reg = dep.ShiftRegularity(d=2, l=1, p=4, b_kind="power", b=6, mu=9)
    rs = [16, 32, 64, 128, 256, 512, 1024]
    vals = [dep.shift_bound(reg, r) for r in rs]
    ratios = [v / dep.power_decay_bound(2, 4, 1, 9, r)[1] for v, r in zip(vals, rs)]
    spread = max(ratios) / min(ratios)
    ok = exponent == -4 and all(b <= a for a, b in zip(vals, vals[1:])) and vals[-1] < vals[0] * 1e-2 and spread < 10
    return record(8, "bound calculators", ok, f"exponent {exponent}, envelope spread {spread:.2f}",
                  time.perf_counter() - t0, 1)


def slope_comparison():
    w, Z = ref_inputs(50)
    est = dep.estimate_delta(REF, w, Z, SampleRegion(50, 50), [1, 2, 3, 4], 200, seed=2024)
    eta = dep.delta_to_eta(est.profile)
    R = 40000
    y, _ = simulate_batch(REF, w, Z, 8, [derive_replication_seed(99, 0, r) for r in range(R)])
    oracle = theoretical_moments(REF, w, Z)
    cd = dep.covariance_decay_from_array(y - oracle.mean[None, :, None], [1, 2, 3, 4], True, 8, 3)
    implied = (DECLARED_P - 2) / (DECLARED_P - 1) * eta.log_slope()
    return est, eta, cd, implied


def check_delta_pipeline():
    t0 = time.perf_counter()
    est, eta, cd, implied = slope_comparison()
    gap = abs(implied - cd.slope)
    ok = est.profile.log_slope() < 0 and eta.is_nonincreasing and gap <= 0.5
    return record(9, "coupling coefficient to covariance decay", ok,
                  f"delta slope {est.profile.log_slope():.3f}, implied {implied:.3f}, "
                  f"empirical {cd.slope:.3f}, gap {gap:.3f}", time.perf_counter() - t0, 180)


def check_heredity():
    t0 = time.perf_counter()
    w, Z = ref_inputs(50)
    params = NarParams(0.3, 0.3, 0.5, (0.5, -0.4))
    R = 20000
    y, _ = simulate_batch(params, w, Z, 8, [derive_replication_seed(7, 0, r) for r in range(R)])
    panels = [Panel(y[r], Z) for r in range(R)]
    rep = dep.heredity_check(panels, 2.0, 4.0, [1, 2, 3, 4], theoretical_moments(params, w, Z))
    iid = NarParams(0.0, 0.0, 0.0, (0.0, 0.0))
    yi, _ = simulate_batch(iid, w, Z, 8, [derive_replication_seed(8, 0, r) for r in range(5000)])
    cdi = dep.covariance_decay_from_array(dep.power_transform(yi, 2.0), [1, 2, 3, 4], False, 8, 0)
    iid_ok = bool(np.all(cdi.profile.values <= 4 * cdi.profile.stderr))
    return record(10, "heredity under x|x|", rep["passed"] and iid_ok,
                  f"original {rep['original_slope']:.3f}, transformed {rep['transformed_slope']:.3f}, "
                  f"threshold {rep['threshold']:.3f}, iid max |cov|/se "
                  f"{np.max(cdi.profile.values / cdi.profile.stderr):.2f}", time.perf_counter() - t0, 120)


def check_determinism(tmp):
    t0 = time.perf_counter()
    tmp = Path(tmp)
    runs = {
        "lln": ["--sizes", "10x10,20x20,30x30", "--replications", "120"],
        "clt": ["--sizes", "10x10,20x20", "--replications", "120", "--statistic", "projected"],
        "qmle-normality": ["--sizes", "10x10,20x20", "--replications", "120"],
        "delta": ["--N", "12", "--T", "12", "--replications", "10"],
        "covdecay": ["--N", "12", "--T", "6", "--replications", "400"],
    }
    mismatched = []
    for command, extra in runs.items():
        blobs = set()
        for workers in (1, 2, 3):
            out, raw = tmp / f"{command}.out", tmp / f"{command}.raw"
            args = [command, *extra, "--out", str(out)]
            if command in ("lln", "clt", "qmle-normality"):
                args += ["--workers", str(workers), "--raw-out", str(raw)]
            else:
                args += ["--report", str(tmp / f"{command}.json")]
            cli.run(args)
            parts = [out.read_bytes()]
            for extra_file in (raw, tmp / f"{command}.json"):
                if extra_file.exists():
                    parts.append(extra_file.read_bytes())
            blobs.add(b"|".join(parts))
        if len(blobs) != 1:
            mismatched.append(command)
    return record(11, "byte-identical reruns across worker counts", not mismatched,
                  f"mismatched: {mismatched or 'none'}", time.perf_counter() - t0, 600)


def test_qmle_oracle_equivalence():
    assert check_qmle_oracle()


def test_noiseless_exactness():
    assert check_noiseless()


def test_route_equivalence():
    assert check_route_equivalence()


def test_moment_oracle():
    assert check_moment_oracle()


def test_standardized_qmle_normality():
    assert check_qmle_normality()


def test_field_sum_clt():
    assert check_clt()


def test_law_of_large_numbers():
    assert check_lln()


def test_bound_calculators():
    assert check_bounds()


def test_coupling_pipeline():
    assert check_delta_pipeline()


def test_heredity():
    assert check_heredity()


def test_determinism(tmp_path):
    assert check_determinism(tmp_path)


if __name__ == "__main__":
    import tempfile
    checks = [check_qmle_oracle, check_noiseless, check_route_equivalence, check_moment_oracle,
              check_qmle_normality, check_clt, check_lln, check_bounds, check_delta_pipeline, check_heredity]
    for check in checks:
        check()
    with tempfile.TemporaryDirectory() as tmp:
        check_determinism(tmp)
    print("\n".join(RESULTS))
    sys.exit(0 if all(line.startswith("PASS") for line in RESULTS) else 1)
