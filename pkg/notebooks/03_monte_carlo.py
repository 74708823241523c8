"""
Monte Carlo checks of the limit theorems
========================================

Three experiments: the L1 law of large numbers for the field mean, a CLT
for the standardized field sum, and asymptotic normality of the QMLE.
Every replication has its own derived seed, so results do not depend on
the worker count.
"""

from narfield import ExperimentConfig, NarParams, run_clt_experiment, run_lln_experiment, run_qmle_experiment

params = NarParams(0.3, 0.2, 0.3, (0.5, -0.4))

###############################################################################
# L1 error of the sample mean shrinks like (NT)^(-1/2).
lln = run_lln_experiment(ExperimentConfig(params, sizes=((20, 20), (40, 40), (80, 80)), replications=200))
for row in lln.metrics["sizes"]:
    print(row["N"], row["T"], round(row["l1_error"], 5))
print("fitted slope:", round(lln.metrics["fitted_slope"], 3), lln.verdict)

###############################################################################
# Rademacher innovations: non-gaussian, yet the standardized sum is normal.
rad = NarParams(0.3, 0.2, 0.3, (0.5, -0.4), innovation_kind="rademacher")
clt = run_clt_experiment(ExperimentConfig(rad, sizes=((20, 20), (30, 30), (50, 50)), replications=500))
print("KS p at largest size:", round(clt.metrics["sizes"][-1]["directions"][0]["ks_pvalue"], 3), clt.verdict)

###############################################################################
# QMLE: KS p-values and 95% interval coverage per component.
q = run_qmle_experiment(ExperimentConfig(params, sizes=((50, 50),), replications=500, workers=2))
for c in q.metrics["sizes"][-1]["components"]:
    print(f"p={c['ks_pvalue']:.3f} coverage={c['coverage']:.3f}")
print(q.verdict)
