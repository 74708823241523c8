"""Command-line interface.

Every subcommand reads settings from an optional flat ``key = value`` config
file (``--config``) and from flags named after the same keys (``--beta1 0.3``
or ``--network-alpha 2``); flags win.  The fully resolved settings are echoed
into each JSON report.

Exit codes: 0 success, 1 usage or validation error, 2 runtime or numerical
error, 3 experiment verdict FAIL.
"""

from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple
import argparse
import configparser
import sys

import numpy as np

from . import dependence as dep
from . import formats
from .errors import DomainError, ParseError, SingularityError
from .estimation import qmle, standardized_statistic
from .lattice import SampleRegion
from .montecarlo import (CHUNK, ExperimentConfig, run_clt_experiment, run_lln_experiment,
                         run_qmle_experiment)
from .nar_model import (NarParams, default_truncation, generate_covariates, simulate_batch,
                        simulate_ma_truncated, simulate_recursive, theoretical_moments)
from .seeding import derive_replication_seed
from .network import (check_gram_diagonal_decay, check_network_decay, companion_matrix,
                      generate_power_decay_network, load_edge_list, row_normalized_weights,
                      spectral_radius)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_FAIL = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# settings

def _floats(text: str) -> List[float]:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _sizes(text: str) -> List[List[int]]:
    out = []
    for part in text.split(","):
        if not part.strip():
            continue
        n, _, t = part.strip().lower().partition("x")
        out.append([int(n), int(t)])
    return out


def _opt(conv):
    def parse(text: str):
        return None if text.strip().lower() in ("", "none", "null") else conv(text)
    return parse


MODEL_KEYS = {
    "beta0": (float, 0.3),
    "beta1": (float, 0.2),
    "beta2": (float, 0.3),
    "gamma": (_floats, [0.5, -0.4]),
    "sigma": (float, 1.0),
    "innovation": (str, "gaussian"),
    "bernoulli_q": (float, 0.5),
    "network": (_opt(str), None),
    "network_alpha": (float, 2.0),
    "network_band": (int, 3),
    "network_seed": (int, 11),
    "z_seed": (int, 5),
}

EXPERIMENT_KEYS = {
    **MODEL_KEYS,
    "sizes": (_sizes, [[20, 20], [40, 40], [80, 80]]),
    "replications": (int, 200),
    "master_seed": (int, 2024),
    "workers": (int, 1),
    "moment_scale": (float, 1.0),
    "innovation_scaling": (_opt(str), None),
    "burn_in": (_opt(int), None),
    "ks_floor": (float, 0.01),
    "lln_threshold": (float, 0.05),
    "lln_slope_min": (float, -0.7),
    "lln_slope_max": (float, -0.3),
    "variance_ratio_floor": (float, 0.1),
    "coverage_min": (float, 0.92),
    "coverage_max": (float, 0.98),
    "singular_limit": (float, 0.01),
    "out": (str, "report.json"),
    "raw_out": (_opt(str), None),
}

SCHEMAS: Dict[str, Dict[str, Tuple[Callable, object]]] = {
    "simulate": {
        **MODEL_KEYS,
        "N": (int, 20), "T": (int, 20), "seed": (int, 0),
        "burn_in": (_opt(int), None), "method": (str, "recursive"), "K": (_opt(int), None),
        "innovation_scaling": (_opt(str), None),
        "out": (str, "panel.csv"), "eps_out": (_opt(str), None), "network_out": (_opt(str), None),
    },
    "estimate": {
        "panel": (str, None), "eps": (_opt(str), None), "network": (str, None),
        "theta0": (_opt(_floats), None), "out": (str, "estimate.json"),
    },
    "bounds": {
        "form": (str, "shift"), "d": (int, 2), "l": (float, 0.0), "p": (float, 4.0),
        "b_kind": (str, "power"), "b": (float, 6.0), "b_scale": (float, 1.0),
        "mu": (float, 9.0), "eps_scale": (float, 1.0),
        "r_grid": (_ints, [4, 8, 16, 32, 64, 128, 256, 512, 1024]),
        "out": (str, "bounds.csv"), "report": (_opt(str), None),
    },
    "delta": {
        **MODEL_KEYS,
        "N": (int, 50), "T": (int, 50), "s_grid": (_ints, [1, 2, 3, 4]), "replications": (int, 200),
        "seed": (int, 2024), "n_sites": (int, 32), "burn_in": (_opt(int), None),
        "out": (str, "delta.csv"), "report": (_opt(str), None),
    },
    "covdecay": {
        **MODEL_KEYS,
        "N": (int, 50), "T": (int, 8), "lag_grid": (_ints, [1, 2, 3, 4]), "replications": (int, 40000),
        "seed": (int, 99), "mode": (str, "shell"), "n_anchors": (int, 8), "p": (float, 8.0),
        "delta_T": (int, 50), "delta_replications": (int, 0), "delta_seed": (int, 2024),
        "tolerance": (float, 0.5),
        "out": (str, "covdecay.csv"), "report": (_opt(str), None),
    },
    "check-network": {
        "network": (_opt(str), None), "N": (int, 50), "network_alpha": (float, 2.0),
        "network_band": (int, 3), "network_seed": (int, 11),
        "beta1": (float, 0.2), "beta2": (float, 0.3), "alpha": (float, 2.0), "k_max": (int, 8),
        "c1_max": (float, 1e4), "out": (str, "network_check.json"),
    },
    "lln": dict(EXPERIMENT_KEYS),
    "clt": {**EXPERIMENT_KEYS, "statistic": (str, "field_sum")},
    "qmle-normality": dict(EXPERIMENT_KEYS),
}

REQUIRED = {"estimate": ("panel", "network")}


def read_config(path) -> Dict[str, str]:
    """Parse a flat ``key = value`` file with ``#`` comments."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), delimiters=("=",))
    parser.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string("[settings]\n" + text)
    except configparser.Error as exc:
        raise DomainError(f"config file {path}: {exc}") from None
    return dict(parser["settings"])


def resolve(command: str, config_values: Dict[str, str], flag_values: Dict[str, str]) -> dict:
    """Merge defaults, config-file values and flags, converting each to its type."""
    schema = SCHEMAS[command]
    raw = {}
    for source in (config_values, flag_values):
        for key, value in source.items():
            norm = key.strip().replace("-", "_")
            if norm not in schema:
                raise DomainError(f"unknown setting {key!r} for {command}")
            raw[norm] = value
    out = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            try:
                out[key] = conv(str(raw[key]))
            except ValueError as exc:
                raise DomainError(f"setting {key}: {exc}") from None
        else:
            out[key] = default
    for key in REQUIRED.get(command, ()):
        if out.get(key) is None:
            raise DomainError(f"{command} needs --{key.replace('_', '-')}")
    return out


# ---------------------------------------------------------------------------
# builders shared by commands

def _params(cfg) -> NarParams:
    return NarParams(cfg["beta0"], cfg["beta1"], cfg["beta2"], tuple(cfg["gamma"]), cfg["sigma"],
                     cfg["innovation"], cfg["bernoulli_q"])


def _network(cfg, N: int):
    if cfg.get("network"):
        return load_edge_list(Path(cfg["network"]).read_text(), N)
    return generate_power_decay_network(N, cfg["network_alpha"], cfg["network_band"], cfg["network_seed"])


def _experiment(cfg) -> ExperimentConfig:
    if cfg.get("network"):
        raise DomainError("experiments generate their networks per size; 'network' files are not accepted")
    return ExperimentConfig(
        params=_params(cfg), sizes=tuple(tuple(s) for s in cfg["sizes"]),
        replications=cfg["replications"], master_seed=cfg["master_seed"],
        network_alpha=cfg["network_alpha"], network_band=cfg["network_band"],
        network_seed=cfg["network_seed"], z_seed=cfg["z_seed"], moment_scale=cfg["moment_scale"],
        innovation_scaling=cfg["innovation_scaling"], burn_in=cfg["burn_in"], ks_floor=cfg["ks_floor"],
        lln_threshold=cfg["lln_threshold"], lln_slope_band=(cfg["lln_slope_min"], cfg["lln_slope_max"]),
        variance_ratio_floor=cfg["variance_ratio_floor"],
        coverage_band=(cfg["coverage_min"], cfg["coverage_max"]),
        singular_limit=cfg["singular_limit"], workers=cfg["workers"],
    )


def _finish(command, cfg, metrics, verdict, path, seed=None) -> int:
    # the worker count never changes results, so it is left out of the echo
    echo = {k: v for k, v in cfg.items() if k != "workers"}
    formats.emit_report(formats.build_report(command, echo, metrics, verdict, seed), path)
    return EXIT_FAIL if verdict == "FAIL" else EXIT_OK


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(cfg) -> int:
    params = _params(cfg)
    N, T = cfg["N"], cfg["T"]
    if cfg["method"] not in ("recursive", "ma"):
        raise DomainError("method must be 'recursive' or 'ma'")
    net = _network(cfg, N)
    w = row_normalized_weights(net)
    Z = generate_covariates(N, params.m, cfg["z_seed"])
    if cfg["method"] == "recursive":
        panel = simulate_recursive(params, w, Z, T, cfg["burn_in"], cfg["seed"], cfg["innovation_scaling"])
    else:
        K = cfg["K"] if cfg["K"] is not None else default_truncation(params.contraction)
        panel = simulate_ma_truncated(params, w, Z, T, K, cfg["seed"], cfg["innovation_scaling"])
    formats.write_panel_csv(panel, cfg["out"], cfg["eps_out"])
    if cfg["network_out"]:
        Path(cfg["network_out"]).write_text(net.to_edge_list())
    return EXIT_OK


def cmd_estimate(cfg) -> int:
    panel = formats.read_panel_csv(cfg["panel"], cfg["eps"])
    net = load_edge_list(Path(cfg["network"]).read_text(), panel.N)
    w = row_normalized_weights(net)
    res = qmle(panel, w)
    metrics = res.to_dict()
    metrics["standard_errors"] = res.standard_errors().tolist()
    if cfg["theta0"] is not None:
        metrics["standardized_statistic"] = standardized_statistic(res, cfg["theta0"]).tolist()
    return _finish("estimate", cfg, metrics, "PASS", cfg["out"])


def cmd_bounds(cfg) -> int:
    grid = sorted(set(cfg["r_grid"]))
    form = cfg["form"]
    if form == "shift":
        reg = dep.ShiftRegularity(cfg["d"], cfg["l"], cfg["p"], cfg["b_kind"], cfg["b"], cfg["b_scale"],
                                  cfg["mu"], cfg["eps_scale"])
        values = [dep.shift_bound(reg, r) for r in grid]
        extra = {"moment_exponent": reg.moment_exponent, "c_b": reg.c_b}
    elif form == "power":
        pairs = [dep.power_decay_bound(cfg["d"], cfg["p"], cfg["l"], cfg["mu"], r) for r in grid]
        values = [v for _, v in pairs]
        extra = {"exponent": pairs[0][0]}
    elif form == "exp":
        if cfg["d"] != 2:
            raise DomainError("the exponential closed form is stated for d = 2")
        values = [dep.exp_decay_bound(cfg["p"], cfg["l"], cfg["mu"], r) for r in grid]
        extra = {}
    else:
        raise DomainError("form must be shift, power or exp")
    profile = dep.DecayProfile(np.array(grid), np.array(values), "eta")
    formats.write_profile_csv(profile, cfg["out"])
    if cfg["report"]:
        metrics = {"grid": grid, "values": values, "log_slope": profile.log_slope(),
                   "nonincreasing": profile.is_nonincreasing, **extra}
        return _finish("bounds", cfg, metrics, "PASS", cfg["report"])
    return EXIT_OK


def cmd_delta(cfg) -> int:
    params = _params(cfg)
    region = SampleRegion(cfg["N"], cfg["T"])
    w = row_normalized_weights(_network(cfg, cfg["N"]))
    Z = generate_covariates(cfg["N"], params.m, cfg["z_seed"])
    est = dep.estimate_delta(params, w, Z, region, cfg["s_grid"], cfg["replications"], cfg["seed"],
                             cfg["n_sites"], cfg["burn_in"])
    formats.write_profile_csv(est.profile, cfg["out"])
    if cfg["report"]:
        eta = dep.delta_to_eta(est.profile)
        metrics = {
            "s_grid": est.profile.grid, "delta": est.profile.values, "stderr": est.profile.stderr,
            "argmax_sites": [list(s) for s in est.argmax_sites],
            "log_slope": est.profile.log_slope(),
            "semilog_slope": dep.semilog_slope(est.profile.grid, est.profile.values),
            "eta_grid": eta.grid, "eta": eta.values,
        }
        return _finish("delta", cfg, metrics, "PASS", cfg["report"], cfg["seed"])
    return EXIT_OK


def cmd_covdecay(cfg) -> int:
    params = _params(cfg)
    if cfg["mode"] not in ("shell", "temporal"):
        raise DomainError("mode must be shell or temporal")
    if not cfg["p"] > 2:
        raise DomainError("moment order p must exceed 2 for the covariance inequality")
    N, T = cfg["N"], cfg["T"]
    w = row_normalized_weights(_network(cfg, N))
    Z = generate_covariates(N, params.m, cfg["z_seed"])
    oracle = theoretical_moments(params, w, Z)
    R = cfg["replications"]
    if R < 2:
        raise DomainError("replications must be at least 2")
    ys = []
    for a in range(0, R, CHUNK * 20):
        seeds = [derive_replication_seed(cfg["seed"], 0, r) for r in range(a, min(a + CHUNK * 20, R))]
        ys.append(simulate_batch(params, w, Z, T, seeds)[0])
    y = np.concatenate(ys) - oracle.mean[None, :, None]
    cd = dep.covariance_decay_from_array(y, cfg["lag_grid"], True, cfg["n_anchors"], cfg["seed"], cfg["mode"])
    formats.write_profile_csv(cd.profile, cfg["out"])
    metrics = {"lag_grid": cd.profile.grid, "cov": cd.profile.values, "stderr": cd.profile.stderr,
               "slope": cd.slope, "argmax_pairs": [[list(a), list(b)] for a, b in cd.argmax_pairs]}
    verdict = "PASS"
    if cfg["delta_replications"] > 0:
        est = dep.estimate_delta(params, w, Z, SampleRegion(N, cfg["delta_T"]), cfg["lag_grid"],
                                 cfg["delta_replications"], cfg["delta_seed"])
        eta = dep.delta_to_eta(est.profile)
        implied = (cfg["p"] - 2) / (cfg["p"] - 1) * eta.log_slope()
        metrics.update({"delta": est.profile.values, "eta_slope": eta.log_slope(),
                        "implied_cov_slope": implied, "slope_gap": abs(implied - cd.slope)})
        verdict = "PASS" if abs(implied - cd.slope) <= cfg["tolerance"] else "FAIL"
    if cfg["report"]:
        return _finish("covdecay", cfg, metrics, verdict, cfg["report"], cfg["seed"])
    return EXIT_FAIL if verdict == "FAIL" else EXIT_OK


def cmd_check_network(cfg) -> int:
    net = _network(cfg, cfg["N"]) if not cfg["network"] else load_edge_list(Path(cfg["network"]).read_text())
    w = row_normalized_weights(net)
    g = companion_matrix(w, cfg["beta1"], cfg["beta2"])
    decay = check_network_decay(g, cfg["alpha"], cfg["k_max"], c1_max=cfg["c1_max"])
    gram = check_gram_diagonal_decay(g, cfg["k_max"])
    rho = spectral_radius(g)
    metrics = {
        "N": net.N, "edges": len(net.edges),
        "spectral_radius": rho.value, "spectral_radius_converged": rho.converged,
        "network_decay": decay.to_dict(), "gram_diagonal_decay": gram.to_dict(),
    }
    verdict = "PASS" if decay.passed and gram.passed else "FAIL"
    return _finish("check-network", cfg, metrics, verdict, cfg["out"])


def _experiment_command(name: str, runner) -> Callable:
    def command(cfg) -> int:
        config = _experiment(cfg)
        report = runner(config, cfg)
        if cfg["raw_out"]:
            formats.write_raw_csv(report.raw_rows(), cfg["raw_out"])
        return _finish(name, cfg, report.metrics, report.verdict, cfg["out"], config.master_seed)
    return command


def _clt_runner(config, cfg):
    if cfg["statistic"] not in ("field_sum", "projected"):
        raise DomainError("statistic must be field_sum or projected")
    return run_clt_experiment(config, cfg["statistic"])


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "bounds": cmd_bounds,
    "delta": cmd_delta,
    "covdecay": cmd_covdecay,
    "check-network": cmd_check_network,
    "lln": _experiment_command("lln", lambda c, _: run_lln_experiment(c)),
    "clt": _experiment_command("clt", _clt_runner),
    "qmle-normality": _experiment_command("qmle-normality", lambda c, _: run_qmle_experiment(c)),
}


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


HELP = {
    "simulate": "simulate a panel and write it as CSV",
    "estimate": "fit the QMLE to a panel CSV",
    "bounds": "evaluate dependence bound calculators",
    "delta": "estimate coupling coefficients by truncation",
    "covdecay": "empirical covariance decay versus lattice distance",
    "check-network": "check decay conditions of a network",
    "lln": "Monte Carlo law of large numbers",
    "clt": "Monte Carlo CLT for the field sum",
    "qmle-normality": "Monte Carlo normality and coverage of the QMLE",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="narfield", description="NAR random-field simulation, estimation and verification")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", help="flat key = value settings file")
        for key, (_, default) in schema.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=None, metavar="VALUE",
                            help=f"default: {default}")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    args = vars(ns)
    command = args.pop("command")
    config_path = args.pop("config")
    flags = {k: v for k, v in args.items() if v is not None}
    try:
        file_values = read_config(config_path) if config_path else {}
        cfg = resolve(command, file_values, flags)
        return COMMANDS[command](cfg)
    except (DomainError, ParseError) as exc:
        print(f"narfield {command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"narfield {command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SingularityError, ArithmeticError, OSError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"narfield {command}: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
