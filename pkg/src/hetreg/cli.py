"""Batch command-line interface.

Subcommands: ``simulate`` (truth + synthetic data to CSV), ``fit`` (one
posterior run, chain CSV plus summary JSON), ``divergence`` (divergence
report for two configured parameter pairs), ``rates`` (rate tables),
``verify`` (desk-scale bound checks as JSON lines), ``contract`` (the
full contraction experiment).  Exit status: 0 on success, 1 on invalid
usage or configuration, 2 on runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .design import DesignSpec
from .experiment import (ConfigError, config_from_dict, contraction_experiment,
                         load_config, write_distance_csv)
from .model import FunctionPair, avg_divergences, oracle_divergences
from .posterior import diagnostics, export_chain_csv, run_mcmc
from .priors import (GPPriorConfig, RateSpec, SplinePriorConfig,
                     contraction_rate, dimension_schedule)
from .splines import build_basis, spline_function
from .theory import (approximation_rate_check, concentration_sweep,
                     covering_number, tail_probability_mc, verify_gp_sieve,
                     verify_hellinger_entropy_bound, verify_divergence_bounds)
from .truth import gen_data, holder_series, make_truth


class _Parser(argparse.ArgumentParser):
    """Argparse variant that reports usage problems with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(Exception):
    pass


def _load_doc(path) -> dict:
    with open(path) as handle:
        doc = json.load(handle)
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config document must be a JSON object")
    return doc


def _function_from_spec(spec: dict):
    kind = spec.get("kind")
    if kind == "constant":
        value = float(spec["value"])
        return lambda x: np.full(np.shape(np.atleast_1d(x))[0], value)
    if kind == "sin":
        amp = float(spec.get("amplitude", 1.0))
        freq = float(spec.get("frequency", 1.0))
        phase = float(spec.get("phase", 0.0))
        return lambda x: amp * np.sin(2.0 * np.pi * freq * np.atleast_1d(x)
                                      + phase)
    if kind == "holder":
        return holder_series(float(spec["alpha"]),
                             n_terms=int(spec.get("terms", 12)))
    if kind == "spline":
        basis = build_basis(int(spec["q"]), int(spec["intervals"]))
        return spline_function(basis, np.asarray(spec["coefficients"],
                                                 dtype=float))
    raise ConfigError("pairs", f"unknown function kind {kind!r}")


def _pair_from_spec(spec: dict) -> FunctionPair:
    return FunctionPair(eta=_function_from_spec(spec["eta"]),
                        f=_function_from_spec(spec["f"]), tag="configured")


def _design_from_spec(spec) -> DesignSpec:
    if spec in (None, "uniform"):
        return DesignSpec.uniform()
    if isinstance(spec, dict) and "points" in spec:
        return DesignSpec.fixed(np.asarray(spec["points"], dtype=float))
    raise ConfigError("design", f"unknown design spec {spec!r}")


# ---------------------------------------------------------------------------
# Subcommand implementations.
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    doc = _load_doc(args.config) if args.config else {}
    rate_doc = doc.get("rate", {})
    alpha = args.alpha if args.alpha is not None \
        else float(rate_doc.get("alpha", 2.0))
    gamma = args.gamma if args.gamma is not None \
        else float(rate_doc.get("gamma", 2.0))
    v_min = args.v_min if args.v_min is not None \
        else float(doc.get("v_min", 0.25))
    n = args.n if args.n is not None else int(doc.get("data", {}).get("n", 200))
    design = args.design or doc.get("design", "fixed")
    seed = args.seed if args.seed is not None \
        else int(doc.get("seeds", {}).get("root", 0))
    truth = make_truth(alpha, gamma, v_min=v_min)
    data = gen_data(truth, n, design, np.random.default_rng(seed))
    lines = ["# hetreg simulate-csv v1", "x,y,eta0,f0"]
    eta0 = np.asarray(truth.eta(data.x))
    f0 = np.asarray(truth.f(data.x))
    for i in range(data.n):
        lines.append(f"{float(data.x[i])!r},{float(data.y[i])!r},"
                     f"{float(eta0[i])!r},{float(f0[i])!r}")
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_fit(args) -> int:
    doc = _load_doc(args.config)
    config = config_from_dict({**doc, "n_grid": doc.get("n_grid", [2, 3, 4]),
                               "replicates": doc.get("replicates", 1)},
                              seed_override=args.seed)
    n = args.n if args.n is not None else int(doc.get("data", {}).get("n", 200))
    if not isinstance(config.prior, SplinePriorConfig):
        raise ConfigError("prior", "fit supports spline priors")
    truth = make_truth(config.rate.alpha, config.rate.gamma,
                       v_min=config.v_min)
    rng = np.random.default_rng(config.seed)
    data = gen_data(truth, n, config.design, rng)
    dim = max(config.q, dimension_schedule(config.rate, n))
    basis = build_basis(config.q, dim - config.q + 1)
    chain = run_mcmc(data, basis, config.prior, config.sampler, rng)
    diag = diagnostics(chain)
    out_dir = Path(args.output or config.output_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    export_chain_csv(chain, out_dir / "chain.csv")
    summary = {"schema_version": 1, "n": n, "basis_dim": basis.dim,
               "acceptance": diag.acceptance, "ess": diag.ess,
               "rhat": diag.rhat, "seed": config.seed}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"fit: n={n} J={basis.dim} rhat={diag.rhat:.4f} "
          f"accept=({diag.acceptance['eta']:.3f}, "
          f"{diag.acceptance['f']:.3f}) -> {out_dir}")
    return 0


def _cmd_divergence(args) -> int:
    doc = _load_doc(args.config)
    pairs = doc.get("pairs")
    if not isinstance(pairs, list) or len(pairs) != 2:
        raise ConfigError("pairs", "need exactly two parameter pairs")
    theta1 = _pair_from_spec(pairs[0])
    theta2 = _pair_from_spec(pairs[1])
    design = _design_from_spec(doc.get("design"))
    report = avg_divergences(theta1, theta2, design)
    out = {"schema_version": 1, "hellinger_sq": report.hellinger_sq,
           "hellinger": report.hellinger, "kl": report.kl,
           "var_div": report.var_div, "quad_error": report.quad_error,
           "converged": report.converged}
    if args.point is not None:
        oracle = oracle_divergences(theta1, theta2, args.point)
        out["oracle_at_point"] = {"x": args.point,
                                  "hellinger_sq": oracle.hellinger_sq,
                                  "kl": oracle.kl, "var_div": oracle.var_div,
                                  "quad_error": oracle.quad_error}
    print(json.dumps(out, indent=2))
    return 0


def _cmd_rates(args) -> int:
    spec = RateSpec(alpha=args.alpha, gamma=args.gamma, d=args.d,
                    prior_kind=args.prior, k_eta=args.k_eta, k_f=args.k_f)
    if args.n is not None:
        print(f"{contraction_rate(spec, args.n):.5f}")
        return 0
    grid = [int(v) for v in args.n_grid.split(",")]
    print("n,eps,J")
    for n in grid:
        j = dimension_schedule(spec, n) if args.prior == "spline" else ""
        print(f"{n},{contraction_rate(spec, n):.6g},{j}")
    return 0


def _verify_suite(suite: str, rng: np.random.Generator) -> list[dict]:
    reports = []
    if suite in ("divergence-bounds", "all"):
        basis = build_basis(3, 6)
        design = DesignSpec.uniform(n_nodes=128)
        pairs = []
        for _ in range(300):
            be1, be2 = rng.standard_normal((2, basis.dim))
            bf1, bf2 = rng.uniform(-1.0, 1.0, (2, basis.dim))
            pairs.append((FunctionPair.from_splines(basis, be1, bf1),
                          FunctionPair.from_splines(basis, be2, bf2)))
        reports.append(verify_divergence_bounds(pairs, 1.0, design).to_dict())
    if suite in ("entropy", "all"):
        basis = build_basis(2, 3)
        etas = [spline_function(basis, rng.standard_normal(basis.dim))
                for _ in range(30)]
        fs = [spline_function(basis, rng.uniform(-0.5, 0.5, basis.dim))
              for _ in range(30)]
        reports.append(verify_hellinger_entropy_bound(
            etas, fs, [0.05, 0.1, 0.2], 0.5).to_dict())
    if suite in ("covering", "all"):
        for dim, eps in ((1, 0.1), (2, 0.25)):
            result = covering_number(eps, 1.0, dim)
            reports.append({"name": "covering-number", "dim": dim,
                            "eps": eps, "net_size": result.net_size,
                            "lower": result.lower, "upper": result.upper,
                            "passed": result.lower <= result.net_size
                            <= result.upper})
    if suite in ("concentration", "all"):
        basis = build_basis(1, 2)
        prior = SplinePriorConfig()
        truth = FunctionPair.from_splines(basis, np.array([0.3, -0.2]),
                                          np.array([0.2, -0.1]))
        sweep = concentration_sweep(prior, basis, truth, [0.2, 0.3], 0.5,
                                    20_000, rng)
        reports.extend(r.to_dict() for r in sweep["reports"])
        reports.append({"name": "prior-concentration-slope",
                        "slope": sweep["slope"],
                        "predicted_slope": sweep["predicted_slope"],
                        "passed": sweep["inclusions_ok"]})
    if suite in ("tails", "all"):
        basis = build_basis(4, 7)
        reports.append(tail_probability_mc(SplinePriorConfig(), basis, 3.0,
                                           100_000, rng).to_dict())
    if suite in ("gp-sieve", "all"):
        config = GPPriorConfig(kind="rescaled-se",
                               grid=np.linspace(0.0, 1.0, 32))
        reports.append(verify_gp_sieve(config, lambda x: np.zeros(len(x)),
                                       [1.0, 0.5, 0.25], 10_000,
                                       rng).to_dict())
    if suite in ("approximation", "all"):
        results = approximation_rate_check([0.6, 1.0], [8, 16, 32],
                                           lambda a: holder_series(a), q=3)
        for alpha, res in results.items():
            reports.append({"name": "approximation-rate", "alpha": alpha,
                            **res})
    if not reports:
        raise ConfigError("suite", f"unknown suite {suite!r}")
    return reports


def _cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    reports = _verify_suite(args.suite, rng)
    lines = "\n".join(json.dumps(r) for r in reports) + "\n"
    if args.output:
        Path(args.output).write_text(lines)
    else:
        sys.stdout.write(lines)
    return 0


def _cmd_contract(args) -> int:
    config = load_config(args.config, seed_override=args.seed,
                         output_override=args.output)
    report = contraction_experiment(config)
    out_dir = Path(config.output_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(),
                                                    indent=2))
    write_distance_csv(report, out_dir / "distances.csv")
    print(f"contract: slope={report.slope:.4f} (se {report.slope_se:.4f}) "
          f"theory={report.theory_slope:.4f} "
          f"degraded={report.n_degraded}/{report.n_degraded + report.n_included}"
          f" -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Parser wiring.
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="hetreg",
                     description="Heteroscedastic Bayesian regression: "
                                 "simulation, fitting, and rate experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate truth and synthetic data")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--v-min", dest="v_min", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--design", choices=["fixed", "uniform"])
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="run one posterior chain")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="output directory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("divergence",
                       help="divergences between two configured pairs")
    p.add_argument("--config", required=True)
    p.add_argument("--point", type=float,
                   help="also report the quadrature oracle at this x")
    p.set_defaults(func=_cmd_divergence)

    p = sub.add_parser("rates", help="theoretical rate tables")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--prior", default="spline",
                   choices=["spline", "rescaled-se", "integrated-bm"])
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--k-eta", dest="k_eta", type=int)
    p.add_argument("--k-f", dest="k_f", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--n-grid", dest="n_grid",
                   default="100,200,400,800,1600")
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("verify", help="run desk-scale bound checks")
    p.add_argument("--suite", default="all",
                   choices=["divergence-bounds", "entropy", "covering", "concentration",
                            "tails", "gp-sieve", "approximation", "all"])
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="JSON-lines path (default stdout)")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("contract", help="full contraction experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="output directory override")
    p.set_defaults(func=_cmd_contract)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit:
        raise
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
