"""Command-line front end.

Config files are flat JSON documents:

    {"lambda": 0.5, "mu": 1.0,
     "classes": [{"capacity": 1.3333, "fraction": 0.5},
                 {"capacity": 0.6667, "fraction": 0.5}]}

Subcommands: stability, static-opt, meanfield, hybrid-opt, simulate,
reproduce.  All emit CSV (to stdout or --out); human-readable context is
carried in '#' comment lines, suppressed by --quiet.  Exit codes:
0 success, 2 config error, 3 instability, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager

from .errors import ConfigError, DomainError, HetJsqError, NoConvergence, Unstable
from .experiments import builtin_spec, reproduce
from .hybrid import proportional_bias, solve_hybrid, sq2_tail_series_sum
from .meanfield import fixed_point, mean_sojourn_from_tails
from .model import load_config_file
from .simulation import HybridScheme, SimConfig, SQd, StaticScheme, run
from .stability import analyze
from .static_routing import solve_static

_DIST_NAMES = {
    "exp": "exponential",
    "const": "deterministic",
    "powerlaw": "power_law",
}


@contextmanager
def _out_stream(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _common(parser):
    parser.add_argument("--config", required=True, help="JSON system config file")
    parser.add_argument("--out", default=None, help="write CSV here instead of stdout")
    parser.add_argument("--quiet", action="store_true", help="suppress comment lines")


def _comment(fh, quiet, text):
    if not quiet:
        fh.write(f"# {text}\n")


def _cmd_stability(args):
    cfg = load_config_file(args.config)
    rep = analyze(cfg, n=args.n)
    with _out_stream(args.out) as fh:
        _comment(fh, args.quiet, f"lambda={cfg.arrival_rate:g} mu={cfg.mu:g} M={cfg.n_classes}")
        _comment(fh, args.quiet, f"static region sup: {rep.static_limit:.12g}")
        _comment(
            fh, args.quiet,
            f"asymptotic SQ(2) region sup: {rep.asymptotic_sq2_limit:.12g} "
            f"(binding classes, 1-based: "
            f"{{{','.join(str(j + 1) for j in rep.binding_subset)}}})",
        )
        if rep.finite_n_limit is not None:
            _comment(
                fh, args.quiet,
                f"finite-N SQ(2) region sup at N={rep.finite_n}: "
                f"{rep.finite_n_limit:.12g}",
            )
        fh.write("metric,value,detail\n")
        fh.write(f"static_limit,{rep.static_limit:.12g},\n")
        binding = " ".join(str(j + 1) for j in rep.binding_subset)
        fh.write(f"asymptotic_sq2_limit,{rep.asymptotic_sq2_limit:.12g},{binding}\n")
        if rep.finite_n_limit is not None:
            fh.write(f"finite_n_limit,{rep.finite_n_limit:.12g},N={rep.finite_n}\n")
    return 0


def _cmd_static_opt(args):
    cfg = load_config_file(args.config)
    sol = solve_static(cfg)
    with _out_stream(args.out) as fh:
        _comment(fh, args.quiet, f"optimal state-independent routing at lambda={cfg.arrival_rate:g}")
        m = cfg.n_classes
        head = ["j_star"] + [f"rho_{i+1}" for i in range(m)] + [
            f"p_{i+1}" for i in range(m)] + ["mean_sojourn"]
        fh.write(",".join(head) + "\n")
        row = [str(sol.active_set_size)]
        row += [f"{x:.10g}" for x in sol.loads]
        row += [f"{x:.10g}" for x in sol.probabilities]
        row += [f"{sol.mean_sojourn:.10g}"]
        fh.write(",".join(row) + "\n")
    return 0


def _cmd_meanfield(args):
    cfg = load_config_file(args.config)
    eq = fixed_point(cfg, levels=args.levels, method=args.method)
    sojourn, bound = mean_sojourn_from_tails(eq.tails, cfg, with_bound=True)
    with _out_stream(args.out) as fh:
        _comment(fh, args.quiet, f"SQ(2) mean-field equilibrium, method={eq.method}")
        _comment(
            fh, args.quiet,
            f"mean_sojourn={sojourn:.10g} truncation_bound={bound:.3g} "
            f"drift_residual={eq.residual:.3g} "
            f"consistency_residual={eq.consistency:.3g} "
            + (f"alpha={eq.alpha:.12g}" if eq.alpha is not None else "alpha="),
        )
        m = cfg.n_classes
        fh.write("k," + ",".join(f"P_k_{j+1}" for j in range(m)) + "\n")
        arr = eq.tails.as_array()
        for k in range(arr.shape[1]):
            fh.write(str(k) + "," + ",".join(f"{v:.12g}" for v in arr[:, k]) + "\n")
    return 0


def _cmd_hybrid_opt(args):
    cfg = load_config_file(args.config)
    m = cfg.n_classes
    if args.bias == "proportional":
        p = proportional_bias(cfg)
        rho_bar = cfg.arrival_rate / (cfg.mu * float(cfg.fractions @ cfg.capacities))
        if rho_bar >= 1.0:
            raise Unstable(f"lambda={cfg.arrival_rate:g} saturates the system")
        loads = [rho_bar] * m
        sojourn = sq2_tail_series_sum(rho_bar) / cfg.arrival_rate
        j_star, theta = m, float("nan")
        title = "proportional (stability-maximal) bias"
    else:
        sol = solve_hybrid(cfg)
        p = sol.probabilities
        loads = sol.loads
        sojourn = sol.mean_sojourn
        j_star, theta = sol.active_set_size, sol.theta_star
        title = "delay-optimal hybrid SQ(2) bias"
    with _out_stream(args.out) as fh:
        _comment(fh, args.quiet, f"{title} at lambda={cfg.arrival_rate:g}")
        head = ["j_star", "theta_star"] + [f"rho_{i+1}" for i in range(m)] + [
            f"p_{i+1}" for i in range(m)] + ["mean_sojourn"]
        fh.write(",".join(head) + "\n")
        row = [str(j_star), f"{theta:.10g}"]
        row += [f"{x:.10g}" for x in loads]
        row += [f"{x:.10g}" for x in p]
        row += [f"{sojourn:.10g}"]
        fh.write(",".join(row) + "\n")
    return 0


def _scheme_from_args(args, cfg):
    if args.scheme == "static":
        return StaticScheme(tuple(solve_static(cfg).probabilities))
    if args.scheme == "hybrid":
        return HybridScheme(tuple(solve_hybrid(cfg).probabilities))
    if args.scheme == "sq2":
        return SQd(2)
    if args.scheme == "sqd":
        return SQd(args.d)
    raise ConfigError(f"unknown scheme {args.scheme!r}")


def _cmd_simulate(args):
    cfg = load_config_file(args.config)
    sim_cfg = SimConfig(
        system=cfg,
        n_servers=args.n,
        scheme=_scheme_from_args(args, cfg),
        job_size=_DIST_NAMES[args.dist],
        horizon=args.jobs,
        replications=args.reps,
        seed=args.seed,
    )
    res = run(sim_cfg, workers=args.workers)
    with _out_stream(args.out) as fh:
        _comment(
            fh, args.quiet,
            f"scheme={args.scheme} N={args.n} jobs={args.jobs} "
            f"dist={args.dist} seed={args.seed} engine={res.engine}",
        )
        _comment(
            fh, args.quiet,
            f"work_conservation_err={res.work_error:.3g} "
            f"littles_law_gap={res.littles_gap:.3g} events={res.events}",
        )
        fh.write("replication,mean_sojourn,ci_half_width\n")
        for i, v in enumerate(res.rep_means):
            fh.write(f"{i + 1},{v:.8g},\n")
        fh.write(f"all,{res.mean_sojourn:.8g},{res.ci_half_width:.4g}\n")
        fh.write("class,level,tail\n")
        arr = res.empirical_tails.as_array()
        for j in range(arr.shape[0]):
            for k in range(arr.shape[1]):
                fh.write(f"{j + 1},{k},{arr[j, k]:.8g}\n")
    return 0


def _cmd_reproduce(args):
    overrides = {}
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n is not None:
        overrides["n_servers"] = args.n
    if args.allow_unstable:
        overrides["allow_unstable"] = True
    if args.name == "custom":
        if args.config is None or not args.sweep:
            raise ConfigError("custom experiments need --config and --sweep")
        base = load_config_file(args.config)
        spec_kwargs = dict(
            name="custom",
            system=base,
            sweep=tuple(float(x) for x in args.sweep.split(",")),
            schemes=tuple(args.schemes.split(",")),
            **overrides,
        )
        from .experiments import ExperimentSpec

        spec = ExperimentSpec(**spec_kwargs)
    else:
        spec = builtin_spec(args.name, **overrides)
    path = reproduce(spec, out_dir=args.out, workers=args.workers)
    if not args.quiet:
        print(f"wrote {path}", file=sys.stderr)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hetjsq",
        description="randomized JSQ analysis for heterogeneous PS server farms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stability", help="stability region thresholds")
    _common(p)
    p.add_argument("--n", type=int, default=None, help="finite system size")
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("static-opt", help="optimal state-independent routing")
    _common(p)
    p.set_defaults(func=_cmd_static_opt)

    p = sub.add_parser("meanfield", help="SQ(2) mean-field equilibrium tails")
    _common(p)
    p.add_argument("--method", choices=["shooting", "ode"], default=None)
    p.add_argument("--levels", type=int, default=64)
    p.set_defaults(func=_cmd_meanfield)

    p = sub.add_parser("hybrid-opt", help="optimal hybrid SQ(2) bias")
    _common(p)
    p.add_argument("--bias", choices=["optimal", "proportional"], default="optimal")
    p.set_defaults(func=_cmd_hybrid_opt)

    p = sub.add_parser("simulate", help="event-driven simulation")
    _common(p)
    p.add_argument("--scheme", choices=["sq2", "static", "hybrid", "sqd"], default="sq2")
    p.add_argument("--d", type=int, default=2, help="choices for --scheme sqd")
    p.add_argument("--n", type=int, default=200, help="number of servers")
    p.add_argument("--jobs", type=int, default=2_000_000)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dist", choices=sorted(_DIST_NAMES), default="exp")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reproduce", help="regenerate reference experiments")
    p.add_argument("name", choices=["fig1", "fig2", "fig3", "table1", "custom"])
    p.add_argument("--config", default=None, help="system config (custom only)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--sweep", default=None, help="comma-separated lambdas (custom)")
    p.add_argument("--schemes", default="static,sq2,hybrid", help="custom schemes")
    p.add_argument("--allow-unstable", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Unstable as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return 3
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return 4
    except HetJsqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
