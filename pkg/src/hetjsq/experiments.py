"""Reproduction recipes: regenerate the reference experiments as CSV.

Four built-in experiments:

* fig1   -- mean sojourn vs lambda for C=(4/3, 2/3), N=200: static, SQ(2)
            and hybrid, analytic + simulation.
* fig2   -- same for C=(5/3, 1/3), where uniform SQ(2) loses stability
            above lambda = 2/3; includes an SQ(5) simulation series
            (no analytic counterpart).
* fig3   -- SQ(2) finite-size convergence: simulations at several N vs
            the mean-field curve, C=(4/3, 2/3).
* table1 -- SQ(2) insensitivity at N=200: mean-field theory vs constant
            and power-law job sizes.

Output schema (version 1), one CSV per experiment with a commented
header: columns lambda, scheme, source (meanfield|simulation), dist,
n, value, ci, status (ok|diverged).  Mean-field rows for arrival rates
outside the SQ(2) region are emitted as `diverged` rather than aborting.
All rows are deterministic given the spec seed; simulations of different
schemes at the same lambda share a seed (common random numbers).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError, NoConvergence, UnstableRegime
from .hybrid import solve_hybrid
from .meanfield import fixed_point, mean_sojourn_from_tails
from .model import SystemConfig, validate_config
from .simulation import HybridScheme, SimConfig, SQd, StaticScheme, run
from .stability import static_limit
from .static_routing import solve_static

SCHEMA_VERSION = 1
_COLUMNS = ("lambda", "scheme", "source", "dist", "n", "value", "ci", "status")

_FIG_SWEEP = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)
_TABLE1_SWEEP = (0.2, 0.3, 0.5, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class ExperimentSpec:
    """One reproduction run: a base system, a lambda sweep, and schemes.

    `schemes` entries are "static", "hybrid", or "sq<d>" (e.g. "sq2",
    "sq5").  `n_sweep` adds extra simulation system sizes (fig3);
    `dists` lists the job-size distributions simulated per point.
    """

    name: str
    system: SystemConfig  # arrival_rate field is replaced by the sweep
    sweep: tuple[float, ...]
    schemes: tuple[str, ...]
    n_servers: int = 200
    jobs: int = 2_000_000
    replications: int = 10
    seed: int = 20250810
    dists: tuple[str, ...] = ("exponential",)
    n_sweep: tuple[int, ...] = ()
    allow_unstable: bool = False

    def __post_init__(self):
        sup = static_limit(self.system)
        for lam in self.sweep:
            if lam <= 0:
                raise ConfigError(f"sweep rate {lam} must be positive")
            if lam >= sup and not self.allow_unstable:
                raise ConfigError(
                    f"sweep rate {lam} is outside [0, {sup:g}); pass "
                    "allow_unstable to demonstrate instability anyway"
                )


def _base_system(c1: float, c2: float) -> SystemConfig:
    return validate_config([(c1, 0.5), (c2, 0.5)], arrival_rate=0.1, mu=1.0)


def builtin_spec(name: str, **overrides) -> ExperimentSpec:
    """The spec behind each built-in experiment name, with overrides
    (jobs, replications, seed, n_servers, sweep, ...) applied on top."""
    if name == "fig1":
        spec = ExperimentSpec(
            name="fig1",
            system=_base_system(4.0 / 3.0, 2.0 / 3.0),
            sweep=_FIG_SWEEP,
            schemes=("static", "sq2", "hybrid"),
        )
    elif name == "fig2":
        spec = ExperimentSpec(
            name="fig2",
            system=_base_system(5.0 / 3.0, 1.0 / 3.0),
            sweep=_FIG_SWEEP,
            schemes=("static", "sq2", "hybrid", "sq5"),
        )
    elif name == "fig3":
        spec = ExperimentSpec(
            name="fig3",
            system=_base_system(4.0 / 3.0, 2.0 / 3.0),
            sweep=(0.3, 0.5, 0.7, 0.9),
            schemes=("sq2",),
            n_sweep=(10, 50, 100, 200),
        )
    elif name == "table1":
        spec = ExperimentSpec(
            name="table1",
            system=_base_system(4.0 / 3.0, 2.0 / 3.0),
            sweep=_TABLE1_SWEEP,
            schemes=("sq2",),
            dists=("deterministic", "power_law"),
        )
    else:
        raise ConfigError(f"unknown experiment {name!r}; "
                          "expected fig1|fig2|fig3|table1")
    return replace(spec, **overrides) if overrides else spec


def _scheme_object(scheme: str, cfg: SystemConfig):
    if scheme == "static":
        return StaticScheme(tuple(solve_static(cfg).probabilities))
    if scheme == "hybrid":
        return HybridScheme(tuple(solve_hybrid(cfg).probabilities))
    if scheme.startswith("sq"):
        return SQd(int(scheme[2:]))
    raise ConfigError(f"unknown scheme {scheme!r}")


def _analytic_row(scheme: str, cfg: SystemConfig):
    """(value, status) of the infinite-system prediction, or None if the
    scheme has no analytic counterpart (SQ(d), d != 2)."""
    if scheme == "static":
        return solve_static(cfg).mean_sojourn, "ok"
    if scheme == "hybrid":
        return solve_hybrid(cfg).mean_sojourn, "ok"
    if scheme == "sq2":
        try:
            eq = fixed_point(cfg)
        except (UnstableRegime, NoConvergence):
            return None, "diverged"
        return mean_sojourn_from_tails(eq.tails, cfg), "ok"
    return None, None


def reproduce(spec: ExperimentSpec, out_dir=".", workers: int = 1) -> Path:
    """Run the experiment and write `<out_dir>/<name>.csv`; returns the path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{spec.name}.csv"

    rows = []
    for idx, lam in enumerate(spec.sweep):
        cfg = spec.system.with_arrival_rate(lam)
        point_seed = spec.seed + idx  # shared across schemes: CRN pairing
        for scheme in spec.schemes:
            value, status = _analytic_row(scheme, cfg)
            if status is not None:
                rows.append(
                    (lam, scheme, "meanfield", "", "",
                     "" if value is None else f"{value:.6g}", "", status)
                )
            n_list = spec.n_sweep if spec.n_sweep else (spec.n_servers,)
            for n in n_list:
                for dist in spec.dists:
                    sim = run(
                        SimConfig(
                            system=cfg,
                            n_servers=n,
                            scheme=_scheme_object(scheme, cfg),
                            job_size=dist,
                            horizon=spec.jobs,
                            replications=spec.replications,
                            seed=point_seed,
                        ),
                        workers=workers,
                    )
                    rows.append(
                        (lam, scheme, "simulation", dist, n,
                         f"{sim.mean_sojourn:.6g}",
                         f"{sim.ci_half_width:.3g}", "ok")
                    )

    with open(path, "w", newline="") as fh:
        fh.write(f"# hetjsq reproduce {spec.name} schema={SCHEMA_VERSION}\n")
        fh.write(
            f"# seed={spec.seed} jobs={spec.jobs} "
            f"replications={spec.replications}\n"
        )
        writer = csv.writer(fh)
        writer.writerow(_COLUMNS)
        writer.writerows(rows)
    return path
