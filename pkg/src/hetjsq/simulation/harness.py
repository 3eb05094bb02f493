"""Replication orchestration: configs, seeding, aggregation, CIs.

One replication is strictly sequential and deterministic; replications
are independent (their seeds are derived from the base seed by index, not
by execution order) and may run in parallel worker processes.  Scheme
comparisons at the same base seed are common-random-number paired: the
arrival and job-size streams are separate from the routing stream, so two
schemes see identical arrival epochs and sizes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..errors import ConfigError, NonIntegerClassSizes, NoSamples
from ..model import SystemConfig, TailFamily, TailVector
from . import _engine_py
from ._engine_py import (
    DIST_DETERMINISTIC,
    DIST_EXPONENTIAL,
    DIST_POWER_LAW,
    DIST_ZERO,
    SCHEME_HYBRID,
    SCHEME_SQD,
    SCHEME_STATIC,
    mix64,
)

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1

_DIST_CODES = {
    "exponential": DIST_EXPONENTIAL,
    "deterministic": DIST_DETERMINISTIC,
    "power_law": DIST_POWER_LAW,
    "zero": DIST_ZERO,  # test hook, not part of the public surface
}


@dataclass(frozen=True)
class StaticScheme:
    """State-independent routing with fixed class probabilities."""

    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class SQd:
    """Sample d servers uniformly from all N, join the least occupied."""

    d: int = 2


@dataclass(frozen=True)
class HybridScheme:
    """Pick a class with bias p, then SQ(2) among two of its servers."""

    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class SimConfig:
    """One simulation experiment: system, size, scheme, sizes, horizon.

    horizon counts total arrivals; the first `warmup` jobs (default 20%)
    are excluded from statistics but still occupy servers.
    """

    system: SystemConfig
    n_servers: int
    scheme: StaticScheme | SQd | HybridScheme
    job_size: str = "exponential"
    horizon: int = 2_000_000
    warmup: int | None = None
    replications: int = 10
    seed: int = 0
    tail_levels: int = 32

    def __post_init__(self):
        if self.n_servers < 1:
            raise ConfigError("need at least one server")
        for f in self.system.fractions:
            cnt = self.n_servers * f
            if abs(cnt - round(cnt)) > 1e-9:
                raise NonIntegerClassSizes(
                    f"N*gamma = {cnt!r} is not an integer for N={self.n_servers}"
                )
        if self.job_size not in _DIST_CODES:
            raise ConfigError(f"unknown job size distribution {self.job_size!r}")
        if self.horizon < 0 or (self.warmup is not None and self.warmup < 0):
            raise ConfigError("horizon and warmup must be nonnegative")
        if self.replications < 1:
            raise ConfigError("need at least one replication")
        if self.tail_levels < 1:
            raise ConfigError("tail_levels must be >= 1")
        if self.system.arrival_rate <= 0:
            raise ConfigError("simulation needs lambda > 0")

        sizes = self.class_sizes()
        sch = self.scheme
        if isinstance(sch, SQd):
            if not 1 <= sch.d <= self.n_servers:
                raise ConfigError(
                    f"cannot sample {sch.d} distinct servers from {self.n_servers}"
                )
        elif isinstance(sch, (StaticScheme, HybridScheme)):
            p = np.asarray(sch.probabilities, dtype=float)
            if p.size != self.system.n_classes:
                raise ConfigError("probability vector length != number of classes")
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ConfigError("probabilities must be nonnegative and sum to 1")
            if isinstance(sch, HybridScheme):
                for j, pj in enumerate(p):
                    if pj > 0 and sizes[j] < 2:
                        raise ConfigError(
                            f"hybrid SQ(2) samples two servers of class {j}, "
                            f"but it has only {sizes[j]}"
                        )
        else:
            raise ConfigError(f"unknown scheme {sch!r}")

    def class_sizes(self) -> list[int]:
        return [int(round(self.n_servers * f)) for f in self.system.fractions]

    @property
    def effective_warmup(self) -> int:
        return self.horizon // 5 if self.warmup is None else self.warmup


@dataclass(frozen=True)
class SimResult:
    """Aggregated replication results.

    mean_sojourn carries a 95% (t-based) confidence half-width across
    replication means.  empirical_tails pools PASTA samples over all
    replications.  work_error / littles_gap are the worst per-replication
    relative defects of the two built-in conservation checks.
    """

    mean_sojourn: float
    ci_half_width: float
    rep_means: np.ndarray
    empirical_tails: TailFamily
    join_fractions: np.ndarray
    counted_jobs: int
    events: int
    degenerate_jobs: int
    remainder_clamps: int
    work_error: float
    littles_gap: float
    engine: str
    per_rep: tuple = field(repr=False, default=())


def replication_seed(base_seed: int, rep: int) -> int:
    return mix64((base_seed + ((rep + 1) * _GOLDEN & _MASK)) & _MASK)


def _engine_args(cfg: SimConfig):
    sizes = cfg.class_sizes()
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    caps = cfg.system.capacities
    sch = cfg.scheme
    if isinstance(sch, SQd):
        code, d = SCHEME_SQD, sch.d
        cdf = np.ones(cfg.system.n_classes)
    else:
        code = SCHEME_STATIC if isinstance(sch, StaticScheme) else SCHEME_HYBRID
        d = 2
        cdf = np.cumsum(np.asarray(sch.probabilities, dtype=float))
        cdf[-1] = 1.0
    return (
        cfg.n_servers,
        offsets,
        caps,
        code,
        d,
        cdf,
        cfg.n_servers * cfg.system.arrival_rate,
        _DIST_CODES[cfg.job_size],
        1.0 / cfg.system.mu,
        cfg.horizon,
        cfg.effective_warmup,
        cfg.tail_levels,
    )


def _run_one(packed):
    args, seed, pure = packed
    if pure:
        return _engine_py.simulate_replication(*args, seed)
    from . import simulate_replication

    return simulate_replication(*args, seed)


def run(cfg: SimConfig, workers: int = 1, _pure_python: bool = False) -> SimResult:
    """Run all replications of `cfg` and aggregate.

    workers > 1 runs replications in separate processes; results are
    identical to the sequential run because seeds depend only on the
    replication index.
    """
    from . import ENGINE

    args = _engine_args(cfg)
    seeds = [replication_seed(cfg.seed, r) for r in range(cfg.replications)]
    packed = [(args, s, _pure_python) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reps = list(ex.map(_run_one, packed))
    else:
        reps = [_run_one(p) for p in packed]

    total_samples = sum(r["tail_samples"] for r in reps)
    if total_samples == 0:
        raise NoSamples(
            "no post-warmup arrivals: empirical statistics are undefined "
            f"(horizon={cfg.horizon}, warmup={cfg.effective_warmup})"
        )

    rep_means = np.array([r["sum_sojourn"] / r["counted"] for r in reps])
    mean = float(rep_means.mean())
    if len(reps) > 1:
        tq = stats.t.ppf(0.975, len(reps) - 1)
        ci = float(tq * rep_means.std(ddof=1) / np.sqrt(len(reps)))
    else:
        ci = float("nan")

    sizes = cfg.class_sizes()
    tail_sums = sum(r["tail_sums"] for r in reps)
    tails = []
    for j, size_j in enumerate(sizes):
        v = tail_sums[j] / (total_samples * size_j)
        v[0] = 1.0
        tails.append(TailVector(v, tail_tolerance=1.0))
    empirical = TailFamily(tuple(tails))

    join = sum(r["join_counts"] for r in reps)
    counted = int(sum(r["counted"] for r in reps))
    join_fractions = join / counted

    caps = cfg.system.capacities
    work_err = 0.0
    little = 0.0
    for r in reps:
        delivered = float(np.dot(caps, r["busy_time"]))
        if r["work_departed"] > 0:
            work_err = max(
                work_err,
                abs(delivered - r["work_departed"]) / r["work_departed"],
            )
        if r["occupancy_area"] > 0:
            little = max(
                little,
                abs(r["occupancy_area"] - r["sum_sojourn"]) / r["occupancy_area"],
            )

    return SimResult(
        mean_sojourn=mean,
        ci_half_width=ci,
        rep_means=rep_means,
        empirical_tails=empirical,
        join_fractions=join_fractions,
        counted_jobs=counted,
        events=sum(r["events"] for r in reps),
        degenerate_jobs=sum(r["degenerate_jobs"] for r in reps),
        remainder_clamps=sum(r["remainder_clamps"] for r in reps),
        work_error=work_err,
        littles_gap=little,
        engine="python" if _pure_python else ENGINE,
        per_rep=tuple(reps),
    )
