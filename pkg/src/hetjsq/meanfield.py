"""Mean-field dynamics of uniform SQ(2) dispatch over heterogeneous PS servers.

The large-system occupancy tails u_n^(j)(t) evolve by the coupled ODE

    du_n^(j)/dt = lambda (u_{n-1}^(j) - u_n^(j)) sum_i gamma_i (u_{n-1}^(i) + u_n^(i))
                  - mu C_j (u_n^(j) - u_{n+1}^(j)),          n >= 1,

with u_0^(j) = 1 held fixed.  Under the subset stability condition the
system has a unique summable equilibrium P = {P_k^(j)} which satisfies

    sum_j (gamma_j/nu_j) P_{k+1}^(j) = (sum_j gamma_j P_k^(j))^2

at every level, decays doubly exponentially, and yields the mean sojourn
time (1/lambda) sum_j sum_{k>=1} gamma_j P_k^(j).

Two independent equilibrium routes are implemented: a shooting
construction on the first-level value for M <= 2, and relaxation of the
ODE from the empty state for any M.  Both certify the result by the
drift residual and the level identity above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoConvergence, ShootingBracketEmpty, UnstableRegime
from .model import DEFAULT_TRUNCATION, SystemConfig, TailFamily
from .stability import check_subset_condition

# tail coordinates must stay this close to the monotone cone before a step
# is accepted; beyond it the step is halved
_CONE_TOL = 1e-9
# values below this are numerically indistinguishable from a decayed tail
_DECAY_FLOOR = 1e-13
# mass this large in the top truncated level means the truncation no
# longer represents a summable state (divergence, in practice)
_BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class MeanFieldState:
    """Occupancy tails at one time instant; tails live in the monotone cone."""

    tails: TailFamily
    time: float = 0.0


@dataclass(frozen=True)
class EquilibriumResult:
    """Certified fixed point of the mean-field ODE.

    residual is max |h(P)| over retained coordinates; consistency is the
    max level-identity defect.  alpha is the shooting parameter (M = 2
    only).
    """

    tails: TailFamily
    method: str  # "shooting_m2" or "ode_relaxation"
    residual: float
    consistency: float
    alpha: float | None = None

    def __post_init__(self):
        if not (self.residual <= 1e-10):
            raise NoConvergence(
                f"equilibrium residual {self.residual:g} exceeds 1e-10"
            )


@dataclass(frozen=True)
class MeanFieldTrajectory:
    """Recorded ODE solution: times (R,) and tail snapshots (R, M, K+1)."""

    times: np.ndarray
    history: np.ndarray
    final: MeanFieldState
    converged: bool
    clamp_mass: float
    steps: int


def empty_state(config: SystemConfig, levels: int = DEFAULT_TRUNCATION) -> MeanFieldState:
    """All-servers-idle initial point (u_0 = 1, u_n = 0 for n >= 1)."""
    arr = np.zeros((config.n_classes, levels + 1))
    arr[:, 0] = 1.0
    return MeanFieldState(TailFamily.from_array(arr, tail_tolerance=1.0), 0.0)


def weighted_sup_norm(arr: np.ndarray) -> float:
    """sup over classes and levels of |u_n| / (n + 1)."""
    arr = np.atleast_2d(arr)
    return float(np.max(np.abs(arr) / (np.arange(arr.shape[1]) + 1.0)))


def _drift_arr(u, lam, mu_caps, g):
    """Raw drift on an (M, K+1) array; u_{K+1} is taken as 0."""
    pair = g @ (u[:, :-1] + u[:, 1:])  # sum_i gamma_i (u_{n-1} + u_n), n = 1..K
    shifted = np.zeros_like(u[:, 1:])
    shifted[:, :-1] = u[:, 2:]
    h = np.zeros_like(u)
    h[:, 1:] = lam * (u[:, :-1] - u[:, 1:]) * pair - mu_caps[:, None] * (
        u[:, 1:] - shifted
    )
    return h


def drift(state: MeanFieldState, config: SystemConfig) -> np.ndarray:
    """Time derivative of the tails at `state`, as an (M, K+1) array.

    Level 0 is pinned (derivative 0); the level above the truncation is
    treated as empty.
    """
    u = state.tails.as_array()
    return _drift_arr(
        u, config.arrival_rate, config.mu * config.capacities, config.fractions
    )


def _project_cone(u):
    """Project onto {u_0 = 1 >= u_1 >= ... >= 0}; returns (projected, distance)."""
    v = np.clip(u, 0.0, 1.0)
    v[:, 0] = 1.0
    v = np.minimum.accumulate(v, axis=1)
    return v, float(np.sum(np.abs(v - u)))


def _cone_violation(u):
    over = max(float(np.max(u)) - 1.0, 0.0)
    under = max(-float(np.min(u)), 0.0)
    mono = float(np.max(np.diff(u, axis=1), initial=0.0))
    return max(over, under, mono)


def integrate(
    initial: MeanFieldState,
    config: SystemConfig,
    horizon: float | None = None,
    *,
    drift_tol: float = 1e-11,
    max_time: float = 1e6,
    record_every: int = 10,
) -> MeanFieldTrajectory:
    """Integrate the mean-field ODE from `initial`.

    With a numeric `horizon` the trajectory is advanced to exactly that
    time.  With horizon=None it runs until the drift sup norm falls below
    `drift_tol` (equilibrium) and raises NoConvergence if `max_time` is
    exhausted first or if tail mass reaches the truncation boundary --
    the signature of an arrival rate outside the SQ(2) stability region.

    Classical RK4 with step halving whenever a step would leave the
    monotone cone by more than 1e-9; accepted steps are projected back
    onto the cone and the total projected mass is recorded.
    """
    lam, mu = config.arrival_rate, config.mu
    mu_caps = mu * config.capacities
    g = config.fractions
    u = initial.tails.as_array().copy()

    # Lipschitz constant of the drift; sets the stable step scale
    k2 = 8.0 * lam + 2.0 * float(np.max(mu_caps))
    dt_base = 1.0 / max(k2, 1e-12)
    dt_max = 2.5 * dt_base
    dt = dt_base

    until_equilibrium = horizon is None
    t_end = max_time if until_equilibrium else float(horizon)

    t = float(initial.time)
    times = [t]
    history = [u.copy()]
    clamp_mass = 0.0
    steps = 0
    converged = False
    f = _drift_arr(u, lam, mu_caps, g)

    while t < t_end - 1e-15:
        if until_equilibrium and float(np.max(np.abs(f))) < drift_tol:
            converged = True
            break
        step = min(dt, t_end - t)
        while True:
            k1 = f
            k2_ = _drift_arr(u + 0.5 * step * k1, lam, mu_caps, g)
            k3 = _drift_arr(u + 0.5 * step * k2_, lam, mu_caps, g)
            k4 = _drift_arr(u + step * k3, lam, mu_caps, g)
            cand = u + (step / 6.0) * (k1 + 2.0 * k2_ + 2.0 * k3 + k4)
            if _cone_violation(cand) <= _CONE_TOL or step <= 1e-6 * dt_base:
                break
            step *= 0.5
        u, clamped = _project_cone(cand)
        clamp_mass += clamped
        t += step
        steps += 1
        dt = min(max(step, dt) * 1.2, dt_max)
        f = _drift_arr(u, lam, mu_caps, g)
        if steps % record_every == 0:
            times.append(t)
            history.append(u.copy())
        if until_equilibrium and float(np.max(u[:, -1])) > _BOUNDARY_TOL:
            raise NoConvergence(
                f"tail mass reached the truncation boundary at t={t:.3g} "
                f"(top level {float(np.max(u[:, -1])):.3g}); the state is not "
                "converging to a summable equilibrium"
            )
    else:
        converged = until_equilibrium and float(np.max(np.abs(f))) < drift_tol

    if until_equilibrium and not converged:
        raise NoConvergence(
            f"drift sup norm {float(np.max(np.abs(f))):.3g} after t={t:.3g} "
            f"(target {drift_tol:g})"
        )

    if times[-1] != t:
        times.append(t)
        history.append(u.copy())
    final = MeanFieldState(TailFamily.from_array(u, tail_tolerance=1.0), t)
    return MeanFieldTrajectory(
        times=np.array(times),
        history=np.array(history),
        final=final,
        converged=converged or not until_equilibrium,
        clamp_mass=clamp_mass,
        steps=steps,
    )


def _shoot_m2(alpha, nu, g, levels):
    """Generate the two-class equilibrium candidate for first-level value
    alpha.  Returns (tails (2, levels+1), status) with status 0 = decayed
    cleanly, +1 = class 1 went negative first, -1 = class 2 went negative
    first."""
    p = np.zeros((2, levels + 1))
    p[:, 0] = 1.0
    p[0, 1] = alpha
    p[1, 1] = (nu[1] / g[1]) * (1.0 - (g[0] / nu[0]) * alpha)
    for l in range(levels - 1):
        s = g[0] * (p[0, l] + p[0, l + 1]) + g[1] * (p[1, l] + p[1, l + 1])
        n1 = p[0, l + 1] - nu[0] * (p[0, l] - p[0, l + 1]) * s
        n2 = p[1, l + 1] - nu[1] * (p[1, l] - p[1, l + 1]) * s
        p[0, l + 2] = n1
        p[1, l + 2] = n2
        if n1 < 0.0 or n2 < 0.0:
            if n1 < 0.0 and (n2 >= 0.0 or n1 <= n2):
                return p, +1
            return p, -1
        if max(n1, n2) < _DECAY_FLOOR:
            return p, 0
    if max(p[0, levels], p[1, levels]) < _DECAY_FLOOR:
        return p, 0
    # ran out of levels while still positive: treat the larger surviving
    # class as the failing direction (alpha pushed mass toward it)
    return p, (+1 if p[0, levels] < p[1, levels] else -1)


def _fixed_point_shooting(config: SystemConfig, levels: int) -> EquilibriumResult:
    nu = config.nu
    g = config.fractions

    if config.n_classes == 1:
        # zero-parameter case: the level identity pins P_1 = nu and the
        # recursion collapses to P_{k+1} = nu * P_k^2
        p = np.zeros((1, levels + 1))
        p[0, 0] = 1.0
        for k in range(levels):
            p[0, k + 1] = nu[0] * p[0, k] * p[0, k]
        tails = TailFamily.from_array(p)
        return _certify(tails, config, "shooting_m2", alpha=None)

    lo = max(0.0, (nu[0] / g[0]) * (1.0 - g[1] / nu[1]))
    hi = min(1.0, nu[0] / g[0])
    if not lo < hi:
        raise ShootingBracketEmpty(
            f"empty shooting bracket ({lo:g}, {hi:g}); config violates the "
            "subset stability condition"
        )

    # probe the bracket ends to orient the bisection; the two ends fail on
    # opposite classes when the bracket is valid
    eps = 1e-9 * (hi - lo)
    _, s_lo = _shoot_m2(lo + eps, nu, g, levels)
    _, s_hi = _shoot_m2(hi - eps, nu, g, levels)
    alpha = None
    if s_lo == 0:
        alpha = lo + eps
    elif s_hi == 0:
        alpha = hi - eps
    elif s_lo == s_hi:
        raise ShootingBracketEmpty(
            f"bracket ends fail on the same class (status {s_lo}); "
            "cannot orient the shooting bisection"
        )

    if alpha is None:
        a, b = lo + eps, hi - eps
        while b - a > 1e-14:
            mid = 0.5 * (a + b)
            _, s_mid = _shoot_m2(mid, nu, g, levels)
            if s_mid == 0:
                break
            if s_mid == s_lo:
                a = mid
            else:
                b = mid
        alpha = 0.5 * (a + b)

    p, _ = _shoot_m2(alpha, nu, g, levels)
    # force exact zeros once both sequences are below the decay floor;
    # the sequences are only trustworthy down to the bisection noise
    cut = levels + 1
    for k in range(1, levels + 1):
        if max(p[0, k], p[1, k]) < _DECAY_FLOOR:
            cut = k
            break
    p[:, cut:] = 0.0
    p = np.clip(p, 0.0, 1.0)
    p = np.minimum.accumulate(p, axis=1)
    tails = TailFamily.from_array(p)
    return _certify(tails, config, "shooting_m2", alpha=float(alpha))


def _fixed_point_ode(config: SystemConfig, levels: int) -> EquilibriumResult:
    traj = integrate(
        empty_state(config, levels),
        config,
        None,
        drift_tol=5e-13,
        record_every=10**9,
    )
    arr = traj.final.tails.as_array()
    tails = TailFamily.from_array(arr)
    return _certify(tails, config, "ode_relaxation", alpha=None)


def _certify(tails, config, method, alpha):
    u = tails.as_array()
    res = float(
        np.max(
            np.abs(
                _drift_arr(
                    u,
                    config.arrival_rate,
                    config.mu * config.capacities,
                    config.fractions,
                )
            )
        )
    )
    cons = consistency_residual(tails, config)
    return EquilibriumResult(
        tails=tails, method=method, residual=res, consistency=cons, alpha=alpha
    )


def fixed_point(
    config: SystemConfig,
    levels: int = DEFAULT_TRUNCATION,
    method: str | None = None,
) -> EquilibriumResult:
    """Unique equilibrium tails of the mean-field ODE.

    method: "shooting" (M <= 2 only), "ode", or None to pick
    automatically (shooting for M <= 2, relaxation otherwise).  Raises
    UnstableRegime when the subset stability condition fails.  If the
    shooting construction fails to certify, relaxation is retried before
    giving up.
    """
    if not check_subset_condition(config):
        raise UnstableRegime(
            f"lambda = {config.arrival_rate:g} violates the subset "
            "stability condition; no summable equilibrium exists"
        )
    if config.arrival_rate == 0:
        arr = np.zeros((config.n_classes, levels + 1))
        arr[:, 0] = 1.0
        return EquilibriumResult(
            TailFamily.from_array(arr), "shooting_m2", 0.0, 0.0, None
        )

    if method is None:
        method = "shooting" if config.n_classes <= 2 else "ode"
    if method == "shooting":
        if config.n_classes > 2:
            raise DomainError("the shooting construction is defined for M <= 2")
        try:
            return _fixed_point_shooting(config, levels)
        except NoConvergence:
            # certification failed; relaxation is the robust fallback
            return _fixed_point_ode(config, levels)
    if method == "ode":
        return _fixed_point_ode(config, levels)
    raise DomainError(f"unknown method {method!r}")


def next_tail_levels(tails: TailFamily, config: SystemConfig, k: int) -> np.ndarray:
    """Level k+1 tail values implied by levels >= k of `tails`.

    Evaluates, per class j,

        nu_j [ gamma_j P_k^(j)^2 + P_k^(j) sum_{i != j} gamma_i P_k^(i)
               + sum_{i != j} sum_{l >= k} gamma_i (P_{l+1}^(i) P_l^(j)
                                                    - P_l^(i) P_{l+1}^(j)) ]

    truncated at the family's level K.  The i = j summand of the double
    sum vanishes identically, so it is summed over all i.
    """
    p = tails.as_array()
    K = tails.truncation_K
    if not 0 <= k <= K - 1:
        raise DomainError(f"level k={k} outside [0, {K - 1}]")
    g = config.fractions
    nu = config.nu
    g0 = g @ p[:, k:K]  # sum_i gamma_i P_l,   l = k..K-1
    g1 = g @ p[:, k + 1 : K + 1]  # sum_i gamma_i P_{l+1}
    cross = p[:, k:K] @ g1 - p[:, k + 1 : K + 1] @ g0
    own = g * p[:, k] ** 2
    mixed = p[:, k] * (g0[0] - g * p[:, k])
    return nu * (own + mixed + cross)


def consistency_residual(tails: TailFamily, config: SystemConfig) -> float:
    """Max over levels of the equilibrium identity defect
    |sum_j (gamma_j/nu_j) P_{k+1}^(j) - (sum_j gamma_j P_k^(j))^2|."""
    if config.arrival_rate <= 0:
        raise DomainError("consistency identity needs lambda > 0")
    p = tails.as_array()
    g = config.fractions
    w = g / config.nu
    lhs = w @ p[:, 1:]
    rhs = (g @ p[:, :-1]) ** 2
    return float(np.max(np.abs(lhs - rhs)))


def state_dependent_rate(tails: TailFamily, config: SystemConfig, k: int) -> float:
    """Equilibrium arrival intensity seen by a server at occupancy k:
    lambda * sum_i gamma_i (P_k^(i) + P_{k+1}^(i))."""
    if not 0 <= k <= tails.truncation_K - 1:
        raise DomainError(f"level k={k} outside [0, {tails.truncation_K - 1}]")
    p = tails.as_array()
    g = config.fractions
    return config.arrival_rate * float(g @ (p[:, k] + p[:, k + 1]))


def mean_sojourn_from_tails(
    tails: TailFamily, config: SystemConfig, with_bound: bool = False
):
    """Mean sojourn time (1/lambda) sum_j gamma_j sum_{k>=1} P_k^(j).

    With with_bound=True also returns the truncation safety term
    (1/lambda) sum_j gamma_j P_K^(j) * K bounding the discarded mass.
    """
    lam = config.arrival_rate
    if lam <= 0:
        raise DomainError("mean sojourn needs lambda > 0")
    p = tails.as_array()
    g = config.fractions
    value = float(g @ p[:, 1:].sum(axis=1)) / lam
    if not with_bound:
        return value
    bound = float(g @ p[:, -1]) * tails.truncation_K / lam
    return value, bound


def class_join_probabilities(tails: TailFamily, config: SystemConfig) -> np.ndarray:
    """Long-run probability that a job joins each class: gamma_j P_1^(j) / nu_j."""
    if config.arrival_rate <= 0:
        raise DomainError("join probabilities need lambda > 0")
    p = tails.as_array()
    return config.fractions * p[:, 1] / config.nu


def class_join_probability(tails: TailFamily, config: SystemConfig, j: int) -> float:
    """Long-run probability that a job joins a class-j server (0-based j)."""
    return float(class_join_probabilities(tails, config)[j])
