import itertools
import warnings

import numpy as np
import pytest

import hetjsq as hq
from hetjsq.errors import NonIntegerClassSizes, NTooSmall, TooManyClasses

from conftest import random_config


def test_static_limit_examples(fig1_system, fig2_system):
    assert hq.static_limit(fig1_system) == pytest.approx(1.0, abs=1e-14)
    assert hq.static_limit(fig2_system) == pytest.approx(1.0, abs=1e-14)
    cfg = hq.validate_config([(2.0, 1.0)], 0.5, mu=3.0)
    assert hq.static_limit(cfg) == pytest.approx(6.0, abs=1e-12)


def test_asymptotic_sq2_limit_examples(fig1_system, fig2_system):
    sup, subset = hq.asymptotic_sq2_limit(fig2_system)
    assert sup == pytest.approx(2 / 3, abs=1e-12)
    assert subset == (1,)  # the slow class alone binds: (0.5/3)/(0.5^2) = 2/3

    sup, subset = hq.asymptotic_sq2_limit(fig1_system)
    assert sup == pytest.approx(1.0, abs=1e-12)
    assert subset == (0, 1)

    single = hq.validate_config([(1.0, 1.0)], 0.5)
    sup, subset = hq.asymptotic_sq2_limit(single)
    assert sup == pytest.approx(1.0, abs=1e-14)
    assert subset == (0,)


def test_asymptotic_limit_class_cap():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = hq.validate_config([(1.0, 1 / 25)] * 25, 0.5)
    with pytest.raises(TooManyClasses):
        hq.asymptotic_sq2_limit(cfg)


def test_subset_condition_examples(fig2_system):
    assert not hq.check_subset_condition(fig2_system.with_arrival_rate(0.7))
    assert hq.check_subset_condition(fig2_system.with_arrival_rate(0.5))
    assert hq.check_subset_condition(fig2_system.with_arrival_rate(1e-9))
    assert hq.check_subset_condition(fig2_system.with_arrival_rate(0.0))


def test_subset_condition_cross_validates_limit_formula():
    # Eq-(6)-style per-subset test vs the closed-form minimum: 1000 configs
    rng = np.random.default_rng(123)
    for _ in range(1000):
        m = int(rng.integers(1, 5))
        cfg = random_config(rng, m, lam_lo=0.3, lam_hi=1.7)
        sup, _ = hq.asymptotic_sq2_limit(cfg)
        assert hq.check_subset_condition(cfg) == (cfg.arrival_rate < sup)


def _finite_n_bruteforce(cfg, n):
    """Independent oracle: enumerate raw server subsets of size >= 2."""
    servers = []
    for cls in cfg.classes:
        servers.extend([cls.capacity] * int(round(n * cls.fraction)))
    best = np.inf
    for size in range(2, n + 1):
        for combo in itertools.combinations(range(n), size):
            total_cap = sum(servers[i] for i in combo)
            best = min(best, cfg.mu * total_cap * (n - 1) / (size * (size - 1)))
    return best


def test_finite_n_limit_against_bruteforce(fig2_system):
    val = hq.finite_n_limit(fig2_system, 4)
    assert val == pytest.approx(1.0, abs=1e-12)
    assert val == pytest.approx(_finite_n_bruteforce(fig2_system, 4), abs=1e-12)


def test_finite_n_limit_bruteforce_random():
    rng = np.random.default_rng(7)
    for _ in range(10):
        m = int(rng.integers(1, 4))
        sizes = rng.integers(1, 4, m)
        n = int(sizes.sum())
        if n < 2:
            continue
        caps = np.sort(rng.uniform(0.3, 3.0, m))[::-1]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = hq.validate_config(list(zip(caps, sizes / n)), 0.5)
        assert hq.finite_n_limit(cfg, n) == pytest.approx(
            _finite_n_bruteforce(cfg, n), rel=1e-12
        )


def test_finite_n_limit_homogeneous_is_capacity():
    cfg = hq.validate_config([(1.0, 1.0)], 0.5)
    for n in (2, 3, 7, 50):
        assert hq.finite_n_limit(cfg, n) == pytest.approx(1.0, abs=1e-12)


def test_finite_n_limit_monotone_and_converges(fig2_system):
    ns = hq.n_star(fig2_system)
    assert ns == 4
    vals = [hq.finite_n_limit(fig2_system, k * ns) for k in (1, 5, 25, 125, 1000)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    sup, _ = hq.asymptotic_sq2_limit(fig2_system)
    assert vals[-1] == pytest.approx(sup, abs=2e-3)
    assert vals[-1] >= sup


def test_finite_n_limit_errors(fig2_system):
    with pytest.raises(NTooSmall):
        hq.finite_n_limit(fig2_system, 1)
    with pytest.raises(NonIntegerClassSizes):
        hq.finite_n_limit(fig2_system, 5)
    big = hq.validate_config([(1.0, 1.0)], 0.5)
    with pytest.raises(TooManyClasses):
        hq.finite_n_limit(big, 2 * 10**7)


def test_limit_ordering_invariant():
    # asymptotic <= finite-N <= static, for admissible N
    rng = np.random.default_rng(42)
    for _ in range(50):
        m = int(rng.integers(1, 4))
        sizes = rng.integers(1, 5, m)
        n = int(sizes.sum())
        if n < 2:
            continue
        caps = np.sort(rng.uniform(0.3, 3.0, m))[::-1]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = hq.validate_config(list(zip(caps, sizes / n)), 0.5)
        sup_inf, _ = hq.asymptotic_sq2_limit(cfg)
        sup_n = hq.finite_n_limit(cfg, n)
        sup_static = hq.static_limit(cfg)
        assert sup_inf <= sup_n + 1e-12
        assert sup_n <= sup_static + 1e-12


def test_asymptotic_limit_invariant_under_class_split():
    rng = np.random.default_rng(5)
    for _ in range(20):
        cfg = random_config(rng, 2)
        split = []
        for cls in cfg.classes:
            split.extend([(cls.capacity, cls.fraction / 2)] * 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg_split = hq.validate_config(split, cfg.arrival_rate)
        a, _ = hq.asymptotic_sq2_limit(cfg)
        b, _ = hq.asymptotic_sq2_limit(cfg_split)
        assert a == pytest.approx(b, rel=1e-12)


def test_homogeneous_all_limits_equal():
    cfg = hq.validate_config([(1.7, 1.0)], 0.5, mu=1.3)
    cap = 1.3 * 1.7
    assert hq.static_limit(cfg) == pytest.approx(cap, rel=1e-14)
    assert hq.asymptotic_sq2_limit(cfg)[0] == pytest.approx(cap, rel=1e-14)
    assert hq.finite_n_limit(cfg, 6) == pytest.approx(cap, rel=1e-14)


def test_analyze_report(fig2_system):
    rep = hq.analyze(fig2_system, n=4)
    assert rep.static_limit == pytest.approx(1.0)
    assert rep.asymptotic_sq2_limit == pytest.approx(2 / 3)
    assert rep.finite_n_limit == pytest.approx(1.0)
    assert rep.finite_n == 4
    rep2 = hq.analyze(fig2_system)
    assert rep2.finite_n_limit is None
