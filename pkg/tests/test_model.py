import json

import numpy as np
import pytest

import hetjsq as hq
from hetjsq.errors import (
    ConfigError,
    EmptyClassList,
    FractionsDontSumToOne,
    NonPositiveCapacity,
)
from hetjsq.model import TailFamily, TailVector, config_from_dict, load_config_file


def test_reference_config_offered_loads(fig1_system):
    assert fig1_system.n_classes == 2
    np.testing.assert_allclose(fig1_system.nu, [0.375, 0.75], rtol=1e-14)


def test_single_class_offered_load():
    cfg = hq.validate_config([(1.0, 1.0)], 0.9, 1.0)
    assert cfg.nu[0] == pytest.approx(0.9, abs=1e-15)


def test_fractions_must_sum_to_one():
    with pytest.raises(FractionsDontSumToOne):
        hq.validate_config([(1.0, 0.3), (2.0, 0.3)], 0.5)


def test_small_fraction_error_is_renormalized():
    eps = 3e-10
    cfg = hq.validate_config([(1.0, 0.5 + eps), (2.0, 0.5)], 0.5)
    assert abs(sum(c.fraction for c in cfg.classes) - 1.0) <= 1e-12


def test_classes_sorted_descending():
    cfg = hq.validate_config([(2 / 3, 0.5), (4 / 3, 0.5)], 0.5)
    assert [c.capacity for c in cfg.classes] == [4 / 3, 2 / 3]


def test_empty_and_nonpositive_rejected():
    with pytest.raises(EmptyClassList):
        hq.validate_config([], 0.5)
    with pytest.raises(NonPositiveCapacity):
        hq.validate_config([(0.0, 1.0)], 0.5)
    with pytest.raises(NonPositiveCapacity):
        hq.validate_config([(-1.0, 1.0)], 0.5)


def test_duplicate_capacities_warn_but_pass():
    with pytest.warns(UserWarning, match="duplicate"):
        cfg = hq.validate_config([(1.0, 0.5), (1.0, 0.5)], 0.5)
    assert cfg.n_classes == 2


def test_negative_lambda_and_mu_rejected():
    with pytest.raises(ConfigError):
        hq.validate_config([(1.0, 1.0)], -0.1)
    with pytest.raises(ConfigError):
        hq.validate_config([(1.0, 1.0)], 0.1, mu=0.0)


def test_tail_vector_invariants():
    tv = TailVector(np.array([1.0, 0.5, 0.25, 0.0, 0.0]), tail_tolerance=1.0)
    assert tv.truncation_K == 4
    assert tv.values[0] == 1.0
    with pytest.raises(ConfigError):
        TailVector(np.array([0.9, 0.5]))  # P_0 != 1
    with pytest.raises(ConfigError):
        TailVector(np.array([1.0, 0.5, 0.6]))  # not monotone
    with pytest.raises(ConfigError):
        TailVector(np.array([1.0, 0.5]), tail_tolerance=1e-14)  # unresolved tail


def test_tail_vector_repairs_float_wobble():
    v = np.array([1.0, 0.5, 0.5 + 1e-13, 0.0])
    tv = TailVector(v, tail_tolerance=1.0)
    assert np.all(np.diff(tv.values) <= 0)


def test_tail_family_requires_equal_truncations():
    a = TailVector(np.array([1.0, 0.0]), tail_tolerance=1.0)
    b = TailVector(np.array([1.0, 0.5, 0.0]), tail_tolerance=1.0)
    with pytest.raises(ConfigError):
        TailFamily((a, b))
    fam = TailFamily((b, b))
    assert fam.as_array().shape == (2, 3)


def test_config_document_roundtrip(tmp_path):
    doc = {
        "lambda": 0.5,
        "mu": 1.0,
        "classes": [
            {"capacity": 4 / 3, "fraction": 0.5},
            {"capacity": 2 / 3, "fraction": 0.5},
        ],
    }
    cfg = config_from_dict(doc)
    assert cfg.arrival_rate == 0.5
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(doc))
    cfg2 = load_config_file(path)
    assert cfg2 == cfg


def test_config_document_errors(tmp_path):
    with pytest.raises(ConfigError):
        config_from_dict({"mu": 1.0})
    with pytest.raises(ConfigError):
        config_from_dict({"lambda": 0.5, "classes": [{"capacity": 1.0}]})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config_file(bad)
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "missing.json")
