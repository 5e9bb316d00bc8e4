"""Born 规则引擎的测试"""
import math

import numpy as np
import pytest

from src.core.behavior import chsh_delta, correlation, marginal, validate
from src.core.exceptions import BehaviorFormatError, InternalConsistencyError, PreconditionError
from src.services.quantum import (
    DOWN,
    UP,
    Projector,
    QuantumModel,
    behavior_from_model,
    bloch_direction,
    correlation_from_model,
    joint_probability,
    marginal_from_model,
    planar_model,
    planar_table,
    product_state,
    projector,
    random_model,
    schmidt_state,
    singlet_state,
)

Z = (0.0, 0.0, 1.0)
ALL_Z = {"a1": Z, "a2": Z, "b1": Z, "b2": Z}


def test_projector_invariants():
    for direction in (Z, (1.0, 0.0, 0.0), bloch_direction(0.3, 1.1)):
        plus, minus = projector(direction, 1), projector(direction, -1)
        assert np.allclose(plus.matrix + minus.matrix, np.eye(2), atol=1e-12)
        assert np.allclose(plus.matrix @ minus.matrix, 0.0, atol=1e-12)


def test_projector_rejects_non_idempotent():
    with pytest.raises(InternalConsistencyError):
        Projector(np.eye(2))


def test_model_rejects_unnormalized_state():
    with pytest.raises(PreconditionError):
        QuantumModel(np.array([1.0, 1.0, 0.0, 0.0]), ALL_Z)
    with pytest.raises(PreconditionError):
        QuantumModel(singlet_state(), {**ALL_Z, "a1": (0.0, 0.0, 2.0)})
    with pytest.raises(BehaviorFormatError):
        QuantumModel(singlet_state(), {"a1": Z})


def test_product_state_eigenstate():
    model = QuantumModel(product_state(UP, UP), ALL_Z)
    assert joint_probability(model, 1, 1, 1, 1) == pytest.approx(1.0, abs=1e-12)
    assert marginal_from_model(model, "A", 1, 1) == pytest.approx(1.0, abs=1e-12)


def test_singlet_along_z():
    model = QuantumModel(singlet_state(), ALL_Z)
    assert joint_probability(model, 1, 1, 1, 1) == pytest.approx(0.0, abs=1e-12)
    assert joint_probability(model, 1, 1, 1, -1) == pytest.approx(0.5, abs=1e-12)


def test_joint_probabilities_sum_to_one(rng):
    for _ in range(20):
        model = random_model(rng)
        for j in (1, 2):
            for k in (1, 2):
                total = math.fsum(joint_probability(model, j, k, m, n) for m in (1, -1) for n in (1, -1))
                assert total == pytest.approx(1.0, abs=1e-12)


def test_random_models_are_no_signaling(rng):
    """100 个随机模型：两种方式得到的边缘概率一致到 1e-12"""
    for _ in range(100):
        model = random_model(rng)
        b = behavior_from_model(model)
        report = validate(b)
        assert report.passed
        assert report.select("no_signaling").max_residual < 1e-12
        assert min(b.flat) >= -1e-12
        for side in ("A", "B"):
            for setting in (1, 2):
                direct = marginal_from_model(model, side, setting, 1)
                for via in (1, 2):
                    assert marginal(b, side, setting, 1, via) == pytest.approx(direct, abs=1e-12)


def test_behavior_matches_pointwise_probabilities(rng):
    model = random_model(rng)
    b = behavior_from_model(model)
    for j in (1, 2):
        for k in (1, 2):
            for m in (1, -1):
                for n in (1, -1):
                    assert b.p(j, k, m, n) == pytest.approx(joint_probability(model, j, k, m, n), abs=1e-12)


def test_singlet_symmetries(rng):
    """单态在任意测量方向下满足 p1=p4, p2=p3, ..., p14=p15"""
    pairs = [("p1", "p4"), ("p2", "p3"), ("p5", "p8"), ("p6", "p7"),
             ("p9", "p12"), ("p10", "p11"), ("p13", "p16"), ("p14", "p15")]
    for _ in range(20):
        settings = {}
        for name in ("a1", "a2", "b1", "b2"):
            v = rng.normal(size=3)
            settings[name] = tuple(v / np.linalg.norm(v))
        b = behavior_from_model(QuantumModel(singlet_state(), settings))
        for left, right in pairs:
            assert b[left] == pytest.approx(b[right], abs=1e-12)


def test_singlet_marginals_uniform(singlet_model):
    for setting in (1, 2):
        assert marginal_from_model(singlet_model, "A", setting, 1) == pytest.approx(0.5, abs=1e-12)
        assert marginal_from_model(singlet_model, "B", setting, -1) == pytest.approx(0.5, abs=1e-12)


def test_singlet_reaches_tsirelson(singlet_model):
    b = behavior_from_model(singlet_model)
    assert abs(chsh_delta(b)) == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)


def test_correlation_matches_operator_expectation(rng):
    for _ in range(10):
        model = random_model(rng)
        b = behavior_from_model(model)
        for j in (1, 2):
            for k in (1, 2):
                assert correlation(b, j, k) == pytest.approx(correlation_from_model(model, j, k), abs=1e-12)


def test_product_states_respect_local_bound(rng):
    for _ in range(50):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        c = rng.normal(size=2) + 1j * rng.normal(size=2)
        settings = {}
        for name in ("a1", "a2", "b1", "b2"):
            v = rng.normal(size=3)
            settings[name] = tuple(v / np.linalg.norm(v))
        b = behavior_from_model(QuantumModel(product_state(a, c), settings))
        assert abs(chsh_delta(b)) <= 2.0 + 1e-9


def test_planar_table_matches_full_model(rng):
    for _ in range(20):
        theta = rng.uniform(0.0, math.pi / 4)
        angles = rng.uniform(0.0, 2 * math.pi, size=4)
        fast = planar_table(theta, angles)
        full = behavior_from_model(planar_model(theta, angles)).probabilities
        assert np.max(np.abs(fast - full)) < 1e-12


def test_schmidt_state_endpoints():
    assert np.allclose(schmidt_state(0.0), np.kron(UP, UP))
    assert np.allclose(schmidt_state(math.pi / 4), (np.kron(UP, UP) + np.kron(DOWN, DOWN)) / math.sqrt(2))


def test_model_json_round_trip(rng):
    model = random_model(rng)
    again = QuantumModel.from_dict(model.to_dict())
    assert np.array_equal(again.state, model.state)
    assert behavior_from_model(again) == behavior_from_model(model)


def test_model_from_dict_rejects_bad_shape():
    with pytest.raises(BehaviorFormatError):
        QuantumModel.from_dict({"state": {"re": [1.0], "im": [0.0]}, "settings": {}})
