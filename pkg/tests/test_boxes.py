"""典型行为与局域性判定的测试"""
import math

import numpy as np
import pytest

from src.core.behavior import DEPENDENT_NAMES, FREE_NAMES, Behavior, chsh_delta, u_sum, validate
from src.core.boxes import (
    QUANTUM_EXTREMAL_VALUE,
    DeterministicAssignment,
    box_by_name,
    deterministic_box,
    is_local,
    pr_box,
    quantum_extremal_box,
    uniform_box,
)
from src.core.exceptions import BehaviorFormatError, PreconditionError


def test_sixteen_assignments():
    assignments = DeterministicAssignment.all()
    assert len(assignments) == 16
    assert len({d.label for d in assignments}) == 16


def test_parse_assignment():
    d = DeterministicAssignment.parse("++--")
    assert d == DeterministicAssignment(1, 1, -1, -1)
    assert DeterministicAssignment.parse("+−+−").label == "+-+-"
    with pytest.raises(BehaviorFormatError):
        DeterministicAssignment.parse("++-")
    with pytest.raises(BehaviorFormatError):
        DeterministicAssignment.parse("++x-")


def test_all_plus_box():
    b = deterministic_box(DeterministicAssignment(1, 1, 1, 1))
    ones = {name for name, value in b.as_dict().items() if value == 1.0}
    assert ones == {"p1", "p5", "p9", "p13"}
    assert chsh_delta(b) == 2.0


def test_local_bound_is_two():
    deltas = [chsh_delta(deterministic_box(d)) for d in DeterministicAssignment.all()]
    assert max(abs(x) for x in deltas) == 2.0
    assert all(validate(deterministic_box(d)).max_residual == 0.0 for d in DeterministicAssignment.all())


def test_pr_variants():
    assert chsh_delta(pr_box(1)) == 4.0
    assert chsh_delta(pr_box(2)) == -4.0
    for variant in (1, 2):
        assert validate(pr_box(variant)).select("no_signaling").max_residual == 0.0
    assert all(pr_box(1)[name] == 0.5 for name in FREE_NAMES)
    assert all(pr_box(1)[name] == 0.0 for name in DEPENDENT_NAMES)
    with pytest.raises(PreconditionError):
        pr_box(3)


def test_uniform_box(uniform):
    assert validate(uniform).passed
    assert chsh_delta(uniform) == 0.0


def test_quantum_extremal_boxes():
    assert chsh_delta(quantum_extremal_box(1)) == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)
    assert chsh_delta(quantum_extremal_box(2)) == pytest.approx(-2.0 * math.sqrt(2.0), abs=1e-12)
    assert u_sum(quantum_extremal_box(1)) == pytest.approx(2.0 + math.sqrt(2.0), abs=1e-12)
    assert QUANTUM_EXTREMAL_VALUE == pytest.approx(0.4267767, abs=1e-7)
    assert validate(quantum_extremal_box(2)).passed


def test_box_by_name():
    assert box_by_name("pr") == pr_box(1)
    assert box_by_name("PR2") == pr_box(2)
    assert box_by_name("uniform") == uniform_box()
    assert box_by_name("det:+-+-") == deterministic_box(DeterministicAssignment(1, -1, 1, -1))
    assert box_by_name("qextremal2") == quantum_extremal_box(2)
    with pytest.raises(BehaviorFormatError):
        box_by_name("nope")


def test_deterministic_boxes_are_local():
    for d in DeterministicAssignment.all():
        result = is_local(deterministic_box(d))
        assert result.local
        assert result.witness.value <= 2.0 + 1e-12


def test_pr_box_is_nonlocal(pr):
    result = is_local(pr)
    assert not result
    assert result.distance > 1e-3
    assert result.witness.value == 4.0
    assert result.weights is None


def test_quantum_extremal_is_nonlocal(qextremal):
    result = is_local(qextremal)
    assert not result.local
    assert result.witness.value == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)


def test_hardy_optimum_is_nonlocal(hardy_behavior):
    assert not is_local(hardy_behavior).local


def test_random_local_mixtures(rng):
    """确定性盒的任意凸组合都是局域的，且 |Δ| <= 2"""
    boxes = [deterministic_box(d) for d in DeterministicAssignment.all()]
    for _ in range(20):
        weights = rng.dirichlet(np.full(16, 0.3))
        b = Behavior(sum(w * box.probabilities for w, box in zip(weights, boxes)))
        result = is_local(b)
        assert result.local
        assert abs(chsh_delta(b)) <= 2.0 + 1e-12
        assert sum(result.weights) == pytest.approx(1.0, abs=1e-9)


def test_uniform_is_local(uniform):
    assert is_local(uniform).local


def test_is_local_requires_valid_behavior():
    with pytest.raises(PreconditionError):
        is_local(Behavior.from_flat([0.3] * 16))
