"""Hardy 集分析的测试"""
import math

import pytest

from src.core.boxes import DeterministicAssignment, deterministic_box, pr_box
from src.core.exceptions import BehaviorFormatError, PreconditionError
from src.core.behavior import Behavior
from src.core.hardy import (
    HARDY_DELTA_MAX,
    SIGMA_QM_MIN,
    TAU,
    TAU_INV5,
    Classification,
    analyze,
    analyze_all,
    ch_inequality,
    classify,
    hardy_set,
    hardy_sets,
    normalized_chsh_violation,
    sigma,
)
from src.services.quantum import behavior_from_model, random_model


def test_constants():
    assert TAU == pytest.approx(1.6180340, abs=1e-7)
    assert TAU_INV5 == pytest.approx(0.0901699, abs=1e-7)
    assert HARDY_DELTA_MAX == pytest.approx(2.3606798, abs=1e-7)
    assert SIGMA_QM_MIN == pytest.approx(0.8196601, abs=1e-7)


def test_eight_sets():
    sets = hardy_sets()
    assert [hs.relation for hs in sets] == ["8a", "8b", "8c", "8d", "8e", "8f", "8g", "8h"]
    g = hardy_set("8g")
    assert g.witness == "p13"
    assert g.zero_targets == ("p4", "p5", "p9")
    assert g.sigma_terms == ("p1", "p8", "p12", "p14", "p15")
    assert hardy_set("p13") == g
    assert hardy_set("(g)") == g
    assert hardy_set("8a").members == ("p5", "p12", "p14", "p2")
    h = hardy_set("8h")
    assert (set(h.zero_targets), h.witness) == ({"p1", "p8", "p12"}, "p16")
    c = hardy_set("8c")
    assert (set(c.zero_targets), c.witness) == ({"p1", "p12", "p14"}, "p6")
    b = hardy_set("8b")
    assert (set(b.zero_targets), b.witness) == ({"p8", "p9", "p15"}, "p3")
    with pytest.raises(BehaviorFormatError):
        hardy_set("9z")


def test_hardy_optimum_report(hardy_behavior):
    report = analyze(hardy_behavior, hardy_set("8g"))
    assert report.premises_satisfied
    assert report.status == "ok"
    assert report.witness == pytest.approx(TAU_INV5, abs=1e-12)
    assert report.delta_abs == pytest.approx(2.3606798, abs=1e-6)
    assert report.sigma == pytest.approx(0.8196601, abs=1e-6)
    assert report.delta_identity_residual < 1e-12
    assert report.sigma_identity_residual < 1e-12
    assert report.classification is Classification.QUANTUM_CONSISTENT
    assert report.causality.passed


def test_ch_versus_chsh_ratio(hardy_behavior):
    """CH 违反量与归一化 CHSH 违反量之比为 2"""
    report = analyze(hardy_behavior, hardy_set("8g"))
    normalized = normalized_chsh_violation(hardy_behavior)
    assert report.ch_violation == pytest.approx(0.0901699, abs=1e-4)
    assert normalized == pytest.approx(0.1803399, abs=1e-4)
    assert normalized / report.ch_violation == pytest.approx(2.0, abs=1e-9)


def test_ch_inequality_holds_for_deterministic_boxes():
    hs = hardy_set("8g")
    for d in DeterministicAssignment.all():
        assert ch_inequality(deterministic_box(d), hs) <= 0.0


def test_pr_box_variant_two_is_general_probabilistic():
    report = analyze(pr_box(2), hardy_set("8g"))
    assert report.premises_satisfied
    assert report.witness == 0.5
    assert report.delta_abs == 4.0
    assert report.sigma == 0.0
    assert report.classification is Classification.GENERAL_PROBABILISTIC_ONLY
    assert report.causality.passed


def test_pr_box_variant_one_fails_premises(pr):
    report = analyze(pr, hardy_set("8g"))
    assert not report.premises_satisfied
    assert report.status == "Hardy premises not satisfied"


def test_deterministic_box_with_zero_witness():
    b = deterministic_box(DeterministicAssignment(1, 1, -1, -1))
    report = analyze(b, hardy_set("8g"))
    assert report.premises_satisfied
    assert report.delta_abs == 2.0
    assert report.sigma == 1.0
    assert report.classification is Classification.QUANTUM_CONSISTENT


def test_identities_hold_for_every_set_when_premises_hold(pr):
    """任一 Hardy 集的前提成立时 |Δ| = 2 + 4w，Σ = 1 - 2w"""
    for b in (pr_box(2), *(deterministic_box(d) for d in DeterministicAssignment.all())):
        for report in analyze_all(b):
            if report.premises_satisfied:
                assert report.delta_identity_residual < 1e-12
                assert report.sigma_identity_residual < 1e-12
                assert report.sigma == pytest.approx(sigma(b, report.set))


def test_classification_monotone():
    grid = [i / 1000 for i in range(0, 601)]
    order = {
        Classification.QUANTUM_CONSISTENT: 0,
        Classification.GENERAL_PROBABILISTIC_ONLY: 1,
        Classification.INFEASIBLE: 2,
    }
    ranks = [order[classify(w, 1e-9)] for w in grid]
    assert ranks == sorted(ranks)
    assert classify(0.09, 1e-9) is Classification.QUANTUM_CONSISTENT
    assert classify(0.2, 1e-9) is Classification.GENERAL_PROBABILISTIC_ONLY
    assert classify(0.51, 1e-9) is Classification.INFEASIBLE


def test_analyze_requires_valid_behavior():
    with pytest.raises(PreconditionError):
        analyze(Behavior.from_flat([0.3] * 16), hardy_set("8g"))


def test_report_to_dict(hardy_behavior):
    data = analyze(hardy_behavior, hardy_set("8g")).to_dict()
    assert data["set"] == "8g"
    assert data["classification"] == "quantum-consistent"
    assert data["zero_targets"] == ["p4", "p5", "p9"]
    assert math.isclose(data["witness"], TAU_INV5, abs_tol=1e-12)


def test_witness_bounded_by_zero_targets_on_quantum_behaviors(rng):
    """任意量子行为上 2w - 1 不超过各零目标之和"""
    sets = hardy_sets()
    for _ in range(50):
        b = behavior_from_model(random_model(rng))
        for hs in sets:
            zeros = math.fsum(b[name] for name in hs.zero_targets)
            assert 2.0 * b[hs.witness] - 1.0 <= zeros + 1e-12, hs.relation


def test_no_classification_without_premises(pr):
    report = analyze(pr, hardy_set("8g"))
    assert report.classification is None
    assert report.to_dict()["classification"] is None


def test_validation_tol_is_passed_through():
    flat = [0.25] * 16
    flat[0] += 1e-6
    flat[1] -= 1e-6
    b = Behavior.from_flat(flat)
    with pytest.raises(PreconditionError):
        analyze(b, hardy_set("8g"))
    reports = analyze_all(b, validation_tol=1e-4)
    assert len(reports) == 8
