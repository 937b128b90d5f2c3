import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satqaoa.constellation import generate_instance, mix_seed
from satqaoa.objective import (
    ClauseWeights, MultilinearPolynomial, brute_expand, clause_weights, evaluate, fast_expand, mask_of,
    mask_permutation, predict_zero_monomials, subset_of,
)

from conftest import SMALL_JOINTS, joint_of, random_instances

QPSK_D = [0.74, 2.74, 1.94, 3.94]


def test_qpsk_worked_example():
    # hand expansion: f = 0.74 + 1.2 z0 + 2.0 z1 + 0 z0 z1
    f = fast_expand(ClauseWeights([QPSK_D]), joint_of("qpsk"), tol=None)
    assert f.constant == pytest.approx(0.74)
    assert f.coefficient([0]) == pytest.approx(1.2)
    assert f.coefficient([1]) == pytest.approx(2.0)
    assert abs(f.coefficient([0, 1])) < 1e-12
    assert fast_expand(ClauseWeights([QPSK_D]), joint_of("qpsk")).degree == 1


def test_clause_weights_match_direct_distance():
    j = joint_of("qpsk", "8qam")
    inst = generate_instance(j, 3, "rayleigh", 12.0, 4)
    w = clause_weights(inst, j)
    assert w.d.shape == (3, 32)
    for i in (0, 7, 31):
        s = j.symbols(i) * inst.amplitude
        assert np.allclose(w.d[:, i], np.abs(inst.y - inst.H @ s) ** 2)


def test_clause_weights_validation():
    with pytest.raises(ValueError):
        ClauseWeights([[1.0, -0.1]])
    with pytest.raises(ValueError):
        ClauseWeights([[1.0, np.nan]])


@pytest.mark.parametrize("name", ["qpsk", "8qam", "16qam", "2xqpsk", "qpsk+8qam", "8psk"])
def test_fast_equals_brute(name):
    j = joint_of(*SMALL_JOINTS[name])
    for inst in random_instances(j, 10, 1, n_rx=2):
        w = clause_weights(inst, j)
        a, b = fast_expand(w, j, tol=None), brute_expand(w, j, tol=None)
        scale = w.max_weight
        assert abs(a.constant - b.constant) <= 1e-10 * scale
        for m in set(a.terms) | set(b.terms):
            assert abs(a.coefficient(m) - b.coefficient(m)) <= 1e-10 * scale


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=16, max_size=16))
def test_polynomial_reproduces_clause_weights(d):
    # one-hot clauses: f(b) is the weight of the clause indexed by b
    j = joint_of("16qam")
    f = fast_expand(ClauseWeights([d]), j, tol=None)
    for i in range(16):
        assert evaluate(f, format(i, "04b")) == pytest.approx(d[i], abs=1e-9)
    assert np.allclose(f.values, d, atol=1e-9)


def test_pruning_is_relative():
    d = np.full(4, 1e6)
    d[3] += 1e-5  # quadratic term 1e-5, below 1e-9 * 1e6
    f = fast_expand(ClauseWeights([d]), joint_of("qpsk"))
    assert mask_of([0, 1]) not in f.terms


def test_predict_zero_2xqpsk_structure():
    pred = predict_zero_monomials(joint_of("qpsk", "qpsk"))
    quads = {s for s in pred.subsets() if len(s) == 2}
    assert quads == {(0, 1), (2, 3)}
    assert pred.degree_bound == 2
    assert set(pred.rule_applied.values()) == {"Prop3-MIMO"}


@pytest.mark.parametrize("name,bound", [("qpsk", 1), ("8qam", 2), ("16qam", 2), ("64qam", 3), ("8psk", 2)])
def test_degree_bounds(name, bound):
    assert predict_zero_monomials(joint_of(name)).degree_bound == bound


def test_predicted_zeros_vanish_on_random_instances():
    for name in ("8qam", "16qam", "2xqpsk", "qpsk+8qam"):
        j = joint_of(*SMALL_JOINTS[name])
        pred = predict_zero_monomials(j)
        for inst in random_instances(j, 20, 2, n_rx=2):
            w = clause_weights(inst, j)
            ref = brute_expand(w, j, tol=None)
            for m in pred.predicted_zero:
                assert abs(ref.coefficient(m)) < 1e-9 * w.max_weight


def test_unpredicted_terms_are_generically_nonzero():
    # 2xQPSK cross terms (one bit per antenna) survive on a Rayleigh channel
    j = joint_of("qpsk", "qpsk")
    inst = next(random_instances(j, 1, 3))
    f = fast_expand(clause_weights(inst, j), j)
    assert {subset_of(m) for m in f.terms if bin(m).count("1") == 2} == {(0, 2), (0, 3), (1, 2), (1, 3)}


def test_mask_permutation_is_bit_reversal():
    p = mask_permutation(3)
    assert p.tolist() == [0, 4, 2, 6, 1, 5, 3, 7]


def test_polynomial_json_roundtrip():
    j = joint_of("8qam")
    f = fast_expand(clause_weights(next(random_instances(j, 1, 5)), j), j)
    g = MultilinearPolynomial.from_json(json.loads(json.dumps(f.to_json())))
    assert g.terms == f.terms and g.constant == f.constant


def test_evaluate_rejects_bad_input():
    f = MultilinearPolynomial(2, {1: 1.0})
    with pytest.raises(ValueError):
        evaluate(f, "012")
    with pytest.raises(ValueError):
        evaluate(f, "02")
