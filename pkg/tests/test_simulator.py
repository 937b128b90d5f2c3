import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from satqaoa.constellation import SizeCapError
from satqaoa.hamiltonian import IsingHamiltonian, split_independent, to_ising
from satqaoa.objective import ClauseWeights, MultilinearPolynomial, clause_weights, fast_expand
from satqaoa.simulator import (
    QaoaEnergy, QaoaSchedule, StateVector, apply_mixer_layer, apply_phase_layer, expectation, f1_qpsk_analytic,
    gate_level_phase_layer, histogram_to_csv, run_qaoa, sample, uniform_state,
)

from conftest import joint_of, random_instances

X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2)


def dense_mixer(n):
    total = np.zeros((1 << n, 1 << n), dtype=complex)
    for q in range(n):
        ops = [X if k == q else I2 for k in range(n)]  # qubit 0 leftmost (MSB)
        m = ops[0]
        for o in ops[1:]:
            m = np.kron(m, o)
        total += m
    return total


def dense_qaoa(energies, gammas, betas):
    n = int(np.log2(len(energies)))
    psi = np.full(1 << n, 2 ** (-n / 2), dtype=complex)
    hb = dense_mixer(n)
    for g, b in zip(gammas, betas):
        psi = np.exp(-1j * g * energies) * psi
        psi = expm(-1j * b * hb) @ psi
    return psi


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8),
       st.lists(st.floats(0, math.pi), min_size=4, max_size=4))
def test_statevector_matches_matrix_exponentials(e, params):
    e = np.array(e)
    sched = QaoaSchedule(params[:2], params[2:])
    state = run_qaoa(e, sched)
    ref = dense_qaoa(e, sched.gammas, sched.betas)
    assert np.allclose(state.amps, ref, atol=1e-12)
    assert state.norm == pytest.approx(1.0)


def test_mixer_is_rx_on_single_qubit():
    s = StateVector(1, np.array([1, 0], dtype=complex))
    apply_mixer_layer(s, 0.3)
    assert np.allclose(s.amps, [math.cos(0.3), -1j * math.sin(0.3)])


def _phase_aligned(a, b):
    k = np.argmax(np.abs(b))
    return a * (b[k] / a[k]) / abs(b[k] / a[k])


def test_gate_level_phase_layer_matches_diagonal():
    j = joint_of("qpsk", "qpsk")
    for inst in random_instances(j, 5, 21, n_rx=2):
        h = to_ising(fast_expand(clause_weights(inst, j), j))
        base = run_qaoa(h, QaoaSchedule([0.4], [0.9]))
        a = apply_phase_layer(base.copy(), h, 0.37)
        b = gate_level_phase_layer(base.copy(), h, 0.37)
        assert np.max(np.abs(_phase_aligned(b.amps, a.amps) - a.amps)) <= 1e-10


def test_gate_level_rejects_cubic():
    h = IsingHamiltonian(3, {7: 1.0})
    with pytest.raises(ValueError):
        gate_level_phase_layer(uniform_state(3), h, 0.1)


def test_tensor_separability():
    j = joint_of("16qam")
    inst = next(random_instances(j, 1, 22))
    h = to_ising(fast_expand(clause_weights(inst, j), j))
    sp = split_independent(h)
    assert [qs for qs, _ in sp.parts] == [(0, 1), (2, 3)]
    sched = QaoaSchedule([0.3, 0.8], [1.1, 0.2])
    full = run_qaoa(h, sched)
    prod = run_qaoa(sp.parts[0][1], sched).kron(run_qaoa(sp.parts[1][1], sched))
    assert np.max(np.abs(_phase_aligned(prod.amps, full.amps) - full.amps)) <= 1e-10


def test_f1_analytic_matches_simulation():
    j = joint_of("qpsk")
    inst = next(random_instances(j, 1, 23))
    f = fast_expand(clause_weights(inst, j), j)
    h = to_ising(f)
    for g in np.linspace(0, math.pi, 7):
        for b in np.linspace(0, math.pi, 7):
            sim = QaoaEnergy(f, 1)([g, b]) - h.constant
            ana = f1_qpsk_analytic(-h.coupling([0]), -h.coupling([1]), h.coupling([0, 1]), g, b)
            assert sim == pytest.approx(ana, abs=1e-8)


def test_f1_vanishes_where_sin_2beta_is_zero():
    for b in (0.0, math.pi / 2, math.pi):
        assert abs(f1_qpsk_analytic(0.6, 1.0, 0.0, 1.234, b)) < 1e-12


def test_qaoa_energy_batch_equals_rows():
    rng = np.random.default_rng(0)
    e = rng.uniform(0, 5, 16)
    obj = QaoaEnergy(e, 2)
    x = rng.uniform(0, math.pi, (7, 4))
    batch = obj(x)
    for row, v in zip(x, batch):
        assert obj(row) == pytest.approx(v, abs=1e-13)
        assert v == pytest.approx(expectation(run_qaoa(e, QaoaSchedule.from_vector(row)), e), abs=1e-12)


def test_expectation_bounded_by_spectrum():
    e = np.array([0.5, 2.0, 3.0, 7.0])
    v = QaoaEnergy(e, 1)(np.random.default_rng(1).uniform(0, 3, (50, 2)))
    assert np.all(v >= 0.5 - 1e-12) and np.all(v <= 7.0 + 1e-12)


def test_sampling_reproducible():
    s = run_qaoa(np.array([0.0, 1.0, 2.0, 3.0]), QaoaSchedule([0.5], [0.4]))
    a, b = sample(s, 1000, 5), sample(s, 1000, 5)
    assert a == b and sum(a.values()) == 1000
    assert histogram_to_csv(a).startswith("bitstring,count\n00,")


def test_schedule_layout():
    s = QaoaSchedule.from_vector([1, 2, 3, 4])
    assert s.gammas == (1.0, 2.0) and s.betas == (3.0, 4.0)
    assert s.to_vector().tolist() == [1, 2, 3, 4]
    with pytest.raises(ValueError):
        QaoaSchedule.from_vector([1, 2, 3])


def test_size_cap():
    with pytest.raises(SizeCapError):
        uniform_state(25)
