"""Dense statevector simulation of QAOA on diagonal cost Hamiltonians.

Basis convention: amplitude index ``i`` has binary expansion ``b_0 ... b_{N-1}``
with ``b_0`` the most significant bit, so qubit ``q`` is bit ``N-1-q`` of ``i``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constellation import MAX_BITS, SizeCapError
from .hamiltonian import IsingHamiltonian
from .objective import MultilinearPolynomial, subset_of

__all__ = [
    "StateVector",
    "QaoaSchedule",
    "QaoaEnergy",
    "uniform_state",
    "apply_phase_layer",
    "apply_mixer_layer",
    "run_qaoa",
    "expectation",
    "probabilities",
    "sample",
    "histogram_to_csv",
    "gate_level_phase_layer",
    "f1_qpsk_analytic",
]


@dataclass(eq=False)
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude vector has the wrong length")

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def kron(self, other: "StateVector") -> "StateVector":
        """Tensor product with ``self`` holding the leading (more significant) qubits."""
        return StateVector(self.n_qubits + other.n_qubits, np.kron(self.amps, other.amps))


@dataclass(frozen=True)
class QaoaSchedule:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ValueError("need p >= 1 gammas and as many betas")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def from_vector(cls, params: Sequence[float]) -> "QaoaSchedule":
        """``[gamma_1..gamma_p, beta_1..beta_p]`` layout used by the optimizer."""
        params = list(params)
        if len(params) % 2:
            raise ValueError("parameter vector must have even length")
        p = len(params) // 2
        return cls(tuple(params[:p]), tuple(params[p:]))

    def to_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)


def _energies(cost, n_qubits: int) -> np.ndarray:
    if isinstance(cost, MultilinearPolynomial):
        n = cost.n_vars
    elif isinstance(cost, IsingHamiltonian):
        n = cost.n_qubits
    else:
        e = np.asarray(cost, dtype=float)
        n = e.size.bit_length() - 1
        if e.ndim != 1 or e.size != 1 << n:
            raise ValueError("energy vector length must be a power of two")
        if n != n_qubits:
            raise ValueError(f"cost acts on {n} qubits, state has {n_qubits}")
        return e
    if n != n_qubits:
        raise ValueError(f"cost acts on {n} qubits, state has {n_qubits}")
    return cost.values


def uniform_state(n: int) -> StateVector:
    if not 1 <= n <= MAX_BITS:
        raise SizeCapError(f"qubit count must be in [1, {MAX_BITS}], got {n}")
    return StateVector(n, np.full(1 << n, 2.0 ** (-n / 2), dtype=complex))


def apply_phase_layer(state: StateVector, cost, gamma: float) -> StateVector:
    """``exp(-i gamma H_f)`` applied in place; ``H_f`` diagonal with entries ``f(b)``."""
    e = _energies(cost, state.n_qubits)
    state.amps *= np.exp(-1j * gamma * e)
    return state


def _mix(amps: np.ndarray, n: int, c, s) -> np.ndarray:
    """``exp(-i beta X)`` on every qubit for a batch ``amps`` of shape ``(B, 2^n)``;
    ``c``/``s`` are cos/sin of beta with shape ``(B,)``."""
    b = amps.shape[0]
    c = np.asarray(c).reshape(b, 1, 1)
    s = np.asarray(s).reshape(b, 1, 1)
    for q in range(n):
        v = amps.reshape(b, 1 << q, 2 * (1 << (n - 1 - q)))
        half = 1 << (n - 1 - q)
        a0 = v[:, :, :half]
        a1 = v[:, :, half:]
        n0 = c * a0 - 1j * s * a1
        n1 = c * a1 - 1j * s * a0
        amps = np.concatenate((n0, n1), axis=2).reshape(b, -1)
    return amps


def apply_mixer_layer(state: StateVector, beta: float) -> StateVector:
    """``exp(-i beta X_q)`` (an ``R_x(2 beta)``) on every qubit, in place."""
    out = _mix(state.amps[None, :], state.n_qubits, [math.cos(beta)], [math.sin(beta)])
    state.amps[:] = out[0]
    return state


def run_qaoa(cost, schedule: QaoaSchedule, n_qubits: int | None = None) -> StateVector:
    n = n_qubits if n_qubits is not None else (cost.n_qubits if isinstance(cost, IsingHamiltonian) else
                                               cost.n_vars if isinstance(cost, MultilinearPolynomial) else
                                               np.asarray(cost).size.bit_length() - 1)
    state = uniform_state(n)
    for g, b in zip(schedule.gammas, schedule.betas):
        apply_phase_layer(state, cost, g)
        apply_mixer_layer(state, b)
    return state


def probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amps) ** 2


def expectation(state: StateVector, cost) -> float:
    e = _energies(cost, state.n_qubits)
    return float(np.sum(probabilities(state) * e))


def sample(state: StateVector, shots: int, seed: int) -> dict[str, int]:
    """Multinomial measurement record ``{bitstring: count}`` in bitstring order."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = probabilities(state)
    p = p / p.sum()
    counts = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF).multinomial(shots, p)
    n = state.n_qubits
    return {format(int(i), f"0{n}b"): int(counts[i]) for i in np.nonzero(counts)[0]}


def histogram_to_csv(hist: dict[str, int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bitstring", "count"])
    for k in sorted(hist):
        w.writerow([k, hist[k]])
    return buf.getvalue()


class QaoaEnergy:
    """``F_p(gamma, beta)`` as a batch-capable objective.

    Called with a vector ``[gamma_1..gamma_p, beta_1..beta_p]`` it returns a
    float; called with an array of shape ``(B, 2p)`` it returns shape ``(B,)``.
    Rows are evaluated independently, so a row's value does not depend on
    the rest of the batch.
    """

    vectorized = True

    def __init__(self, cost, p: int):
        if isinstance(cost, (MultilinearPolynomial, IsingHamiltonian)):
            e = cost.values
        else:
            e = np.asarray(cost, dtype=float)
        self.energies = np.asarray(e, dtype=float)
        self.n_qubits = self.energies.size.bit_length() - 1
        if self.energies.size != 1 << self.n_qubits:
            raise ValueError("energy vector length must be a power of two")
        if self.n_qubits > MAX_BITS:
            raise SizeCapError(f"{self.n_qubits} qubits exceeds cap of {MAX_BITS}")
        self.p = int(p)

    def states(self, params) -> np.ndarray:
        x = np.atleast_2d(np.asarray(params, dtype=float))
        if x.shape[1] != 2 * self.p:
            raise ValueError(f"expected {2 * self.p} parameters")
        b = x.shape[0]
        n = self.n_qubits
        amps = np.full((b, 1 << n), 2.0 ** (-n / 2), dtype=complex)
        for k in range(self.p):
            amps = amps * np.exp(-1j * x[:, k, None] * self.energies[None, :])
            amps = _mix(amps, n, np.cos(x[:, self.p + k]), np.sin(x[:, self.p + k]))
        return amps

    def __call__(self, params):
        params = np.asarray(params, dtype=float)
        amps = self.states(params)
        f = np.sum((amps.real ** 2 + amps.imag ** 2) * self.energies[None, :], axis=1)
        return float(f[0]) if params.ndim == 1 else f


# --- gate-level reference path (degree <= 2 Hamiltonians only) ---

def _rz(amps: np.ndarray, n: int, q: int, theta: float) -> np.ndarray:
    v = amps.reshape(1 << q, 2, 1 << (n - 1 - q))
    v[:, 0, :] *= np.exp(-0.5j * theta)
    v[:, 1, :] *= np.exp(0.5j * theta)
    return amps


def _cnot(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    on = (idx >> (n - 1 - control)) & 1
    src = np.where(on == 1, idx ^ (1 << (n - 1 - target)), idx)
    return amps[src]


def gate_level_phase_layer(state: StateVector, ising: IsingHamiltonian, gamma: float) -> StateVector:
    """Phase layer from ``R_z(2 gamma g_l)`` gates and ``CNOT R_z(2 gamma g_lm) CNOT``
    blocks; equals :func:`apply_phase_layer` up to the global phase of the
    constant term. Applied in place."""
    if ising.degree > 2:
        raise ValueError("gate-level phase layer supports at most two-body couplings")
    if ising.n_qubits != state.n_qubits:
        raise ValueError("Hamiltonian and state disagree on qubit count")
    n = state.n_qubits
    amps = state.amps
    for mask, g in sorted(ising.couplings.items()):
        qs = subset_of(mask)
        if len(qs) == 1:
            amps = _rz(amps, n, qs[0], 2 * gamma * g)
        else:
            l, m = qs
            amps = _cnot(amps, n, l, m)
            amps = _rz(amps, n, m, 2 * gamma * g)
            amps = _cnot(amps, n, l, m)
    state.amps[:] = amps
    return state


def f1_qpsk_analytic(dbar0: float, dbar1: float, dbar01: float, gamma: float, beta: float) -> float:
    """Depth-one expectation of ``-dbar0 Z_0 - dbar1 Z_1`` (plus the ``dbar01`` factor).

    ``dbar0``/``dbar1`` are the single-qubit spin coefficients with the sign
    flipped. For a Gray labelling ``dbar01`` is zero and the cosine factors
    drop out. The two-body expectation is not included.
    """
    s2b = math.sin(2 * beta)
    c = math.cos(2 * dbar01 * gamma)
    f0 = dbar0 * s2b * math.sin(2 * dbar0 * gamma) * c
    f1 = dbar1 * s2b * math.sin(2 * dbar1 * gamma) * c
    return f0 + f1
