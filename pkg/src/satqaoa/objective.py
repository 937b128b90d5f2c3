"""Weighted min-SAT objective of a detection instance as a multilinear polynomial.

Variable subsets are bitmasks: variable ``z_n`` is bit ``1 << n`` of the mask.
(Statevector indices use the opposite, most-significant-first, order; see
:func:`mask_permutation`.)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .constellation import MAX_BITS, ChannelInstance, JointConstellation, SizeCapError

__all__ = [
    "PRUNE_TOL",
    "ClauseWeights",
    "MultilinearPolynomial",
    "ZeroPrediction",
    "clause_weights",
    "brute_expand",
    "fast_expand",
    "predict_zero_monomials",
    "degree",
    "evaluate",
    "mask_of",
    "subset_of",
    "mask_permutation",
]

# relative to the largest clause weight
PRUNE_TOL = 1e-9

THM1 = "Thm1"
THM2_IQ = "Thm2-IQ"
COR1 = "Cor1"
COR2 = "Cor2"
PROP3_MIMO = "Prop3-MIMO"
RULE_TAGS = (THM1, THM2_IQ, COR1, COR2, PROP3_MIMO)


def mask_of(subset) -> int:
    m = 0
    for n in subset:
        m |= 1 << int(n)
    return m


def subset_of(mask: int) -> tuple[int, ...]:
    out, n = [], 0
    while mask:
        if mask & 1:
            out.append(n)
        mask >>= 1
        n += 1
    return tuple(out)


def mask_permutation(n: int) -> np.ndarray:
    """``perm[i]`` is the variable mask of statevector index ``i`` (bit reversal)."""
    idx = np.arange(1 << n)
    out = np.zeros_like(idx)
    for k in range(n):
        out |= ((idx >> (n - 1 - k)) & 1) << k
    return out


@dataclass(frozen=True, eq=False)
class ClauseWeights:
    """Squared distances ``d[l, i] = |y_l - sum_k h_lk s_k(i)|^2``."""

    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float, ndmin=2)
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("clause weights must be finite and non-negative")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def total(self) -> np.ndarray:
        """Weights summed over receive antennas, one per joint point."""
        return self.d.sum(axis=0)

    @property
    def max_weight(self) -> float:
        return float(self.d.max())


@dataclass(frozen=True, eq=False)
class MultilinearPolynomial:
    n_vars: int
    terms: dict[int, float]
    constant: float = 0.0

    def __post_init__(self):
        terms = {int(m): float(c) for m, c in self.terms.items()}
        if 0 in terms:
            raise ValueError("constant belongs in `constant`, not in terms")
        if any(m >> self.n_vars for m in terms):
            raise ValueError("term refers to a variable beyond n_vars")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "constant", float(self.constant))

    def coefficient(self, subset) -> float:
        mask = subset if isinstance(subset, (int, np.integer)) else mask_of(subset)
        if mask == 0:
            return self.constant
        return self.terms.get(int(mask), 0.0)

    @property
    def degree(self) -> int:
        return max((bin(m).count("1") for m in self.terms), default=0)

    def pruned(self, tol: float) -> "MultilinearPolynomial":
        return MultilinearPolynomial(self.n_vars, {m: c for m, c in self.terms.items() if abs(c) >= tol},
                                     self.constant)

    @cached_property
    def values(self) -> np.ndarray:
        """``f(b)`` for every bit string, indexed like a statevector (``b_0`` MSB)."""
        if self.n_vars > MAX_BITS:
            raise SizeCapError(f"{self.n_vars} variables exceeds cap of {MAX_BITS}")
        a = np.zeros(1 << self.n_vars)
        for m, c in self.terms.items():
            a[m] = c
        a[0] = self.constant
        # subset-sum (zeta) transform: a[x] = sum over S subset of x of c_S
        for k in range(self.n_vars):
            a = a.reshape(-1, 2, 1 << k)
            a[:, 1, :] += a[:, 0, :]
        a = a.reshape(-1)
        out = a[mask_permutation(self.n_vars)]
        out.setflags(write=False)
        return out

    def to_json(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "terms": [{"subset": list(subset_of(m)), "coeff": c}
                      for m, c in sorted(self.terms.items(), key=lambda t: (bin(t[0]).count("1"), subset_of(t[0])))],
            "constant": self.constant,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MultilinearPolynomial":
        return cls(int(doc["n_vars"]), {mask_of(t["subset"]): float(t["coeff"]) for t in doc["terms"]},
                   float(doc.get("constant", 0.0)))


@dataclass(frozen=True)
class ZeroPrediction:
    predicted_zero: frozenset[int]
    rule_applied: dict[int, str] = field(hash=False)
    degree_bound: int

    def subsets(self, rule: str | None = None) -> list[tuple[int, ...]]:
        masks = self.predicted_zero if rule is None else [m for m, r in self.rule_applied.items() if r == rule]
        return sorted((subset_of(m) for m in masks), key=lambda s: (len(s), s))


def clause_weights(instance: ChannelInstance, joint: JointConstellation) -> ClauseWeights:
    if instance.H.shape[1] != joint.n_tx or instance.s.shape[0] != joint.n_tx:
        raise ValueError(f"instance has {instance.H.shape[1]} transmit antennas, joint constellation {joint.n_tx}")
    if instance.y.shape[0] != instance.H.shape[0]:
        raise ValueError("received vector and channel matrix disagree on n_rx")
    tx = joint.symbol_table() * instance.amplitude  # (M, Nt)
    rx = tx @ instance.H.T  # (M, Nr)
    d = np.abs(instance.y[None, :] - rx) ** 2
    return ClauseWeights(d.T)


def _as_weights(weights) -> ClauseWeights:
    return weights if isinstance(weights, ClauseWeights) else ClauseWeights(weights)


def _tolerance(w: ClauseWeights, tol: float | None) -> float:
    return 0.0 if not tol else tol * w.max_weight


def brute_expand(weights, joint: JointConstellation, tol: float | None = PRUNE_TOL) -> MultilinearPolynomial:
    """Symbolic expansion of ``sum_l sum_i d[l, i] * prod_n B(z_n)``.

    Each clause is multiplied out factor by factor, with ``(1 - z_n)`` for a
    zero label bit and ``z_n`` for a one bit. Deliberately naive; this is
    the reference for :func:`fast_expand`.
    """
    w = _as_weights(weights)
    n = joint.total_bits
    if w.d.shape[1] != 1 << n:
        raise ValueError("weights do not match the joint constellation size")
    acc: dict[int, float] = {}
    for row in w.d:
        for i, d in enumerate(row):
            clause = {0: 1.0}
            for k in range(n):
                bit = (i >> (n - 1 - k)) & 1
                var = 1 << k
                nxt: dict[int, float] = {}
                for m, c in clause.items():
                    if bit:
                        nxt[m | var] = nxt.get(m | var, 0.0) + c
                    else:
                        nxt[m] = nxt.get(m, 0.0) + c
                        nxt[m | var] = nxt.get(m | var, 0.0) - c
                clause = nxt
            for m, c in clause.items():
                acc[m] = acc.get(m, 0.0) + d * c
    constant = acc.pop(0, 0.0)
    cut = _tolerance(w, tol)
    terms = {m: c for m, c in acc.items() if abs(c) >= cut} if cut else acc
    return MultilinearPolynomial(n, terms, constant)


def fast_coefficients(weights, n_bits: int) -> np.ndarray:
    """Dense mask-indexed coefficient array(s) by the signed-sum formula.

    ``c[S] = sum_{i : ones(i) subset S} d_i * (-1)^(|S| - |ones(i)|)``,
    evaluated with an in-place inclusion-exclusion transform. Accepts
    weights of shape ``(..., M)`` summed over receive antennas beforehand.
    """
    d = np.asarray(weights, dtype=float)
    lead = d.shape[:-1]
    a = np.take(d, np.argsort(mask_permutation(n_bits)), axis=-1).copy()
    for k in range(n_bits):
        a = a.reshape(lead + (-1, 2, 1 << k))
        a[..., 1, :] -= a[..., 0, :]
    return a.reshape(lead + (1 << n_bits,))


def fast_expand(weights, joint: JointConstellation, tol: float | None = PRUNE_TOL) -> MultilinearPolynomial:
    w = _as_weights(weights)
    n = joint.total_bits
    if w.d.shape[1] != 1 << n:
        raise ValueError("weights do not match the joint constellation size")
    c = fast_coefficients(w.total, n)
    cut = _tolerance(w, tol)
    nz = np.nonzero(np.abs(c[1:]) >= cut)[0] + 1 if cut else np.arange(1, c.size)
    return MultilinearPolynomial(n, {int(m): float(c[m]) for m in nz}, float(c[0]))


def predict_zero_monomials(joint: JointConstellation) -> ZeroPrediction:
    """Subsets whose coefficient vanishes for every channel and received signal.

    Rectangular Gray components: any subset holding both an in-phase and a
    quadrature bit of one component (tag ``Thm1`` for the full set of a single
    constellation, ``Thm2-IQ`` otherwise, ``Prop3-MIMO`` with several transmit
    antennas). Gray PSK components: only the full set of that component's bits
    when it is the only component.
    """
    n = joint.total_bits
    rules: dict[int, str] = {}
    bound = 0
    mixed = []  # (in-phase mask, quadrature mask) per rectangular component
    for k, comp in enumerate(joint.components):
        gi, gq = joint.groups(k)
        if comp.is_gray_rectangular():
            mixed.append((mask_of(gi), mask_of(gq)))
            bound += max(len(gi), len(gq))
        elif comp.is_gray_psk():
            if joint.n_tx != 1:
                raise ValueError("PSK zero prediction is only supported for a single constellation")
            rules[(1 << n) - 1] = THM1
            bound += comp.bits_per_symbol - 1
        else:
            raise ValueError(f"component {k} ({comp.label}) is not Gray-labelled; no zero prediction")
    if mixed:
        if n > MAX_BITS:
            raise SizeCapError(f"{n} bits exceeds cap of {MAX_BITS}")
        full = (1 << n) - 1
        for s in range(1, 1 << n):
            if any(s & mi and s & mq for mi, mq in mixed):
                if joint.n_tx > 1:
                    rules[s] = PROP3_MIMO
                else:
                    rules[s] = THM1 if s == full else THM2_IQ
    return ZeroPrediction(frozenset(rules), rules, bound)


def degree(poly: MultilinearPolynomial) -> int:
    return poly.degree


def evaluate(poly: MultilinearPolynomial, bits: Sequence[int] | str) -> float:
    if len(bits) != poly.n_vars:
        raise ValueError(f"expected {poly.n_vars} bits, got {len(bits)}")
    x = 0
    for k, b in enumerate(bits):
        b = int(b)
        if b not in (0, 1):
            raise ValueError(f"not a bit: {b!r}")
        x |= b << k
    return poly.constant + sum(c for m, c in poly.terms.items() if m & x == m)


def all_subsets(n: int):
    """Non-empty subsets of ``range(n)`` as masks, smallest degree first."""
    for r in range(1, n + 1):
        for combo in itertools.combinations(range(n), r):
            yield mask_of(combo)
