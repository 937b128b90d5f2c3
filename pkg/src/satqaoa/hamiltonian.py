"""Diagonal spin Hamiltonians built from the detection objective."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constellation import MAX_BITS, SizeCapError
from .objective import MultilinearPolynomial, mask_of, mask_permutation, subset_of

__all__ = [
    "IsingHamiltonian",
    "SubsystemSplit",
    "to_ising",
    "split_independent",
    "ground_state",
    "quadratize_by_substitution",
    "default_penalty",
]

# roundoff floor for couplings produced by the substitution, relative to the
# largest input coefficient
_ROUNDOFF = 1e-12


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass(frozen=True, eq=False)
class IsingHamiltonian:
    """``H = sum_S g_S prod_{n in S} Z_n + constant`` (masks as in the objective)."""

    n_qubits: int
    couplings: dict[int, float]
    constant: float = 0.0

    def __post_init__(self):
        c = {int(m): float(g) for m, g in self.couplings.items()}
        if 0 in c:
            raise ValueError("constant belongs in `constant`")
        if any(m >> self.n_qubits for m in c):
            raise ValueError("coupling refers to a qubit beyond n_qubits")
        object.__setattr__(self, "couplings", c)
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def degree(self) -> int:
        return max((bin(m).count("1") for m in self.couplings), default=0)

    def coupling(self, subset) -> float:
        mask = subset if isinstance(subset, (int, np.integer)) else mask_of(subset)
        return self.constant if mask == 0 else self.couplings.get(int(mask), 0.0)

    def eigenvalue(self, bits) -> float:
        x = 0
        for k, b in enumerate(bits):
            x |= int(b) << k
        return self.constant + sum(g * (-1) ** bin(m & x).count("1") for m, g in self.couplings.items())

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Diagonal of ``H`` in statevector order (``b_0`` most significant)."""
        if self.n_qubits > MAX_BITS:
            raise SizeCapError(f"{self.n_qubits} qubits exceeds cap of {MAX_BITS}")
        a = np.zeros(1 << self.n_qubits)
        for m, g in self.couplings.items():
            a[m] = g
        a[0] = self.constant
        # Walsh-Hadamard transform: a[x] = sum_S g_S (-1)^{|S & x|}
        for k in range(self.n_qubits):
            a = a.reshape(-1, 2, 1 << k)
            lo, hi = a[:, 0, :].copy(), a[:, 1, :].copy()
            a[:, 0, :] = lo + hi
            a[:, 1, :] = lo - hi
        out = a.reshape(-1)[mask_permutation(self.n_qubits)]
        out.setflags(write=False)
        return out

    @property
    def values(self) -> np.ndarray:
        """Alias of :attr:`eigenvalues`, the name the QAOA code reads energies by."""
        return self.eigenvalues

    def to_json(self) -> dict:
        return {
            "basis": "spin",
            "n_vars": self.n_qubits,
            "terms": [{"subset": list(subset_of(m)), "coeff": g}
                      for m, g in sorted(self.couplings.items(), key=lambda t: (bin(t[0]).count("1"), subset_of(t[0])))],
            "constant": self.constant,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "IsingHamiltonian":
        if doc.get("basis") != "spin":
            raise ValueError("not a spin-basis document")
        return cls(int(doc["n_vars"]), {mask_of(t["subset"]): float(t["coeff"]) for t in doc["terms"]},
                   float(doc.get("constant", 0.0)))


@dataclass(frozen=True, eq=False)
class SubsystemSplit:
    parts: tuple[tuple[tuple[int, ...], IsingHamiltonian], ...]
    constant: float
    n_qubits: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(sorted(q for qs, _ in self.parts for q in qs))

    def eigenvalue(self, bits) -> float:
        total = self.constant
        for qs, h in self.parts:
            total += h.eigenvalue([bits[q] for q in qs])
        return total


def to_ising(poly: MultilinearPolynomial) -> IsingHamiltonian:
    """Substitute ``z_n = (1 - Z_n) / 2`` and collect terms; constants and
    factors of one half are kept."""
    acc: dict[int, float] = {}
    constant = poly.constant
    for mask, c in poly.terms.items():
        k = bin(mask).count("1")
        scale = c / (1 << k)
        for sub in _submasks(mask):
            v = scale if bin(sub).count("1") % 2 == 0 else -scale
            if sub == 0:
                constant += v
            else:
                acc[sub] = acc.get(sub, 0.0) + v
    ref = max((abs(c) for c in poly.terms.values()), default=0.0)
    couplings = {m: g for m, g in acc.items() if abs(g) > _ROUNDOFF * ref}
    return IsingHamiltonian(poly.n_vars, couplings, constant)


def split_independent(h: IsingHamiltonian) -> SubsystemSplit:
    """Connected components of the qubit interaction graph.

    Each part is re-indexed locally, keeping the global qubit order.
    """
    parent = {}

    def find(q):
        while parent[q] != q:
            parent[q] = parent[parent[q]]
            q = parent[q]
        return q

    for m in h.couplings:
        qs = subset_of(m)
        for q in qs:
            parent.setdefault(q, q)
        for q in qs[1:]:
            a, b = find(qs[0]), find(q)
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for q in sorted(parent):
        groups.setdefault(find(q), []).append(q)
    members = sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])
    parts = []
    for qs in members:
        local = {q: i for i, q in enumerate(qs)}
        own = mask_of(qs)
        couplings = {}
        for m, g in h.couplings.items():
            if m & own:
                couplings[mask_of(local[q] for q in subset_of(m))] = g
        parts.append((qs, IsingHamiltonian(len(qs), couplings, 0.0)))
    return SubsystemSplit(tuple(parts), h.constant, h.n_qubits)


def ground_state(h) -> tuple[str, float]:
    """Exhaustive minimum; ties go to the lexicographically smallest string."""
    n = h.n_qubits if isinstance(h, IsingHamiltonian) else h.n_vars
    if n > MAX_BITS:
        raise SizeCapError(f"{n} qubits exceeds cap of {MAX_BITS}")
    e = h.values
    i = int(np.argmin(e))
    return format(i, f"0{n}b") if n else "", float(e[i])


def default_penalty(poly: MultilinearPolynomial) -> float:
    return 4.0 * sum(abs(c) for c in poly.terms.values()) + 1.0


def quadratize_by_substitution(poly: MultilinearPolynomial, penalty: float | None = None) -> MultilinearPolynomial:
    """Reduce to degree two by repeatedly replacing a variable pair with an
    auxiliary variable ``w`` and adding ``penalty * (z_a z_b - 2 z_a w - 2 z_b w + 3 w)``.

    Auxiliary variables are appended after the original ones. The pair chosen
    at each step is the one occurring in the most terms of degree three or
    more (ties: smallest pair). ``penalty`` must exceed twice the sum of
    absolute non-constant coefficients.
    """
    budget = sum(abs(c) for c in poly.terms.values())
    if penalty is None:
        penalty = default_penalty(poly)
    if penalty <= 2.0 * budget:
        raise ValueError(f"penalty {penalty} must exceed {2.0 * budget}")
    terms = dict(poly.terms)
    n = poly.n_vars
    while any(bin(m).count("1") > 2 for m in terms):
        counts: Counter = Counter()
        for m in terms:
            qs = subset_of(m)
            if len(qs) > 2:
                for i, a in enumerate(qs):
                    for b in qs[i + 1:]:
                        counts[(a, b)] += 1
        (a, b), _ = min(counts.items(), key=lambda t: (-t[1], t[0]))
        pair = (1 << a) | (1 << b)
        w = 1 << n
        n += 1
        new: dict[int, float] = {}
        for m, c in terms.items():
            if bin(m).count("1") > 2 and m & pair == pair:
                m = (m & ~pair) | w
            new[m] = new.get(m, 0.0) + c
        for m, c in ((pair, penalty), ((1 << a) | w, -2 * penalty), ((1 << b) | w, -2 * penalty), (w, 3 * penalty)):
            new[m] = new.get(m, 0.0) + c
        terms = {m: c for m, c in new.items() if c != 0.0}
    return MultilinearPolynomial(n, terms, poly.constant)
