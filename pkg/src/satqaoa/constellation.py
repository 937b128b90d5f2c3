"""Gray-labelled constellations, joint MIMO constellations and the channel model.

Bit-ordering convention used throughout the package: the label of point ``i``
is the ``N``-bit binary expansion ``b_0 b_1 ... b_{N-1}`` of ``i`` with ``b_0``
the most significant bit. Joint (MIMO) labels are the concatenation of the
per-antenna labels, antenna 0 first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "AWGN",
    "RAYLEIGH",
    "MAX_BITS",
    "CHANNEL_KINDS",
    "SizeCapError",
    "Constellation",
    "JointConstellation",
    "ChannelInstance",
    "bits_of_index",
    "index_of_bits",
    "bitstring",
    "gray_decode",
    "build_qpsk",
    "build_rect_qam",
    "build_gray_psk",
    "constellation_from_name",
    "joint_constellation",
    "generate_instance",
    "mix_seed",
]

AWGN = "awgn"
RAYLEIGH = "rayleigh"
CHANNEL_KINDS = (AWGN, RAYLEIGH)

# statevector / exhaustive search bound
MAX_BITS = 24


class SizeCapError(ValueError):
    """Raised when a problem exceeds the exhaustive/statevector size cap."""


def bits_of_index(index: int, n_bits: int) -> tuple[int, ...]:
    """Return ``(b_0, ..., b_{n-1})`` for ``index``, ``b_0`` most significant."""
    if not 0 <= index < (1 << n_bits):
        raise ValueError(f"index {index} out of range for {n_bits} bits")
    return tuple((index >> (n_bits - 1 - k)) & 1 for k in range(n_bits))


def index_of_bits(bits: Sequence[int] | str) -> int:
    index = 0
    for b in bits:
        b = int(b)
        if b not in (0, 1):
            raise ValueError(f"not a bit: {b!r}")
        index = (index << 1) | b
    return index


def bitstring(index: int, n_bits: int) -> str:
    return format(index, f"0{n_bits}b") if n_bits else ""


def gray_decode(g: int) -> int:
    """Inverse of the reflected binary Gray code ``b ^ (b >> 1)``."""
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


def mix_seed(*keys: int) -> int:
    """Derive a 64-bit sub-seed from a master seed and job keys.

    Uses numpy's ``SeedSequence`` hashing, so the sub-seed for a job depends
    only on its keys and never on the order in which jobs are generated.
    """
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class Constellation:
    points: np.ndarray
    bits_per_symbol: int
    inphase_bits: tuple[int, ...]
    quadrature_bits: tuple[int, ...]
    label: str
    geometry: str = "rect"  # "rect" or "psk"

    def __post_init__(self):
        pts = np.array(self.points, dtype=complex)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        m = pts.shape[0]
        if m < 2 or m & (m - 1):
            raise ValueError("constellation size must be a power of two >= 2")
        if (1 << self.bits_per_symbol) != m:
            raise ValueError("bits_per_symbol does not match number of points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("constellation points must be finite")
        groups = set(self.inphase_bits) | set(self.quadrature_bits)
        if set(self.inphase_bits) & set(self.quadrature_bits) or groups != set(range(self.bits_per_symbol)):
            raise ValueError("in-phase and quadrature bit groups must partition the label bits")
        if len(np.unique(np.round(pts, 12))) != m:
            raise ValueError("constellation points must be distinct")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def average_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def label_of(self, index: int) -> str:
        return bitstring(index, self.bits_per_symbol)

    def normalized(self) -> "Constellation":
        """Copy scaled to unit average symbol energy."""
        scale = 1.0 / math.sqrt(self.average_energy)
        return Constellation(self.points * scale, self.bits_per_symbol, self.inphase_bits,
                             self.quadrature_bits, self.label, self.geometry)

    def axis_neighbours(self) -> list[tuple[int, int]]:
        """Index pairs of points adjacent along the in-phase or quadrature axis.

        Only meaningful for rectangular grids; returns an empty list if the
        points do not form a full grid.
        """
        re_levels = np.unique(np.round(self.points.real, 9))
        im_levels = np.unique(np.round(self.points.imag, 9))
        if len(re_levels) * len(im_levels) != self.size:
            return []
        ix = np.searchsorted(re_levels, np.round(self.points.real, 9))
        iy = np.searchsorted(im_levels, np.round(self.points.imag, 9))
        where = {(int(a), int(b)): k for k, (a, b) in enumerate(zip(ix, iy))}
        pairs = []
        for (a, b), k in where.items():
            for nb in ((a + 1, b), (a, b + 1)):
                if nb in where:
                    pairs.append((k, where[nb]))
        return pairs

    def is_gray_rectangular(self) -> bool:
        """True for a full rectangular grid with Gray labels along each axis
        where one bit group selects the real level and the other the imaginary
        level."""
        if self.geometry != "rect":
            return False
        pairs = self.axis_neighbours()
        if not pairs:
            return False
        if any(bin(a ^ b).count("1") != 1 for a, b in pairs):
            return False
        n = self.bits_per_symbol

        def group_value(i, group):
            return tuple((i >> (n - 1 - k)) & 1 for k in group)

        def determines(group, coord):
            seen = {}
            for i in range(self.size):
                key = group_value(i, group)
                v = round(float(coord[i]), 9)
                if seen.setdefault(key, v) != v:
                    return False
            return True

        re, im = self.points.real, self.points.imag
        gi, gq = self.inphase_bits, self.quadrature_bits
        return (determines(gi, re) and determines(gq, im)) or (determines(gi, im) and determines(gq, re))

    def is_gray_psk(self) -> bool:
        """True for points on a circle at uniform angular spacing whose
        labels follow a Gray order around the circle."""
        if self.geometry != "psk":
            return False
        r = np.abs(self.points)
        if not np.allclose(r, r[0]):
            return False
        order = np.argsort(np.angle(self.points))
        m = self.size
        step = np.diff(np.unwrap(np.angle(self.points[order])))
        if not np.allclose(step, 2 * math.pi / m):
            return False
        return all(bin(int(order[k]) ^ int(order[(k + 1) % m])).count("1") == 1 for k in range(m))

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "geometry": self.geometry,
            "bits_per_symbol": self.bits_per_symbol,
            "inphase_bits": list(self.inphase_bits),
            "quadrature_bits": list(self.quadrature_bits),
            "points": [[float(p.real), float(p.imag)] for p in self.points],
            "labels": [self.label_of(i) for i in range(self.size)],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Constellation":
        pts = np.array([complex(re, im) for re, im in doc["points"]])
        return cls(pts, int(doc["bits_per_symbol"]), tuple(doc["inphase_bits"]),
                   tuple(doc["quadrature_bits"]), doc["label"], doc.get("geometry", "rect"))


def build_qpsk() -> Constellation:
    # index order 0..3 = 1+j, -1+j, 1-j, -1-j; bit b_0 flips the imaginary sign
    pts = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j])
    return Constellation(pts, 2, (0,), (1,), "QPSK")


_QAM_NAMES = {(1, 1): "4QAM", (2, 1): "8QAM", (2, 2): "16QAM", (3, 2): "32QAM-rect",
              (3, 3): "64QAM", (4, 4): "256QAM", (5, 5): "1024QAM"}


def build_rect_qam(n_inphase_bits: int, n_quadrature_bits: int, normalize: bool = False) -> Constellation:
    """Rectangular Gray-labelled QAM on odd-integer coordinates.

    The first ``n_inphase_bits`` label bits, Gray-decoded, select the real
    level in ascending order; the remaining bits select the imaginary level.
    """
    n_i, n_q = int(n_inphase_bits), int(n_quadrature_bits)
    if n_i < 1 or n_q < 1:
        raise ValueError("both bit groups need at least one bit")
    if n_i < n_q:
        raise ValueError("n_inphase_bits must be >= n_quadrature_bits")
    n = n_i + n_q
    l_i, l_q = 1 << n_i, 1 << n_q
    pts = np.empty(1 << n, dtype=complex)
    for idx in range(1 << n):
        gi, gq = idx >> n_q, idx & (l_q - 1)
        x = 2 * gray_decode(gi) - (l_i - 1)
        y = 2 * gray_decode(gq) - (l_q - 1)
        pts[idx] = complex(x, y)
    const = Constellation(pts, n, tuple(range(n_i)), tuple(range(n_i, n)),
                          _QAM_NAMES.get((n_i, n_q), f"{1 << n}QAM-rect"))
    return const.normalized() if normalize else const


def build_gray_psk(n_bits: int) -> Constellation:
    """Gray-labelled M-PSK; the point at angle ``2*pi*k/M`` carries label ``gray(k)``."""
    m = 1 << n_bits
    pts = np.empty(m, dtype=complex)
    for k in range(m):
        pts[k ^ (k >> 1)] = np.exp(2j * math.pi * k / m)
    n_i = (n_bits + 1) // 2
    return Constellation(pts, n_bits, tuple(range(n_i)), tuple(range(n_i, n_bits)),
                         f"{m}PSK", geometry="psk")


def constellation_from_name(name: str) -> Constellation:
    """Parse ``qpsk``, ``8qam``, ``16qam``, ``64qam``, ``qam:<nI>x<nQ>`` or ``<M>psk``."""
    key = name.strip().lower()
    if key == "qpsk":
        return build_qpsk()
    if key.startswith("qam:"):
        a, b = key[4:].split("x")
        return build_rect_qam(int(a), int(b))
    if key.endswith("qam"):
        m = int(key[:-3])
        n = m.bit_length() - 1
        if m != 1 << n or n < 2:
            raise ValueError(f"unsupported QAM order: {name}")
        return build_rect_qam((n + 1) // 2, n // 2)
    if key.endswith("psk"):
        m = int(key[:-3])
        n = m.bit_length() - 1
        if m != 1 << n or n < 1:
            raise ValueError(f"unsupported PSK order: {name}")
        return build_gray_psk(n)
    raise ValueError(f"unknown constellation: {name}")


@dataclass(frozen=True, eq=False)
class JointConstellation:
    components: tuple[Constellation, ...]
    total_bits: int = field(init=False)
    offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("joint constellation needs at least one component")
        object.__setattr__(self, "components", comps)
        offsets, acc = [], 0
        for c in comps:
            offsets.append(acc)
            acc += c.bits_per_symbol
        object.__setattr__(self, "offsets", tuple(offsets))
        object.__setattr__(self, "total_bits", acc)

    @property
    def n_tx(self) -> int:
        return len(self.components)

    @property
    def size(self) -> int:
        return 1 << self.total_bits

    @property
    def label(self) -> str:
        names = [c.label for c in self.components]
        if len(set(names)) == 1 and len(names) > 1:
            return f"{len(names)}x{names[0]}"
        return "+".join(names)

    def groups(self, k: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Global (in-phase, quadrature) bit indices of component ``k``."""
        off = self.offsets[k]
        c = self.components[k]
        return (tuple(off + b for b in c.inphase_bits), tuple(off + b for b in c.quadrature_bits))

    def split_index(self, index: int) -> tuple[int, ...]:
        """Joint index -> per-antenna indices by slicing the concatenated label."""
        out = []
        rest = self.total_bits
        for c in self.components:
            rest -= c.bits_per_symbol
            out.append((index >> rest) & (c.size - 1))
        return tuple(out)

    def join_indices(self, parts: Sequence[int]) -> int:
        if len(parts) != self.n_tx:
            raise ValueError("need one index per component")
        index = 0
        for c, i in zip(self.components, parts):
            if not 0 <= i < c.size:
                raise ValueError("component index out of range")
            index = (index << c.bits_per_symbol) | int(i)
        return index

    def symbols(self, index: int) -> np.ndarray:
        return np.array([c.points[i] for c, i in zip(self.components, self.split_index(index))])

    def symbol_table(self) -> np.ndarray:
        """``(M, N_t)`` array: row ``i`` is the transmit vector of joint point ``i``."""
        if self.total_bits > MAX_BITS:
            raise SizeCapError(f"{self.total_bits} bits exceeds cap of {MAX_BITS}")
        idx = np.arange(self.size)
        cols = []
        rest = self.total_bits
        for c in self.components:
            rest -= c.bits_per_symbol
            cols.append(c.points[(idx >> rest) & (c.size - 1)])
        return np.stack(cols, axis=1)

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components]}

    @classmethod
    def from_json(cls, doc: dict) -> "JointConstellation":
        return cls(tuple(Constellation.from_json(c) for c in doc["components"]))


def joint_constellation(parts: Sequence[Constellation]) -> JointConstellation:
    return JointConstellation(tuple(parts))


@dataclass(frozen=True, eq=False)
class ChannelInstance:
    """One detection problem ``y = H @ (amplitude * s) + eta``.

    ``s`` holds unscaled constellation points; ``amplitude`` is the per
    transmit antenna SNR scaling.
    """

    H: np.ndarray
    s_bits: str
    s: np.ndarray
    amplitude: np.ndarray
    eta: np.ndarray
    y: np.ndarray
    snr_db: float
    channel_kind: str
    seed: int

    @property
    def n_rx(self) -> int:
        return self.H.shape[0]

    @property
    def n_tx(self) -> int:
        return self.H.shape[1]

    @property
    def s_scaled(self) -> np.ndarray:
        return self.amplitude * self.s

    def to_json(self) -> dict:
        def cx(a):
            return [[float(v.real), float(v.imag)] for v in np.ravel(a)]

        return {
            "seed": int(self.seed),
            "snr_db": float(self.snr_db) if math.isfinite(self.snr_db) else str(self.snr_db),
            "channel_kind": self.channel_kind,
            "s_bits": self.s_bits,
            "amplitude": [float(a) for a in self.amplitude],
            "H": [cx(row) for row in self.H],
            "s": cx(self.s),
            "eta": cx(self.eta),
            "y": cx(self.y),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ChannelInstance":
        def arr(rows):
            return np.array([complex(a, b) for a, b in rows])

        return cls(
            H=np.array([arr(row) for row in doc["H"]]),
            s_bits=doc["s_bits"],
            s=arr(doc["s"]),
            amplitude=np.array(doc["amplitude"], dtype=float),
            eta=arr(doc["eta"]),
            y=arr(doc["y"]),
            snr_db=float(doc["snr_db"]),
            channel_kind=doc["channel_kind"],
            seed=int(doc["seed"]),
        )


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    # CN(0, 1): independent real and imaginary parts of variance 1/2
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def generate_instance(joint: JointConstellation, n_rx: int, channel_kind: str, snr_db: float,
                      seed: int, bits: str | None = None, noiseless: bool = False) -> ChannelInstance:
    """Draw a detection instance from a 64-bit seed.

    Draw order from ``numpy.random.Generator(PCG64(seed))``: transmit bits,
    then channel entries (Rayleigh only), then noise. The noise has unit
    power per receive antenna and antenna ``k`` is scaled so its average
    symbol energy equals ``10**(snr_db/10)``. An infinite SNR gives an
    unscaled, noise-free instance. ``bits`` overrides the random payload.
    """
    if n_rx < 1:
        raise ValueError("n_rx must be >= 1")
    kind = channel_kind.lower()
    if kind not in CHANNEL_KINDS:
        raise ValueError(f"unknown channel kind {channel_kind!r}")
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    n = joint.total_bits
    drawn = "".join(str(b) for b in rng.integers(0, 2, size=n))
    s_bits = drawn if bits is None else bits
    if len(s_bits) != n:
        raise ValueError(f"expected {n} transmit bits")
    s = joint.symbols(index_of_bits(s_bits))
    if kind == AWGN:
        H = np.ones((n_rx, joint.n_tx), dtype=complex)
    else:
        H = _complex_normal(rng, (n_rx, joint.n_tx))
    eta = _complex_normal(rng, n_rx)
    if math.isinf(snr_db) and snr_db > 0:
        amplitude = np.ones(joint.n_tx)
        noiseless = True
    else:
        es = np.array([c.average_energy for c in joint.components])
        amplitude = np.sqrt(10.0 ** (snr_db / 10.0) / es)
    if noiseless:
        eta = np.zeros(n_rx, dtype=complex)
    y = H @ (amplitude * s) + eta
    for a in (H, s, amplitude, eta, y):
        a.setflags(write=False)
    return ChannelInstance(H, s_bits, s, amplitude, eta, y, float(snr_db), kind, int(seed))
