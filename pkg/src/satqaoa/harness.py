"""Detectors, approximation-ratio experiments, F1 landscapes and theorem checks."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .constellation import (
    AWGN, CHANNEL_KINDS, MAX_BITS, ChannelInstance, JointConstellation, SizeCapError, constellation_from_name,
    generate_instance, joint_constellation, mix_seed,
)
from .hamiltonian import ground_state, split_independent, to_ising
from .objective import (
    PRUNE_TOL, ZeroPrediction, brute_expand, clause_weights, fast_expand, predict_zero_monomials, subset_of,
)
from .optimizer import DEFAULT_EVALS, multi_start
from .simulator import QaoaEnergy, QaoaSchedule, f1_qpsk_analytic, run_qaoa, sample

__all__ = [
    "ConfigError",
    "DetectionReport",
    "ExperimentConfig",
    "build_joint",
    "cml_detect",
    "qml_detect",
    "ratio_trace",
    "experiment_ratio_vs_runs",
    "experiment_ratio_vs_snr",
    "landscape_f1",
    "verify_theorems",
    "rows_to_csv",
    "DEFAULT_CHECKPOINTS",
]

DEFAULT_CHECKPOINTS = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def build_joint(constellation: str, n_tx: int = 1) -> JointConstellation:
    """``"qpsk"`` with ``n_tx=2`` gives 2xQPSK; ``"qpsk,8qam"`` lists components explicitly."""
    names = [s for s in constellation.split(",") if s.strip()]
    if len(names) == 1:
        names = names * n_tx
    elif len(names) != n_tx:
        raise ConfigError(f"{len(names)} constellations given for {n_tx} transmit antennas")
    return joint_constellation([constellation_from_name(nm) for nm in names])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def rows_to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


@dataclass
class DetectionReport:
    seed: int
    constellation: str
    n_tx: int
    n_rx: int
    channel_kind: str
    snr_db: float
    s_bits: str
    cml_bits: str
    f_cml: float
    qml_bits: str
    f_qml_expectation: float
    rho: float
    paper_rho: float
    p: int
    runs_used: int
    shared_parameters: bool
    params: list = field(default_factory=list)

    def to_json(self) -> dict:
        doc = asdict(self)
        for k in ("snr_db", "paper_rho"):
            if not math.isfinite(doc[k]):
                doc[k] = str(doc[k])
        return doc


def cml_detect(instance: ChannelInstance, joint: JointConstellation) -> tuple[str, float]:
    """Exhaustive ML: smallest total squared distance, ties to the smallest index."""
    if joint.total_bits > MAX_BITS:
        raise SizeCapError(f"{joint.total_bits} bits exceeds cap of {MAX_BITS}")
    d = clause_weights(instance, joint).total
    i = int(np.argmin(d))
    return format(i, f"0{joint.total_bits}b"), float(d[i])


def _ratio(f_cml: float, f_qml: float) -> float:
    if f_qml == f_cml:
        return 1.0
    return f_cml / f_qml


def _modal(hist: dict[str, int]) -> str:
    return min(hist, key=lambda k: (-hist[k], k))


@dataclass
class _Optimized:
    values: np.ndarray  # best-so-far F_p after r+1 runs
    schedules: list  # [(qubits, QaoaSchedule, energies)] one per optimized block
    evaluations: int


def _optimize(instance, joint, p, runs, seed, evals_per_run, shared_parameters) -> tuple[_Optimized, float, object]:
    w = clause_weights(instance, joint)
    f = fast_expand(w, joint)
    h = to_ising(f)
    n = joint.total_bits
    if n > MAX_BITS:
        raise SizeCapError(f"{n} qubits exceeds cap of {MAX_BITS}")
    if shared_parameters:
        run = multi_start(QaoaEnergy(f, p), p, runs, evals_per_run, mix_seed(seed, 0))
        values = np.array([v for _, v in run.trace])
        blocks = [(tuple(range(n)), QaoaSchedule.from_vector(run.best_params), f.values)]
        return _Optimized(values, blocks, run.evaluations), float(w.total.min()), h
    split = split_independent(h)
    values = np.full(runs, split.constant)
    blocks, evals = [], 0
    for k, (qs, part) in enumerate(split.parts):
        run = multi_start(QaoaEnergy(part, p), p, runs, evals_per_run, mix_seed(seed, k))
        values = values + np.array([v for _, v in run.trace])
        blocks.append((qs, QaoaSchedule.from_vector(run.best_params), part.values))
        evals += run.evaluations
    return _Optimized(values, blocks, evals), float(w.total.min()), h


def ratio_trace(instance: ChannelInstance, joint: JointConstellation, p: int, runs: int, seed: int,
                evals_per_run: int = DEFAULT_EVALS, shared_parameters: bool = True) -> np.ndarray:
    """Approximation ratio of the best parameters found after 1..runs restarts."""
    opt, f_cml, _ = _optimize(instance, joint, p, runs, seed, evals_per_run, shared_parameters)
    return np.array([_ratio(f_cml, v) for v in opt.values])


def qml_detect(instance: ChannelInstance, joint: JointConstellation, p: int, runs: int, shots: int, seed: int,
               evals_per_run: int = DEFAULT_EVALS, shared_parameters: bool = False) -> DetectionReport:
    """QAOA detector.

    By default every independent block of the spin Hamiltonian gets its own
    angles and its own restarts; ``shared_parameters`` runs one circuit over
    all qubits with a single set of angles. The reported bit string is the
    most frequent outcome over ``shots`` measurements of the optimized
    state(s); ``rho`` uses the exact expectation.
    """
    opt, f_cml, h = _optimize(instance, joint, p, runs, seed, evals_per_run, shared_parameters)
    n = joint.total_bits
    bits = ["0"] * n
    for k, (qs, sched, energies) in enumerate(opt.schedules):
        state = run_qaoa(energies, sched)
        local = _modal(sample(state, shots, mix_seed(seed, 1 << 20, k)))
        for q, b in zip(qs, local):
            bits[q] = b
    f_qml = float(opt.values[-1])
    cml_bits, _ = cml_detect(instance, joint)
    denom = f_qml - h.constant
    paper_rho = (f_cml - h.constant) / denom if denom != 0 else float("nan")
    params = [list(s.gammas) + list(s.betas) for _, s, _ in opt.schedules]
    return DetectionReport(
        seed=int(seed), constellation=joint.label, n_tx=joint.n_tx, n_rx=instance.n_rx,
        channel_kind=instance.channel_kind, snr_db=instance.snr_db, s_bits=instance.s_bits,
        cml_bits=cml_bits, f_cml=f_cml, qml_bits="".join(bits), f_qml_expectation=f_qml,
        rho=_ratio(f_cml, f_qml), paper_rho=paper_rho, p=int(p), runs_used=int(runs),
        shared_parameters=bool(shared_parameters), params=params,
    )


@dataclass
class ExperimentConfig:
    constellation: str = "qpsk"
    n_tx: int = 1
    n_rx: int = 1
    channel: str = AWGN
    snr_db: list = field(default_factory=lambda: [15.0])
    p: list = field(default_factory=lambda: [1, 2, 3, 4])
    runs: int = 2000
    realizations: int = 100
    seed: int = 100
    shots: int = 1024
    evals_per_run: int = DEFAULT_EVALS
    shared_parameters: bool = True
    checkpoints: list | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("n_tx", "n_rx", "runs", "realizations", "shots"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        if self.channel not in CHANNEL_KINDS:
            raise ConfigError(f"channel must be one of {CHANNEL_KINDS}")
        if not self.snr_db or not self.p:
            raise ConfigError("snr_db and p lists must be non-empty")
        if any(not isinstance(p, int) or p < 1 for p in self.p):
            raise ConfigError("every depth p must be an integer >= 1")
        if self.evals_per_run < 2 * max(self.p) + 2:
            raise ConfigError("evals_per_run too small for the largest depth")
        try:
            joint = build_joint(self.constellation, self.n_tx)
        except SizeCapError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if joint.total_bits > MAX_BITS:
            raise SizeCapError(f"{joint.total_bits} qubits exceeds cap of {MAX_BITS}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        if "snr_db" in doc and not isinstance(doc["snr_db"], list):
            doc["snr_db"] = [doc["snr_db"]]
        if "p" in doc and not isinstance(doc["p"], list):
            doc["p"] = [doc["p"]]
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)

    @classmethod
    def ci_preset(cls, **overrides) -> "ExperimentConfig":
        return cls(**{"realizations": 20, "runs": 200, **overrides})

    def joint(self) -> JointConstellation:
        return build_joint(self.constellation, self.n_tx)

    def run_checkpoints(self) -> list[int]:
        pts = self.checkpoints or [c for c in DEFAULT_CHECKPOINTS if c <= self.runs]
        return sorted({int(c) for c in pts if 1 <= c <= self.runs} | {self.runs})


def _instance(cfg: ExperimentConfig, joint, snr_db: float, r: int) -> ChannelInstance:
    # same payload/channel/noise draw at every SNR and depth for realization r
    return generate_instance(joint, cfg.n_rx, cfg.channel, snr_db, mix_seed(cfg.seed, r))


def _rho_matrix(cfg: ExperimentConfig, joint, snr_db: float, p: int) -> np.ndarray:
    """``(realizations, runs)`` best-so-far approximation ratios."""
    out = np.empty((cfg.realizations, cfg.runs))
    for r in range(cfg.realizations):
        inst = _instance(cfg, joint, snr_db, r)
        out[r] = ratio_trace(inst, joint, p, cfg.runs, mix_seed(cfg.seed, r, p), cfg.evals_per_run,
                             cfg.shared_parameters)
    return out


def _stats(x: np.ndarray) -> tuple[float, float, float]:
    return float(np.mean(x)), float(np.std(x)), float(np.median(x))


def experiment_ratio_vs_runs(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    """Mean approximation ratio against restart count at the first SNR in the config."""
    joint = cfg.joint()
    snr = float(cfg.snr_db[0])
    rows = []
    for p in cfg.p:
        m = _rho_matrix(cfg, joint, snr, p)
        for c in cfg.run_checkpoints():
            mean, std, med = _stats(m[:, c - 1])
            rows.append([p, c, mean, std, med])
    return ["p", "runs", "mean_rho", "std_rho", "median_rho"], rows


def experiment_ratio_vs_snr(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    joint = cfg.joint()
    rows = []
    for p in cfg.p:
        for snr in cfg.snr_db:
            m = _rho_matrix(cfg, joint, float(snr), p)
            mean, std, med = _stats(m[:, -1])
            rows.append([p, float(snr), mean, std, med])
    return ["p", "snr_db", "mean_rho", "std_rho", "median_rho"], rows


def landscape_f1(instance: ChannelInstance, grid_n: int, joint: JointConstellation | None = None
                 ) -> tuple[list[str], list[list]]:
    """Depth-one QPSK landscape on ``[0, pi]^2``.

    ``f1_analytic`` is the closed form without the constant term;
    ``f1_simulated`` is the statevector expectation with it, so
    ``f1_simulated - constant`` should match ``f1_analytic``.
    """
    if joint is None:
        joint = build_joint("qpsk")
    if joint.n_tx != 1 or joint.total_bits != 2:
        raise ValueError("the F1 landscape is defined for single-antenna QPSK")
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    f = fast_expand(clause_weights(instance, joint), joint)
    h = to_ising(f)
    g0, g1, g01 = h.coupling([0]), h.coupling([1]), h.coupling([0, 1])
    axis = np.linspace(0.0, math.pi, grid_n)
    gg, bb = np.meshgrid(axis, axis, indexing="ij")
    sim = QaoaEnergy(f, 1)(np.column_stack([gg.ravel(), bb.ravel()]))
    rows = []
    for (g, b), s in zip(zip(gg.ravel(), bb.ravel()), sim):
        rows.append([float(g), float(b), f1_qpsk_analytic(-g0, -g1, g01, g, b), float(s), h.constant])
    return ["gamma", "beta", "f1_analytic", "f1_simulated", "constant"], rows


def random_trial_instance(joint: JointConstellation, n_rx: int, seed: int) -> ChannelInstance:
    """Rayleigh instance at an SNR drawn uniformly from [0, 20] dB."""
    snr = float(np.random.default_rng(seed).uniform(0.0, 20.0))
    return generate_instance(joint, n_rx, "rayleigh", snr, seed)


def verify_theorems(specs: Sequence[str] = ("qpsk", "8qam", "16qam", "64qam", "2xqpsk"), trials: int = 1000,
                    seed: int = 0, n_rx: int = 1, zero_tol: float = PRUNE_TOL) -> dict:
    """Check predicted-zero coefficients and the degree bound on random instances.

    Zero checks read the reference expansion :func:`brute_expand` unpruned;
    degrees are read from :func:`fast_expand` with its default pruning.
    ``specs`` entries are constellation names, optionally prefixed ``<k>x``.
    """
    report = {}
    for si, spec in enumerate(specs):
        key = spec.lower()
        n_tx = 1
        if "x" in key and key.split("x", 1)[0].isdigit():
            n_tx, key = int(key.split("x", 1)[0]), key.split("x", 1)[1]
        joint = build_joint(key, n_tx)
        pred: ZeroPrediction = predict_zero_monomials(joint)
        max_ratio = {tag: 0.0 for tag in set(pred.rule_applied.values())}
        degrees: dict[int, int] = {}
        nonzero_quadratics: set[tuple[int, ...]] = set()
        for t in range(trials):
            inst = random_trial_instance(joint, n_rx, mix_seed(seed, si, t))
            w = clause_weights(inst, joint)
            ref = brute_expand(w, joint, tol=None)
            scale = w.max_weight
            for mask, tag in pred.rule_applied.items():
                r = abs(ref.coefficient(mask)) / scale
                if r > max_ratio[tag]:
                    max_ratio[tag] = r
            fe = fast_expand(w, joint)
            degrees[fe.degree] = degrees.get(fe.degree, 0) + 1
            nonzero_quadratics.update(subset_of(m) for m in fe.terms if bin(m).count("1") == 2)
        equal = degrees.get(pred.degree_bound, 0) / trials
        report[spec] = {
            "constellation": joint.label,
            "trials": trials,
            "rules": {tag: {"max_coeff_ratio": v, "passed": v < zero_tol,
                            "subsets": len(pred.subsets(tag))} for tag, v in sorted(max_ratio.items())},
            "degree": {"expected": pred.degree_bound, "observed": dict(sorted(degrees.items())),
                       "equal_fraction": equal,
                       "passed": max(degrees) <= pred.degree_bound and equal >= 0.99},
            "nonzero_quadratics": sorted(nonzero_quadratics),
        }
    return report


def ground_state_matches_cml(instance: ChannelInstance, joint: JointConstellation) -> bool:
    bits, _ = cml_detect(instance, joint)
    gs, _ = ground_state(to_ising(fast_expand(clause_weights(instance, joint), joint)))
    return bits == gs
