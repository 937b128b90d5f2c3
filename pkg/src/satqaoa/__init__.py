"""Maximum-likelihood detection as weighted min-SAT, solved with simulated QAOA."""

from .constellation import (
    MAX_BITS, ChannelInstance, Constellation, JointConstellation, SizeCapError, build_gray_psk, build_qpsk,
    build_rect_qam, constellation_from_name, generate_instance, joint_constellation, mix_seed,
)
from .hamiltonian import IsingHamiltonian, ground_state, quadratize_by_substitution, split_independent, to_ising
from .harness import (
    ConfigError, DetectionReport, ExperimentConfig, cml_detect, experiment_ratio_vs_runs, experiment_ratio_vs_snr,
    landscape_f1, qml_detect, verify_theorems,
)
from .objective import MultilinearPolynomial, brute_expand, clause_weights, fast_expand, predict_zero_monomials
from .optimizer import multi_start, nelder_mead
from .simulator import QaoaEnergy, QaoaSchedule, run_qaoa, sample

__version__ = "0.1.0"
