import numpy as np
import pytest

from satqaoa.constellation import generate_instance, joint_constellation, constellation_from_name, mix_seed

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def joint_of(*names):
    return joint_constellation([constellation_from_name(n) for n in names])


SMALL_JOINTS = {
    "qpsk": ("qpsk",),
    "8qam": ("8qam",),
    "16qam": ("16qam",),
    "64qam": ("64qam",),
    "2xqpsk": ("qpsk", "qpsk"),
    "qpsk+8qam": ("qpsk", "8qam"),
    "2x8qam": ("8qam", "8qam"),
    "2x16qam": ("16qam", "16qam"),
    "8psk": ("8psk",),
}


def random_instances(joint, count, seed, n_rx=1, channel="rayleigh"):
    rng = np.random.default_rng(seed)
    for t in range(count):
        snr = float(rng.uniform(0.0, 20.0))
        yield generate_instance(joint, n_rx, channel, snr, mix_seed(seed, t))


@pytest.fixture
def qpsk():
    return joint_of("qpsk")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
