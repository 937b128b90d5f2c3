import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satqaoa.constellation import (
    SizeCapError, bits_of_index, bitstring, build_gray_psk, build_qpsk, build_rect_qam, constellation_from_name,
    generate_instance, gray_decode, index_of_bits, joint_constellation, mix_seed, ChannelInstance,
)
from satqaoa.constellation import Constellation, JointConstellation

from conftest import joint_of


def hamming(a, b):
    return bin(a ^ b).count("1")


def test_qpsk_table():
    c = build_qpsk()
    assert list(c.points) == [1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]
    assert c.average_energy == pytest.approx(2.0)
    assert c.is_gray_rectangular()


@pytest.mark.parametrize("name,m,energy", [("8qam", 8, 6.0), ("16qam", 16, 10.0), ("64qam", 64, 42.0)])
def test_rect_qam_energy_and_grid(name, m, energy):
    c = constellation_from_name(name)
    assert c.size == m
    assert c.average_energy == pytest.approx(energy)
    # odd-integer grid, every point distinct
    assert np.allclose(c.points.real % 2, 1) and np.allclose(c.points.imag % 2, 1)
    assert len(set(c.points.tolist())) == m


@pytest.mark.parametrize("name", ["qpsk", "8qam", "16qam", "64qam", "qam:3x2"])
def test_axis_neighbours_differ_in_one_bit(name):
    # independent of the library's own checker: nearest points along each axis
    c = constellation_from_name(name)
    pts = c.points
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            d = b - a
            if abs(abs(d) - 2) < 1e-9 and (abs(d.real) < 1e-9 or abs(d.imag) < 1e-9):
                assert hamming(i, j) == 1, (i, j)
    assert c.is_gray_rectangular()


def test_inphase_bits_set_real_level():
    c = build_rect_qam(2, 2)
    for i in range(16):
        hi = i >> 2
        assert c.points[i].real == pytest.approx(2 * gray_decode(hi) - 3)


def test_psk_gray():
    c = build_gray_psk(3)
    assert np.allclose(np.abs(c.points), 1)
    assert c.is_gray_psk()
    # angular neighbours differ in one bit
    order = np.argsort(np.angle(c.points))
    for a, b in zip(order, np.roll(order, -1)):
        assert hamming(int(a), int(b)) == 1


def test_non_gray_rejected():
    pts = np.array([1 + 1j, -1 - 1j, -1 + 1j, 1 - 1j])
    c = Constellation(pts, 2, (0,), (1,), "natural")
    assert not c.is_gray_rectangular()


def test_bad_builders():
    with pytest.raises(ValueError):
        build_rect_qam(1, 2)
    with pytest.raises(ValueError):
        constellation_from_name("7qam")


@given(st.integers(0, 2 ** 12 - 1))
def test_bit_roundtrip(i):
    assert index_of_bits(bits_of_index(i, 12)) == i
    assert index_of_bits(bitstring(i, 12)) == i
    assert bitstring(i, 12)[0] == str(i >> 11)


def test_gray_decode_inverts_gray_code():
    for k in range(256):
        assert gray_decode(k ^ (k >> 1)) == k


def test_mix_seed_order_matters_and_is_stable():
    assert mix_seed(1, 2) != mix_seed(2, 1)
    assert mix_seed(1, 2) == mix_seed(1, 2)


def test_joint_groups_and_symbols():
    j = joint_of("qpsk", "8qam")
    assert j.total_bits == 5 and j.n_tx == 2 and j.size == 32
    assert j.groups(1) == ((2, 3), (4,))
    for idx in range(32):
        parts = j.split_index(idx)
        assert j.join_indices(parts) == idx
        assert j.symbols(idx)[1] == j.components[1].points[parts[1]]
    assert j.symbol_table().shape == (32, 2)


def test_joint_size_cap():
    with pytest.raises(SizeCapError):
        joint_of(*["64qam"] * 5).symbol_table()


def test_instance_reproducible_and_scaled():
    j = joint_of("16qam")
    a = generate_instance(j, 2, "rayleigh", 10.0, 5)
    b = generate_instance(j, 2, "rayleigh", 10.0, 5)
    assert a.s_bits == b.s_bits and np.array_equal(a.y, b.y)
    assert np.allclose(a.y, a.H @ a.s_scaled + a.eta)
    # symbol energy after scaling matches the SNR against unit noise
    assert a.amplitude[0] ** 2 * 10.0 == pytest.approx(10 ** (10.0 / 10))


def test_instance_snr_changes_only_scaling():
    j = joint_of("qpsk")
    a = generate_instance(j, 1, "rayleigh", 0.0, 11)
    b = generate_instance(j, 1, "rayleigh", 20.0, 11)
    assert a.s_bits == b.s_bits
    assert np.array_equal(a.H, b.H) and np.array_equal(a.eta, b.eta)


def test_noiseless_instance():
    j = joint_of("qpsk")
    inst = generate_instance(j, 1, "awgn", float("inf"), 3, bits="10")
    assert inst.s_bits == "10"
    assert np.allclose(inst.y, inst.H @ inst.s)


def test_json_roundtrip():
    j = joint_of("qpsk", "16qam")
    j2 = JointConstellation.from_json(json.loads(json.dumps(j.to_json())))
    assert np.array_equal(j.symbol_table(), j2.symbol_table())
    inst = generate_instance(j, 2, "rayleigh", 7.0, 9)
    back = ChannelInstance.from_json(json.loads(json.dumps(inst.to_json())))
    assert np.array_equal(back.y, inst.y) and back.s_bits == inst.s_bits
