import json

import numpy as np
import pytest

import cqmap as cq
from cqmap.errors import ResourceLimitError, ValidationError
from cqmap.model import coefficients_csv, dense_coefficients, hamiltonian_from_table

from conftest import naive_energy_table, naive_walsh_forward, random_model


# ---------------------------------------------------------------- build_model

def test_single_bond_term():
    h0 = cq.build_model({"n": 2, "terms": [{"sites": [0, 1], "J": 1}]})
    assert h0.coeffs == {0b11: -1.0}


def test_single_field_term():
    h0 = cq.build_model({"n": 1, "terms": [{"sites": [0], "h": 0.7}]})
    assert h0.coeffs == {0b1: -0.7}


def test_chain4_periodic_matches_four_bonds():
    h0 = cq.chain(4)
    assert sorted(h0.coeffs.items()) == [(3, -1.0), (6, -1.0), (9, -1.0), (12, -1.0)]


def test_duplicate_subset_rejected():
    spec = {"n": 2, "terms": [{"sites": [0, 1], "J": 1}, {"sites": [1, 0], "c": 2.0}]}
    with pytest.raises(ValidationError, match="duplicate"):
        cq.build_model(spec)


def test_site_out_of_range_rejected():
    with pytest.raises(ValidationError, match="site index"):
        cq.build_model({"n": 2, "terms": [{"sites": [0, 2], "J": 1}]})


def test_term_needs_exactly_one_value_key():
    with pytest.raises(ValidationError):
        cq.build_model({"n": 2, "terms": [{"sites": [0], "J": 1, "h": 1}]})


def test_lattice_description_merges_with_terms():
    spec = {
        "n": 4,
        "terms": [{"sites": [0], "h": 0.5}],
        "lattice": {"kind": "chain", "size": [4], "periodic": True, "J": 1.0},
    }
    h0 = cq.build_model(spec)
    assert h0.coeffs[0b1] == -0.5
    assert h0.coeffs[0b0011] == -1.0
    assert len(h0.coeffs) == 5


def test_grid_2x2_periodic_doubles_bonds():
    h0 = cq.grid(2, 2)
    # 2x2 periodic: every nearest-neighbour pair is doubly bonded
    assert all(c == -2.0 for c in h0.coeffs.values())
    assert len(h0.coeffs) == 4


def test_spin_configuration_guards():
    cfg = cq.SpinConfiguration(0, 3)
    assert cfg.spins().tolist() == [1, 1, 1]
    assert cq.SpinConfiguration(5, 3).spins().tolist() == [-1, 1, -1]
    with pytest.raises(ValidationError):
        cq.SpinConfiguration(8, 3)
    with pytest.raises(ResourceLimitError):
        cq.SpinConfiguration(0, 31)


# --------------------------------------------------------------- energy_table

def test_energy_table_single_bond_sign_enumeration():
    h0 = cq.build_model({"n": 2, "terms": [{"sites": [0, 1], "J": 1}]})
    table = cq.energy_table(h0)
    assert table.values.tolist() == [-1.0, 1.0, 1.0, -1.0]


def test_chain3_all_up_energy():
    table = cq.energy_table(cq.chain(3))
    assert table.values[0] == -3.0


def test_energy_table_matches_naive_evaluator_exactly(rng):
    for _ in range(5):
        h0 = random_model(rng, 3)
        values = cq.energy_table(h0).values
        assert np.array_equal(values, naive_energy_table(h0))


def test_energy_table_naive_agreement_up_to_n10(rng):
    h0 = random_model(rng, 10, pair_density=0.2)
    assert np.array_equal(cq.energy_table(h0).values, naive_energy_table(h0))


# ------------------------------------------------------------ walsh_transform

def test_walsh_forward_single_bond():
    c = cq.walsh_transform([-1.0, 1.0, 1.0, -1.0], "forward")
    expected = np.zeros(4)
    expected[0b11] = -1.0
    assert np.abs(c - expected).max() == 0.0


def test_walsh_forward_constant_table():
    c = cq.walsh_transform(np.full(8, 5.0), "forward")
    assert c[0] == 5.0
    assert np.abs(c[1:]).max() == 0.0


def test_walsh_matches_naive_quadratic_oracle(rng):
    f = rng.normal(size=16)
    c = cq.walsh_transform(f, "forward")
    assert np.abs(c - naive_walsh_forward(f)).max() < 1e-12


def test_walsh_roundtrip_identity(rng):
    for n in (1, 3, 6, 9, 12):
        f = rng.normal(size=1 << n) * 10
        back = cq.walsh_transform(cq.walsh_transform(f, "forward"), "inverse")
        assert np.abs(back - f).max() < 1e-12


def test_walsh_parseval(rng):
    for n in (2, 5, 8):
        f = rng.normal(size=1 << n)
        c = cq.walsh_transform(f, "forward")
        lhs = np.mean(f**2)
        rhs = np.sum(c**2)
        assert abs(lhs - rhs) < 1e-10 * abs(lhs)


def test_walsh_rejects_non_power_of_two():
    with pytest.raises(ValidationError, match="power of two"):
        cq.walsh_transform(np.zeros(6), "forward")
    with pytest.raises(ValidationError):
        cq.walsh_transform(np.zeros(4), "sideways")


def test_hamiltonian_from_table_roundtrip(rng):
    h0 = random_model(rng, 4)
    table = cq.energy_table(h0)
    back = hamiltonian_from_table(table, drop_below=1e-12)
    assert np.abs(
        dense_coefficients(back) - dense_coefficients(h0)
    ).max() < 1e-12


# --------------------------------------------------------- gibbs_distribution

def test_gibbs_infinite_temperature_is_uniform():
    p = cq.gibbs_distribution(cq.chain(2, periodic=False), 0.0)
    assert np.abs(p.p - 0.25).max() == 0.0


def test_gibbs_two_state_closed_form():
    h = 0.8
    h0 = cq.build_model({"n": 1, "terms": [{"sites": [0], "h": h}]})
    for beta in (0.3, 1.0, 2.5):
        p = cq.gibbs_distribution(h0, beta)
        expected_up = np.exp(beta * h) / (2 * np.cosh(beta * h))
        assert abs(p.p[0] - expected_up) < 1e-14


def test_gibbs_matches_direct_summation():
    h0 = cq.chain(4)
    p = cq.gibbs_distribution(h0, 1.0)
    energies = naive_energy_table(h0)
    w = np.exp(-energies)
    assert np.abs(p.p - w / w.sum()).max() < 1e-14


def test_gibbs_normalized_and_shift_invariant(rng):
    h0 = random_model(rng, 5)
    p1 = cq.gibbs_distribution(h0, 0.7)
    shifted = cq.ClassicalHamiltonian(5, {**h0.coeffs, 0: h0.coeffs.get(0, 0.0) + 13.0})
    p2 = cq.gibbs_distribution(shifted, 0.7)
    assert abs(p1.p.sum() - 1.0) < 1e-12
    assert np.abs(p1.p - p2.p).max() < 1e-12


def test_gibbs_rejects_negative_beta():
    with pytest.raises(ValidationError):
        cq.gibbs_distribution(cq.chain(2, periodic=False), -1.0)


def test_probability_vector_validation():
    with pytest.raises(ValidationError):
        cq.ProbabilityVector(1, np.array([0.7, 0.2]))
    with pytest.raises(ValidationError):
        cq.ProbabilityVector(1, np.array([1.1, -0.1]))


# --------------------------------------------------------- interaction_profile

def test_profile_of_chain():
    profile = cq.interaction_profile(cq.chain(4).coeffs)
    assert profile.orders == {2: {"count": 4, "max_abs": 1.0}}


def test_profile_empty_for_zero_coeffs():
    assert cq.interaction_profile({}).orders == {}
    assert cq.interaction_profile({3: 0.0, 5: 0.0}).orders == {}


def test_profile_pair_range_with_geometry():
    coeffs = {0b011: -1.0, 0b101: -0.5}
    geometry = [[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]]
    profile = cq.interaction_profile(coeffs, geometry=geometry)
    assert profile.max_pair_range == 5.0


def test_profile_noise_floor_is_scale_free():
    coeffs = {0b11: 1e6, 0b101: 1e6 * 1e-12}
    profile = cq.interaction_profile(coeffs)
    assert profile.orders[2]["count"] == 1


# ------------------------------------------------------------------- file I/O

def test_load_model_json(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"n": 2, "terms": [{"sites": [0, 1], "J": 1.5}]}))
    h0 = cq.load_model(path)
    assert h0.coeffs == {0b11: -1.5}


def test_load_model_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{nope")
    with pytest.raises(ValidationError, match="invalid model JSON"):
        cq.load_model(path)


def test_coefficients_csv_layout():
    text = coefficients_csv(cq.chain(3))
    lines = text.strip().splitlines()
    assert lines[0] == "mask,order,coefficient"
    assert lines[1] == "3,2,-1"
    assert len(lines) == 4
