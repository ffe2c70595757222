"""Shared helpers: random instances and independent brute-force oracles."""

import numpy as np
import pytest

from cqmap import ClassicalHamiltonian


def random_model(rng, n, pair_density=0.8, field_density=0.5, field_scale=0.5):
    """Random pair-plus-field instance with at least one coupling."""
    coeffs = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < pair_density:
                coeffs[(1 << i) | (1 << j)] = float(rng.normal())
        if field_density and rng.random() < field_density:
            coeffs[1 << i] = float(rng.normal() * field_scale)
    if not coeffs:
        coeffs[0b11 & ((1 << n) - 1) if n >= 2 else 1] = float(rng.normal())
    return ClassicalHamiltonian(n, coeffs)


def naive_energy(h0, index):
    """Per-configuration energy by direct term summation (pure python)."""
    total = 0.0
    for mask in sorted(h0.coeffs):
        sign = 1
        for j in range(h0.n):
            if (mask >> j) & 1 and (index >> j) & 1:
                sign = -sign
        total += h0.coeffs[mask] * sign
    return total


def naive_energy_table(h0):
    return np.array([naive_energy(h0, i) for i in range(1 << h0.n)])


def naive_walsh_forward(values):
    """Quadratic-time character sums, independent of the butterfly."""
    m = len(values)
    out = np.empty(m)
    for mask in range(m):
        acc = 0.0
        for i in range(m):
            acc += values[i] * (-1.0) ** bin(i & mask).count("1")
        out[mask] = acc / m
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
