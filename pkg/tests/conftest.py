"""Shared builders for synthetic ground truth."""

import warnings

import numpy as np
import pytest

from qbheat import FeatureField, FieldGenSpec, Matrix, generate_exact_field


def polynomial_commuting_pair(seed, channels, rho_a, rho_b):
    """Commuting pair built as quadratic polynomials of one random matrix,
    rescaled to the requested spectral radii."""
    rng = np.random.default_rng(seed)
    while True:
        m = rng.normal(size=(channels, channels))
        m /= max(abs(np.linalg.eigvals(m)))
        m2 = m @ m
        a = rng.normal() * np.eye(channels) + rng.normal() * m + rng.normal() * m2
        b = rng.normal() * np.eye(channels) + rng.normal() * m + rng.normal() * m2
        ra = max(abs(np.linalg.eigvals(a)))
        rb = max(abs(np.linalg.eigvals(b)))
        if ra > 1e-6 and rb > 1e-6:
            return Matrix(a * (rho_a / ra)), Matrix(b * (rho_b / rb))


def skew_commuting_pair(seed, channels, rho_a, rho_b):
    """Commuting pair with purely imaginary spectra (odd polynomials of one
    skew-symmetric matrix).  Solution fields keep a uniform norm, which
    makes grid-refinement ratios clean."""
    rng = np.random.default_rng(seed)
    while True:
        s = rng.normal(size=(channels, channels))
        s = s - s.T
        s /= max(abs(np.linalg.eigvals(s)))
        s3 = s @ s @ s
        a = rng.normal() * s + rng.normal() * s3
        b = rng.normal() * s + rng.normal() * s3
        ra = max(abs(np.linalg.eigvals(a)))
        rb = max(abs(np.linalg.eigvals(b)))
        if ra > 1e-6 and rb > 1e-6:
            return Matrix(a * (rho_a / ra)), Matrix(b * (rho_b / rb))


def nilpotent_commuting_pair(seed, channels, scale=1.0):
    """Rank-one pair with A^2 = B^2 = AB = BA = 0.

    Every first-order step (I + tA) is then exact at all offsets, so masked
    prediction and the reverse/diagonal approximations hold exactly.
    """
    rng = np.random.default_rng(seed)
    u1 = rng.normal(size=channels)
    u2 = rng.normal(size=channels)
    e1 = u1 / np.linalg.norm(u1)
    e2 = u2 - (u2 @ e1) * e1
    e2 /= np.linalg.norm(e2)

    def orthogonalize(v):
        v = v - (v @ e1) * e1
        return v - (v @ e2) * e2

    w1 = orthogonalize(rng.normal(size=channels))
    w2 = orthogonalize(rng.normal(size=channels))
    a = scale * np.outer(u1, w1) / (np.linalg.norm(u1) * np.linalg.norm(w1))
    b = scale * np.outer(u2, w2) / (np.linalg.norm(u2) * np.linalg.norm(w2))
    return Matrix(a), Matrix(b)


def discrete_scale_truth(a0: Matrix, spacing: float, k_cells: int) -> np.ndarray:
    """Exact single-jump operator over k cells of discrete marching,
    expressed in the first-order form: ((I + d A)^k - I) / (k d)."""
    n = a0.rows
    g = np.eye(n) + spacing * a0.array
    gk = np.linalg.matrix_power(g, k_cells)
    return (gk - np.eye(n)) / (k_cells * spacing)


def make_field(a, b, z0, height, width, spacing, mode) -> FeatureField:
    spec = FieldGenSpec(a=a, b=b, z0=np.asarray(z0, dtype=float), mode=mode)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return generate_exact_field(spec, height, width, spacing)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
