"""Numeric tolerances, collected in one overridable record."""

from dataclasses import dataclass


@dataclass(frozen=True)
class NumericSettings:
    """Fixed constants used by the numerical routines.

    Every operation takes an optional settings record; ``DEFAULTS`` is used
    when none is given.
    """

    # matrix exponential: scale so the scaled Frobenius norm is <= this,
    # then sum the series until the term norm drops below the tolerance
    exp_scale_norm: float = 0.5
    exp_term_tol: float = 1e-16

    # eigen solver: iterations allowed per eigenvalue before giving up
    qr_sweeps_per_eigenvalue: int = 100
    eigenvector_residual_tol: float = 1e-8

    # linear solves: a pivot below pivot_rel_tol * max|entry| is singular
    pivot_rel_tol: float = 1e-14

    # field generation guards
    overflow_limit: float = 1e12
    spectral_radius_warn: float = 0.5

    # required commutation quality for generator matrix pairs
    commute_rel_tol: float = 1e-8


DEFAULTS = NumericSettings()


def resolve(settings):
    """Return ``settings`` or the package defaults."""
    return DEFAULTS if settings is None else settings
