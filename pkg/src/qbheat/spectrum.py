"""Spectrum and correlation diagnostics for learned coefficient matrices.

Spectrum energy is the sum of eigenvalue magnitudes; normalized spectra
(magnitudes divided by their sum) let matrices learned at different
prediction scales be compared directly, and the energy ratio between the
horizontal and vertical matrices is the scale-invariance statistic.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from . import backend
from .errors import DegenerateDataError, ShapeError, ValidationError
from .field import FeatureField
from .linalg import Matrix, eigen_spectrum


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalue magnitude distribution of one matrix."""

    eigenvalues: Tuple[complex, ...]
    magnitudes: Tuple[float, ...]
    normalized: Tuple[float, ...]
    energy: float
    matrix_tag: str = ""

    def to_csv_rows(self):
        return [(i, v.real, v.imag, m, s) for i, (v, m, s) in
                enumerate(zip(self.eigenvalues, self.magnitudes,
                              self.normalized))]


@dataclass(frozen=True)
class CorrelationReport:
    """Mean absolute off-diagonal spatial cross-correlation."""

    score: float
    excluded_positions: int
    n_positions: int

    def to_json_dict(self) -> Dict:
        return {"score": self.score,
                "excluded_positions": self.excluded_positions,
                "n_positions": self.n_positions}


def energy(m: Matrix, settings=None) -> float:
    """Sum of eigenvalue magnitudes."""
    dec = eigen_spectrum(m, settings=settings)
    return float(sum(dec.magnitudes()))


def energy_ratio(a: Matrix, b: Matrix, settings=None) -> float:
    """Spectrum-energy ratio E(A)/E(B)."""
    eb = energy(b, settings)
    if eb == 0.0:
        raise DegenerateDataError("the vertical matrix has zero spectrum "
                                  "energy; the ratio is undefined")
    return energy(a, settings) / eb


def normalized_spectrum(m: Matrix, matrix_tag: str = "",
                        settings=None) -> SpectrumReport:
    """Descending eigenvalue magnitudes plus their sum-normalized form."""
    dec = eigen_spectrum(m, settings=settings)
    mags = dec.magnitudes()
    total = float(sum(mags))
    if total > 0.0:
        norm = tuple(v / total for v in mags)
    else:
        norm = tuple(0.0 for _ in mags)
    return SpectrumReport(eigenvalues=dec.eigenvalues, magnitudes=mags,
                          normalized=norm, energy=total,
                          matrix_tag=matrix_tag)


def alignment(m1: Matrix, m2: Matrix, settings=None) -> float:
    """Max deviation between the two sorted normalized spectra."""
    if m1.rows != m2.rows or not m1.is_square or not m2.is_square:
        raise ShapeError("alignment needs square matrices of equal dimension")
    n1 = normalized_spectrum(m1, settings=settings).normalized
    n2 = normalized_spectrum(m2, settings=settings).normalized
    return max(abs(x - y) for x, y in zip(n1, n2))


def spatial_correlation(field: FeatureField) -> CorrelationReport:
    """Mean |Pearson correlation| between the channel vectors of distinct
    grid positions; zero-variance positions are excluded and counted."""
    if field.channels < 2:
        raise ValidationError("spatial correlation needs at least 2 channels")
    cells = field.flat_cells()
    n = cells.shape[0]
    if n < 2:
        raise ValidationError("spatial correlation needs at least 2 positions")
    mu = cells.mean(axis=1, keepdims=True)
    centered = cells - mu
    std = np.sqrt((centered * centered).mean(axis=1))
    keep = std > 0.0
    excluded = int(n - keep.sum())
    kept = int(keep.sum())
    if kept < 2:
        raise DegenerateDataError(
            f"only {kept} positions carry channel variance; correlation "
            "is undefined")
    zhat = centered[keep] / std[keep, None]
    total = backend.kernels().abs_offdiag_corr(np.ascontiguousarray(zhat))
    score = 2.0 * total / (kept * (kept - 1))
    if score > 1.0:
        score = 1.0
    return CorrelationReport(score=score, excluded_positions=excluded,
                             n_positions=n)
