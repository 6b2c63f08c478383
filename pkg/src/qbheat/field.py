"""Feature fields on grids: analytic generation from the exponential
solution, scalar heat simulation, finite differences, steady-state
residuals, and the QBHF binary format."""

import math
import struct
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Optional, Tuple

import numpy as np

from . import backend
from .errors import (BadMagicError, ConvergenceError, DegenerateSpectrumError,
                     DimensionOverflowError, FormatError, NonFiniteError,
                     OverflowLimitError, ShapeError, StabilityError,
                     TruncatedPayloadError, UnsupportedVersionError,
                     ValidationError)
from .linalg import Matrix, eigen_spectrum, mat_exp, solve
from .settings import resolve

QBHF_MAGIC = b"QBHF"
QBHF_VERSION = 1
_HEADER = struct.Struct("<4sIIIIf")
_MAX_CELLS = 1 << 31


class FeatureField:
    """Multi-channel feature map z(x, y) sampled on an H x W grid.

    Values are float64, indexed (y, x, channel); ``spacing`` is the grid
    step along both axes.  Instances are immutable.
    """

    __slots__ = ("_values", "_spacing")

    def __init__(self, values, spacing: float):
        v = np.array(values, dtype=np.float64, order="C")
        if v.ndim != 3:
            raise ShapeError(f"field values must be (H, W, C), got {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1 or v.shape[2] < 1:
            raise ShapeError(f"field dimensions must be positive, got {v.shape}")
        if not np.isfinite(v).all():
            raise NonFiniteError("field values must be finite")
        spacing = float(spacing)
        if not (math.isfinite(spacing) and spacing > 0.0):
            raise ValidationError(f"spacing must be positive, got {spacing}")
        v.flags.writeable = False
        self._values = v
        self._spacing = spacing

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spacing(self) -> float:
        return self._spacing

    @property
    def height(self) -> int:
        return self._values.shape[0]

    @property
    def width(self) -> int:
        return self._values.shape[1]

    @property
    def channels(self) -> int:
        return self._values.shape[2]

    def flat_cells(self) -> np.ndarray:
        """(H*W, C) row-major view of the cell vectors."""
        return self._values.reshape(-1, self._values.shape[2])

    def __eq__(self, other):
        return (isinstance(other, FeatureField)
                and self._spacing == other._spacing
                and np.array_equal(self._values, other._values))

    def __repr__(self):
        return (f"FeatureField({self.height}x{self.width}x{self.channels}, "
                f"spacing={self._spacing})")


class ScalarHeatField:
    """Scalar temperature grid with reflective boundary."""

    __slots__ = ("_values", "_spacing")

    def __init__(self, values, spacing: float):
        v = np.array(values, dtype=np.float64, order="C")
        if v.ndim != 2:
            raise ShapeError(f"heat field must be 2-D, got {v.shape}")
        if v.shape[0] < 3 or v.shape[1] < 3:
            raise ShapeError(f"heat field must be at least 3x3, got {v.shape}")
        if not np.isfinite(v).all():
            raise NonFiniteError("heat field values must be finite")
        spacing = float(spacing)
        if not (math.isfinite(spacing) and spacing > 0.0):
            raise ValidationError(f"spacing must be positive, got {spacing}")
        v.flags.writeable = False
        self._values = v
        self._spacing = spacing

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spacing(self) -> float:
        return self._spacing

    def total(self) -> float:
        return float(self._values.sum())


@dataclass(frozen=True, eq=False)
class FieldGenSpec:
    """Generator description: commuting coefficient pair plus start vector.

    ``mode`` selects the construction: ``continuous`` marches with the
    matrix exponentials of one grid step, ``discrete`` with the first-order
    steps (I + spacing*A, I + spacing*B).  ``coefficients`` optionally fixes
    the expansion weights of the eigenvector path.
    """

    a: Matrix
    b: Matrix
    z0: np.ndarray
    mode: str = "continuous"
    coefficients: Optional[Tuple[complex, ...]] = None
    settings: object = dc_field(default=None, repr=False)

    def __post_init__(self):
        cfg = resolve(self.settings)
        a, b = self.a, self.b
        a.require_square("field generation")
        b.require_square("field generation")
        if a.rows != b.rows:
            raise ShapeError(f"coefficient matrices disagree: "
                             f"{a.rows}x{a.cols} vs {b.rows}x{b.cols}")
        if self.mode not in ("continuous", "discrete"):
            raise ValidationError(f"unknown generation mode {self.mode!r}")
        z0 = np.array(self.z0, dtype=np.float64).reshape(-1)
        if z0.shape[0] != a.rows:
            raise ShapeError(f"start vector has {z0.shape[0]} entries, "
                             f"expected {a.rows}")
        if not np.isfinite(z0).all():
            raise NonFiniteError("start vector must be finite")
        z0.flags.writeable = False
        object.__setattr__(self, "z0", z0)
        comm = (a @ b - b @ a).frobenius()
        bound = cfg.commute_rel_tol * a.frobenius() * b.frobenius()
        if comm > bound:
            raise ValidationError(
                f"coefficient matrices do not commute: ||AB-BA||={comm:.3e} "
                f"exceeds {bound:.3e}")
        if self.coefficients is not None:
            coeffs = tuple(complex(c) for c in self.coefficients)
            if len(coeffs) != a.rows:
                raise ShapeError("coefficient count must match the dimension")
            object.__setattr__(self, "coefficients", coeffs)

    @property
    def channels(self) -> int:
        return self.a.rows


def _warn_if_stiff(spec: FieldGenSpec, spacing: float, cfg):
    for tag, m in (("A", spec.a), ("B", spec.b)):
        try:
            rho = max(eigen_spectrum(m, settings=cfg).magnitudes())
        except ConvergenceError:
            continue
        if spacing * rho > cfg.spectral_radius_warn:
            warnings.warn(
                f"spacing * spectral radius of {tag} is "
                f"{spacing * rho:.3f} > {cfg.spectral_radius_warn}; "
                "the exponential solution may grow explosively",
                RuntimeWarning, stacklevel=3)


def generate_exact_field(spec: FieldGenSpec, height: int, width: int,
                         spacing: float, settings=None) -> FeatureField:
    """Synthesize the closed-form solution field on an H x W grid."""
    cfg = resolve(settings)
    if height < 2 or width < 2:
        raise ValidationError(f"grid must be at least 2x2, got "
                              f"{height}x{width}")
    spacing = float(spacing)
    if not (math.isfinite(spacing) and spacing > 0.0):
        raise ValidationError(f"spacing must be positive, got {spacing}")
    _warn_if_stiff(spec, spacing, cfg)
    if spec.mode == "continuous":
        gx = mat_exp(spec.a, spacing, cfg)
        gy = mat_exp(spec.b, spacing, cfg)
    else:
        eye = np.eye(spec.channels)
        gx = Matrix._wrap(eye + spacing * spec.a.array)
        gy = Matrix._wrap(eye + spacing * spec.b.array)
    vals = backend.kernels().march_field(gx.array, gy.array, spec.z0,
                                         height, width, cfg.overflow_limit)
    return FeatureField(vals, spacing)


def generate_eigen_expansion_field(spec: FieldGenSpec, height: int,
                                   width: int, spacing: float,
                                   settings=None) -> FeatureField:
    """Continuous solution via the shared-eigenvector expansion.

    Requires the first coefficient matrix to have distinct eigenvalues;
    expansion weights come from ``spec.coefficients`` or are solved from
    the start vector.
    """
    cfg = resolve(settings)
    if height < 2 or width < 2:
        raise ValidationError(f"grid must be at least 2x2, got "
                              f"{height}x{width}")
    spacing = float(spacing)
    if not (math.isfinite(spacing) and spacing > 0.0):
        raise ValidationError(f"spacing must be positive, got {spacing}")
    n = spec.channels
    dec = eigen_spectrum(spec.a, want_vectors=True, settings=cfg)
    lam = dec.eigenvalues
    top = max(abs(v) for v in lam)
    sep_tol = 1e-8 * (top if top > 0.0 else 1.0)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) <= sep_tol:
                raise DegenerateSpectrumError(
                    f"eigenvalues {lam[i]} and {lam[j]} are not distinct; "
                    "the expansion path requires distinct eigenvalues")
    vecs = dec.eigenvectors
    barr = spec.b.array
    pis = []
    for v in vecs:
        va = np.array(v, dtype=np.complex128)
        bv = barr @ va
        pis.append(complex(np.vdot(va, bv) / np.vdot(va, va)))
    vmat_re = np.ascontiguousarray(
        np.array([[vk[i].real for vk in vecs] for i in range(n)]))
    vmat_im = np.ascontiguousarray(
        np.array([[vk[i].imag for vk in vecs] for i in range(n)]))
    if spec.coefficients is not None:
        coeffs = spec.coefficients
    else:
        c_re, c_im = backend.kernels().csolve(
            vmat_re, vmat_im, spec.z0, np.zeros(n), cfg.pivot_rel_tol)
        coeffs = tuple(complex(r, i) for r, i in zip(c_re, c_im))
    vals = backend.kernels().eigen_field(
        np.array([v.real for v in lam]), np.array([v.imag for v in lam]),
        np.array([p.real for p in pis]), np.array([p.imag for p in pis]),
        np.array([c.real for c in coeffs]), np.array([c.imag for c in coeffs]),
        np.array([[x.real for x in vk] for vk in vecs]),
        np.array([[x.imag for x in vk] for vk in vecs]),
        height, width, spacing)
    peak = float(np.max(np.abs(vals)))
    if peak > cfg.overflow_limit:
        raise OverflowLimitError(
            f"field value {peak:.3e} exceeded {cfg.overflow_limit:.1e}")
    return FeatureField(vals, spacing)


def heat_step(u: ScalarHeatField, dt: float) -> ScalarHeatField:
    """One explicit Euler step of the scalar heat equation."""
    return heat_run(u, dt, 1)


def heat_run(u: ScalarHeatField, dt: float, steps: int) -> ScalarHeatField:
    """``steps`` explicit Euler steps with reflective boundary."""
    dt = float(dt)
    dx = u.spacing
    limit = dx * dx / 4.0
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValidationError(f"time step must be positive, got {dt}")
    if dt > limit * (1.0 + 1e-12):
        raise StabilityError(
            f"time step {dt:.6e} violates the stability bound "
            f"dx^2/4 = {limit:.6e}")
    if steps < 0:
        raise ValidationError("step count must be non-negative")
    if steps == 0:
        return u
    lam = dt / (dx * dx)
    vals = backend.kernels().heat_run(u.values, lam, steps)
    return ScalarHeatField(vals, dx)


def forward_difference(field: FeatureField, axis: str,
                       offset: int) -> FeatureField:
    """z shifted by ``offset`` cells along ``axis`` minus z, on the
    overlapping sub-grid."""
    if axis not in ("x", "y"):
        raise ValidationError(f"axis must be 'x' or 'y', got {axis!r}")
    extent = field.width if axis == "x" else field.height
    if not (1 <= offset < extent):
        raise ValidationError(
            f"offset must be in [1, {extent - 1}] along {axis}, got {offset}")
    v = field.values
    if axis == "x":
        diff = v[:, offset:, :] - v[:, :-offset, :]
    else:
        diff = v[offset:, :, :] - v[:-offset, :, :]
    return FeatureField(diff, field.spacing)


def compute_S(a: Matrix, b: Matrix, settings=None) -> Matrix:
    """Coupling matrix S with A^2 + S B^2 = 0, i.e. S = -A^2 (B^2)^(-1)."""
    cfg = resolve(settings)
    a.require_square("compute_S")
    b.require_square("compute_S")
    if a.rows != b.rows:
        raise ShapeError("coefficient matrices must share a dimension")
    a2 = a @ a
    b2 = b @ b
    # S B^2 = -A^2  =>  (B^2)^T S^T = -(A^2)^T
    st = solve(b2.transpose(), -a2.transpose(), cfg)
    return st.transpose()


def _central_diff(values: np.ndarray, axis: str, order: int,
                  spacing: float) -> np.ndarray:
    """Central difference of the given order on the 1-cell interior."""
    v = values
    if axis == "x":
        plus, center, minus = v[1:-1, 2:, :], v[1:-1, 1:-1, :], v[1:-1, :-2, :]
    else:
        plus, center, minus = v[2:, 1:-1, :], v[1:-1, 1:-1, :], v[:-2, 1:-1, :]
    if order == 1:
        return (plus - minus) / (2.0 * spacing)
    return (plus - 2.0 * center + minus) / (spacing * spacing)


def _rms(residual: np.ndarray) -> float:
    return float(np.sqrt(np.mean(residual * residual)))


def laplacian_residual(field: FeatureField, s: Matrix) -> float:
    """RMS of D2x z + S D2y z over interior cells and channels."""
    s.require_square("laplacian_residual")
    if s.rows != field.channels:
        raise ShapeError(f"S is {s.rows}x{s.cols} but the field has "
                         f"{field.channels} channels")
    if field.height < 3 or field.width < 3:
        raise ValidationError("residuals need at least a 3x3 grid")
    d2x = _central_diff(field.values, "x", 2, field.spacing)
    d2y = _central_diff(field.values, "y", 2, field.spacing)
    return _rms(d2x + d2y @ s.array.T)


def cross_derivative_residual(field: FeatureField, a: Matrix, b: Matrix,
                              n: int = 1, m: int = 1,
                              settings=None) -> float:
    """RMS of Dx^n z - A^n (B^m)^(-1) Dy^m z over interior cells."""
    cfg = resolve(settings)
    if not (1 <= n <= 2 and 1 <= m <= 2):
        raise ValidationError("derivative orders must be 1 or 2")
    a.require_square("cross_derivative_residual")
    b.require_square("cross_derivative_residual")
    if a.rows != field.channels or b.rows != field.channels:
        raise ShapeError("coefficient matrices must match the channel count")
    if field.height < 3 or field.width < 3:
        raise ValidationError("residuals need at least a 3x3 grid")
    an = a if n == 1 else a @ a
    bm = b if m == 1 else b @ b
    # K = A^n (B^m)^(-1) via (B^m)^T K^T = (A^n)^T
    k = solve(bm.transpose(), an.transpose(), cfg).transpose()
    dxn = _central_diff(field.values, "x", n, field.spacing)
    dym = _central_diff(field.values, "y", m, field.spacing)
    return _rms(dxn - dym @ k.array.T)


def write_field(field: FeatureField) -> bytes:
    """Serialize to the QBHF byte layout (little-endian, f32 payload)."""
    h, w, c = field.height, field.width, field.channels
    if h < 2 or w < 2:
        raise ValidationError("QBHF files require at least a 2x2 grid")
    if max(h, w, c) > 0xFFFFFFFF or h * w * c >= _MAX_CELLS:
        raise DimensionOverflowError(
            f"field dimensions {h}x{w}x{c} exceed the format limits")
    payload = field.values.astype("<f4")
    if not np.isfinite(payload).all():
        raise ValidationError("field values overflow 32-bit float storage")
    header = _HEADER.pack(QBHF_MAGIC, QBHF_VERSION, h, w, c,
                          np.float32(field.spacing))
    return header + payload.tobytes(order="C")


def read_field(data: bytes) -> FeatureField:
    """Parse QBHF bytes back into a field; validates the full layout."""
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(
            f"file holds {len(data)} bytes, header needs {_HEADER.size}")
    magic, version, h, w, c, spacing = _HEADER.unpack_from(data, 0)
    if magic != QBHF_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {QBHF_MAGIC!r}")
    if version != QBHF_VERSION:
        raise UnsupportedVersionError(
            f"unsupported version {version}, expected {QBHF_VERSION}")
    if h < 2 or w < 2 or c < 1:
        raise FormatError(f"invalid field dimensions {h}x{w}x{c}")
    if h * w * c >= _MAX_CELLS:
        raise DimensionOverflowError(
            f"declared dimensions {h}x{w}x{c} exceed the format limits")
    expected = h * w * c * 4
    body = data[_HEADER.size:]
    if len(body) < expected:
        raise TruncatedPayloadError(
            f"payload holds {len(body)} bytes, dimensions require {expected}")
    if len(body) > expected:
        raise FormatError(f"{len(body) - expected} trailing bytes after the "
                          "payload")
    vals = np.frombuffer(body, dtype="<f4").reshape(h, w, c)
    if not np.isfinite(vals).all():
        raise FormatError("payload contains non-finite values")
    if not (math.isfinite(spacing) and spacing > 0.0):
        raise FormatError(f"invalid spacing {spacing}")
    return FeatureField(vals.astype(np.float64), float(spacing))
