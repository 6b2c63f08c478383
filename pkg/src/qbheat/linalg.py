"""Dense real linear algebra: products, solves, matrix exponential,
nonsymmetric eigen-spectra, and ridge least squares."""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import backend
from .errors import NonFiniteError, ShapeError, ValidationError
from .settings import resolve

MAX_EIGEN_DIM = 4096


class Matrix:
    """Immutable dense real matrix (row-major float64)."""

    __slots__ = ("_a",)

    def __init__(self, values):
        a = np.array(values, dtype=np.float64, order="C")
        if a.ndim != 2:
            raise ShapeError(f"matrix must be 2-D, got {a.ndim}-D")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ShapeError(f"matrix must be at least 1x1, got {a.shape}")
        if not np.isfinite(a).all():
            raise NonFiniteError("matrix entries must be finite")
        a.flags.writeable = False
        self._a = a

    @classmethod
    def _wrap(cls, a):
        m = cls.__new__(cls)
        a = np.ascontiguousarray(a, dtype=np.float64)
        a.flags.writeable = False
        m._a = a
        return m

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls._wrap(np.eye(n))

    @classmethod
    def zeros(cls, rows: int, cols: Optional[int] = None) -> "Matrix":
        return cls._wrap(np.zeros((rows, rows if cols is None else cols)))

    @classmethod
    def diagonal(cls, entries) -> "Matrix":
        return cls._wrap(np.diag(np.asarray(entries, dtype=np.float64)))

    @property
    def array(self) -> np.ndarray:
        """Read-only numpy view of the entries."""
        return self._a

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def is_square(self) -> bool:
        return self._a.shape[0] == self._a.shape[1]

    def require_square(self, what: str = "operation") -> "Matrix":
        if not self.is_square:
            raise ShapeError(f"{what} requires a square matrix, "
                             f"got {self.rows}x{self.cols}")
        return self

    def transpose(self) -> "Matrix":
        return Matrix._wrap(self._a.T.copy())

    def to_lists(self):
        return self._a.tolist()

    def frobenius(self) -> float:
        return float(np.sqrt(np.sum(self._a * self._a)))

    def trace(self) -> float:
        self.require_square("trace")
        return float(np.trace(self._a))

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise ShapeError(f"cannot multiply {self.rows}x{self.cols} "
                                 f"by {other.rows}x{other.cols}")
            return Matrix._wrap(backend.kernels().mat_mul(self._a, other._a))
        other = np.asarray(other, dtype=np.float64)
        if other.ndim == 1:
            if self.cols != other.shape[0]:
                raise ShapeError("matrix/vector size mismatch")
            return backend.kernels().mat_mul(
                self._a, other.reshape(-1, 1)).reshape(-1)
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        if self._a.shape != other._a.shape:
            raise ShapeError("matrix addition shape mismatch")
        return Matrix._wrap(self._a + other._a)

    def __sub__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        if self._a.shape != other._a.shape:
            raise ShapeError("matrix subtraction shape mismatch")
        return Matrix._wrap(self._a - other._a)

    def __mul__(self, scalar):
        return Matrix._wrap(self._a * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return Matrix._wrap(-self._a)

    def __eq__(self, other):
        return isinstance(other, Matrix) and np.array_equal(self._a, other._a)

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols})"


@dataclass(frozen=True)
class EigenDecomposition:
    """Complex spectrum of a real square matrix.

    ``eigenvalues`` are sorted by descending magnitude (ties: descending
    real part, then imaginary part, keeping conjugate pairs adjacent).
    ``eigenvectors``, when requested, are unit-norm columns matched to the
    eigenvalue order.
    """

    eigenvalues: Tuple[complex, ...]
    eigenvectors: Optional[Tuple[Tuple[complex, ...], ...]]
    source_dim: int

    def magnitudes(self) -> Tuple[float, ...]:
        return tuple(abs(v) for v in self.eigenvalues)


def mat_exp(m: Matrix, t: float = 1.0, settings=None) -> Matrix:
    """exp(m*t) by scaling and squaring of the Taylor series."""
    cfg = resolve(settings)
    m.require_square("mat_exp")
    t = float(t)
    if not math.isfinite(t):
        raise NonFiniteError("time scale must be finite")
    return Matrix._wrap(backend.kernels().mat_exp(
        m.array, t, cfg.exp_scale_norm, cfg.exp_term_tol))


def eigen_spectrum(m: Matrix, want_vectors: bool = False,
                   settings=None) -> EigenDecomposition:
    """All complex eigenvalues of m, optionally with eigenvectors."""
    cfg = resolve(settings)
    m.require_square("eigen_spectrum")
    n = m.rows
    if n > MAX_EIGEN_DIM:
        raise ValidationError(f"eigen_spectrum supports dimensions up to "
                              f"{MAX_EIGEN_DIM}, got {n}")
    w_re, w_im, v_re, v_im = backend.kernels().eig(
        m.array, bool(want_vectors), cfg.qr_sweeps_per_eigenvalue,
        cfg.eigenvector_residual_tol)
    values = tuple(complex(r, i) for r, i in zip(w_re.tolist(), w_im.tolist()))
    vectors = None
    if want_vectors:
        vectors = tuple(
            tuple(complex(r, i) for r, i in zip(row_r, row_i))
            for row_r, row_i in zip(v_re.tolist(), v_im.tolist()))
    return EigenDecomposition(values, vectors, n)


def solve(m: Matrix, rhs: Matrix, settings=None) -> Matrix:
    """Solve m X = rhs by LU with partial pivoting.

    One step of iterative refinement drives the residual down to the
    float64 representation floor (about eps * cond(m) relative to rhs),
    which stays below 1e-10 for condition numbers up to roughly 1e6.
    """
    cfg = resolve(settings)
    m.require_square("solve")
    if rhs.rows != m.rows:
        raise ShapeError(f"rhs has {rhs.rows} rows, expected {m.rows}")
    kern = backend.kernels()
    x = kern.lu_solve(m.array, rhs.array, cfg.pivot_rel_tol)
    residual = rhs.array - kern.mat_mul(m.array, x)
    x = x + kern.lu_solve(m.array, np.ascontiguousarray(residual),
                          cfg.pivot_rel_tol)
    return Matrix._wrap(x)


def solve_vector(m: Matrix, rhs, settings=None) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=np.float64).reshape(-1, 1)
    return solve(m, Matrix(rhs), settings).array.reshape(-1)


def inverse(m: Matrix, settings=None) -> Matrix:
    return solve(m, Matrix.identity(m.require_square("inverse").rows), settings)


def least_squares(x: Matrix, y: Matrix, ridge: float = 0.0,
                  settings=None) -> Matrix:
    """Minimize ||y - M x||_F^2 + ridge ||M||_F^2 over M.

    Closed form M = y x^T (x x^T + ridge I)^(-1); x and y are C x N with
    one sample per column.
    """
    cfg = resolve(settings)
    if x.rows != y.rows or x.cols != y.cols:
        raise ShapeError(f"sample blocks must share a shape, got "
                         f"{x.rows}x{x.cols} and {y.rows}x{y.cols}")
    ridge = float(ridge)
    if ridge < 0.0 or not math.isfinite(ridge):
        raise ValidationError("ridge must be a finite non-negative scalar")
    if ridge == 0.0 and x.cols < x.rows:
        raise ValidationError(
            f"{x.cols} samples cannot determine a {x.rows}x{x.rows} map "
            "without ridge regularization")
    xt = x.transpose()
    gram = (x @ xt).array + ridge * np.eye(x.rows)
    cross = (y @ xt).array
    # M G = R with G symmetric: solve G M^T = R^T and transpose back
    mt = backend.kernels().lu_solve(gram, np.ascontiguousarray(cross.T),
                                    cfg.pivot_rel_tol)
    return Matrix._wrap(np.ascontiguousarray(mt.T))
