"""Cross-block linear prediction.

Explicit coefficient matrices cover the right/down directions; the other
six directions are either explicit (variants 4 and 8) or derived: the
reverse directions by the first-order inverse approximation (-A, -B), the
diagonals through a symmetrized combination matrix applied as a single
projector of length sqrt(dx^2 + dy^2).
"""

import math
from dataclasses import dataclass, field as dc_field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from . import backend
from .errors import ShapeError, ValidationError
from .field import FeatureField
from .linalg import Matrix, solve
from .masking import (DIRECTION_SIGNS, DIRECTION_TAGS, Direction,
                      QuarterLayout, pair_indices)
from .settings import resolve

_DIAGONAL_TAGS = ("down-right", "down-left", "up-right", "up-left")
_EXTRA_BY_VARIANT = {2: (), 4: ("left", "up"), 8: ("left", "up") + _DIAGONAL_TAGS}


@dataclass(frozen=True)
class LinearModelSet:
    """Directional linear models sharing one prediction scale.

    ``a`` and ``b`` are the explicit right/down matrices; ``dx``/``dy`` are
    the calibrated offsets in length units.  ``extra`` holds the additional
    explicit matrices of the 4- and 8-model variants.
    """

    a: Matrix
    b: Matrix
    dx: float
    dy: float
    variant: int = 2
    extra: Mapping[str, Matrix] = dc_field(default_factory=dict)
    scale_tag: str = ""

    def __post_init__(self):
        self.a.require_square("model matrices")
        self.b.require_square("model matrices")
        if self.a.rows != self.b.rows:
            raise ShapeError("model matrices must share a dimension")
        if self.variant not in (2, 4, 8):
            raise ValidationError(f"variant must be 2, 4 or 8, "
                                  f"got {self.variant}")
        if not (math.isfinite(self.dx) and math.isfinite(self.dy)
                and self.dx > 0.0 and self.dy > 0.0):
            raise ValidationError("offsets dx, dy must be positive and finite")
        expected = set(_EXTRA_BY_VARIANT[self.variant])
        got = set(self.extra)
        if got != expected:
            raise ValidationError(
                f"variant {self.variant} requires explicit extra models "
                f"{sorted(expected)}, got {sorted(got)}")
        for tag, m in self.extra.items():
            m.require_square("model matrices")
            if m.rows != self.a.rows:
                raise ShapeError(f"extra model {tag!r} has mismatched shape")
        object.__setattr__(self, "extra", dict(self.extra))

    @property
    def channels(self) -> int:
        return self.a.rows

    def explicit_tags(self) -> Tuple[str, ...]:
        return ("right", "down") + _EXTRA_BY_VARIANT[self.variant]

    def to_json_dict(self) -> Dict:
        return {
            "variant": self.variant,
            "scale_tag": self.scale_tag,
            "dx": self.dx,
            "dy": self.dy,
            "A": self.a.to_lists(),
            "B": self.b.to_lists(),
            "extra": {tag: m.to_lists() for tag, m in sorted(self.extra.items())},
        }

    @classmethod
    def from_json_dict(cls, d: Dict) -> "LinearModelSet":
        return cls(a=Matrix(d["A"]), b=Matrix(d["B"]), dx=float(d["dx"]),
                   dy=float(d["dy"]), variant=int(d["variant"]),
                   extra={tag: Matrix(rows)
                          for tag, rows in d.get("extra", {}).items()},
                   scale_tag=str(d.get("scale_tag", "")))


@dataclass(frozen=True)
class PredictionReport:
    """Per-direction and total masked mean-squared errors."""

    per_direction: Tuple[Tuple[str, float, int], ...]
    total_mse: float

    def mse(self, tag: str) -> float:
        for t, v, _ in self.per_direction:
            if t == tag:
                return v
        raise KeyError(tag)

    def to_json_dict(self) -> Dict:
        return {
            "directions": [{"direction": t, "mse": v}
                           for t, v, _ in self.per_direction],
            "total_mse": self.total_mse,
        }


def _offset_magnitude(tag: str, dx: float, dy: float) -> float:
    sx, sy = DIRECTION_SIGNS[tag]
    if sy == 0:
        return dx
    if sx == 0:
        return dy
    return math.sqrt(dx * dx + dy * dy)


def _axis_model(models: LinearModelSet, axis: str, sign: int,
                exact_inverse: bool, dx: float, dy: float,
                settings) -> Matrix:
    base = models.a if axis == "x" else models.b
    if sign > 0:
        return base
    tag = "left" if axis == "x" else "up"
    if tag in models.extra:
        return models.extra[tag]
    if exact_inverse:
        step = dx if axis == "x" else dy
        eye = Matrix.identity(models.channels)
        fwd = Matrix._wrap(eye.array + step * base.array)
        inv = solve(fwd, eye, settings)
        return Matrix._wrap((inv.array - eye.array) / step)
    return -base


def _diagonal_matrix(models: LinearModelSet, tag: str, dx: float, dy: float,
                     exact_inverse: bool, settings) -> Matrix:
    sx, sy = DIRECTION_SIGNS[tag]
    mx = _axis_model(models, "x", sx, exact_inverse, dx, dy, settings)
    my = _axis_model(models, "y", sy, exact_inverse, dx, dy, settings)
    hyp = math.sqrt(dx * dx + dy * dy)
    sym = mx.array @ my.array + my.array @ mx.array
    num = dx * mx.array + dy * my.array + (dx * dy * 0.5) * sym
    return Matrix._wrap(num / hyp)


def derive_implicit(models: LinearModelSet, direction, *,
                    exact_inverse: bool = False, settings=None) -> Matrix:
    """Model matrix for a direction the variant does not hold explicitly.

    Reverse directions use the first-order inverse approximation (exact
    inverse behind ``exact_inverse``); diagonals use the symmetrized
    combination of the axis models.
    """
    cfg = resolve(settings)
    tag = direction.tag if isinstance(direction, Direction) else str(direction)
    if tag not in DIRECTION_TAGS:
        raise ValidationError(f"unknown direction {tag!r}")
    if tag in models.explicit_tags():
        raise ValidationError(f"direction {tag!r} is explicit in a "
                              f"variant-{models.variant} model set")
    return _model_matrix(models, tag, models.dx, models.dy, exact_inverse, cfg)


def _model_matrix(models: LinearModelSet, tag: str, dx: float, dy: float,
                  exact_inverse: bool, settings) -> Matrix:
    if tag == "right":
        return models.a
    if tag == "down":
        return models.b
    if tag in ("left", "up"):
        axis = "x" if tag == "left" else "y"
        return _axis_model(models, axis, -1, exact_inverse, dx, dy, settings)
    if tag in models.extra:
        return models.extra[tag]
    return _diagonal_matrix(models, tag, dx, dy, exact_inverse, settings)


def projector(models: LinearModelSet, direction, *, dx: Optional[float] = None,
              dy: Optional[float] = None, exact_inverse: bool = False,
              settings=None) -> Matrix:
    """Full projection matrix I + offset * M for one direction.

    ``dx``/``dy`` default to the model set's calibrated offsets; pass the
    layout's physical offsets to predict at a different scale.
    """
    cfg = resolve(settings)
    tag = direction.tag if isinstance(direction, Direction) else str(direction)
    if tag not in DIRECTION_TAGS:
        raise ValidationError(f"unknown direction {tag!r}")
    dx = models.dx if dx is None else float(dx)
    dy = models.dy if dy is None else float(dy)
    m = _model_matrix(models, tag, dx, dy, exact_inverse, cfg)
    mag = _offset_magnitude(tag, dx, dy)
    return Matrix._wrap(np.eye(models.channels) + mag * m.array)


def diagonal_projector(models: LinearModelSet, direction, *,
                       form: str = "averaged", dx: Optional[float] = None,
                       dy: Optional[float] = None, exact_inverse: bool = False,
                       settings=None) -> Matrix:
    """Diagonal projector in one of three forms.

    ``averaged`` is the symmetrized default; ``product-xy`` composes the
    horizontal step after the vertical one, ``product-yx`` the reverse.
    The one-sided products exist for comparison studies; prediction always
    uses the averaged form.
    """
    cfg = resolve(settings)
    tag = direction.tag if isinstance(direction, Direction) else str(direction)
    if tag not in _DIAGONAL_TAGS:
        raise ValidationError(f"{tag!r} is not a diagonal direction")
    dx = models.dx if dx is None else float(dx)
    dy = models.dy if dy is None else float(dy)
    if form == "averaged":
        if tag in models.extra:
            m = models.extra[tag]
        else:
            m = _diagonal_matrix(models, tag, dx, dy, exact_inverse, cfg)
        hyp = math.sqrt(dx * dx + dy * dy)
        return Matrix._wrap(np.eye(models.channels) + hyp * m.array)
    if form not in ("product-xy", "product-yx"):
        raise ValidationError(f"unknown diagonal form {form!r}")
    sx, sy = DIRECTION_SIGNS[tag]
    eye = np.eye(models.channels)
    mx = _axis_model(models, "x", sx, exact_inverse, dx, dy, cfg)
    my = _axis_model(models, "y", sy, exact_inverse, dx, dy, cfg)
    px = eye + dx * mx.array
    py = eye + dy * my.array
    if form == "product-xy":
        return Matrix._wrap(px @ py)
    return Matrix._wrap(py @ px)


def expand_variant(models: LinearModelSet, variant: int,
                   settings=None) -> LinearModelSet:
    """Re-tag a model set at a higher variant, deriving the extra explicit
    matrices it lacks.  Predictions are unchanged by construction."""
    cfg = resolve(settings)
    if variant not in (2, 4, 8):
        raise ValidationError(f"variant must be 2, 4 or 8, got {variant}")
    if variant < models.variant:
        raise ValidationError(f"cannot shrink a variant-{models.variant} "
                              f"model set to variant {variant}")
    if variant == models.variant:
        return models
    extra = dict(models.extra)
    for tag in _EXTRA_BY_VARIANT[variant]:
        if tag not in extra:
            extra[tag] = _model_matrix(models, tag, models.dx, models.dy,
                                       False, cfg)
    return LinearModelSet(a=models.a, b=models.b, dx=models.dx, dy=models.dy,
                          variant=variant, extra=extra,
                          scale_tag=models.scale_tag)


def project(models: LinearModelSet, source, direction, *,
            exact_inverse: bool = False, settings=None) -> np.ndarray:
    """Apply the direction's projector to a block of cell vectors.

    ``source`` is any array with the channel axis last; the projector acts
    per cell.
    """
    src = np.asarray(source, dtype=np.float64)
    if src.shape[-1] != models.channels:
        raise ShapeError(f"source has {src.shape[-1]} channels, models "
                         f"have {models.channels}")
    p = projector(models, direction, exact_inverse=exact_inverse,
                  settings=settings)
    return src @ p.array.T


def predict_masked(field: FeatureField, layout: QuarterLayout,
                   models: LinearModelSet, *, exact_inverse: bool = False,
                   settings=None):
    """Fill the masked quarters by directional projection.

    Projector offsets come from the layout (cells times grid spacing).
    Returns the completed field plus the per-direction MSE report against
    the field's actual masked values.
    """
    cfg = resolve(settings)
    if models.channels != field.channels:
        raise ShapeError(f"models have {models.channels} channels, field "
                         f"has {field.channels}")
    if (layout.height, layout.width) != (field.height, field.width):
        raise ShapeError(f"layout is {layout.height}x{layout.width}, field "
                         f"is {field.height}x{field.width}")
    dx = layout.dx_cells * field.spacing
    dy = layout.dy_cells * field.spacing
    values = field.flat_cells()
    out = values.copy()
    width = field.width
    entries = []
    total_sq = 0.0
    total_cells = 0
    for tag in layout.direction_tags():
        pairs = pair_indices(layout, layout.direction(tag))
        if not pairs:
            continue
        src = np.array([r * width + c for (r, c), _ in pairs], dtype=np.int64)
        tgt = np.array([r * width + c for _, (r, c) in pairs], dtype=np.int64)
        p = projector(models, tag, dx=dx, dy=dy,
                      exact_inverse=exact_inverse, settings=cfg)
        preds, sqerr = backend.kernels().project_pairs(values, src, tgt,
                                                       p.array)
        out[tgt] = preds
        n = len(pairs)
        entries.append((tag, sqerr / (n * field.channels), n))
        total_sq += sqerr
        total_cells += n
    report = PredictionReport(
        per_direction=tuple(entries),
        total_mse=total_sq / (total_cells * field.channels))
    predicted = FeatureField(out.reshape(field.values.shape), field.spacing)
    return predicted, report
