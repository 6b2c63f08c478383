"""Identify the coefficient matrices from observed fields.

The closed-form route solves the masked-pair relations in ridge least
squares (horizontal pairs determine A, vertical pairs determine B;
diagonals only validate).  The iterative route refines by deterministic
full-batch gradient descent on the total masked MSE over all directions.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import backend
from .errors import (CollapseError, DivergenceError, ShapeError,
                     ValidationError)
from .field import FeatureField
from .linalg import Matrix
from .masking import DIRECTION_SIGNS, QuarterLayout, pair_indices
from .predictor import LinearModelSet, projector
from .settings import resolve


@dataclass(frozen=True)
class FitConfig:
    ridge: float = 1e-8
    max_steps: int = 5000
    step_size: float = 1e-2
    stop_tol: float = 1e-12
    collapse_variance_tol: float = 1e-10
    collapse_norm_tol: float = 1e-8
    standardize: bool = False

    def __post_init__(self):
        if self.ridge < 0.0 or not math.isfinite(self.ridge):
            raise ValidationError("ridge must be finite and non-negative")
        if self.max_steps < 0:
            raise ValidationError("max_steps must be non-negative")
        if self.step_size < 0.0 or not math.isfinite(self.step_size):
            raise ValidationError("step_size must be finite and non-negative")
        for name in ("stop_tol", "collapse_variance_tol", "collapse_norm_tol"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be positive")

    def to_json_dict(self) -> Dict:
        return {"ridge": self.ridge, "max_steps": self.max_steps,
                "step_size": self.step_size, "stop_tol": self.stop_tol,
                "collapse_variance_tol": self.collapse_variance_tol,
                "collapse_norm_tol": self.collapse_norm_tol,
                "standardize": self.standardize}


@dataclass(frozen=True)
class CollapseFlags:
    field_collapsed: bool
    model_collapsed: bool

    def to_json_dict(self) -> Dict:
        return {"field_collapsed": self.field_collapsed,
                "model_collapsed": self.model_collapsed}


@dataclass(frozen=True)
class FitReport:
    """Outcome of one fit: the models plus loss and collapse diagnostics."""

    models: LinearModelSet
    final_loss: float
    per_direction: Tuple[Tuple[str, float, int], ...]
    sample_count: int
    collapse_flags: CollapseFlags
    scale_tag: str
    method: str
    config: FitConfig
    layouts: Tuple[Dict, ...] = ()
    steps_used: int = 0

    def to_json_dict(self) -> Dict:
        return {
            "models": self.models.to_json_dict(),
            "final_loss": self.final_loss,
            "per_direction": {t: v for t, v, _ in self.per_direction},
            "sample_count": self.sample_count,
            "collapse_flags": self.collapse_flags.to_json_dict(),
            "scale_tag": self.scale_tag,
            "method": self.method,
            "layouts": list(self.layouts),
            "steps_used": self.steps_used,
            "config": self.config.to_json_dict(),
        }


def _layout_dicts(layouts) -> Tuple[Dict, ...]:
    seen = []
    for lay in layouts:
        d = lay.to_json_dict()
        if d not in seen:
            seen.append(d)
    return tuple(seen)


def scale_tag_for(position: str) -> str:
    return "quarter-offset" if position == "center" else "half-offset"


def detect_collapse(fields: Sequence[FeatureField],
                    models: Optional[LinearModelSet] = None,
                    config: Optional[FitConfig] = None) -> CollapseFlags:
    """Diagnose the degenerate constant-field / zero-model solution."""
    cfg = config if config is not None else FitConfig()
    if not fields:
        raise ValidationError("collapse detection needs a non-empty batch")
    variances = []
    for f in fields:
        cells = f.flat_cells()
        variances.append(float(np.mean(np.var(cells, axis=0))))
    field_collapsed = float(np.mean(variances)) < cfg.collapse_variance_tol
    model_collapsed = False
    if models is not None:
        model_collapsed = max(models.a.frobenius(),
                              models.b.frobenius()) < cfg.collapse_norm_tol
    return CollapseFlags(field_collapsed, model_collapsed)


def _validate_batch(fields, layouts):
    if not fields:
        raise ValidationError("fit requires a non-empty batch of fields")
    if len(fields) != len(layouts):
        raise ShapeError(f"{len(fields)} fields but {len(layouts)} layouts")
    channels = fields[0].channels
    offsets = None
    tag = None
    for f, lay in zip(fields, layouts):
        if f.channels != channels:
            raise ShapeError("all fields in a batch must share a channel count")
        if (lay.height, lay.width) != (f.height, f.width):
            raise ShapeError(f"layout {lay.height}x{lay.width} does not match "
                             f"field {f.height}x{f.width}")
        item = (lay.dx_cells * f.spacing, lay.dy_cells * f.spacing)
        if offsets is None:
            offsets = item
            tag = scale_tag_for(lay.position)
        elif offsets != item or scale_tag_for(lay.position) != tag:
            raise ValidationError(
                "mixed prediction scales in one fit; partition the batch "
                "by scale (see fit_multi_scale)")
    return channels, offsets, tag


def _standardizer(fields, enabled):
    if not enabled:
        return 1.0
    total = 0.0
    count = 0
    for f in fields:
        cells = f.flat_cells()
        mu = float(cells.mean())
        total += float(((cells - mu) ** 2).sum())
        count += cells.size
    std = math.sqrt(total / count) if count else 0.0
    return 1.0 / std if std > 0.0 else 1.0


def _flat_pairs(field: FeatureField, layout: QuarterLayout, tag: str):
    pairs = pair_indices(layout, layout.direction(tag))
    width = field.width
    src = np.array([r * width + c for (r, c), _ in pairs], dtype=np.int64)
    tgt = np.array([r * width + c for _, (r, c) in pairs], dtype=np.int64)
    return src, tgt


def _direction_losses(batch_values, batch_layouts, models, dx, dy, settings):
    """Masked MSE per direction tag over the whole batch."""
    sums: Dict[str, List[float]] = {}
    for values, (field, layout) in zip(batch_values, batch_layouts):
        for tag in layout.direction_tags():
            src, tgt = _flat_pairs(field, layout, tag)
            if src.size == 0:
                continue
            p = projector(models, tag, dx=dx, dy=dy, settings=settings)
            _, sqerr = backend.kernels().project_pairs(values, src, tgt,
                                                       p.array)
            entry = sums.setdefault(tag, [0.0, 0])
            entry[0] += sqerr
            entry[1] += int(src.size)
    channels = models.channels
    per_dir = tuple((tag, s / (n * channels), n)
                    for tag, (s, n) in sums.items())
    total_sq = sum(s for s, _ in sums.values())
    total_n = sum(n for _, n in sums.values())
    total = total_sq / (total_n * channels) if total_n else 0.0
    return per_dir, total, total_n


def fit_closed_form(fields: Sequence[FeatureField],
                    layouts: Sequence[QuarterLayout],
                    config: Optional[FitConfig] = None,
                    settings=None) -> FitReport:
    """Ridge least-squares identification from masked pairs.

    Horizontal pairs (right, and left when the layout has them) determine
    A through M = I + dx A; vertical pairs determine B.  Diagonal pairs are
    left out of the estimation and only scored.
    """
    cfg = resolve(settings)
    conf = config if config is not None else FitConfig()
    channels, (dx, dy), tag = _validate_batch(fields, layouts)
    flags = detect_collapse(fields, None, conf)
    if flags.field_collapsed:
        raise CollapseError(
            "batch fields are spatially constant; the masked-pair relations "
            "are degenerate", flags)
    scale = _standardizer(fields, conf.standardize)
    batch_values = []
    for f in fields:
        vals = f.flat_cells()
        batch_values.append(vals * scale if scale != 1.0 else vals)
    gram_h = np.zeros((channels, channels))
    cross_h = np.zeros((channels, channels))
    gram_v = np.zeros((channels, channels))
    cross_v = np.zeros((channels, channels))
    samples = 0
    for values, field, layout in zip(batch_values, fields, layouts):
        for tag_dir in layout.direction_tags():
            sx, sy = DIRECTION_SIGNS[tag_dir]
            if sx != 0 and sy != 0:
                continue
            src, tgt = _flat_pairs(field, layout, tag_dir)
            if src.size == 0:
                continue
            # reverse directions feed the same forward relation with the
            # roles swapped: z_src = (I + offset M) z_tgt
            if sx + sy > 0:
                zin, zout = src, tgt
            else:
                zin, zout = tgt, src
            g, r = backend.kernels().accumulate_normal(values, zin, zout)
            if sy == 0:
                gram_h += g
                cross_h += r
            else:
                gram_v += g
                cross_v += r
            samples += int(src.size)
    eye = np.eye(channels)
    kern = backend.kernels()
    mh = np.ascontiguousarray(kern.lu_solve(
        gram_h + conf.ridge * eye, np.ascontiguousarray(cross_h.T),
        cfg.pivot_rel_tol).T)
    mv = np.ascontiguousarray(kern.lu_solve(
        gram_v + conf.ridge * eye, np.ascontiguousarray(cross_v.T),
        cfg.pivot_rel_tol).T)
    a = Matrix._wrap((mh - eye) / dx)
    b = Matrix._wrap((mv - eye) / dy)
    models = LinearModelSet(a, b, dx, dy, variant=2, scale_tag=tag)
    flags = CollapseFlags(False, detect_collapse(fields, models,
                                                 conf).model_collapsed)
    batch = list(zip(fields, layouts))
    per_dir, total, _ = _direction_losses(batch_values, batch, models,
                                          dx, dy, cfg)
    return FitReport(models=models, final_loss=total, per_direction=per_dir,
                     sample_count=samples, collapse_flags=flags,
                     scale_tag=tag, method="closed-form", config=conf,
                     layouts=_layout_dicts(layouts))


def _loss_and_grads(batch_values, batch_layouts, a, b, dx, dy, channels):
    """Total masked MSE and its exact gradients in the two-model family."""
    eye = np.eye(channels)
    hyp = math.sqrt(dx * dx + dy * dy)
    sym = a @ b + b @ a
    grad_a = np.zeros_like(a)
    grad_b = np.zeros_like(b)
    total_sq = 0.0
    total_n = 0
    kern = backend.kernels()
    tag_sums: Dict[str, np.ndarray] = {}
    for values, (field, layout) in zip(batch_values, batch_layouts):
        for tag in layout.direction_tags():
            sx, sy = DIRECTION_SIGNS[tag]
            if sx != 0 and sy != 0:
                c = (sx * dx * a + sy * dy * b
                     + (sx * sy * dx * dy * 0.5) * sym) / hyp
                p = eye + hyp * c
            elif sx != 0:
                p = eye + (sx * dx) * a
            else:
                p = eye + (sy * dy) * b
            src, tgt = _flat_pairs(field, layout, tag)
            if src.size == 0:
                continue
            sqerr, g = kern.residual_grad_pairs(values, src, tgt,
                                                np.ascontiguousarray(p))
            total_sq += sqerr
            total_n += int(src.size)
            if tag in tag_sums:
                tag_sums[tag] += g
            else:
                tag_sums[tag] = g
    for tag, g in tag_sums.items():
        sx, sy = DIRECTION_SIGNS[tag]
        if sx != 0:
            grad_a += (sx * dx) * g
        if sy != 0:
            grad_b += (sy * dy) * g
        if sx != 0 and sy != 0:
            w = sx * sy * dx * dy * 0.5
            grad_a += w * (g @ b.T + b.T @ g)
            grad_b += w * (a.T @ g + g @ a.T)
    denom = total_n * channels
    loss = total_sq / denom if denom else 0.0
    scale = 2.0 / denom if denom else 0.0
    return loss, grad_a * scale, grad_b * scale, total_n


def fit_iterative(fields: Sequence[FeatureField],
                  layouts: Sequence[QuarterLayout],
                  init: LinearModelSet,
                  config: Optional[FitConfig] = None,
                  settings=None) -> FitReport:
    """Deterministic full-batch gradient descent on the total masked MSE.

    All directions contribute, diagonals through the symmetrized
    combination matrix; only the two explicit models are optimized.
    Returns the best iterate seen.
    """
    cfg = resolve(settings)
    conf = config if config is not None else FitConfig()
    channels, (dx, dy), tag = _validate_batch(fields, layouts)
    if init.channels != channels:
        raise ShapeError(f"init models have {init.channels} channels, "
                         f"fields have {channels}")
    flags = detect_collapse(fields, None, conf)
    if flags.field_collapsed:
        raise CollapseError(
            "batch fields are spatially constant; refusing the degenerate "
            "fit", flags)
    scale = _standardizer(fields, conf.standardize)
    batch_values = []
    for f in fields:
        vals = f.flat_cells()
        batch_values.append(vals * scale if scale != 1.0 else vals)
    batch = list(zip(fields, layouts))
    a = init.a.array.copy()
    b = init.b.array.copy()
    loss, ga, gb, samples = _loss_and_grads(batch_values, batch, a, b,
                                            dx, dy, channels)
    initial_loss = loss
    best = (loss, a.copy(), b.copy())
    steps = 0
    if conf.step_size > 0.0:
        prev = loss
        for step in range(1, conf.max_steps + 1):
            a = a - conf.step_size * ga
            b = b - conf.step_size * gb
            loss, ga, gb, _ = _loss_and_grads(batch_values, batch, a, b,
                                              dx, dy, channels)
            steps = step
            if loss < best[0]:
                best = (loss, a.copy(), b.copy())
            if initial_loss > 0.0 and loss > 1e6 * initial_loss:
                raise DivergenceError(
                    f"loss {loss:.3e} exceeded 1e6 x initial "
                    f"{initial_loss:.3e} at step {step}; reduce step_size")
            if abs(prev - loss) < conf.stop_tol:
                break
            prev = loss
    models = LinearModelSet(Matrix._wrap(best[1]), Matrix._wrap(best[2]),
                            dx, dy, variant=2, scale_tag=tag)
    flags = CollapseFlags(False, detect_collapse(fields, models,
                                                 conf).model_collapsed)
    per_dir, total, _ = _direction_losses(batch_values, batch, models,
                                          dx, dy, cfg)
    return FitReport(models=models, final_loss=total, per_direction=per_dir,
                     sample_count=samples, collapse_flags=flags,
                     scale_tag=tag, method="iterative", config=conf,
                     layouts=_layout_dicts(layouts), steps_used=steps)


def fit_multi_scale(fields: Sequence[FeatureField],
                    layouts: Sequence[QuarterLayout],
                    config: Optional[FitConfig] = None,
                    method: str = "closed-form",
                    settings=None) -> Dict[str, FitReport]:
    """Partition the batch by layout scale and fit each group separately."""
    if method not in ("closed-form", "iterative"):
        raise ValidationError(f"unknown fit method {method!r}")
    if len(fields) != len(layouts):
        raise ShapeError(f"{len(fields)} fields but {len(layouts)} layouts")
    groups: Dict[str, List[int]] = {}
    for i, lay in enumerate(layouts):
        groups.setdefault(scale_tag_for(lay.position), []).append(i)
    reports = {}
    for tag in sorted(groups):
        idx = groups[tag]
        sub_fields = [fields[i] for i in idx]
        sub_layouts = [layouts[i] for i in idx]
        report = fit_closed_form(sub_fields, sub_layouts, config, settings)
        if method == "iterative":
            report = fit_iterative(sub_fields, sub_layouts, report.models,
                                   config, settings)
        reports[tag] = report
    return reports
