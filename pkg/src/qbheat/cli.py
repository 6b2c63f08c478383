"""Command-line front end.

Subcommands: gen, fit, predict, spectrum, corr, heat-sim, extract, report.
Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure.  All outputs are byte-deterministic for fixed inputs and seed;
QBHEAT_THREADS caps the worker count (the current implementation is
single-threaded, so the cap is honored trivially).
"""

import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from .errors import (CollapseError, FormatError, NumericalError,
                     QBHeatError, ValidationError)
from .extractor import ExtractorConfig, extract_features, read_image
from .field import (FeatureField, FieldGenSpec, ScalarHeatField,
                    generate_exact_field, heat_run, read_field, write_field)
from .fitting import FitConfig, fit_multi_scale
from .linalg import Matrix, eigen_spectrum
from .masking import make_layout
from .predictor import LinearModelSet, expand_variant, predict_masked
from .rng import SplitMix64
from .spectrum import alignment, normalized_spectrum, spatial_correlation

_POSITIONS = {"tl": "corner-tl", "tr": "corner-tr", "bl": "corner-bl",
              "br": "corner-br", "center": "center"}


def thread_cap() -> int:
    """Worker-count cap from QBHEAT_THREADS (default: no cap)."""
    raw = os.environ.get("QBHEAT_THREADS")
    if raw is None:
        return 0
    try:
        cap = int(raw)
    except ValueError:
        raise ValidationError(f"QBHEAT_THREADS must be an integer, "
                              f"got {raw!r}")
    if cap < 1:
        raise ValidationError(f"QBHEAT_THREADS must be >= 1, got {cap}")
    return cap


def _dump_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})")
    except FileNotFoundError:
        raise ValidationError(f"{path}: no such file")


def _read_qbhf(path) -> FeatureField:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise ValidationError(f"{path}: no such file")
    try:
        return read_field(data)
    except QBHeatError as exc:
        raise type(exc)(f"{path}: {exc}")


def _matrix_from(rows, what, path):
    try:
        return Matrix(rows)
    except (QBHeatError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: invalid {what} ({exc})")


def _spectral_radius(m: Matrix) -> float:
    return max(eigen_spectrum(m).magnitudes())


def _random_commuting(gen: SplitMix64, channels: int, rho_max: float):
    """Commuting pair built as quadratic polynomials of one seeded matrix,
    each rescaled to the requested spectral radius."""
    base = Matrix([[gen.uniform_signed(1.0) for _ in range(channels)]
                   for _ in range(channels)])
    base2 = base @ base
    eye = Matrix.identity(channels)
    out = []
    for _ in range(2):
        while True:
            c0 = gen.uniform_signed(1.0)
            c1 = gen.uniform_signed(1.0)
            c2 = gen.uniform_signed(1.0)
            raw = c0 * eye + c1 * base + c2 * base2
            rho = _spectral_radius(raw)
            if rho > 1e-9:
                out.append((rho_max / rho) * raw)
                break
    return out[0], out[1]


def _parse_gen_spec(spec: dict, path: str, seed_override, mode_override):
    for key in ("C", "H", "W", "spacing", "mode"):
        if key not in spec:
            raise FormatError(f"{path}: generator spec is missing {key!r}")
    channels = int(spec["C"])
    height = int(spec["H"])
    width = int(spec["W"])
    spacing = float(spec["spacing"])
    mode = mode_override or str(spec["mode"])
    seed = spec.get("seed")
    if seed_override is not None:
        seed = seed_override
    explicit = "A" in spec or "B" in spec
    random_c = "random-commuting" in spec
    if explicit == random_c:
        raise FormatError(f"{path}: provide either explicit A and B or a "
                          "random-commuting block, not both")
    if (random_c or "z0" not in spec) and seed is None:
        raise FormatError(f"{path}: a seed is required when matrices or z0 "
                          "are drawn randomly")
    gen = SplitMix64(int(seed)) if seed is not None else None
    if explicit:
        if "A" not in spec or "B" not in spec:
            raise FormatError(f"{path}: explicit specs need both A and B")
        a = _matrix_from(spec["A"], "matrix A", path)
        b = _matrix_from(spec["B"], "matrix B", path)
        if a.rows != channels or not a.is_square or b.rows != channels:
            raise FormatError(f"{path}: A and B must be {channels}x{channels}")
    else:
        block = spec["random-commuting"]
        if "rho_max" not in block:
            raise FormatError(f"{path}: random-commuting needs rho_max")
        a, b = _random_commuting(gen, channels, float(block["rho_max"]))
    if "z0" in spec:
        z0 = np.asarray(spec["z0"], dtype=np.float64)
        if z0.shape != (channels,):
            raise FormatError(f"{path}: z0 must hold {channels} entries")
    else:
        z0 = np.array([gen.uniform_signed(1.0) for _ in range(channels)])
    return FieldGenSpec(a=a, b=b, z0=z0, mode=mode), height, width, spacing


@click.group(name="qbheat")
def cli():
    """Feature-field heat-equation toolkit."""


@cli.command(name="gen")
@click.option("--input", "spec_path", required=True,
              help="Generator spec JSON.")
@click.option("--output", "output", required=True,
              help="Output QBHF file (or directory when --count > 1).")
@click.option("--count", default=1, show_default=True,
              help="Number of fields; item i uses seed+i.")
@click.option("--seed", type=int, default=None, help="Override the spec seed.")
@click.option("--mode", type=click.Choice(["continuous", "discrete"]),
              default=None, help="Override the spec mode.")
def cmd_gen(spec_path, output, count, seed, mode):
    """Synthesize closed-form solution fields from a spec file."""
    raw = _load_json(spec_path)
    if count < 1:
        raise ValidationError(f"--count must be >= 1, got {count}")
    if count == 1:
        spec, h, w, spacing = _parse_gen_spec(raw, spec_path, seed, mode)
        field = generate_exact_field(spec, h, w, spacing)
        Path(output).write_bytes(write_field(field))
        return
    out_dir = Path(output)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_seed = seed if seed is not None else raw.get("seed")
    if base_seed is None:
        raise ValidationError(f"{spec_path}: batch generation needs a seed")
    for i in range(count):
        spec, h, w, spacing = _parse_gen_spec(raw, spec_path,
                                              int(base_seed) + i, mode)
        field = generate_exact_field(spec, h, w, spacing)
        (out_dir / f"field_{i:04d}.qbhf").write_bytes(write_field(field))


def _collect_fields(input_dir):
    root = Path(input_dir)
    if not root.is_dir():
        raise ValidationError(f"{input_dir}: not a directory")
    paths = sorted(root.glob("*.qbhf"))
    if not paths:
        raise ValidationError(f"no input fields (*.qbhf) in {input_dir}")
    return paths


@cli.command(name="fit")
@click.option("--input", "input_dir", required=True,
              help="Directory of QBHF fields.")
@click.option("--output", "output", required=True,
              help="Fit report JSON path.")
@click.option("--position",
              type=click.Choice(sorted(_POSITIONS) + ["mixed"]),
              default="tl", show_default=True,
              help="Unmasked-quarter position; 'mixed' alternates "
                   "center/corner-tl over the sorted inputs.")
@click.option("--method", type=click.Choice(["closed-form", "iterative"]),
              default="closed-form", show_default=True)
@click.option("--ridge", type=float, default=None,
              help="Ridge strength for the closed form.")
@click.option("--steps", type=int, default=None,
              help="Max gradient steps (iterative).")
@click.option("--lr", type=float, default=None,
              help="Gradient step size (iterative).")
@click.option("--standardize", is_flag=True, default=False,
              help="Scale the batch to unit variance before fitting.")
def cmd_fit(input_dir, output, position, method, ridge, steps, lr,
            standardize):
    """Identify A and B from a directory of fields."""
    paths = _collect_fields(input_dir)
    fields = [_read_qbhf(p) for p in paths]
    over = {}
    if ridge is not None:
        over["ridge"] = ridge
    if steps is not None:
        over["max_steps"] = steps
    if lr is not None:
        over["step_size"] = lr
    if standardize:
        over["standardize"] = True
    config = FitConfig(**over)
    if position == "mixed":
        layouts = []
        for i, f in enumerate(fields):
            pos = "center" if i % 2 == 0 else "corner-tl"
            layouts.append(make_layout(f.height, f.width, pos))
    else:
        layouts = [make_layout(f.height, f.width, _POSITIONS[position])
                   for f in fields]
    reports = fit_multi_scale(fields, layouts, config, method)
    payload = {
        "inputs": [p.name for p in paths],
        "scales": {tag: rep.to_json_dict() for tag, rep in reports.items()},
    }
    _dump_json(payload, output)


def _load_model_set(path, scale):
    doc = _load_json(path)
    scales = doc.get("scales")
    if not isinstance(scales, dict) or not scales:
        raise FormatError(f"{path}: not a fit report (missing 'scales')")
    if scale is None:
        if len(scales) > 1:
            raise ValidationError(
                f"{path} holds scales {sorted(scales)}; pick one with --scale")
        scale = next(iter(scales))
    if scale not in scales:
        raise ValidationError(f"{path}: no scale {scale!r}; "
                              f"available: {sorted(scales)}")
    try:
        return LinearModelSet.from_json_dict(scales[scale]["models"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed models block ({exc})")


@cli.command(name="predict")
@click.option("--input", "field_path", required=True, help="QBHF field.")
@click.option("--models", "models_path", required=True,
              help="Fit report JSON.")
@click.option("--scale", default=None,
              help="Scale tag inside the fit report.")
@click.option("--position", type=click.Choice(sorted(_POSITIONS)),
              default="tl", show_default=True)
@click.option("--variant", type=click.Choice(["2", "4", "8"]), default="2",
              show_default=True, help="Expand to this many explicit models.")
@click.option("--output", "output", required=True,
              help="Predicted QBHF path.")
@click.option("--mse-out", "mse_out", default=None,
              help="MSE report JSON path (stdout when omitted).")
def cmd_predict(field_path, models_path, scale, position, variant, output,
                mse_out):
    """Fill the masked quarters of a field with a fitted model set."""
    field = _read_qbhf(field_path)
    models = _load_model_set(models_path, scale)
    models = expand_variant(models, int(variant))
    layout = make_layout(field.height, field.width, _POSITIONS[position])
    predicted, report = predict_masked(field, layout, models)
    Path(output).write_bytes(write_field(predicted))
    payload = report.to_json_dict()
    payload["layout"] = layout.to_json_dict()
    _dump_json(payload, mse_out)


def _spectrum_csv(report) -> str:
    lines = ["index,re,im,magnitude,normalized_magnitude"]
    for idx, re, im, mag, norm in report.to_csv_rows():
        lines.append(f"{idx},{re!r},{im!r},{mag!r},{norm!r}")
    return "\n".join(lines) + "\n"


@cli.command(name="spectrum")
@click.option("--models", "models_path", required=True,
              help="Fit report JSON.")
@click.option("--scale", default=None)
@click.option("--models2", "models2_path", default=None,
              help="Second fit report for cross-scale alignment.")
@click.option("--scale2", default=None)
@click.option("--output", "out_dir", required=True,
              help="Directory for spectrum CSVs and summary JSON.")
def cmd_spectrum(models_path, scale, models2_path, scale2, out_dir):
    """Eigen-spectrum CSVs, energy ratio, and alignment for a model pair."""
    models = _load_model_set(models_path, scale)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep_a = normalized_spectrum(models.a, "A")
    rep_b = normalized_spectrum(models.b, "B")
    (out / "spectrum_A.csv").write_text(_spectrum_csv(rep_a))
    (out / "spectrum_B.csv").write_text(_spectrum_csv(rep_b))
    if rep_b.energy == 0.0:
        raise ValidationError(
            f"{models_path}: zero spectrum energy in B; ratio undefined")
    summary = {
        "energy_a": rep_a.energy,
        "energy_b": rep_b.energy,
        "energy_ratio": rep_a.energy / rep_b.energy,
        "alignment_ab": alignment(models.a, models.b),
    }
    if models2_path is not None:
        other = _load_model_set(models2_path, scale2)
        rep_a2 = normalized_spectrum(other.a, "A2")
        rep_b2 = normalized_spectrum(other.b, "B2")
        (out / "spectrum_A2.csv").write_text(_spectrum_csv(rep_a2))
        (out / "spectrum_B2.csv").write_text(_spectrum_csv(rep_b2))
        if rep_b2.energy == 0.0:
            raise ValidationError(
                f"{models2_path}: zero spectrum energy in B; ratio undefined")
        summary["energy_ratio_2"] = rep_a2.energy / rep_b2.energy
        summary["cross_alignment_a"] = alignment(models.a, other.a)
        summary["cross_alignment_b"] = alignment(models.b, other.b)
    _dump_json(summary, out / "summary.json")


@cli.command(name="corr")
@click.option("--input", "field_path", required=True, help="QBHF field.")
@click.option("--output", "output", default=None,
              help="Report JSON path (stdout when omitted).")
def cmd_corr(field_path, output):
    """Spatial-correlation score of a field."""
    field = _read_qbhf(field_path)
    report = spatial_correlation(field)
    _dump_json(report.to_json_dict(), output)


@cli.command(name="heat-sim")
@click.option("--input", "field_path", required=True,
              help="Initial condition: QBHF field with one channel.")
@click.option("--output", "out_dir", required=True,
              help="Directory for QBHF frames.")
@click.option("--steps", type=int, required=True)
@click.option("--dt", type=float, default=None,
              help="Time step (default: the stability bound dx^2/4).")
@click.option("--save-every", "save_every", type=int, default=0,
              help="Also write every k-th intermediate frame.")
def cmd_heat_sim(field_path, out_dir, steps, dt, save_every):
    """Evolve a scalar field under the heat equation."""
    field = _read_qbhf(field_path)
    if field.channels != 1:
        raise ValidationError(
            f"{field_path}: heat-sim needs a single-channel field, "
            f"got C={field.channels}")
    if steps < 1:
        raise ValidationError(f"--steps must be >= 1, got {steps}")
    if save_every < 0:
        raise ValidationError("--save-every must be >= 0")
    u = ScalarHeatField(field.values[:, :, 0], field.spacing)
    if dt is None:
        dt = u.spacing * u.spacing / 4.0
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def emit(state, step):
        frame = FeatureField(state.values[:, :, None], state.spacing)
        (out / f"frame_{step:06d}.qbhf").write_bytes(write_field(frame))

    emit(u, 0)
    if save_every:
        done = 0
        while done < steps:
            chunk = min(save_every, steps - done)
            u = heat_run(u, dt, chunk)
            done += chunk
            emit(u, done)
    else:
        u = heat_run(u, dt, steps)
        emit(u, steps)


@cli.command(name="extract")
@click.option("--input", "image_path", required=True,
              help="Binary PGM (P5) or PPM (P6) image.")
@click.option("--output", "output", required=True, help="QBHF field path.")
@click.option("--seed", type=int, required=True)
@click.option("--channels", type=int, required=True,
              help="Output feature channels.")
@click.option("--kernel", type=int, default=3, show_default=True)
@click.option("--stride", type=int, default=4, show_default=True)
def cmd_extract(image_path, output, seed, channels, kernel, stride):
    """Turn an image into a feature field by seeded random convolution."""
    try:
        data = Path(image_path).read_bytes()
    except FileNotFoundError:
        raise ValidationError(f"{image_path}: no such file")
    try:
        img = read_image(data)
    except QBHeatError as exc:
        raise type(exc)(f"{image_path}: {exc}")
    cfg = ExtractorConfig(seed=seed, out_channels=channels, kernel=kernel,
                          stride=stride)
    field = extract_features(img, cfg)
    Path(output).write_bytes(write_field(field))


@cli.command(name="report")
@click.option("--input", "inputs", required=True, multiple=True,
              help="Fit report JSON files or directories of them.")
@click.option("--output", "output", default=None,
              help="Output path (stdout when omitted).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
def cmd_report(inputs, output, fmt):
    """Aggregate fit reports into a per-scale energy-ratio table."""
    files = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(sorted(p.glob("*.json")))
        elif p.exists():
            files.append(p)
        else:
            raise ValidationError(f"{item}: no such file or directory")
    if not files:
        raise ValidationError("no fit reports found under the given inputs")
    rows = []
    for path in files:
        doc = _load_json(path)
        scales = doc.get("scales")
        if not isinstance(scales, dict):
            raise FormatError(f"{path}: not a fit report (missing 'scales')")
        for tag in sorted(scales):
            models = LinearModelSet.from_json_dict(scales[tag]["models"])
            rep_a = normalized_spectrum(models.a)
            rep_b = normalized_spectrum(models.b)
            ratio = rep_a.energy / rep_b.energy if rep_b.energy else math.nan
            rows.append((path.name, tag, rep_a.energy, rep_b.energy, ratio))
    if fmt == "json":
        payload = [{"file": f, "scale": s, "energy_a": ea, "energy_b": eb,
                    "energy_ratio": r} for f, s, ea, eb, r in rows]
        _dump_json(payload, output)
        return
    lines = ["file,scale,energy_a,energy_b,energy_ratio"]
    for f, s, ea, eb, r in rows:
        lines.append(f"{f},{s},{ea!r},{eb!r},{r!r}")
    text = "\n".join(lines) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def run(argv) -> int:
    """Execute one CLI invocation; returns the exit code."""
    try:
        thread_cap()
        cli.main(args=list(argv), prog_name="qbheat", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 1
    except (ValidationError, CollapseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
