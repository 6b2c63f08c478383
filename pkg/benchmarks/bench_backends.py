#!/usr/bin/env python3
"""Benchmark the compiled kernel lane against the pure-Python fallback.

Usage: python benchmarks/bench_backends.py [--repeat N]

Every kernel is exercised through the public API so the numbers reflect
what library users see.  Both lanes compute bit-identical results; the
benchmark also asserts that on each workload.
"""

import argparse
import time

import numpy as np

import qbheat
from qbheat import backend


def timed(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def workloads():
    rng = np.random.default_rng(7)

    a32 = qbheat.Matrix(rng.normal(size=(32, 32)) * 0.05)
    yield "mat_exp 32x32", lambda: qbheat.mat_exp(a32, 1.0).array

    e48 = qbheat.Matrix(rng.normal(size=(48, 48)))
    yield "eigen_spectrum 48x48", lambda: np.array(
        qbheat.eigen_spectrum(e48).eigenvalues)

    s64 = qbheat.Matrix(rng.normal(size=(64, 64)) + 16.0 * np.eye(64))
    rhs = qbheat.Matrix(rng.normal(size=(64, 8)))
    yield "solve 64x64 (8 rhs)", lambda: qbheat.solve(s64, rhs).array

    base = rng.normal(size=(12, 12))
    base /= max(abs(np.linalg.eigvals(base)))
    a0 = qbheat.Matrix(0.5 * base + 0.2 * base @ base)
    b0 = qbheat.Matrix(-0.3 * base + 0.25 * base @ base)
    spec = qbheat.FieldGenSpec(a=a0, b=b0, z0=rng.normal(size=12),
                               mode="discrete")
    yield "generate 64x64x12 field", lambda: qbheat.generate_exact_field(
        spec, 64, 64, 0.01).values

    field = qbheat.generate_exact_field(spec, 64, 64, 0.01)
    layout = qbheat.make_layout(64, 64, "corner-tl")
    models = qbheat.LinearModelSet(a=a0, b=b0, dx=0.32, dy=0.32)
    yield "predict_masked 64x64x12", lambda: qbheat.predict_masked(
        field, layout, models)[1].total_mse

    fields = [field]
    yield "fit_closed_form 64x64x12", lambda: qbheat.fit_closed_form(
        fields, [layout], qbheat.FitConfig(ridge=1e-8)).final_loss

    u = qbheat.ScalarHeatField(rng.normal(size=(96, 96)), 1.0)
    yield "heat_run 96x96 x200", lambda: qbheat.heat_run(u, 0.25, 200).total()

    corr_field = qbheat.FeatureField(rng.standard_normal((14, 14, 256)), 1.0)
    yield "spatial_correlation 196x256", lambda: qbheat.spatial_correlation(
        corr_field).score

    img = qbheat.Image(rng.integers(0, 256, size=(128, 128, 1),
                                    dtype=np.int64).astype(np.uint8))
    cfg = qbheat.ExtractorConfig(seed=3, out_channels=16)
    yield "extract 128x128 -> 16ch", lambda: qbheat.extract_features(
        img, cfg).values


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    lanes = backend.available_backends()
    if "compiled" not in lanes:
        print("compiled kernels not built; benchmarking the python lane only")
    print(f"{'workload':<28}" + "".join(f"{lane:>12}" for lane in lanes)
          + ("     speedup" if len(lanes) > 1 else ""))
    for name, fn in workloads():
        times = {}
        outputs = {}
        for lane in lanes:
            backend.set_backend(lane)
            times[lane], outputs[lane] = timed(fn, args.repeat)
        row = f"{name:<28}" + "".join(f"{times[lane] * 1e3:>10.2f}ms"
                                      for lane in lanes)
        if len(lanes) > 1:
            vals = list(outputs.values())
            agree = all(np.array_equal(np.asarray(v), np.asarray(vals[0]))
                        for v in vals[1:])
            row += f"{times['python'] / times['compiled']:>11.1f}x"
            if not agree:
                row += "  [LANES DISAGREE]"
        print(row)
    backend.set_backend(lanes[0])


if __name__ == "__main__":
    main()
