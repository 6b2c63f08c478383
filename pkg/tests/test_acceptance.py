"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines; every tolerance is fixed here, nothing is calibrated at runtime.
"""

import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import qbheat
from qbheat import (CollapseError, FeatureField, FitConfig, Matrix,
                    ScalarHeatField, alignment, detect_collapse, energy_ratio,
                    eigen_spectrum, fit_closed_form, heat_run, heat_step,
                    laplacian_residual, cross_derivative_residual,
                    make_layout, mat_exp, predict_masked, read_field,
                    write_field)
from qbheat.cli import run as cli_run
from qbheat.predictor import LinearModelSet, expand_variant

from conftest import (discrete_scale_truth, make_field,
                      nilpotent_commuting_pair, polynomial_commuting_pair,
                      skew_commuting_pair)
from test_linalg import taylor_exp_oracle

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"


@contextmanager
def criterion(num, text, seconds):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\n[FAIL] criterion {num:2d}: {text}")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, (f"criterion {num} exceeded its runtime "
                               f"bound: {elapsed:.2f}s >= {seconds}s")
    print(f"\n[PASS] criterion {num:2d}: {text} ({elapsed:.2f}s)")


def rel(got, want):
    return np.linalg.norm(got - want) / np.linalg.norm(want)


def test_criterion_1_matrix_exponential_oracle():
    with criterion(1, "mat_exp matches the 200-term Taylor oracle to 1e-10 "
                      "on 100 random 6x6 matrices", 5.0):
        rng = np.random.default_rng(101)
        for _ in range(100):
            a = rng.normal(size=(6, 6))
            fro = np.linalg.norm(a)
            if fro > 2.0:
                a *= 2.0 / fro
            want = taylor_exp_oracle(a, 1.0, terms=200)
            got = mat_exp(Matrix(a), 1.0).array
            assert rel(got, want) <= 1e-10


def test_criterion_2_eigen_sanity():
    with criterion(2, "eigen sums/products match trace/determinant on 100 "
                      "random 8x8 matrices; conjugate pairs adjacent", 5.0):
        rng = np.random.default_rng(202)
        for _ in range(100):
            a = rng.normal(size=(8, 8))
            dec = eigen_spectrum(Matrix(a))
            lam = np.array(dec.eigenvalues)
            trace = np.trace(a)
            det = np.linalg.det(a)
            assert abs(lam.sum() - trace) <= 1e-8 * max(1.0, abs(trace))
            assert abs(lam.prod() - det) <= 1e-6 * abs(det)
            for i, v in enumerate(lam):
                if v.imag > 0.0:
                    assert lam[i + 1] == v.conjugate()


def test_criterion_3_exact_field_consistency():
    with criterion(3, "continuous 33x33 C=4 fields: shift identity to 1e-8; "
                      "Laplacian and cross residuals shrink >= 3.5x per "
                      "spacing halving", 10.0):
        a0, b0 = skew_commuting_pair(303, 4, 0.8, 0.6)
        z0 = np.array([1.0, -0.4, 0.7, 0.2])
        s = qbheat.compute_S(a0, b0)
        lap_prev = None
        cross_prev = None
        for level in range(3):
            h = 0.16 / (2 ** level)
            f = make_field(a0, b0, z0, 33, 33, h, "continuous")
            for k in (1, 2, 3):
                ex = mat_exp(a0, k * h).array
                shifted = f.values[:, k:, :]
                predicted = f.values[:, :-k, :] @ ex.T
                assert (np.linalg.norm(shifted - predicted)
                        <= 1e-8 * np.linalg.norm(shifted))
            lap = laplacian_residual(f, s)
            cross = cross_derivative_residual(f, a0, b0, 1, 1)
            if lap_prev is not None:
                assert lap_prev / lap >= 3.5
                assert cross_prev / cross >= 3.5
            lap_prev, cross_prev = lap, cross


def test_criterion_4_appendix_identities():
    with criterion(4, "averaged diagonal projector equals the product form "
                      "for commuting models (1e-12); inverse approximation "
                      "error scales as eps^2 (ratio 4 +- 0.5)", 2.0):
        a0, b0 = polynomial_commuting_pair(404, 5, 0.9, 0.7)
        dx, dy = 0.4, 0.3
        models = LinearModelSet(a=a0, b=b0, dx=dx, dy=dy)
        avg = qbheat.diagonal_projector(models, "down-right",
                                        form="averaged").array
        prod = ((np.eye(5) + dx * a0.array) @ (np.eye(5) + dy * b0.array))
        assert np.linalg.norm(avg - prod) <= 1e-12 * np.linalg.norm(prod)

        rng = np.random.default_rng(405)
        u = rng.normal(size=(5, 5))
        u /= np.linalg.norm(u)
        errs = []
        for eps in (0.1, 0.05, 0.025):
            m = LinearModelSet(a=Matrix(eps * u), b=Matrix(eps * u),
                               dx=1.0, dy=1.0)
            approx = qbheat.derive_implicit(m, "left").array
            exact = qbheat.derive_implicit(m, "left",
                                           exact_inverse=True).array
            errs.append(np.linalg.norm(exact - approx))
        for first, second in zip(errs, errs[1:]):
            assert abs(first / second - 4.0) <= 0.5


def test_criterion_5_identification_oracle():
    with criterion(5, "closed-form identification: exact to 1e-8 noiseless, "
                      "<= 5% at noise 0.01 with ridge 1e-6, 20 seeds", 30.0):
        d = 0.125
        lay = make_layout(32, 32, "corner-tl")
        for seed in range(20):
            a0, b0 = polynomial_commuting_pair(500 + seed, 8,
                                               0.35 / d, 0.3 / d)
            rng = np.random.default_rng(900 + seed)
            clean = []
            noisy = []
            for _ in range(8):
                f = make_field(a0, b0, rng.normal(size=8), 32, 32, d,
                               "discrete")
                clean.append(f)
                noisy.append(FeatureField(
                    f.values + 0.01 * rng.standard_normal(f.values.shape), d))
            a_true = discrete_scale_truth(a0, d, 16)
            b_true = discrete_scale_truth(b0, d, 16)
            rep = fit_closed_form(clean, [lay] * 8, FitConfig(ridge=0.0))
            assert rel(rep.models.a.array, a_true) <= 1e-8
            assert rel(rep.models.b.array, b_true) <= 1e-8
            rep_n = fit_closed_form(noisy, [lay] * 8, FitConfig(ridge=1e-6))
            assert rel(rep_n.models.a.array, a_true) <= 0.05
            assert rel(rep_n.models.b.array, b_true) <= 0.05


def test_criterion_6_masked_prediction_pipeline():
    with criterion(6, "true models predict both corner-TL and center masks "
                      "to MSE <= 1e-12; variant-2 and variant-8 agree to "
                      "1e-12", 10.0):
        d = 0.25
        a0, b0 = nilpotent_commuting_pair(606, 8, scale=1.2)
        f = make_field(a0, b0, np.random.default_rng(607).normal(size=8),
                       32, 32, d, "discrete")
        for pos in ("corner-tl", "center"):
            lay = make_layout(32, 32, pos)
            models = LinearModelSet(a=a0, b=b0, dx=lay.dx_cells * d,
                                    dy=lay.dy_cells * d)
            pred2, rep2 = predict_masked(f, lay, models)
            assert rep2.total_mse <= 1e-12
            pred8, rep8 = predict_masked(f, lay, expand_variant(models, 8))
            assert np.max(np.abs(pred2.values - pred8.values)) <= 1e-12
            assert abs(rep2.total_mse - rep8.total_mse) <= 1e-12


def test_criterion_7_scale_invariance_analogue():
    with criterion(7, "energy ratios from quarter- and half-offset fits "
                      "agree within 5%; normalized spectra align to 0.05, "
                      "10 seeds", 60.0):
        d = 1.0 / 64.0
        corner = make_layout(32, 32, "corner-tl")
        center = make_layout(32, 32, "center")
        for seed in range(10):
            a0, b0 = polynomial_commuting_pair(700 + seed, 6, 0.4, 0.32)
            rng = np.random.default_rng(750 + seed)
            fields = [make_field(a0, b0, rng.normal(size=6), 32, 32, d,
                                 "continuous") for _ in range(2)]
            rep_half = fit_closed_form(fields, [corner] * 2,
                                       FitConfig(ridge=0.0))
            rep_quarter = fit_closed_form(fields, [center] * 2,
                                          FitConfig(ridge=0.0))
            r_half = energy_ratio(rep_half.models.a, rep_half.models.b)
            r_quarter = energy_ratio(rep_quarter.models.a,
                                     rep_quarter.models.b)
            assert abs(r_half - r_quarter) <= 0.05 * abs(r_quarter)
            assert alignment(rep_half.models.a,
                             rep_quarter.models.a) <= 0.05
            assert alignment(rep_half.models.b,
                             rep_quarter.models.b) <= 0.05


def test_criterion_8_collapse_handling():
    with criterion(8, "constant fields raise the collapse error with "
                      "field_collapsed; zero models set model_collapsed",
                   1.0):
        const = FeatureField(np.full((16, 16, 4), 3.25), 0.5)
        lay = make_layout(16, 16, "corner-tl")
        for config in (None, FitConfig(ridge=1e-4)):
            with pytest.raises(CollapseError) as ei:
                fit_closed_form([const], [lay], config)
            assert ei.value.flags.field_collapsed
        rng = np.random.default_rng(808)
        healthy = FeatureField(rng.normal(size=(16, 16, 4)), 0.5)
        zero_models = LinearModelSet(a=Matrix.zeros(4), b=Matrix.zeros(4),
                                     dx=1.0, dy=1.0)
        flags = detect_collapse([healthy], zero_models)
        assert flags.model_collapsed and not flags.field_collapsed
        flags = detect_collapse([const], zero_models)
        assert flags.model_collapsed and flags.field_collapsed


def test_criterion_9_heat_equation_reference():
    with criterion(9, "reflective heat stepping conserves total heat to "
                      "1e-9 over 1000 steps; max|u| non-increasing at "
                      "dt = dx^2/4", 5.0):
        rng = np.random.default_rng(909)
        u = ScalarHeatField(rng.normal(size=(17, 17)), 0.5)
        dt = 0.5 * 0.5 / 4.0
        total0 = u.total()
        peak = np.abs(u.values).max()
        state = u
        for _ in range(20):
            state = heat_step(state, dt)
            new_peak = np.abs(state.values).max()
            assert new_peak <= peak
            peak = new_peak
        state = heat_run(state, dt, 980)
        assert abs(state.total() - total0) <= 1e-9 * abs(total0)


def test_criterion_10_format_and_cli_goldens(tmp_path):
    with criterion(10, "QBHF round trips bit-exactly; documented file size "
                       "8216; CLI gen->fit->report reproduces the goldens "
                       "byte-identically", 10.0):
        rng = np.random.default_rng(1010)
        for _ in range(100):
            h = int(rng.integers(2, 11))
            w = int(rng.integers(2, 11))
            c = int(rng.integers(1, 7))
            vals = rng.normal(size=(h, w, c)).astype(np.float32)
            f = FeatureField(vals.astype(np.float64), 0.25)
            assert read_field(write_field(f)) == f
        doc = FeatureField(
            rng.normal(size=(16, 16, 8)).astype(np.float32).astype(float),
            1.0)
        assert len(write_field(doc)) == 8216

        fields = tmp_path / "fields"
        fields.mkdir()
        assert cli_run(["gen", "--input",
                        str(DATA / "gen_spec_random.json"),
                        "--output", str(fields), "--count", "4"]) == 0
        assert cli_run(["fit", "--input", str(fields), "--position",
                        "mixed", "--output", str(tmp_path / "fit.json")]) == 0
        assert cli_run(["report", "--input", str(tmp_path / "fit.json"),
                        "--output", str(tmp_path / "report.csv")]) == 0
        for i in range(4):
            got = (fields / f"field_{i:04d}.qbhf").read_bytes()
            assert got == (GOLDEN / f"rand_field_{i:04d}.qbhf").read_bytes()
        assert (tmp_path / "fit.json").read_bytes() == \
            (GOLDEN / "fit_mixed.json").read_bytes()
        assert (tmp_path / "report.csv").read_bytes() == \
            (GOLDEN / "report_mixed.csv").read_bytes()
