import numpy as np
import pytest

from qbheat import (DegenerateDataError, FeatureField, Matrix,
                    ValidationError, alignment, energy, energy_ratio,
                    normalized_spectrum, spatial_correlation)


class TestEnergy:
    def test_identity(self):
        assert energy(Matrix.identity(5)) == pytest.approx(5.0, abs=1e-12)

    def test_signed_diagonal(self):
        assert energy(Matrix.diagonal([3.0, -4.0])) == pytest.approx(7.0)

    def test_rotation(self):
        assert energy(Matrix([[0.0, -1.0], [1.0, 0.0]])) == pytest.approx(2.0)

    def test_scaling_homogeneity(self, rng):
        m = rng.normal(size=(6, 6))
        e1 = energy(Matrix(m))
        e2 = energy(Matrix(-2.5 * m))
        assert abs(e2 - 2.5 * e1) <= 1e-10 * e1


class TestEnergyRatio:
    def test_scaled_identities(self):
        assert energy_ratio(Matrix(2.0 * np.eye(3)),
                            Matrix.identity(3)) == pytest.approx(2.0)

    def test_equal_matrices(self, rng):
        m = Matrix(rng.normal(size=(5, 5)))
        assert energy_ratio(m, m) == pytest.approx(1.0)

    def test_scale_invariance(self, rng):
        a = Matrix(rng.normal(size=(4, 4)))
        b = Matrix(rng.normal(size=(4, 4)))
        r1 = energy_ratio(a, b)
        r2 = energy_ratio(0.3 * a, 0.3 * b)
        assert abs(r1 - r2) <= 1e-10 * r1

    def test_zero_energy_rejected(self):
        with pytest.raises(DegenerateDataError):
            energy_ratio(Matrix.identity(2), Matrix.zeros(2))


class TestNormalizedSpectrum:
    def test_identity_uniform(self):
        rep = normalized_spectrum(Matrix.identity(4))
        assert rep.normalized == (0.25, 0.25, 0.25, 0.25)
        assert rep.energy == pytest.approx(4.0)

    def test_normalized_sums_to_one(self, rng):
        rep = normalized_spectrum(Matrix(rng.normal(size=(7, 7))))
        assert abs(sum(rep.normalized) - 1.0) <= 1e-12
        assert all(x >= y for x, y in zip(rep.normalized,
                                          rep.normalized[1:]))

    def test_csv_rows(self, rng):
        rep = normalized_spectrum(Matrix(rng.normal(size=(3, 3))), "A")
        rows = rep.to_csv_rows()
        assert [r[0] for r in rows] == [0, 1, 2]
        assert rows[0][3] >= rows[1][3] >= rows[2][3]


class TestAlignment:
    def test_self_alignment_zero(self, rng):
        m = Matrix(rng.normal(size=(5, 5)))
        assert alignment(m, m) == 0.0

    def test_scaling_invariance(self, rng):
        m = Matrix(rng.normal(size=(5, 5)))
        assert alignment(m, -3.0 * m) <= 1e-12

    def test_similarity_invariance(self, rng):
        m = rng.normal(size=(5, 5))
        p = rng.normal(size=(5, 5)) + 3.0 * np.eye(5)
        sim = p @ m @ np.linalg.inv(p)
        assert alignment(Matrix(m), Matrix(sim)) <= 1e-6

    def test_orthogonal_similarity_exact_match(self, rng):
        m = rng.normal(size=(6, 6))
        q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        assert alignment(Matrix(m), Matrix(q @ m @ q.T)) <= 1e-10

    def test_symmetry(self, rng):
        m1 = Matrix(rng.normal(size=(4, 4)))
        m2 = Matrix(rng.normal(size=(4, 4)))
        assert alignment(m1, m2) == alignment(m2, m1)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(Exception):
            alignment(Matrix(np.eye(3)), Matrix(np.eye(4)))


class TestSpatialCorrelation:
    def test_identical_positions_score_one(self):
        vec = np.array([1.0, -2.0, 0.5, 3.0])
        vals = np.tile(vec, (4, 5, 1))
        rep = spatial_correlation(FeatureField(vals, 1.0))
        assert rep.score == pytest.approx(1.0, abs=1e-12)
        assert rep.excluded_positions == 0
        assert rep.n_positions == 20

    def test_iid_field_scores_low(self):
        scores = []
        for seed in range(20):
            vals = np.random.default_rng(seed).standard_normal((14, 14, 256))
            scores.append(spatial_correlation(FeatureField(vals, 1.0)).score)
        assert max(scores) <= 0.1

    def test_score_in_unit_interval(self, rng):
        for _ in range(10):
            vals = rng.normal(size=(5, 5, 3))
            s = spatial_correlation(FeatureField(vals, 1.0)).score
            assert 0.0 <= s <= 1.0

    def test_constant_positions_excluded(self, rng):
        vals = rng.normal(size=(3, 3, 4))
        vals[0, 0, :] = 7.0  # zero channel variance at one position
        rep = spatial_correlation(FeatureField(vals, 1.0))
        assert rep.excluded_positions == 1
        assert rep.n_positions == 9

    def test_all_degenerate_rejected(self):
        vals = np.ones((3, 3, 4))
        with pytest.raises(DegenerateDataError):
            spatial_correlation(FeatureField(vals, 1.0))

    def test_needs_two_channels(self, rng):
        with pytest.raises(ValidationError):
            spatial_correlation(FeatureField(rng.normal(size=(3, 3, 1)), 1.0))

    def test_json_shape(self, rng):
        rep = spatial_correlation(FeatureField(rng.normal(size=(3, 3, 4)),
                                               1.0))
        assert set(rep.to_json_dict()) == {"score", "excluded_positions",
                                           "n_positions"}
