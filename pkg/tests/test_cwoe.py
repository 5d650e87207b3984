import numpy as np
import pytest

from core.cwoe import (
    matrix_sqrt_psd,
    partition_correlation,
    structure_metric,
    structure_metric_ensemble,
    synth_noisy,
)
from core.exceptions import CalendarMismatch, DegenerateBaseline, InvalidInput, NotNormalized, NotPSD, ShapeMismatch
from core.rmt import MPParams, normalize_panel
from core.synthetic import factor_panel, gaussian_panel

HAND_C = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.4], [0.2, 0.4, 1.0]])


def _alternating(n: int) -> np.ndarray:
    return np.where(np.arange(n) % 2 == 0, 0.9, 0.2)


@pytest.fixture
def one_factor_partition():
    returns = normalize_panel(factor_panel(_alternating(40), 217, seed=21))
    polarity = normalize_panel(factor_panel(_alternating(40), 217, seed=22))
    return partition_correlation(returns, polarity)


class TestPartitionCorrelation:
    def test_blocks_and_labels(self):
        returns = normalize_panel(gaussian_panel(3, 200, seed=1))
        polarity = normalize_panel(gaussian_panel(3, 200, seed=2))
        c = partition_correlation(returns, polarity)
        assert c.full.shape == (6, 6)
        assert c.labels[0] == "R:S00"
        assert c.labels[3] == "P:S00"
        np.testing.assert_array_equal(c.rp, c.pr.T)
        np.testing.assert_array_equal(np.diag(c.full), 1.0)
        assert c.block("p").labels == c.labels[3:]

    def test_independent_cross_block(self):
        returns = normalize_panel(gaussian_panel(5, 10_000, seed=3))
        polarity = normalize_panel(gaussian_panel(5, 10_000, seed=4))
        assert np.max(np.abs(partition_correlation(returns, polarity).rp)) < 0.05

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            partition_correlation(normalize_panel(gaussian_panel(3, 50, 1)), normalize_panel(gaussian_panel(4, 50, 2)))

    def test_calendar_mismatch(self, make_panel):
        rng = np.random.default_rng(0)
        returns = normalize_panel(make_panel(rng.standard_normal((2, 20))))
        polarity = normalize_panel(make_panel(rng.standard_normal((2, 20)), start="2016-06-01"))
        with pytest.raises(CalendarMismatch):
            partition_correlation(returns, polarity)

    def test_requires_normalized(self):
        with pytest.raises(NotNormalized):
            partition_correlation(gaussian_panel(3, 50, 1), gaussian_panel(3, 50, 2))


class TestMatrixSqrt:
    def test_square_root(self):
        s = matrix_sqrt_psd(HAND_C)
        np.testing.assert_allclose(s @ s, HAND_C, atol=1e-12)
        np.testing.assert_array_equal(s, s.T)

    def test_singular_matrix(self):
        c = np.ones((3, 3))
        s = matrix_sqrt_psd(c)
        np.testing.assert_allclose(s @ s, c, atol=1e-8)

    def test_indefinite(self):
        with pytest.raises(NotPSD):
            matrix_sqrt_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_asymmetric(self):
        with pytest.raises(InvalidInput):
            matrix_sqrt_psd(np.array([[1.0, 0.3], [0.1, 1.0]]))


class TestSynthNoisy:
    def test_identity_blocks(self):
        surrogate = synth_noisy(np.eye(4), np.eye(4), T=100_000, seed=0)
        assert surrogate.c_prime.shape == (8, 8)
        assert np.max(np.abs(surrogate.c_prime - np.eye(8))) < 0.02

    def test_deterministic(self):
        first = synth_noisy(HAND_C, HAND_C, T=50, seed=7)
        second = synth_noisy(HAND_C, HAND_C, T=50, seed=7)
        np.testing.assert_array_equal(first.c_prime, second.c_prime)
        assert first.seed == 7 and first.T == 50

    def test_equicorrelated_block(self):
        c_r = np.full((10, 10), 0.5) + 0.5 * np.eye(10)
        block = synth_noisy(c_r, np.eye(10), T=10_000, seed=1).c_prime[:10, :10]
        off_diagonal = block[~np.eye(10, dtype=bool)]
        assert off_diagonal.mean() == pytest.approx(0.5, abs=0.03)

    def test_identity_blocks_follow_noise_band(self):
        lo, hi = MPParams.from_shape(t=400, n=100).bounds
        c_prime = synth_noisy(np.eye(100), np.eye(100), T=400, seed=2).c_prime
        for block in (c_prime[:100, :100], c_prime[100:, 100:]):
            eigenvalues = np.linalg.eigvalsh(block)
            assert eigenvalues[0] >= lo - 0.15
            assert eigenvalues[-1] <= hi + 0.15

    def test_short_sample(self):
        with pytest.raises(InvalidInput):
            synth_noisy(np.eye(5), np.eye(5), T=4, seed=0)


class TestStructureMetric:
    @pytest.mark.parametrize("variant", ["neighboring", "corresponding"])
    def test_identical_is_zero(self, variant, one_factor_partition):
        c = one_factor_partition.full
        assert structure_metric(c, c.copy(), variant) == 0.0

    def test_neighboring_hand_example(self):
        changed = HAND_C.copy()
        changed[0, 1] = 0.6
        assert structure_metric(HAND_C, changed, "neighboring") == pytest.approx(0.2)

    def test_corresponding_hand_example(self):
        changed = HAND_C.copy()
        changed[0, 1] = changed[1, 0] = 0.6
        assert structure_metric(HAND_C, changed, "corresponding") == pytest.approx(1 / 11)

    @pytest.mark.parametrize("variant", ["neighboring", "corresponding"])
    def test_degenerate_baseline(self, variant):
        with pytest.raises(DegenerateBaseline):
            structure_metric(np.eye(4), np.full((4, 4), 0.1), variant)

    def test_unknown_variant(self):
        with pytest.raises(InvalidInput):
            structure_metric(HAND_C, HAND_C, "diagonal")

    def test_corresponding_permutation_invariant(self, one_factor_partition):
        c = one_factor_partition.full
        c_prime = synth_noisy(one_factor_partition.rr, one_factor_partition.pp, T=217, seed=3).c_prime
        order = np.random.default_rng(4).permutation(c.shape[0])
        permuted = structure_metric(c[np.ix_(order, order)], c_prime[np.ix_(order, order)], "corresponding")
        assert permuted == pytest.approx(structure_metric(c, c_prime, "corresponding"), rel=1e-12)

    def test_neighboring_depends_on_order(self):
        # two correlated pairs {0, 1} and {2, 3}; the change adds a cross link 0-2
        c = np.eye(4)
        c[0, 1] = c[1, 0] = c[2, 3] = c[3, 2] = 0.8
        changed = c.copy()
        changed[0, 2] = changed[2, 0] = 0.4
        order = np.array([0, 2, 1, 3])
        swapped_c, swapped_changed = c[np.ix_(order, order)], changed[np.ix_(order, order)]
        assert structure_metric(c, changed, "neighboring") == pytest.approx(0.25)
        assert structure_metric(swapped_c, swapped_changed, "neighboring") == pytest.approx(1 / 12)
        assert structure_metric(swapped_c, swapped_changed, "corresponding") == pytest.approx(
            structure_metric(c, changed, "corresponding"))


class TestEnsemble:
    def test_one_factor_structure_survives_noise(self, one_factor_partition):
        summary = structure_metric_ensemble(one_factor_partition, T=217, realizations=100, seed=0)
        assert set(summary) == {"neighboring", "corresponding"}
        assert summary["neighboring"]["mean"] < 0.10
        assert summary["neighboring"]["realizations"] == 100
        assert len(summary["corresponding"]["values"]) == 100

    def test_deterministic(self, one_factor_partition):
        first = structure_metric_ensemble(one_factor_partition, T=217, realizations=3, seed=5)
        second = structure_metric_ensemble(one_factor_partition, T=217, realizations=3, seed=5)
        assert first == second

    def test_no_realizations(self, one_factor_partition):
        with pytest.raises(InvalidInput):
            structure_metric_ensemble(one_factor_partition, T=217, realizations=0)
