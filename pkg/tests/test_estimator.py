from fractions import Fraction

import numpy as np
import pytest

from sardub19.estimator import (
    ErrorEstimate,
    MismatchObservation,
    OutOfMonotoneRangeError,
    estimate_from_samples,
    exhaustive_oracle,
    exhaustive_oracle_table,
    expected_mismatch,
    expected_single_blocks,
    expected_triple_blocks,
    invert_exact,
    invert_poly,
    monotone_peak,
    monte_carlo_oracle,
    sample_mismatch_counts,
)


class TestForwardFormulas:
    def test_no_errors_no_mismatches(self):
        assert expected_mismatch(1024, 0) == 0

    def test_n8_q2_exact(self):
        assert expected_mismatch(8, 2) == pytest.approx(8 / 7, rel=1e-14)

    @pytest.mark.parametrize("n", [8, 12, 16, 256, 1024])
    def test_single_error_always_one_mismatch(self, n):
        assert expected_mismatch(n, 1) == pytest.approx(1.0, rel=1e-12)

    def test_single_blocks_n8_q2(self):
        assert expected_single_blocks(8, 2) == pytest.approx(8 / 7, rel=1e-14)

    @pytest.mark.parametrize("n", [8, 16, 1024])
    def test_single_blocks_vanish_at_extremes(self, n):
        assert expected_single_blocks(n, 0) == 0
        assert expected_single_blocks(n, n) == 0

    def test_triple_blocks_vanish_below_three(self):
        assert expected_triple_blocks(8, 2) == 0
        assert expected_triple_blocks(1024, 0) == 0

    def test_triple_blocks_n8_q3(self):
        assert expected_triple_blocks(8, 3) == pytest.approx(1 / 7, rel=1e-14)

    @pytest.mark.parametrize("n", [8, 12, 16, 20])
    def test_decomposition(self, n):
        for q in range(n + 1):
            total = expected_mismatch(n, q)
            parts = expected_single_blocks(n, q) + expected_triple_blocks(n, q)
            assert total == pytest.approx(parts, rel=1e-12, abs=1e-12)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            expected_mismatch(7, 1)
        with pytest.raises(ValueError):
            expected_mismatch(10, 1)
        with pytest.raises(ValueError):
            expected_mismatch(16, 17)


class TestExhaustiveOracle:
    def test_n8_q2(self):
        assert exhaustive_oracle(8, 2) == Fraction(8, 7)

    def test_n8_q0(self):
        assert exhaustive_oracle(8, 0) == 0

    def test_n8_q3_triples(self):
        assert exhaustive_oracle(8, 3, blocks_with=3) == Fraction(1, 7)

    def test_matches_formula_n12_q4(self):
        assert float(exhaustive_oracle(12, 4)) == pytest.approx(
            expected_mismatch(12, 4), rel=1e-12
        )

    def test_table_matches_pointwise(self):
        table = exhaustive_oracle_table(12)
        for q in range(13):
            assert table[q] == exhaustive_oracle(12, q)

    def test_blowup_guard(self):
        with pytest.raises(ValueError):
            exhaustive_oracle(28, 2)

    @pytest.mark.parametrize("n", [8, 12, 16])
    def test_formula_agreement_small_n(self, n):
        table = exhaustive_oracle_table(n)
        for q in range(n + 1):
            assert float(table[q]) == pytest.approx(
                expected_mismatch(n, q), rel=1e-12, abs=1e-12
            )


class TestMonteCarlo:
    def test_agreement_with_formula(self):
        rng = np.random.default_rng(11)
        mean, sem = monte_carlo_oracle(1024, 20, 20000, rng)
        assert abs(mean - expected_mismatch(1024, 20)) < 4 * sem

    def test_counts_have_q_parity(self):
        # odd-block count always has the same parity as q
        rng = np.random.default_rng(5)
        counts = sample_mismatch_counts(1024, 7, 200, rng)
        assert np.all(counts % 2 == 1)


class TestInvertExact:
    def test_zero(self):
        assert invert_exact(1024, 0).q_hat == 0

    def test_round_trip_q20(self):
        est = invert_exact(1024, expected_mismatch(1024, 20))
        assert est.q_hat == pytest.approx(20, abs=1e-4)
        assert est.qber_hat == pytest.approx(20 / 1024, abs=1e-6)

    def test_n8_forward_consistency(self):
        # at n=8 the continuous curve is so flat that several real q map
        # near 8/7; the inverse must still satisfy the forward formula
        q_hat = invert_exact(8, 8 / 7).q_hat
        assert expected_mismatch(8, q_hat) == pytest.approx(8 / 7, abs=1e-6)

    @pytest.mark.parametrize("n", [1000, 1024])
    def test_round_trip_low_range(self, n):
        for q in range(0, n // 10 + 1, 7):
            est = invert_exact(n, expected_mismatch(n, q))
            assert est.q_hat == pytest.approx(q, abs=1e-4)

    def test_out_of_range(self):
        _, m_peak = monotone_peak(1024)
        with pytest.raises(OutOfMonotoneRangeError):
            invert_exact(1024, m_peak + 1)

    def test_peak_is_cached_and_interior(self):
        q_peak, m_peak = monotone_peak(1024)
        assert 0 < q_peak < 1024
        assert expected_mismatch(1024, q_peak - 1) < m_peak
        assert monotone_peak(1024) == (q_peak, m_peak)


class TestInvertPoly:
    def test_value_at_m10(self):
        # direct evaluation of the fitted cubic at n=1024, m=10
        assert invert_poly(1024, 10).q_hat == pytest.approx(15.29079925, abs=1e-6)

    def test_intercept_at_zero(self):
        assert invert_poly(1024, 0).q_hat == pytest.approx(2.45078125, abs=1e-12)

    def test_length_rescaling(self):
        # doubling n quarters the cubic term, halves the quadratic, doubles
        # the intercept
        m = 12.5
        c1, c2, c3, c4 = 0.00010813, -0.00778112, 1.351, 2.45078125
        expected = c1 / 4 * m**3 + c2 / 2 * m**2 + c3 * m + 2 * c4
        assert invert_poly(2048, m).q_hat == pytest.approx(expected, rel=1e-12)

    def test_clamped_to_valid_range(self):
        assert invert_poly(1024, 0).q_hat >= 0
        assert invert_poly(8, 2.0).q_hat <= 8

    @pytest.mark.xfail(
        reason="the published cubic coefficients do not track the exact "
        "inverse below q ~ 80 at n=1024 (up to 79% relative error); kept "
        "as the documented accuracy target for the fast path",
        strict=True,
    )
    def test_fidelity_against_exact_inverse(self):
        for q in range(5, 104):
            m = expected_mismatch(1024, q)
            assert abs(invert_poly(1024, m).q_hat - q) / q <= 0.05


class TestEstimateFromSamples:
    def test_noiseless_round_trip(self):
        m = expected_mismatch(1024, 20)
        obs = [MismatchObservation(1024, m)] * 3
        assert estimate_from_samples(obs).q_hat == pytest.approx(20, abs=1e-4)

    def test_zero_mismatches(self):
        est = estimate_from_samples([MismatchObservation(1024, 0)])
        assert est.q_hat == 0
        assert est.method == "exact-inversion"

    def test_three_samples_median_within_5pct(self):
        rng = np.random.default_rng(21)
        n, q, reps = 1024, 20, 300
        errors = []
        for _ in range(reps):
            counts = sample_mismatch_counts(n, q, 3, rng)
            obs = [MismatchObservation(n, float(c)) for c in counts]
            errors.append(abs(estimate_from_samples(obs).q_hat - q) / q)
        assert float(np.median(errors)) <= 0.05

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            estimate_from_samples([])

    def test_mixed_n_rejected(self):
        with pytest.raises(ValueError):
            estimate_from_samples(
                [MismatchObservation(1024, 1), MismatchObservation(512, 1)]
            )

    def test_poly_method_selectable(self):
        est = estimate_from_samples([MismatchObservation(1024, 10)], method="poly")
        assert est.method == "polynomial"


class TestTypes:
    def test_observation_bounds(self):
        with pytest.raises(ValueError):
            MismatchObservation(1024, 257)

    def test_estimate_of(self):
        est = ErrorEstimate.of(10.0, 1000, "exact-inversion")
        assert est.qber_hat == pytest.approx(0.01)
