import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_instance
from pdcf import (
    CORRELATION,
    VECTOR_SIMILARITY,
    RatingScale,
    RatingsMatrix,
    UserProfile,
    baseline_predict,
    cosine_similarity,
    overall_mean,
    pearson_similarity,
    similarity_weights,
    user_mean,
)

scale_vals = st.sampled_from([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])


def matrix_from_rows(rows, n_titles, scale):
    entries = [
        (i, j, v) for i, row in enumerate(rows) for j, v in row.items()
    ]
    return RatingsMatrix(len(rows), n_titles, entries, scale)


class TestPearson:
    def test_identical_overlap_with_variance(self, scale05):
        m = matrix_from_rows([{0: 1.0, 1: 4.0, 2: 3.0}], 3, scale05)
        active = UserProfile({0: 1.0, 1: 4.0})
        assert pearson_similarity(active, m, 0) == pytest.approx(1.0, abs=1e-9)

    def test_empty_overlap(self, scale05):
        m = matrix_from_rows([{2: 5.0}], 3, scale05)
        active = UserProfile({0: 1.0, 1: 4.0})
        assert pearson_similarity(active, m, 0) == 0.0

    def test_two_point_anticorrelation(self, scale05):
        m = matrix_from_rows([{0: 5.0, 1: 1.0}], 2, scale05)
        active = UserProfile({0: 1.0, 1: 5.0})
        assert pearson_similarity(active, m, 0) == pytest.approx(-1.0, abs=1e-9)

    def test_single_title_overlap_degenerate(self, scale05):
        m = matrix_from_rows([{0: 5.0, 2: 1.0}], 3, scale05)
        active = UserProfile({0: 5.0, 1: 2.0})
        assert pearson_similarity(active, m, 0) == 0.0

    def test_zero_variance_side_degenerate(self, scale05):
        m = matrix_from_rows([{0: 3.0, 1: 3.0}], 2, scale05)
        active = UserProfile({0: 1.0, 1: 4.0})
        assert pearson_similarity(active, m, 0) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(
        st.dictionaries(st.integers(0, 4), scale_vals, min_size=2, max_size=5),
        st.dictionaries(st.integers(0, 4), scale_vals, min_size=2, max_size=5),
    )
    def test_symmetry(self, a, b):
        scale = RatingScale.integer(0, 5)
        m_b = matrix_from_rows([b], 5, scale)
        m_a = matrix_from_rows([a], 5, scale)
        ab = pearson_similarity(UserProfile(a), m_b, 0)
        ba = pearson_similarity(UserProfile(b), m_a, 0)
        assert ab == pytest.approx(ba, abs=1e-9)

    def test_shift_invariance_on_overlap(self, scale05):
        # adding a constant to both sides of the co-rated values leaves
        # the correlation unchanged
        base_b = {0: 1.0, 1: 3.0, 2: 2.0}
        base_a = {0: 2.0, 1: 4.0, 2: 2.0}
        m = matrix_from_rows([base_b], 3, scale05)
        r1 = pearson_similarity(UserProfile(base_a), m, 0)
        shifted_b = {j: v + 1 for j, v in base_b.items()}
        shifted_a = {j: v + 1 for j, v in base_a.items()}
        m2 = matrix_from_rows([shifted_b], 3, scale05)
        r2 = pearson_similarity(UserProfile(shifted_a), m2, 0)
        assert r1 == pytest.approx(r2, abs=1e-9)

    def test_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            matrix, active, _ = random_instance(rng)
            for i in range(matrix.n_users):
                assert -1.0 <= pearson_similarity(active, matrix, i) <= 1.0


class TestCosine:
    def test_identical_vectors(self, scale05):
        m = matrix_from_rows([{0: 2.0, 1: 5.0}], 2, scale05)
        active = UserProfile({0: 2.0, 1: 5.0})
        assert cosine_similarity(active, m, 0) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_supports(self, scale05):
        m = matrix_from_rows([{0: 4.0}], 3, scale05)
        active = UserProfile({1: 3.0, 2: 2.0})
        assert cosine_similarity(active, m, 0) == 0.0

    def test_hand_computed(self, scale05):
        # active (3, _) vs user (3, 4): 9 / (3 * 5) = 0.6
        m = matrix_from_rows([{0: 3.0, 1: 4.0}], 2, scale05)
        active = UserProfile({0: 3.0})
        assert cosine_similarity(active, m, 0) == pytest.approx(0.6, abs=1e-12)

    def test_empty_profile_degenerate(self, scale05):
        m = matrix_from_rows([{0: 4.0}], 2, scale05)
        assert cosine_similarity(UserProfile({}), m, 0) == 0.0

    def test_unit_range_on_nonnegative_scale(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            matrix, active, _ = random_instance(rng)
            for i in range(matrix.n_users):
                w = cosine_similarity(active, matrix, i)
                assert 0.0 <= w <= 1.0


class TestSimilarityWeights:
    def test_matches_per_user_functions(self, scale05):
        rng = np.random.default_rng(5)
        matrix, active, _ = random_instance(rng)
        pear = similarity_weights(CORRELATION, active, matrix)
        cos = similarity_weights(VECTOR_SIMILARITY, active, matrix)
        for i in range(matrix.n_users):
            assert pear.values[i] == pearson_similarity(active, matrix, i)
            assert cos.values[i] == cosine_similarity(active, matrix, i)

    def test_unknown_kind(self, toy_matrix):
        with pytest.raises(ValueError, match="unknown similarity kind"):
            similarity_weights("euclidean", UserProfile({}), toy_matrix)


class TestBaselinePredict:
    def test_correlation_single_perfect_neighbor(self, scale05):
        # weight 1, active mean 3, neighbor mean 2, neighbor rated j at 4:
        # prediction = 3 + (4 - 2) / 1 = 5
        m = matrix_from_rows([{0: 1.0, 1: 3.0, 2: 4.0, 3: 0.0}], 4, scale05)
        active = UserProfile({0: 2.0, 1: 4.0, 3: 3.0})
        assert user_mean(m, 0) == 2.0
        assert pearson_similarity(active, m, 0) == pytest.approx(1.0)
        got = baseline_predict(CORRELATION, 2, active, m)
        assert got == pytest.approx(5.0, abs=1e-9)

    def test_no_rater_falls_back_to_overall_mean(self, scale05):
        m = matrix_from_rows([{0: 1.0}, {0: 4.0}], 2, scale05)
        active = UserProfile({0: 2.0})
        for kind in (CORRELATION, VECTOR_SIMILARITY):
            assert baseline_predict(kind, 1, active, m) == overall_mean(m)

    def test_degenerate_weights_fall_back(self, scale05):
        # one rater of j, but the overlap with the active user is empty
        m = matrix_from_rows([{1: 5.0}], 2, scale05)
        active = UserProfile({0: 2.0})
        for kind in (CORRELATION, VECTOR_SIMILARITY):
            assert baseline_predict(kind, 1, active, m) == overall_mean(m)

    def test_vector_similarity_constant_column(self, scale05):
        rows = [{0: 3.0, 1: 4.0}, {0: 2.0, 1: 4.0}, {0: 5.0, 1: 4.0}]
        m = matrix_from_rows(rows, 2, scale05)
        active = UserProfile({0: 3.0})
        assert baseline_predict(VECTOR_SIMILARITY, 1, active, m) == pytest.approx(4.0)

    def test_rated_title_rejected(self, scale05):
        m = matrix_from_rows([{0: 3.0}], 1, scale05)
        with pytest.raises(ValueError, match="not in NR"):
            baseline_predict(CORRELATION, 0, UserProfile({0: 2.0}), m)

    def test_mismatched_precomputed_weights_rejected(self, scale05):
        m = matrix_from_rows([{0: 3.0, 1: 2.0}], 2, scale05)
        active = UserProfile({0: 3.0})
        w = similarity_weights(VECTOR_SIMILARITY, active, m)
        with pytest.raises(ValueError, match="weights"):
            baseline_predict(CORRELATION, 1, active, m, w)

    def test_predictions_stay_on_scale_range(self):
        rng = np.random.default_rng(6)
        checked = 0
        for _ in range(30):
            matrix, active, _ = random_instance(rng)
            if matrix.n_ratings == 0:
                continue
            for kind in (CORRELATION, VECTOR_SIMILARITY):
                for j in active.unrated_titles(matrix.n_titles):
                    p = baseline_predict(kind, j, active, matrix)
                    assert matrix.scale.min <= p <= matrix.scale.max
                    checked += 1
        assert checked > 50

    def test_matching_neighbor_offset_property(self, scale05):
        # single database user identical to the active user on the overlap:
        # correlation prediction = active_mean + (R_ij - user_mean)
        rows = [{0: 1.0, 1: 4.0, 2: 2.0, 3: 5.0}]
        m = matrix_from_rows(rows, 4, scale05)
        active = UserProfile({0: 1.0, 1: 4.0, 2: 2.0})
        active_mean = np.mean([1.0, 4.0, 2.0])
        expect = np.clip(active_mean + (5.0 - user_mean(m, 0)), 0, 5)
        assert baseline_predict(CORRELATION, 3, active, m) == pytest.approx(float(expect))
