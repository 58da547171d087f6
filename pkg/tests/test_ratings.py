import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdcf import NO_RATING, RatingScale, RatingsMatrix, UserProfile, overall_mean, user_mean


class TestRatingScale:
    def test_requires_two_values(self):
        with pytest.raises(ValueError):
            RatingScale([3.0])
        with pytest.raises(ValueError):
            RatingScale([])

    def test_requires_strictly_increasing(self):
        with pytest.raises(ValueError):
            RatingScale([0, 2, 1])
        with pytest.raises(ValueError):
            RatingScale([0, 1, 1])

    def test_membership_and_index(self):
        scale = RatingScale.integer(0, 5)
        assert len(scale) == 6
        assert 3.0 in scale and 3 in scale
        assert 2.5 not in scale
        assert scale.index_of(4.0) == 4
        with pytest.raises(ValueError, match="off scale"):
            scale.index_of(7.0)

    def test_half_point_scale(self):
        scale = RatingScale([0, 0.5, 1.0])
        assert 0.5 in scale
        assert scale.min == 0 and scale.max == 1.0

    @pytest.mark.parametrize(
        "x,expected",
        [(2.4, 2.0), (2.6, 3.0), (2.5, 2.0), (-1.0, 0.0), (9.0, 5.0), (4.0, 4.0)],
    )
    def test_snap(self, x, expected):
        scale = RatingScale.integer(0, 5)
        assert scale.snap(x) == expected

    def test_snap_array(self):
        scale = RatingScale.integer(0, 5)
        out = scale.snap(np.array([-3.0, 1.2, 4.9]))
        assert out.tolist() == [0.0, 1.0, 5.0]


class TestNoRating:
    def test_distinct_from_every_number(self):
        assert NO_RATING != 0 and NO_RATING != 0.0
        for v in RatingScale.integer(0, 5):
            assert NO_RATING != v

    def test_singleton_and_falsy(self):
        assert repr(NO_RATING) == "NO_RATING"
        assert not NO_RATING


class TestRatingsMatrix:
    def test_lookup_returns_value_or_no_rating(self, scale05):
        m = RatingsMatrix(2, 3, [(0, 1, 4.0)], scale05)
        assert m.rating(0, 1) == 4.0
        assert m.rating(0, 0) is NO_RATING
        assert m.rating(1, 2) is NO_RATING

    def test_out_of_range_entry_rejected(self, scale05):
        with pytest.raises(ValueError, match="out of range"):
            RatingsMatrix(2, 3, [(2, 0, 1.0)], scale05)
        with pytest.raises(ValueError, match="out of range"):
            RatingsMatrix(2, 3, [(0, 3, 1.0)], scale05)

    def test_off_scale_entry_rejected(self, scale05):
        with pytest.raises(ValueError, match="off scale"):
            RatingsMatrix(2, 3, [(0, 0, 2.5)], scale05)

    def test_out_of_range_lookup(self, scale05):
        m = RatingsMatrix(2, 3, [(0, 1, 4.0)], scale05)
        with pytest.raises(IndexError):
            m.rating(2, 0)
        with pytest.raises(IndexError):
            m.rating(0, 3)

    def test_per_user_iteration_matches_totals(self, scale05):
        entries = [(0, 0, 1.0), (0, 2, 3.0), (1, 1, 5.0)]
        m = RatingsMatrix(2, 3, entries, scale05)
        assert m.user_ratings(0) == {0: 1.0, 2: 3.0}
        assert m.user_ratings(1) == {1: 5.0}
        assert m.n_ratings == sum(m.user_rating_count(i) for i in range(2)) == 3

    def test_title_columns_sorted_by_user(self, scale05):
        m = RatingsMatrix(3, 2, [(2, 0, 1.0), (0, 0, 2.0)], scale05)
        users, values, codes = m.title_column(0)
        assert users.tolist() == [0, 2]
        assert values.tolist() == [2.0, 1.0]
        assert codes.tolist() == [2, 1]

    @settings(max_examples=60, deadline=None)
    @given(
        st.dictionaries(
            st.tuples(st.integers(0, 5), st.integers(0, 5)),
            st.sampled_from([0.0, 1.0, 2.0, 3.0, 4.0, 5.0]),
            max_size=25,
        )
    )
    def test_round_trip(self, entries):
        scale = RatingScale.integer(0, 5)
        m = RatingsMatrix(6, 6, [(i, j, v) for (i, j), v in entries.items()], scale)
        assert dict(((i, j), v) for i, j, v in m.iter_entries()) == entries
        assert m.n_ratings == len(entries)


class TestMeans:
    def test_overall_mean_single_entry(self, scale05):
        m = RatingsMatrix(1, 1, [(0, 0, 3.0)], scale05)
        assert overall_mean(m) == 3.0

    def test_overall_mean_constant(self, scale05):
        m = RatingsMatrix(3, 1, [(i, 0, 4.0) for i in range(3)], scale05)
        assert overall_mean(m) == 4.0

    def test_overall_mean_hand_sum(self, scale05):
        m = RatingsMatrix(2, 2, [(0, 0, 0.0), (0, 1, 5.0), (1, 0, 2.0), (1, 1, 3.0)], scale05)
        assert overall_mean(m) == pytest.approx(2.5)

    def test_overall_mean_empty_errors(self, scale05):
        with pytest.raises(ValueError, match="no ratings"):
            overall_mean(RatingsMatrix(2, 2, [], scale05))

    def test_user_mean_cases(self, scale05):
        m = RatingsMatrix(3, 3, [(0, 0, 2.0), (1, 0, 1.0), (1, 1, 5.0),
                                 (2, 0, 0.0), (2, 1, 5.0), (2, 2, 4.0)], scale05)
        assert user_mean(m, 0) == 2.0
        assert user_mean(m, 1) == 3.0
        assert user_mean(m, 2) == pytest.approx(3.0)

    def test_user_mean_empty_user(self, scale05):
        m = RatingsMatrix(2, 2, [(0, 0, 1.0)], scale05)
        with pytest.raises(ValueError, match="empty user"):
            user_mean(m, 1)

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.sampled_from([0.0, 1.0, 2.0, 3.0, 4.0, 5.0]), min_size=1, max_size=30)
    )
    def test_overall_mean_within_scale_bounds(self, values):
        scale = RatingScale.integer(0, 5)
        m = RatingsMatrix(len(values), 1, [(i, 0, v) for i, v in enumerate(values)], scale)
        assert scale.min <= overall_mean(m) <= scale.max


class TestUserProfile:
    def test_unrated_titles(self):
        p = UserProfile({1: 3.0, 3: 4.0})
        assert p.unrated_titles(5) == [0, 2, 4]

    def test_with_rating_copies(self):
        p = UserProfile({0: 1.0})
        q = p.with_rating(1, 2.0)
        assert p.ratings == {0: 1.0}
        assert q.ratings == {0: 1.0, 1: 2.0}
