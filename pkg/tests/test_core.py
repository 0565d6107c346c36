import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from electgnn.core import (
    BallotKind,
    Election,
    PreferenceProfile,
    borda_scores,
    column_welfare,
    condorcet_winner,
    ranking_to_borda,
    smith_set,
    utilities_to_ranking,
    validate_ranking,
    welfare,
    welfare_winner,
)

U22 = np.array([[1.0, 2.0], [3.0, 4.0]])


def utility_matrices(max_n=7, max_m=5):
    return st.tuples(st.integers(1, max_n), st.integers(1, max_m)).flatmap(
        lambda s: arrays(np.float64, s, elements=st.floats(0, 1, allow_nan=False, width=32))
    )


class TestRanking:
    def test_sort_order(self):
        assert utilities_to_ranking([0.9, 0.1, 0.5]).tolist() == [1, 3, 2]

    def test_tie_goes_to_lower_index(self):
        assert utilities_to_ranking([0.5, 0.5]).tolist() == [1, 2]

    def test_single_candidate(self):
        assert utilities_to_ranking([1.0]).tolist() == [1]

    def test_empty_row_rejected(self):
        with pytest.raises(ValueError):
            utilities_to_ranking([])

    @given(utility_matrices())
    def test_rows_are_permutations(self, u):
        r = utilities_to_ranking(u)
        validate_ranking(r)
        assert r.shape == u.shape

    @given(utility_matrices())
    def test_borda_preserves_utility_order(self, u):
        b = borda_scores(utilities_to_ranking(u))
        for row_u, row_b in zip(u, b):
            order = sorted(range(len(row_u)), key=lambda j: (-row_u[j], j))
            assert all(row_b[order[k]] > row_b[order[k + 1]] for k in range(len(order) - 1))

    def test_bad_ranking_rejected(self):
        with pytest.raises(ValueError):
            validate_ranking([[1, 1, 2]])


class TestBorda:
    def test_examples(self):
        assert ranking_to_borda(1, 4) == 0.75
        assert ranking_to_borda(7, 7) == 0.0
        assert borda_scores([[1, 2]]).tolist() == [[0.5, 0.0]]

    @pytest.mark.parametrize("rank", [0, 5])
    def test_out_of_range(self, rank):
        with pytest.raises(ValueError):
            ranking_to_borda(rank, 4)

    @given(st.integers(1, 30))
    def test_decreasing_and_sum(self, m):
        scores = [ranking_to_borda(r, m) for r in range(1, m + 1)]
        assert all(a > b for a, b in zip(scores, scores[1:]))
        assert sum(scores) == pytest.approx((m - 1) / 2)


class TestWelfare:
    def test_examples(self):
        assert welfare(U22, "utilitarian", 1) == 6
        assert welfare(U22, "nash", 0) == 3
        assert welfare(U22, "rawlsian", 1) == 2

    def test_index_error(self):
        with pytest.raises(IndexError):
            welfare(U22, "utilitarian", 2)

    def test_log_space_nash(self):
        assert column_welfare(U22, "nash", log_space=True) == pytest.approx([3.0, 8.0])
        with pytest.raises(ValueError):
            column_welfare(-U22, "nash", log_space=True)

    def test_plain_nash_allows_negative(self):
        assert column_welfare([[-1.0], [2.0]], "nash").tolist() == [-2.0]

    @given(utility_matrices(), st.floats(0.1, 10))
    def test_scaling(self, u, lam):
        u = u + 0.01
        assert np.allclose(column_welfare(lam * u, "utilitarian"), lam * column_welfare(u, "utilitarian"))
        for kind in ("utilitarian", "nash", "rawlsian"):
            assert welfare_winner(lam * u, kind) == welfare_winner(u, kind) or np.isclose(
                column_welfare(u, kind).max(), np.sort(column_welfare(u, kind))[-2]
            )


class TestTypes:
    def test_election_validation(self):
        assert Election(U22).n == 2
        with pytest.raises(ValueError):
            Election(np.array([[np.nan]]))
        with pytest.raises(ValueError):
            Election(np.zeros((0, 3)))

    def test_ranking_profile_validation(self):
        PreferenceProfile(np.array([[0.5, 0.0]]), BallotKind.RANKING)
        with pytest.raises(ValueError):
            PreferenceProfile(np.array([[0.7, 0.0]]), BallotKind.RANKING)

    def test_from_utilities(self):
        p = PreferenceProfile.from_utilities([[0.2, 0.9, 0.4]], "ranking")
        assert p.scores == pytest.approx(np.array([[0.0, 2 / 3, 1 / 3]]))


class TestSmith:
    def test_single_candidate(self):
        assert smith_set([[1], [1]]) == {0}

    def test_cycle(self):
        ranks = [[1, 2, 3], [3, 1, 2], [2, 3, 1]]
        assert smith_set(ranks) == {0, 1, 2}
        assert condorcet_winner(ranks) is None

    @given(utility_matrices(max_n=7, max_m=5))
    def test_matches_subset_enumeration(self, u):
        ranks = utilities_to_ranking(u)
        orders = oracles.orders_from_ranks(ranks)
        m = u.shape[1]
        assert smith_set(ranks) == oracles.smith(orders, m)
        cw = oracles.condorcet(orders, m)
        assert condorcet_winner(ranks) == cw
        if cw is not None:
            assert smith_set(ranks) == {cw}
