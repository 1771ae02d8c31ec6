import numpy as np
import pytest

from evoctrl import game


def test_payoff_matrix_is_frozen():
    expected = np.array([
        [0, 0, 2, 0, -2],
        [2, 0, 0, -2, 0],
        [0, 2, 0, 2, -1],
        [-2, 0, 1, 0, 1],
        [0, -2, -2, 1, 0],
    ])
    assert game.PAYOFF_MATRIX.shape == (5, 5)
    assert (game.PAYOFF_MATRIX == expected).all()


def test_exact_builds_rational_points():
    x = game.exact((1, 1, 1, 0, 0), 3)
    assert (x == game.NASH_1).all()
    assert x.sum() == 1
    y = game.exact((0, 0, 0, 1, 1), 2)
    assert (y == game.NASH_2).all()


def test_on_simplex():
    assert game.on_simplex(np.full(5, 0.2))
    assert game.on_simplex(np.asarray(game.NASH_1, dtype=float))
    assert not game.on_simplex(np.array([0.5, 0.5, 0.5, -0.25, -0.25]))
    assert not game.on_simplex(np.full(5, 0.25))


def test_to_simplex_normalizes_counts():
    x = game.to_simplex([2, 1, 1, 1, 0])
    assert game.on_simplex(x)
    assert x[0] == pytest.approx(0.4)


def test_both_rest_points_are_nash(A):
    for label, eq in game.EQUILIBRIA:
        check = game.is_nash(A, eq)
        assert check.ok, f"{label} rejected: {check}"
        assert check.violator is None


def test_nash_support_payoffs_are_level(A):
    # inside the support every strategy earns the mean payoff
    for eq in (game.NASH_1, game.NASH_2):
        x = np.asarray(eq, dtype=float)
        pay = game.expected_payoffs(A, x)
        mean = game.mean_payoff(A, x)
        support = x > 0
        assert np.allclose(pay[support], mean, atol=1e-12)
        assert (pay[~support] <= mean + 1e-12).all()


def test_non_nash_point_is_rejected(A):
    check = game.is_nash(A, np.full(5, 0.2))
    assert not check.ok
    assert check.violator is not None


def test_round_payoffs_exclude_self_play(A):
    # a player on 1 meets one other on 1 (payoff 0) and one on 3 (payoff 2)
    pay = game.round_payoffs(A, (2, 0, 1, 0, 0))
    assert pay[0] == 2
    assert pay[2] == 0
    # the game matrix has a zero diagonal, so probe self-exclusion directly
    ident = np.eye(5)
    pay2 = game.round_payoffs(ident, (2, 0, 1, 0, 0))
    assert pay2[0] == 1
    assert pay2[2] == 0


def test_round_payoffs_reject_degenerate_counts(A):
    with pytest.raises(ValueError):
        game.round_payoffs(A, (1, 0, 0, 0, 0))
    with pytest.raises(ValueError):
        game.round_payoffs(A, (3, -1, 1, 1, 1))


def test_permutation_codes():
    assert game.CANONICAL_PERMUTATION_CODES == ("00", "14", "15", "24", "25", "34", "35")
    ident = game.StrategyPermutation("00")
    assert ident.is_identity and ident.is_canonical
    p = game.StrategyPermutation("14")
    assert not p.is_identity
    assert list(p.mapping) == [3, 1, 2, 0, 4]


def test_permutation_rejects_malformed_codes():
    for bad in ("4", "11", "09", "41a", "123"):
        with pytest.raises(ValueError):
            game.StrategyPermutation(bad)


def test_permutation_matrix_is_two_sided(A):
    p = game.StrategyPermutation("25")
    Ap = p.matrix(A)
    m = p.mapping
    for i in range(5):
        for j in range(5):
            assert Ap[i, j] == A[m[i], m[j]]
    # transpositions are involutions
    assert (p.matrix(Ap) == A).all()


def test_permutation_preserves_nash(A):
    for code in game.CANONICAL_PERMUTATION_CODES:
        p = game.StrategyPermutation(code)
        Ap = p.matrix(A)
        xp = p.vector(np.asarray(game.NASH_1, dtype=float))
        assert game.is_nash(Ap, xp).ok


def test_apply_permutation_bundle(A):
    p = game.StrategyPermutation("34")
    out = game.apply_permutation(p, {"A": A, "x": np.arange(5.0)})
    assert (out["A"] == p.matrix(A)).all()
    assert (out["x"] == p.vector(np.arange(5.0))).all()
    with pytest.raises(ValueError):
        game.apply_permutation(p, {"t": np.zeros((2, 2, 2))})


def test_load_game_default_matches_module(A):
    loaded, equilibria = game.load_game()
    assert (loaded == A).all()
    labels = [label for label, _ in equilibria]
    assert "Nash_1" in labels and "Nash_2" in labels
    for _, shares in equilibria:
        assert game.on_simplex(shares)


def test_load_game_rejects_wrong_shape(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"payoff_matrix": [[0, 1], [1, 0]]}')
    with pytest.raises(ValueError):
        game.load_game(bad)
