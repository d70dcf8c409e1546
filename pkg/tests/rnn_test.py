import numpy as np
import pytest
from scipy.special import expit

import app.rnn as rnn
from app.errors import DegenerateWeightsError, NumericError, ParameterError
from app.rnn import (
    build_hidden_weights,
    build_training_set,
    hidden_output,
    lcg_generate,
    solve_output_weights,
    standardize_rows,
)


def straight_lcg(Q, p):
    E = Q * (p + 1)
    a, b, c = E + 2, E + 3, E ** 2
    values = [E + 1]
    while len(values) < E:
        values.append((a * values[-1] + b) % c)
    return values


def random_training_set(rng, N, p=8):
    return build_training_set(rng.normal(size=(p, N)), rng.uniform(0, 1, size=N))


def objective(ts, hw, f, lam):
    Z = hidden_output(ts, hw)
    return float(np.sum((f @ Z - ts.D) ** 2) + lam * np.sum(f ** 2))


# LCG

def test_lcg_first_values_q4_p8():
    seq = lcg_generate(4, 8)
    assert (seq.length, seq.a, seq.b, seq.c) == (36, 38, 39, 1296)
    assert seq.values[:2].tolist() == [37, 149]


def test_lcg_first_values_q1_p1():
    seq = lcg_generate(1, 1)
    assert (seq.length, seq.a, seq.b, seq.c) == (2, 4, 5, 4)
    assert seq.values.tolist() == [3, 1]


@pytest.mark.parametrize("Q,p", [(4, 8), (19, 8), (29, 8)])
def test_lcg_matches_recurrence(Q, p):
    assert lcg_generate(Q, p).values.astype(np.int64).tolist() == straight_lcg(Q, p)


def test_lcg_is_deterministic():
    np.testing.assert_array_equal(lcg_generate(19, 8).values, lcg_generate(19, 8).values)


@pytest.mark.parametrize("Q,p", [(0, 8), (4, 0), (2.5, 8), (True, 8)])
def test_lcg_rejects_bad_shapes(Q, p):
    with pytest.raises(ParameterError):
        lcg_generate(Q, p)


# hidden weights

def test_hidden_weights_q4_p8_rows():
    hw = build_hidden_weights(4, 8)
    raw = np.array(straight_lcg(4, 8), dtype=float).reshape(4, 9)

    assert hw.W.shape == (4, 9)
    np.testing.assert_allclose(hw.W[0], (raw[0] - raw[0].mean()) / raw[0].std(), atol=1e-15)


@pytest.mark.parametrize("Q", [1, 4, 9, 14, 19, 24, 29])
def test_hidden_weight_rows_standardized(Q):
    W = build_hidden_weights(Q, 8).W
    assert np.abs(W.mean(axis=1)).max() < 1e-12
    np.testing.assert_allclose(W.std(axis=1), 1.0, atol=1e-12)


def test_hidden_weights_repeat_bit_identical():
    first = build_hidden_weights(29, 8).W.copy()
    rnn._hidden_weights_cached.cache_clear()
    np.testing.assert_array_equal(build_hidden_weights(29, 8).W, first)


def test_constant_segment_is_degenerate(monkeypatch):
    def constant_sequence(Q, p):
        seq = lcg_generate(Q, p)
        values = seq.values.copy()
        values[: p + 1] = 5.0
        return rnn.LcgSequence(seq.length, seq.a, seq.b, seq.c, values)

    rnn._hidden_weights_cached.cache_clear()
    monkeypatch.setattr(rnn, "lcg_generate", constant_sequence)
    try:
        with pytest.raises(DegenerateWeightsError):
            build_hidden_weights(3, 4)
    finally:
        rnn._hidden_weights_cached.cache_clear()


# training sets

def test_training_set_has_bias_row(rng):
    ts = random_training_set(rng, 30)
    assert ts.X.shape == (9, 30) and ts.p == 8 and ts.N == 30
    np.testing.assert_array_equal(ts.X[0], 1.0)


def test_standardize_constant_row_to_zero():
    M = np.array([[3.0, 3.0, 3.0], [1.0, 2.0, 3.0]])
    out = standardize_rows(M)
    np.testing.assert_array_equal(out[0], 0.0)
    np.testing.assert_allclose(out[1], [-np.sqrt(1.5), 0.0, np.sqrt(1.5)])


def test_training_set_shape_mismatch():
    with pytest.raises(ParameterError):
        build_training_set(np.zeros((8, 4)), np.zeros(5))


def test_non_finite_training_data():
    X = np.zeros((8, 4))
    X[2, 1] = np.nan
    with pytest.raises(NumericError):
        build_training_set(X, np.zeros(4))


# output weights

def test_hidden_output_appends_bias(rng):
    ts = random_training_set(rng, 12)
    hw = build_hidden_weights(4, 8)
    Z = hidden_output(ts, hw)

    assert Z.shape == (5, 12)
    np.testing.assert_array_equal(Z[-1], 1.0)
    np.testing.assert_allclose(Z[:4], expit(hw.W @ ts.X))


def test_random_systems_satisfy_normal_equations(rng):
    for _ in range(100):
        N = int(rng.integers(1, 501))
        Q = int(rng.integers(1, 30))
        ts = random_training_set(rng, N)
        hw = build_hidden_weights(Q, 8)
        f = solve_output_weights(ts, hw, 1e-3).f

        Z = hidden_output(ts, hw)
        A = Z @ Z.T + 1e-3 * np.eye(Q + 1)
        assert len(f) == Q + 1
        assert np.abs(A @ f - Z @ ts.D).max() < 1e-8

        oracle = ts.D @ Z.T @ np.linalg.pinv(A)
        assert np.linalg.norm(f - oracle) <= 1e-8 * max(np.linalg.norm(oracle), 1e-300)


def test_fifty_samples_match_pseudo_inverse(rng):
    ts = random_training_set(rng, 50)
    hw = build_hidden_weights(4, 8)
    Z = hidden_output(ts, hw)

    oracle = ts.D @ Z.T @ np.linalg.pinv(Z @ Z.T + 1e-3 * np.eye(5))
    f = solve_output_weights(ts, hw, 1e-3).f
    assert np.linalg.norm(f - oracle) <= 1e-8 * np.linalg.norm(oracle)


def test_zero_labels_give_zero_weights(rng):
    ts = build_training_set(rng.normal(size=(8, 40)), np.zeros(40))
    f = solve_output_weights(ts, build_hidden_weights(19, 8)).f
    np.testing.assert_array_equal(f, 0.0)


def test_solution_minimizes_ridge_objective(rng):
    ts = random_training_set(rng, 80)
    hw = build_hidden_weights(9, 8)
    f = solve_output_weights(ts, hw, 1e-2).f
    best = objective(ts, hw, f, 1e-2)

    for _ in range(20):
        assert objective(ts, hw, f + 1e-3 * rng.normal(size=f.shape), 1e-2) >= best


def test_weight_norm_shrinks_with_lambda(rng):
    ts = random_training_set(rng, 60)
    hw = build_hidden_weights(14, 8)
    norms = [np.linalg.norm(solve_output_weights(ts, hw, lam).f) for lam in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)]

    assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))


def test_solve_is_bit_stable(rng):
    ts = random_training_set(rng, 200)
    hw = build_hidden_weights(29, 8)
    np.testing.assert_array_equal(solve_output_weights(ts, hw).f, solve_output_weights(ts, hw).f)


def test_single_sample_is_solvable(rng):
    f = solve_output_weights(random_training_set(rng, 1), build_hidden_weights(4, 8)).f
    assert np.all(np.isfinite(f))


@pytest.mark.parametrize("lam", [0.0, -1e-3])
def test_lambda_must_be_positive(rng, lam):
    with pytest.raises(ParameterError):
        solve_output_weights(random_training_set(rng, 10), build_hidden_weights(4, 8), lam)


def test_attribute_count_must_match(rng):
    with pytest.raises(ParameterError):
        solve_output_weights(random_training_set(rng, 10, p=5), build_hidden_weights(4, 8))
