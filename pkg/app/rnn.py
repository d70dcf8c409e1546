"""
Randomized Neural Network
Single hidden layer with LCG weights and ridge-solved output weights.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg
from scipy.special import expit

from app.errors import DegenerateWeightsError, NumericError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 1e-3


@dataclass(frozen=True)
class LcgSequence:
    """V(1) = E + 1, V(n+1) = (a V(n) + b) mod c with a = E + 2, b = E + 3, c = E^2."""

    length: int
    a: int
    b: int
    c: int
    values: np.ndarray


@dataclass(frozen=True)
class HiddenWeights:
    Q: int
    p: int
    W: np.ndarray  # Q x (p + 1), rows standardized


@dataclass(frozen=True)
class TrainingSet:
    X: np.ndarray  # (p + 1) x N, row 0 is the bias
    D: np.ndarray  # N labels

    @property
    def p(self) -> int:
        return self.X.shape[0] - 1

    @property
    def N(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class OutputWeights:
    f: np.ndarray  # Q + 1
    lam: float


def _check_positive_int(name: str, value) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def lcg_generate(Q: int, p: int) -> LcgSequence:
    """Deterministic sequence of length Q * (p + 1)."""
    Q = _check_positive_int("Q", Q)
    p = _check_positive_int("p", p)

    length = Q * (p + 1)
    a, b, c = length + 2, length + 3, length * length
    values = [length + 1]
    for _ in range(length - 1):
        values.append((a * values[-1] + b) % c)

    return LcgSequence(length=length, a=a, b=b, c=c, values=np.array(values, dtype=np.float64))


def standardize_rows(M: np.ndarray) -> np.ndarray:
    """Zero mean, unit population std per row; constant rows become zeros."""
    M = np.asarray(M, dtype=np.float64)
    mean = M.mean(axis=1, keepdims=True)
    std = M.std(axis=1, keepdims=True)
    centered = M - mean
    safe = np.where(std > 0, std, 1.0)
    return np.where(std > 0, centered / safe, 0.0)


@lru_cache(maxsize=64)
def _hidden_weights_cached(Q: int, p: int) -> HiddenWeights:
    sequence = lcg_generate(Q, p)
    W = sequence.values.reshape(Q, p + 1)
    std = W.std(axis=1)
    if np.any(std == 0):
        row = int(np.argmin(std))
        raise DegenerateWeightsError(f"LCG segment {row} for Q={Q}, p={p} is constant")
    W = (W - W.mean(axis=1, keepdims=True)) / std[:, None]
    W.setflags(write=False)
    return HiddenWeights(Q=Q, p=p, W=W)


def build_hidden_weights(Q: int, p: int) -> HiddenWeights:
    """
    Hidden-layer weights from the LCG sequence split into Q rows of p + 1.

    Depends only on (Q, p), so one instance is shared by every network of
    that shape.

    Raises:
        DegenerateWeightsError: a row of the sequence is constant
    """
    return _hidden_weights_cached(_check_positive_int("Q", Q), _check_positive_int("p", p))


def build_training_set(X_raw: np.ndarray, D: np.ndarray) -> TrainingSet:
    """
    Standardize the p attribute rows of X_raw and prepend the bias row of ones.

    Args:
        X_raw: p x N attributes
        D: N labels, used as given
    """
    X_raw = np.atleast_2d(np.asarray(X_raw, dtype=np.float64))
    D = np.asarray(D, dtype=np.float64).ravel()
    if X_raw.shape[1] != D.shape[0]:
        raise ParameterError(f"X has {X_raw.shape[1]} samples but D has {D.shape[0]}")
    if D.shape[0] < 1:
        raise ParameterError("training set needs at least one sample")
    if not (np.all(np.isfinite(X_raw)) and np.all(np.isfinite(D))):
        raise NumericError("training set contains non-finite values")

    X = np.vstack([np.ones((1, X_raw.shape[1])), standardize_rows(X_raw)])
    return TrainingSet(X=X, D=D)


def hidden_output(ts: TrainingSet, hw: HiddenWeights) -> np.ndarray:
    """Z = [sigmoid(W X); 1], shape (Q + 1) x N."""
    Z = expit(hw.W @ ts.X)
    return np.vstack([Z, np.ones((1, ts.N))])


def solve_output_weights(ts: TrainingSet, hw: HiddenWeights, lam: float = DEFAULT_LAMBDA) -> OutputWeights:
    """
    f = D Z^T (Z Z^T + lam I)^-1, solved as (Z Z^T + lam I) f^T = Z D^T.

    Raises:
        ParameterError: p mismatch or lam <= 0
        NumericError: non-finite data or a failed factorization
    """
    if ts.p != hw.p:
        raise ParameterError(f"training set has p={ts.p} but hidden weights expect p={hw.p}")
    if not lam > 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    if not (np.all(np.isfinite(ts.X)) and np.all(np.isfinite(ts.D))):
        raise NumericError("training set contains non-finite values")

    Z = hidden_output(ts, hw)
    A = Z @ Z.T
    A[np.diag_indices_from(A)] += lam
    rhs = Z @ ts.D

    try:
        f = linalg.cho_solve(linalg.cho_factor(A, lower=True, check_finite=False), rhs, check_finite=False)
    except linalg.LinAlgError as e:
        raise NumericError(f"output-weight solve failed for Q={hw.Q}: {e}") from e

    if not np.all(np.isfinite(f)):
        raise NumericError(f"output-weight solve produced non-finite values for Q={hw.Q}")
    return OutputWeights(f=f, lam=float(lam))


if __name__ == '__main__':
    print("=" * 70)
    print("LCG Hidden Weights")
    print("=" * 70)

    for Q in (4, 19, 29):
        seq = lcg_generate(Q, 8)
        print(f"\nQ={Q}, p=8: E={seq.length}, a={seq.a}, b={seq.b}, c={seq.c}")
        print(f"  V(1..5) = {seq.values[:5].astype(int).tolist()}")
        hw = build_hidden_weights(Q, 8)
        print(f"  W shape {hw.W.shape}, row means max |.| = {np.abs(hw.W.mean(axis=1)).max():.2e}")
