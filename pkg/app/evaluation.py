"""
Evaluation
Regularized LDA, leave-one-out cross-validation and parameter sweeps.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg
from tqdm import tqdm

from app.errors import DatasetError, ParameterError, SingularCovarianceError
from app.network import Radius
from app.signature import SignatureExtractor, assemble, signature_length

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 1e-4
SWEEP_MODES = ("theta_pairs", "psi_pairs", "psi_triples")


@dataclass
class FeatureTable:
    rows: np.ndarray  # N_s x F
    labels: np.ndarray  # N_s class ids
    class_names: Optional[List[str]] = None

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.class_names is None:
            n = int(self.labels.max()) + 1 if self.labels.size else 0
            self.class_names = [str(c) for c in range(n)]

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def validate(self):
        """
        Raises:
            ParameterError: label count mismatch or labels outside class_names
            DatasetError: fewer than 2 classes, or a class with fewer than 2 samples
        """
        if self.labels.shape[0] != self.n_samples:
            raise ParameterError(f"{self.labels.shape[0]} labels for {self.n_samples} rows")
        if self.n_features < 1:
            raise ParameterError("feature table has no feature columns")
        if self.n_samples == 0:
            raise DatasetError("feature table has no samples")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ParameterError("labels outside the class name list")
        counts = np.bincount(self.labels, minlength=self.n_classes)
        if np.count_nonzero(counts) < 2:
            raise DatasetError("leave-one-out needs at least 2 classes")
        small = [self.class_names[c] for c in np.flatnonzero(counts < 2)]
        if small:
            raise DatasetError(f"classes with fewer than 2 samples: {small}")


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # C x C, rows = true class
    per_class: np.ndarray
    predictions: np.ndarray
    class_names: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "accuracy": self.accuracy,
            "accuracy_percent": round(100.0 * self.accuracy, 2),
            "n_samples": int(self.confusion.sum()),
            "class_names": list(self.class_names),
            "confusion": self.confusion.tolist(),
            "per_class": [float(a) for a in self.per_class],
        }


class LdaModel:
    """
    Linear discriminant with a pooled covariance ridge
    S_w + gamma * mean(diag(S_w)) * I.
    """

    def __init__(self, gamma: float = DEFAULT_GAMMA):
        if gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {gamma}")
        self.gamma = gamma
        self.classes = None
        self.means = None
        self.log_priors = None
        self._coef = None
        self._intercept = None

    def fit(self, rows: np.ndarray, labels: np.ndarray) -> "LdaModel":
        rows = np.asarray(rows, dtype=np.float64)
        labels = np.asarray(labels)
        self.classes = np.unique(labels)
        if len(self.classes) < 2:
            raise ParameterError("LDA needs at least 2 classes")

        counts = np.array([np.count_nonzero(labels == c) for c in self.classes])
        self.means = np.stack([rows[labels == c].mean(axis=0) for c in self.classes])
        centered = rows - self.means[np.searchsorted(self.classes, labels)]
        scatter = centered.T @ centered
        self._finish(scatter, counts)
        return self

    def _finish(self, scatter: np.ndarray, counts: np.ndarray):
        n, n_classes = int(counts.sum()), len(counts)
        dof = n - n_classes if n > n_classes else n
        covariance = scatter / dof
        self.log_priors = np.log(counts / n)
        self._coef, self._intercept = _discriminant(covariance, self.means, self.log_priors, self.gamma)

    def scores(self, rows: np.ndarray) -> np.ndarray:
        return np.atleast_2d(rows) @ self._coef + self._intercept

    def predict(self, rows: np.ndarray) -> np.ndarray:
        # argmax keeps the first maximum, i.e. the lowest class id on ties
        return self.classes[np.argmax(self.scores(rows), axis=1)]


def _discriminant(covariance: np.ndarray, means: np.ndarray, log_priors: np.ndarray,
                  gamma: float) -> Tuple[np.ndarray, np.ndarray]:
    n_features = covariance.shape[0]
    scale = float(np.mean(np.diag(covariance)))
    regularized = covariance.copy()
    if gamma > 0:
        # a zero-variance table still needs a usable ridge
        regularized[np.diag_indices(n_features)] += gamma * (scale if scale > 0 else 1.0)
    elif np.linalg.matrix_rank(regularized) < n_features:
        raise SingularCovarianceError(
            f"within-class covariance is singular ({n_features} features) and gamma is 0"
        )

    try:
        factor = linalg.cho_factor(regularized, lower=True, check_finite=False)
        coef = linalg.cho_solve(factor, means.T, check_finite=False)
    except linalg.LinAlgError as e:
        raise SingularCovarianceError(f"within-class covariance is not invertible: {e}") from e

    intercept = -0.5 * np.einsum("ij,ji->i", means, coef) + log_priors
    return coef, intercept


def lda_fit(train: FeatureTable, gamma: float = DEFAULT_GAMMA) -> LdaModel:
    return LdaModel(gamma).fit(train.rows, train.labels)


class _Downdater:
    """Per-fold LDA from full-data statistics with a rank-one scatter downdate."""

    def __init__(self, table: FeatureTable, gamma: float):
        self.table = table
        self.gamma = gamma
        self.classes = np.unique(table.labels)
        self.counts = np.array([np.count_nonzero(table.labels == c) for c in self.classes])
        self.means = np.stack([table.rows[table.labels == c].mean(axis=0) for c in self.classes])
        self.index = np.searchsorted(self.classes, table.labels)
        centered = table.rows - self.means[self.index]
        self.scatter = centered.T @ centered

    def fold(self, i: int) -> LdaModel:
        x = self.table.rows[i]
        c = self.index[i]
        n_c = self.counts[c]
        delta = x - self.means[c]

        model = LdaModel(self.gamma)
        model.classes = self.classes
        model.means = self.means.copy()
        model.means[c] = (n_c * self.means[c] - x) / (n_c - 1)
        counts = self.counts.copy()
        counts[c] -= 1
        scatter = self.scatter - (n_c / (n_c - 1)) * np.outer(delta, delta)
        model._finish(scatter, counts)
        return model


def leave_one_out(table: FeatureTable, gamma: float = DEFAULT_GAMMA, threads: int = 1,
                  downdate: bool = False, progress: bool = False) -> EvalResult:
    """
    N_s folds, each trained on every sample but one.

    Folds are independent and run on a thread pool; results are collected
    in fold order so the thread count never changes the outcome.
    """
    table.validate()
    n = table.n_samples
    labels = table.labels
    downdater = _Downdater(table, gamma) if downdate else None

    def run_fold(i: int) -> int:
        if downdater is not None:
            model = downdater.fold(i)
        else:
            keep = np.arange(n) != i
            model = LdaModel(gamma).fit(table.rows[keep], labels[keep])
        return int(model.predict(table.rows[i:i + 1])[0])

    folds = range(n)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            predictions = list(tqdm(pool.map(run_fold, folds), total=n, desc="LOO folds", disable=not progress))
    else:
        predictions = [run_fold(i) for i in tqdm(folds, desc="LOO folds", disable=not progress)]
    predictions = np.array(predictions, dtype=np.int64)

    n_classes = table.n_classes
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    support = confusion.sum(axis=1)
    per_class = np.divide(np.diag(confusion), support, out=np.zeros(n_classes), where=support > 0)
    accuracy = float(np.trace(confusion) / n)

    logger.info(f"✓ Leave-one-out over {n} samples, {table.n_features} features: {100 * accuracy:.2f}%")
    return EvalResult(
        accuracy=accuracy,
        confusion=confusion,
        per_class=per_class,
        predictions=predictions,
        class_names=list(table.class_names),
    )


def sweep_combinations(mode: str, radii_grid: Sequence[Radius], qs_grid: Sequence[int],
                       fixed_radii: Sequence[Radius], theta_q: int) -> List[Tuple[Tuple, Tuple]]:
    """(radii, qs) pairs evaluated by a sweep mode, singles before pairs."""
    if mode not in SWEEP_MODES:
        raise ParameterError(f"Unknown sweep mode '{mode}', expected one of {SWEEP_MODES}")

    if mode == "theta_pairs":
        grid = sorted(set(radii_grid))
        if not grid:
            raise ParameterError("radius grid must not be empty")
        combos = [(c, ) for c in grid] + list(itertools.combinations(grid, 2))
        return [(tuple(c), (theta_q,)) for c in combos]

    grid = sorted(set(qs_grid))
    if not grid:
        raise ParameterError("Q grid must not be empty")
    if not fixed_radii:
        raise ParameterError("sweep over Q needs a fixed radius set")
    if mode == "psi_pairs":
        combos = [(q,) for q in grid] + list(itertools.combinations(grid, 2))
    else:
        if len(grid) < 3:
            raise ParameterError(f"psi_triples needs at least 3 Q values, got {grid}")
        combos = list(itertools.combinations(grid, 3))
    return [(tuple(fixed_radii), tuple(c)) for c in combos]


def sweep(images: Sequence, labels: Sequence[int], class_names: List[str], mode: str,
          radii_grid: Sequence[Radius] = (), qs_grid: Sequence[int] = (),
          fixed_radii: Sequence[Radius] = (2, 9), theta_q: int = 4,
          lam: float = 1e-3, label_normalization: bool = True, gamma: float = DEFAULT_GAMMA,
          threads: int = 1, downdate: bool = False, progress: bool = False,
          loader: Optional[Callable] = None) -> pd.DataFrame:
    """
    Leave-one-out accuracy for every parameter combination of a sweep mode.

    theta_pairs: theta(R, theta_q) for every single radius and radius pair.
    psi_pairs:   psi(fixed_radii, Qs) for every single Q and Q pair.
    psi_triples: psi(fixed_radii, Qs) for every 3-subset of the Q grid.

    Each (image, r, Q) upsilon block is computed once and shared by all
    combinations. `images` may hold GrayImages or paths, the latter read
    with `loader`.
    """
    combos = sweep_combinations(mode, radii_grid, qs_grid, fixed_radii, theta_q)
    labels = np.asarray(labels, dtype=np.int64)
    FeatureTable(np.zeros((len(images), 1)), labels, class_names).validate()
    needed_radii = sorted({r for radii, _ in combos for r in radii})
    needed_qs = sorted({q for _, qs in combos for q in qs})
    extractor = SignatureExtractor(lam, label_normalization)

    def blocks_for(item):
        img = loader(item) if loader is not None else item
        return extractor.blocks(img, needed_radii, needed_qs)

    logger.info(f"Sweep '{mode}': {len(combos)} combinations, radii {needed_radii}, Q {needed_qs}")
    desc = "Signature cache"
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cache = list(tqdm(pool.map(blocks_for, images), total=len(images), desc=desc, disable=not progress))
    else:
        cache = [blocks_for(item) for item in tqdm(images, desc=desc, disable=not progress)]

    rows = []
    for radii, qs in tqdm(combos, desc="Combinations", disable=not progress):
        features = np.stack([assemble(blocks, radii, qs) for blocks in cache])
        table = FeatureTable(features, labels, class_names)
        result = leave_one_out(table, gamma=gamma, threads=threads, downdate=downdate)
        rows.append({
            "mode": mode,
            "radii": ",".join(str(r) for r in radii),
            "qs": ",".join(str(q) for q in qs),
            "n_features": signature_length(radii, qs),
            "accuracy": result.accuracy,
            "accuracy_percent": round(100.0 * result.accuracy, 2),
        })

    return pd.DataFrame(rows, columns=["mode", "radii", "qs", "n_features", "accuracy", "accuracy_percent"])


def _parse_value(text: str) -> Radius:
    value = float(text)
    return int(value) if value.is_integer() else value


def parse_combination(text) -> Tuple[Radius, ...]:
    """'2,9' -> (2, 9); fractional radii such as '1.5' stay floats."""
    return tuple(_parse_value(v) for v in str(text).split(","))


def sweep_grid(results: pd.DataFrame, value: str = "accuracy_percent") -> pd.DataFrame:
    """
    Upper-triangular matrix of a pairs sweep: singles on the diagonal,
    pair (a, b) at row a, column b.
    """
    if results.empty:
        raise ParameterError("empty sweep results")
    mode = results["mode"].iloc[0]
    if mode == "psi_triples":
        raise ParameterError("triples do not form a matrix; use the table directly")
    key = "radii" if mode == "theta_pairs" else "qs"

    params = [parse_combination(s) for s in results[key]]
    axis = sorted({v for p in params for v in p})
    grid = pd.DataFrame(np.nan, index=axis, columns=axis)
    for p, v in zip(params, results[value]):
        a, b = (p[0], p[0]) if len(p) == 1 else (p[0], p[1])
        grid.loc[a, b] = v
    grid.index.name = key
    return grid


def mean_sweep(tables: Sequence[pd.DataFrame]) -> pd.DataFrame:
    """
    Average several sweep tables (one per dataset) combination by combination.

    Raises:
        ParameterError: no tables, mixed modes, or tables that do not cover
            the same (radii, qs) combinations
    """
    if not tables:
        raise ParameterError("no sweep tables to average")
    modes = {m for t in tables for m in t["mode"].unique()}
    if len(modes) != 1:
        raise ParameterError(f"sweep tables mix modes: {sorted(modes)}")

    def canonical(text) -> str:
        return ",".join(str(v) for v in parse_combination(text))

    keyed = []
    for t in tables:
        key = t["radii"].map(canonical) + "|" + t["qs"].map(canonical)
        if key.duplicated().any():
            raise ParameterError("sweep table repeats a combination")
        keyed.append(t.set_index(key))
    order = keyed[0].index
    for i, t in enumerate(keyed[1:], start=1):
        if set(t.index) != set(order):
            differing = sorted(set(order) ^ set(t.index))[:3]
            raise ParameterError(f"sweep table {i} covers different combinations, e.g. {differing}")

    first = keyed[0]
    return pd.DataFrame({
        "mode": first["mode"].to_numpy(),
        "radii": first["radii"].map(canonical).to_numpy(),
        "qs": first["qs"].map(canonical).to_numpy(),
        "n_features": first["n_features"].to_numpy(),
        "accuracy": np.mean([t.loc[order, "accuracy"].to_numpy() for t in keyed], axis=0),
        "accuracy_percent": np.round(
            np.mean([t.loc[order, "accuracy_percent"].to_numpy() for t in keyed], axis=0), 2),
    })


def best_single(grid: pd.DataFrame) -> Tuple[Radius, float]:
    """Best diagonal entry of a sweep matrix: (value, accuracy)."""
    diagonal = pd.Series(np.diag(grid.to_numpy()), index=grid.index)
    if diagonal.isna().all():
        raise ParameterError("sweep matrix has no single-value entries")
    best = diagonal.idxmax()
    return best, float(diagonal[best])
