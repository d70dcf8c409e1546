"""
Texture Signatures
Trains one randomized network per measure map and concatenates the
learned output weights.

  upsilon(r, Q)  = [f_k | f_ks | f_ke]                  3 (Q + 1) values
  theta(R, Q)    = [upsilon(r, Q) for r in R]
  psi(R, Qs)     = [theta(R, Q) for Q in Qs]
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from app.errors import DimensionError, ParameterError
from app.network import MEASURES, MeasureMaps, Radius, compute_measures
from app.rnn import DEFAULT_LAMBDA, TrainingSet, build_hidden_weights, build_training_set, solve_output_weights
from data.image_loader import GrayImage

logger = logging.getLogger(__name__)

# NW, N, NE, W, E, SW, S, SE
WINDOW_NEIGHBORS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
WINDOW_ATTRIBUTES = len(WINDOW_NEIGHBORS)


@dataclass(frozen=True)
class WindowSamples:
    """One column per interior pixel: its 8 neighbors' measure values and the center out-degree."""

    measure: str
    X_raw: np.ndarray  # 8 x N
    D_raw: np.ndarray  # N

    @property
    def N(self) -> int:
        return self.X_raw.shape[1]


@dataclass(frozen=True)
class Signature:
    values: np.ndarray
    radii: Tuple[Radius, ...]
    qs: Tuple[int, ...]
    lam: float = DEFAULT_LAMBDA
    label_normalization: bool = True
    measures: Tuple[str, ...] = MEASURES

    def __len__(self) -> int:
        return len(self.values)

    def meta(self) -> Dict:
        return {
            "radii": list(self.radii),
            "qs": list(self.qs),
            "lambda": self.lam,
            "label_normalization": self.label_normalization,
            "measures": list(self.measures),
        }


def extract_windows(maps: MeasureMaps) -> Dict[str, WindowSamples]:
    """
    Stride-1 3x3 windows over every interior pixel.

    Raises:
        DimensionError: image smaller than 3x3
    """
    h, w = maps.shape
    if h < 3 or w < 3:
        raise DimensionError(f"3x3 windows need an image of at least 3x3, got {h}x{w}")

    D_raw = maps.k[1:h - 1, 1:w - 1].ravel()
    windows = {}
    for measure in MEASURES:
        values = maps.field(measure)
        X_raw = np.stack([
            values[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx].ravel()
            for dy, dx in WINDOW_NEIGHBORS
        ])
        windows[measure] = WindowSamples(measure=measure, X_raw=X_raw, D_raw=D_raw)
    return windows


def signature_length(radii: Sequence[Radius], qs: Sequence[int]) -> int:
    return sum(len(radii) * len(MEASURES) * (Q + 1) for Q in qs)


def feature_names(radii: Sequence[Radius], qs: Sequence[int]) -> List[str]:
    """Column names in psi order: q{Q}_r{r}_{measure}_{j}, j = Q is the bias weight."""
    return [
        f"q{Q}_r{r}_{measure}_{j}"
        for Q in qs
        for r in radii
        for measure in MEASURES
        for j in range(Q + 1)
    ]


def _check_distinct(name: str, values: Sequence, increasing: bool = False) -> Tuple:
    values = tuple(values)
    if not values:
        raise ParameterError(f"{name} must not be empty")
    if len(set(values)) != len(values):
        raise ParameterError(f"{name} contains duplicates: {list(values)}")
    if increasing and any(a >= b for a, b in zip(values, values[1:])):
        raise ParameterError(f"{name} must be strictly increasing: {list(values)}")
    return values


@dataclass
class SignatureExtractor:
    """
    Computes upsilon blocks for (r, Q) pairs, building each radius'
    measure maps and training sets once and reusing them across Q.
    """

    lam: float = DEFAULT_LAMBDA
    label_normalization: bool = True
    _p: int = field(default=WINDOW_ATTRIBUTES, init=False, repr=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"lambda must be > 0, got {self.lam}")

    def training_sets(self, img: GrayImage, r: Radius) -> Dict[str, TrainingSet]:
        maps = compute_measures(img, r)
        windows = extract_windows(maps)
        scale = float(maps.max_degree) if self.label_normalization else 1.0
        return {
            measure: build_training_set(samples.X_raw, samples.D_raw / scale)
            for measure, samples in windows.items()
        }

    def train(self, training_sets: Dict[str, TrainingSet], Q: int) -> np.ndarray:
        hw = build_hidden_weights(Q, self._p)
        return np.concatenate([
            solve_output_weights(training_sets[measure], hw, self.lam).f
            for measure in MEASURES
        ])

    def blocks(self, img: GrayImage, radii: Iterable[Radius], qs: Iterable[int]) -> Dict[Tuple[Radius, int], np.ndarray]:
        """Upsilon vector for every (r, Q) in radii x qs."""
        qs = list(qs)
        result = {}
        for r in radii:
            sets = self.training_sets(img, r)
            for Q in qs:
                result[(r, Q)] = self.train(sets, Q)
        return result

    def upsilon(self, img: GrayImage, r: Radius, Q: int) -> np.ndarray:
        return self.train(self.training_sets(img, r), Q)

    def theta(self, img: GrayImage, radii: Sequence[Radius], Q: int) -> np.ndarray:
        radii = _check_distinct("radii", radii)
        blocks = self.blocks(img, radii, [Q])
        return np.concatenate([blocks[(r, Q)] for r in radii])

    def psi(self, img: GrayImage, radii: Sequence[Radius], qs: Sequence[int]) -> Signature:
        radii = _check_distinct("radii", radii)
        qs = _check_distinct("qs", qs)
        blocks = self.blocks(img, radii, qs)
        return Signature(
            values=assemble(blocks, radii, qs),
            radii=radii,
            qs=qs,
            lam=self.lam,
            label_normalization=self.label_normalization,
        )


def assemble(blocks: Dict[Tuple[Radius, int], np.ndarray], radii: Sequence[Radius], qs: Sequence[int]) -> np.ndarray:
    """Psi ordering over precomputed upsilon blocks."""
    return np.concatenate([blocks[(r, Q)] for Q in qs for r in radii])


def signature_upsilon(img: GrayImage, r: Radius, Q: int, lam: float = DEFAULT_LAMBDA,
                      label_normalization: bool = True) -> np.ndarray:
    return SignatureExtractor(lam, label_normalization).upsilon(img, r, Q)


def signature_theta(img: GrayImage, radii: Sequence[Radius], Q: int, lam: float = DEFAULT_LAMBDA,
                    label_normalization: bool = True) -> np.ndarray:
    return SignatureExtractor(lam, label_normalization).theta(img, radii, Q)


def signature_psi(img: GrayImage, radii: Sequence[Radius], qs: Sequence[int], lam: float = DEFAULT_LAMBDA,
                  label_normalization: bool = True) -> Signature:
    return SignatureExtractor(lam, label_normalization).psi(img, radii, qs)
