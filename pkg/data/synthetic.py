"""
Synthetic texture set for desk-scale checks.
Four classes: sinusoidal gratings at two orientations x Gaussian noise at two levels.
"""

import logging
import os
from pathlib import Path
from typing import List, Tuple

import numpy as np

from data.image_loader import GrayImage, LabeledDataset, save_gray, scan_dataset

logger = logging.getLogger(__name__)

# (class name, orientation in degrees, noise standard deviation in gray levels)
SYNTHETIC_CLASSES = [
    ("grating_000_low_noise", 0.0, 6.0),
    ("grating_000_high_noise", 0.0, 30.0),
    ("grating_090_low_noise", 90.0, 6.0),
    ("grating_090_high_noise", 90.0, 30.0),
]

GRATING_PERIOD = 8.0
GRATING_AMPLITUDE = 70.0


def grating(size: int, orientation: float, phase: float, noise_std: float,
            rng: np.random.Generator) -> GrayImage:
    """Sinusoidal grating plus Gaussian noise, clipped to [0, 255]."""
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    theta = np.deg2rad(orientation)
    # orientation 0 varies along x (vertical stripes)
    u = x * np.cos(theta) + y * np.sin(theta)
    wave = 127.5 + GRATING_AMPLITUDE * np.sin(2 * np.pi * u / GRATING_PERIOD + phase)
    noisy = wave + rng.normal(0.0, noise_std, size=wave.shape)
    return GrayImage(np.clip(np.rint(noisy), 0, 255).astype(np.int64))


def synthetic_images(samples_per_class: int = 20, size: int = 64, seed: int = 7) -> List[Tuple[GrayImage, int]]:
    """(image, class id) pairs in class order; same seed, same images."""
    rng = np.random.default_rng(seed)
    images = []
    for class_id, (_, orientation, noise_std) in enumerate(SYNTHETIC_CLASSES):
        for _ in range(samples_per_class):
            phase = rng.uniform(0.0, 2 * np.pi)
            images.append((grating(size, orientation, phase, noise_std, rng), class_id))
    return images


def generate_synthetic_dataset(root, samples_per_class: int = 20, size: int = 64, seed: int = 7) -> LabeledDataset:
    """Write the synthetic set as PNGs under <root>/<class>/ and scan it back."""
    root = Path(root)
    names = [name for name, _, _ in SYNTHETIC_CLASSES]
    for img_index, (img, class_id) in enumerate(synthetic_images(samples_per_class, size, seed)):
        class_dir = root / names[class_id]
        os.makedirs(class_dir, exist_ok=True)
        save_gray(img, class_dir / f"sample_{img_index % samples_per_class:03d}.png")

    logger.info(f"Generated {samples_per_class * len(names)} synthetic images in {root}")
    return scan_dataset(root)
