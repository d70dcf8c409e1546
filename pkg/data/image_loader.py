"""
Image Loader - grayscale rasters and class-labeled dataset directories
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from app.errors import DatasetError, ImageFormatError, ImageReadError

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

# Pillow reports PGM/PPM as "PPM"
SUPPORTED_FORMATS = {"PNG", "PPM", "BMP", "TIFF", "JPEG"}
IMAGE_EXTENSIONS = {".png", ".pgm", ".ppm", ".pnm", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg"}

MAX_LEVEL = 255


@dataclass(frozen=True)
class GrayImage:
    """H x W grid of integer intensities in [0, max_level]."""

    pixels: np.ndarray
    max_level: int = MAX_LEVEL

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.size == 0:
            raise ValueError(f"GrayImage needs a non-empty 2-D array, got shape {pixels.shape}")
        if self.max_level < 1:
            raise ValueError(f"max_level must be positive, got {self.max_level}")
        if not np.issubdtype(pixels.dtype, np.integer):
            if not np.all(np.equal(np.mod(pixels, 1), 0)):
                raise ValueError("GrayImage intensities must be integers")
        pixels = pixels.astype(np.int64)
        if pixels.min() < 0 or pixels.max() > self.max_level:
            raise ValueError(
                f"intensities must lie in [0, {self.max_level}], "
                f"got [{pixels.min()}, {pixels.max()}]"
            )
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def intensities(self) -> np.ndarray:
        """Row-major flat view, one entry per pixel."""
        return self.pixels.ravel()


@dataclass(frozen=True)
class Sample:
    path: Path
    class_id: int


@dataclass
class LabeledDataset:
    """Samples ordered by (class directory, file name); class ids follow directory order."""

    samples: List[Sample]
    class_names: List[str]
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        for sample in self.samples:
            if not 0 <= sample.class_id < len(self.class_names):
                raise DatasetError(f"class id {sample.class_id} out of range for {sample.path}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def paths(self) -> List[Path]:
        return [s.path for s in self.samples]

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.class_id for s in self.samples], dtype=np.int64)

    def class_counts(self) -> List[int]:
        counts = [0] * len(self.class_names)
        for sample in self.samples:
            counts[sample.class_id] += 1
        return counts

    def relative_path(self, sample: Sample) -> str:
        """Path relative to the dataset root, POSIX separators."""
        try:
            return sample.path.relative_to(self.root).as_posix()
        except ValueError:
            return sample.path.as_posix()


def _luminance(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luminance, rounded half away from zero in exact integer arithmetic."""
    rgb = rgb.astype(np.int64)
    weighted = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return (weighted + 500) // 1000


def load_gray(path: PathLike) -> GrayImage:
    """
    Load a raster file as an 8-bit grayscale image.

    Color inputs are converted with 0.299R + 0.587G + 0.114B.

    Raises:
        ImageReadError: file missing or unreadable
        ImageFormatError: not PNG, PGM, BMP, TIFF or JPEG, or an unsupported pixel mode
    """
    path = Path(path)
    if not path.is_file():
        raise ImageReadError(f"{path}: no such file")

    try:
        with Image.open(path) as img:
            img.load()
            fmt = img.format
            mode = img.mode
            if fmt not in SUPPORTED_FORMATS:
                raise ImageFormatError(f"{path}: unsupported format {fmt}")

            if mode == "L":
                pixels = np.asarray(img, dtype=np.int64)
            elif mode == "1":
                pixels = np.asarray(img.convert("L"), dtype=np.int64)
            elif mode in ("I;16", "I;16B", "I;16L", "I"):
                raw = np.asarray(img, dtype=np.int64)
                top = 65535 if raw.max(initial=0) > 255 or mode.startswith("I;16") else 255
                pixels = (raw * MAX_LEVEL * 2 + top) // (2 * top)
            elif mode == "LA":
                pixels = np.asarray(img, dtype=np.int64)[..., 0]
            elif mode in ("RGB", "RGBA", "P", "PA", "CMYK", "YCbCr"):
                pixels = _luminance(np.asarray(img.convert("RGB")))
            else:
                raise ImageFormatError(f"{path}: unsupported pixel mode {mode}")
    except UnidentifiedImageError as e:
        raise ImageFormatError(f"{path}: not a recognized image ({e})") from e
    except (OSError, SyntaxError) as e:
        if isinstance(e, ImageReadError):
            raise
        raise ImageReadError(f"{path}: {e}") from e

    return GrayImage(np.clip(pixels, 0, MAX_LEVEL), MAX_LEVEL)


def save_gray(img: GrayImage, path: PathLike) -> None:
    """Write an 8-bit single-channel raster; format follows the file extension."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)

    scaled = img.pixels
    if img.max_level != MAX_LEVEL:
        scaled = (img.pixels * MAX_LEVEL * 2 + img.max_level) // (2 * img.max_level)
    Image.fromarray(scaled.astype(np.uint8)).save(path)


def _is_image_file(path: Path) -> bool:
    return path.is_file() and not path.name.startswith(".") and path.suffix.lower() in IMAGE_EXTENSIONS


def scan_dataset(root: PathLike) -> LabeledDataset:
    """
    Enumerate <root>/<class_name>/<image file>.

    Class ids follow the lexicographic order of class directory names;
    samples are ordered by (class directory, file name).

    Raises:
        DatasetError: root missing, no class directories, or a class without images
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")

    class_dirs = sorted(
        (p for p in root.iterdir() if p.is_dir() and not p.name.startswith(".")),
        key=lambda p: p.name,
    )
    if not class_dirs:
        raise DatasetError(f"{root}: no class directories found")

    samples = []
    class_names = []
    for class_id, class_dir in enumerate(class_dirs):
        images = sorted((p for p in class_dir.iterdir() if _is_image_file(p)), key=lambda p: p.name)
        if not images:
            raise DatasetError(f"{class_dir}: class '{class_dir.name}' has no images")
        class_names.append(class_dir.name)
        samples.extend(Sample(path, class_id) for path in images)

    logger.info(f"Scanned {len(samples)} images in {len(class_names)} classes from {root}")
    return LabeledDataset(samples=samples, class_names=class_names, root=root)


if __name__ == '__main__':
    import sys

    print("=" * 70)
    print("Dataset Scan")
    print("=" * 70)

    root = sys.argv[1] if len(sys.argv) > 1 else "data/textures"
    dataset = scan_dataset(root)
    print(f"\n  Root: {dataset.root}")
    print(f"  Images: {len(dataset)}")
    print(f"  Classes: {len(dataset.class_names)}")
    for name, count in zip(dataset.class_names, dataset.class_counts()):
        print(f"    {name:30s}: {count}")

    first = load_gray(dataset.samples[0].path)
    print(f"\n  First image: {first.width}x{first.height}, "
          f"intensities [{first.pixels.min()}, {first.pixels.max()}]")
