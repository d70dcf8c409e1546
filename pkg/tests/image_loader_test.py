import numpy as np
import pytest
from PIL import Image

from app.errors import DatasetError, ImageFormatError, ImageReadError
from data.image_loader import GrayImage, load_gray, save_gray, scan_dataset


def _write_rgb(path, rgb):
    Image.fromarray(np.asarray(rgb, dtype=np.uint8)).save(path)


def test_load_pgm_keeps_dimensions(tmp_path):
    pixels = np.arange(128 * 128).reshape(128, 128) % 256
    path = tmp_path / "texture.pgm"
    Image.fromarray(pixels.astype(np.uint8)).save(path)

    img = load_gray(path)

    assert (img.width, img.height, img.max_level) == (128, 128, 255)
    np.testing.assert_array_equal(img.pixels, pixels)


def test_black_png_is_all_zero(tmp_path):
    path = tmp_path / "black.png"
    _write_rgb(path, np.zeros((4, 6, 3)))

    img = load_gray(path)

    assert img.pixels.shape == (4, 6)
    assert not img.pixels.any()


def test_white_rgb_maps_to_255(tmp_path):
    path = tmp_path / "white.png"
    _write_rgb(path, np.full((2, 2, 3), 255))

    assert load_gray(path).pixels.tolist() == [[255, 255], [255, 255]]


def test_luminance_rounds_half_away_from_zero(tmp_path):
    # 0.299 * 10 + 0.587 * 20 + 0.114 * 30 = 18.15 -> 18
    # 0.299 * 100 + 0.587 * 0 + 0.114 * 0 = 29.9 -> 30
    # 0.299 * 0 + 0.587 * 0 + 0.114 * 75 = 8.55 -> 9
    path = tmp_path / "mixed.bmp"
    _write_rgb(path, [[[10, 20, 30], [100, 0, 0], [0, 0, 75]]])

    assert load_gray(path).pixels.tolist() == [[18, 30, 9]]


def test_saved_copy_reloads_identically(tmp_path, rng):
    source = tmp_path / "color.png"
    _write_rgb(source, rng.integers(0, 256, size=(9, 7, 3)))
    first = load_gray(source)

    copy = tmp_path / "copy.png"
    save_gray(first, copy)

    np.testing.assert_array_equal(load_gray(copy).pixels, first.pixels)


def test_missing_file_is_read_error(tmp_path):
    with pytest.raises(ImageReadError):
        load_gray(tmp_path / "nope.png")


def test_non_image_is_format_error(tmp_path):
    path = tmp_path / "notes.png"
    path.write_text("not an image")

    with pytest.raises(ImageFormatError):
        load_gray(path)


def test_unsupported_format_is_rejected(tmp_path):
    path = tmp_path / "anim.gif"
    Image.fromarray(np.zeros((3, 3), dtype=np.uint8)).save(path)

    with pytest.raises(ImageFormatError):
        load_gray(path)


def test_gray_image_rejects_out_of_range():
    with pytest.raises(ValueError):
        GrayImage(np.array([[0, 256]]))


def _make_dataset(root, layout):
    for class_name, count in layout.items():
        (root / class_name).mkdir(parents=True)
        for i in range(count):
            save_gray(GrayImage(np.full((3, 3), i)), root / class_name / f"img_{i:02d}.png")


def test_scan_assigns_ids_by_directory_order(tmp_path):
    _make_dataset(tmp_path, {"wood": 2, "bark": 3, "sand": 1})

    dataset = scan_dataset(tmp_path)

    assert dataset.class_names == ["bark", "sand", "wood"]
    assert dataset.class_counts() == [3, 1, 2]
    assert dataset.labels.tolist() == [0, 0, 0, 1, 2, 2]
    assert dataset.relative_path(dataset.samples[0]) == "bark/img_00.png"


def test_scan_counts_vistex_layout(tmp_path):
    _make_dataset(tmp_path, {f"class_{c:02d}": 16 for c in range(54)})

    dataset = scan_dataset(tmp_path)

    assert len(dataset) == 864
    assert len(dataset.class_names) == 54


def test_scan_single_image(tmp_path):
    _make_dataset(tmp_path, {"only": 1})

    dataset = scan_dataset(tmp_path)

    assert len(dataset) == 1
    assert dataset.class_names == ["only"]


def test_rescan_is_identical(tmp_path):
    _make_dataset(tmp_path, {"b": 3, "a": 2})

    assert scan_dataset(tmp_path).paths == scan_dataset(tmp_path).paths


def test_files_only_root_is_dataset_error(tmp_path):
    save_gray(GrayImage(np.zeros((3, 3), dtype=int)), tmp_path / "loose.png")

    with pytest.raises(DatasetError):
        scan_dataset(tmp_path)


def test_empty_class_is_dataset_error(tmp_path):
    _make_dataset(tmp_path, {"full": 2})
    (tmp_path / "empty").mkdir()

    with pytest.raises(DatasetError, match="empty"):
        scan_dataset(tmp_path)


def test_missing_root_is_dataset_error(tmp_path):
    with pytest.raises(DatasetError):
        scan_dataset(tmp_path / "missing")
