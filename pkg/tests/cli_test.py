import json
import logging

import numpy as np
import pytest

from app.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from app.signature import feature_names
from data.feature_store import read_features, write_features
from data.image_loader import GrayImage, load_gray, save_gray

FAST = ["--radii", "1,2", "--qs", "4", "--quiet"]


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    # keep any repository config and CNRNN_* settings out of the run
    monkeypatch.chdir(tmp_path)
    for key in ("CNRNN_RADII", "CNRNN_QS", "CNRNN_LAMBDA", "CNRNN_GAMMA", "CNRNN_THREADS", "CNRNN_LABEL_NORM"):
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def dataset(tmp_path):
    root = tmp_path / "textures"
    assert main(["synth", str(root), "--samples", "3", "--size", "16", "--quiet"]) == EXIT_OK
    return root


def test_synth_writes_four_classes(dataset):
    classes = sorted(p.name for p in dataset.iterdir())
    assert len(classes) == 4
    assert all(len(list((dataset / c).glob("*.png"))) == 3 for c in classes)


def test_extract_writes_csv_and_sidecar(dataset, tmp_path):
    out = tmp_path / "features.csv"
    assert main(["extract", str(dataset), "--out", str(out)] + FAST) == EXIT_OK

    table, paths, meta = read_features(out)
    assert table.rows.shape == (12, 2 * 3 * 5)
    assert meta["extraction"]["radii"] == [1, 2]
    assert paths[0].endswith("sample_000.png")


def test_extract_rerun_is_byte_identical(dataset, tmp_path):
    first, second = tmp_path / "one.csv", tmp_path / "two.csv"
    main(["extract", str(dataset), "--out", str(first), "--threads", "1"] + FAST)
    main(["extract", str(dataset), "--out", str(second), "--threads", "4"] + FAST)

    assert first.read_bytes() == second.read_bytes()


def test_extract_empty_directory(tmp_path, caplog):
    (tmp_path / "empty").mkdir()

    with caplog.at_level(logging.ERROR):
        code = main(["extract", str(tmp_path / "empty"), "--out", str(tmp_path / "f.csv"), "--quiet"])

    assert code == EXIT_DATA
    assert any(r.levelno == logging.ERROR for r in caplog.records)
    assert not (tmp_path / "f.csv").exists()


def test_extract_names_unreadable_images(dataset, tmp_path, caplog):
    broken = dataset / sorted(p.name for p in dataset.iterdir())[0] / "broken.png"
    broken.write_text("not an image")

    with caplog.at_level(logging.ERROR):
        code = main(["extract", str(dataset), "--out", str(tmp_path / "f.csv")] + FAST)

    assert code == EXIT_DATA
    assert "broken.png" in caplog.text


def test_bad_radius_list_is_usage_error(dataset):
    assert main(["extract", str(dataset), "--radii", "9,2", "--quiet"]) == EXIT_USAGE


def test_missing_argument_exits_one():
    with pytest.raises(SystemExit) as info:
        main(["extract"])
    assert info.value.code == EXIT_USAGE


def test_unparseable_list_exits_one(dataset):
    with pytest.raises(SystemExit) as info:
        main(["extract", str(dataset), "--qs", "four"])
    assert info.value.code == EXIT_USAGE


def separable_csv(path):
    rows = np.vstack([np.full((3, 15), 0.0), np.full((3, 15), 1.0)])
    rows += np.linspace(0, 0.01, 15)[None, :] * np.arange(6)[:, None]
    write_features(
        path,
        paths=[f"img_{i}.png" for i in range(6)],
        class_names_per_row=["a"] * 3 + ["b"] * 3,
        rows=rows,
        columns=feature_names([2], [4]),
        extraction={"radii": [2], "qs": [4], "lam": 1e-3, "label_normalization": True},
        class_names=["a", "b"],
    )


def test_eval_prints_accuracy(tmp_path, capsys):
    csv_path = tmp_path / "separable.csv"
    separable_csv(csv_path)

    assert main(["eval", str(csv_path), "--quiet"]) == EXIT_OK

    assert capsys.readouterr().out.strip() == "100.00"
    payload = json.loads((tmp_path / "separable.eval.json").read_text())
    assert payload["accuracy"] == 1.0
    assert (tmp_path / "separable.eval.txt").exists()


def test_eval_downdate_agrees(tmp_path, capsys):
    csv_path = tmp_path / "separable.csv"
    separable_csv(csv_path)

    main(["eval", str(csv_path), "--downdate", "--quiet", "--out", str(tmp_path / "d.json")])
    assert capsys.readouterr().out.strip() == "100.00"


def test_eval_tampered_csv(tmp_path):
    csv_path = tmp_path / "separable.csv"
    separable_csv(csv_path)
    csv_path.write_text(csv_path.read_text().replace("img_0.png", "img_x.png"))

    assert main(["eval", str(csv_path), "--quiet"]) == EXIT_DATA


def test_eval_class_with_one_sample_is_data_error(tmp_path, rng):
    csv_path = tmp_path / "lopsided.csv"
    write_features(
        csv_path,
        paths=[f"img_{i}.png" for i in range(5)],
        class_names_per_row=["a"] * 4 + ["b"],
        rows=rng.normal(size=(5, 15)),
        columns=feature_names([2], [4]),
        extraction={"radii": [2], "qs": [4], "lam": 1e-3, "label_normalization": True},
        class_names=["a", "b"],
    )

    assert main(["eval", str(csv_path), "--quiet"]) == EXIT_DATA
    assert not (tmp_path / "lopsided.eval.json").exists()


def test_end_to_end_extract_then_eval(dataset, tmp_path, capsys):
    out = tmp_path / "features.csv"
    main(["extract", str(dataset), "--out", str(out)] + FAST)
    capsys.readouterr()

    assert main(["eval", str(out), "--quiet"]) == EXIT_OK
    accuracy = float(capsys.readouterr().out.strip())
    assert 0.0 <= accuracy <= 100.0


def test_render_writes_measure_image(tmp_path):
    source = tmp_path / "flat.png"
    save_gray(GrayImage(np.full((5, 5), 100)), source)

    assert main(["render", str(source), "-r", "1", "-m", "k", "--quiet"]) == EXIT_OK

    rendered = load_gray(tmp_path / "flat_k_r1.png")
    assert rendered.pixels[2, 2] == 255
    assert rendered.pixels[0, 0] == 128


def test_render_missing_image(tmp_path):
    assert main(["render", str(tmp_path / "none.png"), "--quiet"]) == EXIT_DATA


def test_sweep_writes_table_and_figure(dataset, tmp_path, capsys):
    out, figure = tmp_path / "sweep.csv", tmp_path / "sweep.png"
    code = main(["sweep", str(dataset), "--radius-grid", "1,2", "--theta-q", "4",
                 "--out", str(out), "--figure", str(figure), "--threads", "2"])

    assert code == EXIT_OK
    assert out.read_text().splitlines()[0] == "mode,radii,qs,n_features,accuracy,accuracy_percent"
    assert len(out.read_text().splitlines()) == 4
    assert figure.stat().st_size > 0
    assert "theta_pairs" in capsys.readouterr().out


def test_sweep_rejects_small_triple_grid(dataset, tmp_path):
    code = main(["sweep", str(dataset), "--mode", "psi_triples", "--q-grid", "4,9",
                 "--out", str(tmp_path / "s.csv"), "--quiet"])
    assert code == EXIT_USAGE


def test_sweep_with_one_image_class_is_data_error(tmp_path, rng):
    root = tmp_path / "lopsided"
    for i in range(3):
        save_gray(GrayImage(rng.integers(0, 256, size=(12, 12))), root / "many" / f"img_{i}.png")
    save_gray(GrayImage(rng.integers(0, 256, size=(12, 12))), root / "single" / "img_0.png")

    code = main(["sweep", str(root), "--radius-grid", "1,2", "--theta-q", "4",
                 "--out", str(tmp_path / "s.csv"), "--quiet"])

    assert code == EXIT_DATA
    assert not (tmp_path / "s.csv").exists()
