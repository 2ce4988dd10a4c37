import json

import numpy as np
import pytest
from PIL import Image

import padextract
from padextract.cli import main
from padextract.extract import ExtractJob, extract, list_images


@pytest.fixture(scope="module")
def image_dir(tmp_path_factory):
    """Five small images with distinct content, plus a non-image file."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(8)
    for name in ("a.png", "b.png", "c.jpg", "d.png", "e.png"):
        arr = rng.integers(0, 256, (64, 48, 3), dtype=np.uint8)
        Image.fromarray(arr).save(root / name)
    (root / "notes.txt").write_text("ignored")
    return root


@pytest.fixture(scope="module")
def extracted(image_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("out") / "set.pademb"
    sidecar = extract(ExtractJob(str(image_dir), str(out), batch_size=2, weights="random"))
    return out, sidecar


def read_pademb(path):
    blob = path.read_bytes()
    assert blob[:8] == b"PADEMB1\x00"
    n = int.from_bytes(blob[8:12], "little")
    d = int.from_bytes(blob[12:16], "little")
    data = np.frombuffer(blob[16:], "<f4").reshape(n, d)
    return n, d, data


def test_emits_valid_pademb_with_2048_dims(extracted):
    out, sidecar = extracted
    n, d, data = read_pademb(out)
    assert (n, d) == (5, 2048)
    assert sidecar["count"] == 5 and sidecar["dim"] == 2048
    assert np.isfinite(data).all()
    assert np.abs(data).max() > 0


def test_sidecar_lists_files_lexicographically(extracted):
    out, sidecar = extracted
    stored = json.loads((out.parent / (out.name + ".json")).read_text())
    assert stored["files"] == ["a.png", "b.png", "c.jpg", "d.png", "e.png"]
    assert stored["files"] == sorted(stored["files"])
    assert "random" in stored["weights"]
    assert stored["resize"] == "bilinear-299x299"


def test_primary_fid_self_distance_is_zero(extracted):
    padbench_fid = pytest.importorskip("padbench.fid")
    out, _ = extracted
    a = padbench_fid.gaussian_stats(padbench_fid.read_embeddings(out))
    b = padbench_fid.gaussian_stats(padbench_fid.read_embeddings(out))
    assert abs(padbench_fid.frechet_distance(a, b)) <= 1e-6


def test_duplicate_image_gives_identical_rows(image_dir, tmp_path):
    dup_dir = tmp_path / "dup"
    dup_dir.mkdir()
    blob = (image_dir / "a.png").read_bytes()
    (dup_dir / "x1.png").write_bytes(blob)
    (dup_dir / "x2.png").write_bytes(blob)
    out = tmp_path / "dup.pademb"
    extract(ExtractJob(str(dup_dir), str(out), batch_size=2, weights="random"))
    _, _, data = read_pademb(out)
    assert np.array_equal(data[0], data[1])


def test_rerun_is_byte_identical(image_dir, tmp_path):
    out = tmp_path / "rerun.pademb"
    job = ExtractJob(str(image_dir), str(out), batch_size=3, weights="random")
    extract(job)
    first = out.read_bytes()
    extract(job)
    assert out.read_bytes() == first


def test_empty_directory_exits_2(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = main(["extract", "--images", str(empty), "--out", str(tmp_path / "x.pademb"),
                 "--weights", "random"])
    assert code == 2
    err = json.loads(capsys.readouterr().err.splitlines()[-1])
    assert err["error"] == "EmptyDirectory"


def test_list_images_requires_images(tmp_path):
    only_text = tmp_path / "txt"
    only_text.mkdir()
    (only_text / "readme.md").write_text("hi")
    with pytest.raises(padextract.EmptyDirectory):
        list_images(str(only_text))


def test_bad_checkpoint_is_model_load_failure(image_dir, tmp_path):
    bad = tmp_path / "weights.pth"
    bad.write_bytes(b"not a checkpoint")
    with pytest.raises(padextract.ModelLoadFailure):
        extract(ExtractJob(str(image_dir), str(tmp_path / "y.pademb"), weights=str(bad)))


def test_cli_round_trip(image_dir, tmp_path, capsys):
    out = tmp_path / "cli.pademb"
    code = main(["extract", "--images", str(image_dir), "--out", str(out),
                 "--batch", "4", "--weights", "random"])
    assert code == 0
    assert "wrote 5 embeddings (dim 2048)" in capsys.readouterr().out
    n, d, _ = read_pademb(out)
    assert (n, d) == (5, 2048)
