"""Tests for manifests, the two storage formats, and blob generation."""

import numpy as np
import pytest

from agle.data_io import (
    SyntheticSpec,
    load_dataset,
    make_blobs,
    parse_manifest,
    save_dataset,
)
from agle.errors import FormatError


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestManifest:
    def test_minimal_csv_manifest(self, tmp_path):
        write(tmp_path / "toy.csv", "1,2,3\n4,5,6\n0,1,0\n")
        mpath = write(
            tmp_path / "toy.manifest",
            "name = toy\nformat = csv\nd = 2\nn = 3\nc = 2\ndata = toy.csv\n",
        )
        x, labels = load_dataset(mpath)
        np.testing.assert_array_equal(x, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        np.testing.assert_array_equal(labels, [0, 1, 0])

    def test_comments_and_optional_keys(self, tmp_path):
        write(tmp_path / "toy.csv", "1,2,3\n0,0,1\n")
        mpath = write(
            tmp_path / "toy.manifest",
            "# fixture\nname = toy\nformat = csv\nd = 1\nn = 3\nc = 2\n"
            "data = toy.csv\nreduced_dim = 5\ntrainers = 1,2\n",
        )
        manifest = parse_manifest(mpath)
        assert manifest.reduced_dim == 5
        assert manifest.trainers == (1, 2)

    def test_missing_keys_rejected(self, tmp_path):
        mpath = write(tmp_path / "bad.manifest", "name = x\nformat = csv\n")
        with pytest.raises(FormatError, match="missing"):
            parse_manifest(mpath)

    def test_unknown_format_rejected(self, tmp_path):
        mpath = write(
            tmp_path / "bad.manifest",
            "name = x\nformat = hdf5\nd = 1\nn = 1\nc = 1\ndata = x\n",
        )
        with pytest.raises(FormatError, match="format"):
            parse_manifest(mpath)

    def test_unreadable_path_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            parse_manifest(tmp_path / "absent.manifest")

    def test_shape_mismatch_names_field(self, tmp_path):
        write(tmp_path / "toy.csv", "1,2,3\n4,5,6\n0,1,0\n")
        mpath = write(
            tmp_path / "toy.manifest",
            "name = toy\nformat = csv\nd = 3\nn = 3\nc = 2\ndata = toy.csv\n",
        )
        with pytest.raises(FormatError, match="field d/n"):
            load_dataset(mpath)

    def test_noncontiguous_labels_rejected(self, tmp_path):
        write(tmp_path / "toy.csv", "1,2,3\n0,2,0\n")
        mpath = write(
            tmp_path / "toy.manifest",
            "name = toy\nformat = csv\nd = 1\nn = 3\nc = 2\ndata = toy.csv\n",
        )
        with pytest.raises(FormatError, match="field c"):
            load_dataset(mpath)


class TestRoundTrip:
    @pytest.mark.parametrize("fmt", ["csv", "bin"])
    def test_save_load_identity(self, tmp_path, fmt):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(7, 11))
        labels = rng.integers(0, 3, size=11)
        labels[:3] = [0, 1, 2]  # make classes contiguous
        mpath = save_dataset(tmp_path, "rt", x, labels, fmt=fmt)
        x2, labels2 = load_dataset(mpath)
        np.testing.assert_array_equal(x2, x)
        np.testing.assert_array_equal(labels2, labels)

    def test_truncated_binary_reports_byte_counts(self, tmp_path):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(4, 6))
        labels = np.array([0, 0, 1, 1, 2, 2])
        mpath = save_dataset(tmp_path, "trunc", x, labels, fmt="bin")
        data_file = tmp_path / "trunc.f64"
        data_file.write_bytes(data_file.read_bytes()[:-8])
        with pytest.raises(FormatError, match="expected 192 bytes.*found 184"):
            load_dataset(mpath)


class TestMakeBlobs:
    def test_noise_free_blobs_classify_perfectly(self):
        from agle.pipeline import knn1_accuracy, split

        spec = SyntheticSpec(classes=4, dim=20, intrinsic_dim=3, per_class=10,
                             noise=0.0, seed=5)
        x, labels = make_blobs(spec)
        train, test = split(labels, 5, seed=0)
        acc = knn1_accuracy(x[:, train], labels[train], x[:, test], labels[test])
        assert acc == 1.0

    def test_seed_determinism(self):
        spec = SyntheticSpec(classes=3, dim=10, intrinsic_dim=2, per_class=5,
                             noise=0.3, seed=9)
        x1, y1 = make_blobs(spec)
        x2, y2 = make_blobs(spec)
        assert x1.tobytes() == x2.tobytes()
        np.testing.assert_array_equal(y1, y2)

    def test_low_rank_structure_dominates_energy(self):
        spec = SyntheticSpec(classes=8, dim=100, intrinsic_dim=5, per_class=20,
                             noise=0.05, seed=13)
        x, _ = make_blobs(spec)
        centered = x - x.mean(axis=1, keepdims=True)
        vals = np.linalg.eigvalsh(centered @ centered.T / (x.shape[1] - 1))[::-1]
        assert vals[:5].sum() / vals.sum() >= 0.9

    def test_exact_label_balance(self):
        spec = SyntheticSpec(classes=5, dim=8, intrinsic_dim=2, per_class=7,
                             noise=0.1, seed=3)
        _, labels = make_blobs(spec)
        np.testing.assert_array_equal(np.bincount(labels), np.full(5, 7))

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            SyntheticSpec(classes=2, dim=4, intrinsic_dim=5, per_class=3, noise=0.1, seed=0)
        with pytest.raises(ValueError):
            SyntheticSpec(classes=2, dim=4, intrinsic_dim=2, per_class=3, noise=-0.1, seed=0)
