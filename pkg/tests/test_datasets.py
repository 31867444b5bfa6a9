import gzip
import struct
from fractions import Fraction as F

import numpy as np
import pytest

from patchattack.datasets import (DatasetError, ingest, load_ingested, read_csv_vectors, read_idx,
                                  read_vector, vectors_to_bytes, write_idx, write_vector)


def test_idx_roundtrip(tmp_path):
    imgs = np.arange(3 * 4 * 5, dtype=np.uint8).reshape(3, 4, 5)
    write_idx(imgs, tmp_path / "i")
    back = read_idx(tmp_path / "i")
    assert back.shape == (3, 4, 5) and np.array_equal(back, imgs)
    assert (tmp_path / "i").read_bytes()[:4] == b"\x00\x00\x08\x03"


def test_idx_gzip(tmp_path):
    write_idx(np.ones((2, 2, 2), dtype=np.uint8), tmp_path / "i")
    with gzip.open(tmp_path / "i.gz", "wb") as fh:
        fh.write((tmp_path / "i").read_bytes())
    assert read_idx(tmp_path / "i.gz").sum() == 8


def test_idx_bad_magic_and_truncation(tmp_path):
    (tmp_path / "bad").write_bytes(struct.pack(">I", 0x0803) + b"\x00" * 4)
    with pytest.raises(DatasetError, match="magic"):
        read_idx(tmp_path / "bad")
    write_idx(np.ones((2, 3, 3), dtype=np.uint8), tmp_path / "ok")
    data = (tmp_path / "ok").read_bytes()
    (tmp_path / "trunc").write_bytes(data[:-1])
    with pytest.raises(DatasetError):
        read_idx(tmp_path / "trunc")
    (tmp_path / "tiny").write_bytes(data[:6])
    with pytest.raises(DatasetError):
        read_idx(tmp_path / "tiny")


def test_ingest_idx_byte_exact(tmp_path, fixtures_dir):
    out = tmp_path / "ds"
    vecs, labels = ingest(fixtures_dir / "digits-test-images-idx3-ubyte", "idx", out,
                          fixtures_dir / "digits-test-labels-idx1-ubyte")
    raw = read_idx(fixtures_dir / "digits-test-images-idx3-ubyte")
    assert vecs.shape == (raw.shape[0], 784)
    assert vecs.min() >= 0 and vecs.max() <= 1
    assert np.array_equal(vectors_to_bytes(vecs).reshape(raw.shape), raw)
    v2, l2 = load_ingested(out)
    assert np.array_equal(v2, vecs) and np.array_equal(l2, labels)


def test_ingest_label_count_mismatch(tmp_path):
    write_idx(np.zeros((3, 2, 2), dtype=np.uint8), tmp_path / "img")
    write_idx(np.zeros(2, dtype=np.uint8), tmp_path / "lab")
    with pytest.raises(DatasetError):
        ingest(tmp_path / "img", "idx", tmp_path / "out", tmp_path / "lab")


def test_csv_rows(tmp_path):
    (tmp_path / "a.csv").write_text("0,0.5,1,0.25\n")
    vecs, labels = read_csv_vectors(tmp_path / "a.csv")
    assert vecs.shape == (1, 4) and labels is None
    (tmp_path / "b.csv").write_text("3,0,1\n7,1,0\n")
    vecs, labels = read_csv_vectors(tmp_path / "b.csv", label_first=True)
    assert vecs.shape == (2, 2) and list(labels) == [3, 7]


@pytest.mark.parametrize("text", ["0,1\n0\n", "0,2\n", "", "0,abc\n"])
def test_csv_errors(tmp_path, text):
    (tmp_path / "x.csv").write_text(text)
    with pytest.raises(DatasetError):
        read_csv_vectors(tmp_path / "x.csv")


def test_vector_files(tmp_path):
    write_vector([F(1, 12), F(1, 24)], tmp_path / "v.txt")
    assert (tmp_path / "v.txt").read_text() == "1/12\n1/24\n"
    assert list(read_vector(tmp_path / "v.txt")) == [F(1, 12), F(1, 24)]
    (tmp_path / "w.txt").write_text("# comment\n0.5, 0.5  # trailing\n")
    assert list(read_vector(tmp_path / "w.txt")) == [F(1, 2), F(1, 2)]
    (tmp_path / "e.txt").write_text("# nothing\n")
    with pytest.raises(DatasetError):
        read_vector(tmp_path / "e.txt")


def test_load_ingested_missing(tmp_path):
    with pytest.raises(DatasetError):
        load_ingested(tmp_path)
