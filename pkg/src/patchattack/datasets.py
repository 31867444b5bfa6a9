"""Image dataset ingestion (MNIST IDX files and CSV rows) and vector files."""
from __future__ import annotations

import csv
import gzip
import os
import struct
from pathlib import Path

import numpy as np

from .numeric import Arithmetic, as_array, format_number, parse_number

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class DatasetError(ValueError):
    pass


def _open(path):
    path = str(path)
    return gzip.open(path, "rb") if path.endswith(".gz") else open(path, "rb")


def read_idx(path: str | os.PathLike) -> np.ndarray:
    """Read an unsigned-byte IDX file (images: magic 0x803, labels: magic 0x801)."""
    with _open(path) as fh:
        data = fh.read()
    if len(data) < 4:
        raise DatasetError(f"{path}: truncated IDX header")
    magic, = struct.unpack(">I", data[:4])
    if magic not in (IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC):
        raise DatasetError(f"{path}: bad IDX magic 0x{magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise DatasetError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    expected = int(np.prod(dims))
    body = data[header:]
    if len(body) != expected:
        raise DatasetError(f"{path}: expected {expected} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(dims)


def write_idx(array: np.ndarray, path: str | os.PathLike) -> None:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{array.ndim}I", *array.shape))
        fh.write(array.tobytes())


def read_csv_vectors(path: str | os.PathLike, label_first: bool = False):
    """Rows of pixel values in [0, 1]; optionally the first column is an integer label."""
    rows, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [c.strip() for c in row if c.strip()]
            if not row:
                continue
            if label_first:
                labels.append(int(row[0]))
                row = row[1:]
            try:
                vals = [float(parse_number(c, Arithmetic.FLOAT)) for c in row]
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
            if rows and len(vals) != len(rows[0]):
                raise DatasetError(f"{path}:{lineno}: ragged row ({len(vals)} values, expected {len(rows[0])})")
            if any(v < 0 or v > 1 for v in vals):
                raise DatasetError(f"{path}:{lineno}: pixel values must lie in [0, 1]")
            rows.append(vals)
    if not rows:
        raise DatasetError(f"{path}: no rows")
    return np.array(rows, dtype=np.float64), (np.array(labels, dtype=np.int64) if label_first else None)


def ingest(source: str | os.PathLike, fmt: str, out_dir: str | os.PathLike,
           labels_path: str | os.PathLike | None = None, label_first: bool = False):
    """Write ``vectors.npy`` (N x D, float64 in [0, 1]) and ``labels.txt`` into ``out_dir``.

    IDX pixels are stored as ``byte / 255``; ``round(v * 255)`` recovers the bytes
    exactly (see :func:`vectors_to_bytes`).
    """
    if fmt == "idx":
        images = read_idx(source)
        if images.ndim < 2:
            raise DatasetError(f"{source}: not an image file")
        vectors = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
        labels = None
        if labels_path is not None:
            labels = read_idx(labels_path).astype(np.int64)
            if labels.ndim != 1 or len(labels) != len(vectors):
                raise DatasetError(f"{labels_path}: label count does not match image count")
    elif fmt == "csv":
        vectors, labels = read_csv_vectors(source, label_first)
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "vectors.npy", vectors)
    if labels is not None:
        (out / "labels.txt").write_text("".join(f"{int(v)}\n" for v in labels))
    return vectors, labels


def vectors_to_bytes(vectors: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(vectors, dtype=np.float64) * 255.0).astype(np.uint8)


def load_ingested(directory: str | os.PathLike):
    d = Path(directory)
    path = d / "vectors.npy"
    if not path.exists():
        raise DatasetError(f"{d}: no vectors.npy (run 'ingest' first)")
    vectors = np.load(path)
    labels = None
    if (d / "labels.txt").exists():
        labels = np.array([int(s) for s in (d / "labels.txt").read_text().split()], dtype=np.int64)
        if len(labels) != len(vectors):
            raise DatasetError(f"{d}: labels.txt and vectors.npy disagree in length")
    return vectors, labels


def read_vector(path: str | os.PathLike, mode: Arithmetic = Arithmetic.RATIONAL) -> np.ndarray:
    """Numbers separated by whitespace or commas; ``#`` starts a comment."""
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0]
            tokens += [t for t in line.replace(",", " ").split() if t]
    if not tokens:
        raise DatasetError(f"{path}: empty vector file")
    return as_array(tokens, mode)


def write_vector(values, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(format_number(v) for v in values) + "\n")
