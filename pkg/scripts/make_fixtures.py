"""Regenerate the files under tests/fixtures.

toy.net / sign.net are the two hand-sized example networks.  The image fixture
is MNIST-shaped (28x28 bytes in IDX files) but built from scikit-learn's bundled
8x8 digits, upsampled, because no MNIST copy is available offline.  The
784-16-16-10 net is trained here with plain numpy and frozen; rerunning with the
same seed reproduces the same bytes.

    python3 scripts/make_fixtures.py [--out tests/fixtures]
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from patchattack.datasets import write_idx
from patchattack.network import build_network, save_network

TOY = dict(weights=[[[1, 1], [-1, 2]], [[2, 3], [1, 1]], [[2, -8], [-4, 5]]],
            biases=[[0, 0], [0, 0], [0, 0]])
SIGN = dict(weights=[[[1, -2], [2, -1]], [[1, -1], [-1, 1]]], biases=[[0, 0], [0, 0]])


def digits_28x28():
    from sklearn.datasets import load_digits

    from scipy.ndimage import zoom

    d = load_digits()
    imgs = d.images / 16.0
    big = np.stack([zoom(im, 3.5, order=1) for im in imgs])  # 8x8 -> 28x28
    big = np.clip(big, 0.0, 1.0)
    return np.rint(big * 255).astype(np.uint8), d.target.astype(np.uint8)


def train(x, y, hidden=(16, 16), epochs=60, lr=0.1, seed=0):
    """Minibatch SGD on softmax cross-entropy, He initialisation."""
    rng = np.random.default_rng(seed)
    sizes = [x.shape[1], *hidden, 10]
    ws = [rng.normal(0, np.sqrt(2 / a), (b, a)) for a, b in zip(sizes, sizes[1:])]
    bs = [np.zeros(b) for b in sizes[1:]]
    onehot = np.eye(10)[y]
    for _ in range(epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), 32):
            idx = order[start:start + 32]
            acts = [x[idx]]
            for i, (w, b) in enumerate(zip(ws, bs)):
                z = acts[-1] @ w.T + b
                acts.append(np.maximum(z, 0) if i < len(ws) - 1 else z)
            logits = acts[-1] - acts[-1].max(axis=1, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=1, keepdims=True)
            g = (p - onehot[idx]) / len(idx)
            for i in reversed(range(len(ws))):
                gw, gb = g.T @ acts[i], g.sum(axis=0)
                if i:
                    g = (g @ ws[i]) * (acts[i] > 0)
                ws[i] -= lr * gw
                bs[i] -= lr * gb
    return ws, bs


def accuracy(ws, bs, x, y):
    a = x
    for i, (w, b) in enumerate(zip(ws, bs)):
        a = a @ w.T + b
        if i < len(ws) - 1:
            a = np.maximum(a, 0)
    return float((a.argmax(axis=1) == y).mean())


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--test-size", type=int, default=200)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    save_network(build_network(name="toy", **TOY), out / "toy.net")
    save_network(build_network(name="sign", **SIGN), out / "sign.net")

    images, labels = digits_28x28()
    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(images))
    test, train_idx = order[:args.test_size], order[args.test_size:]
    write_idx(images[test], out / "digits-test-images-idx3-ubyte")
    write_idx(labels[test], out / "digits-test-labels-idx1-ubyte")

    x = images.reshape(len(images), -1).astype(np.float64) / 255.0
    ws, bs = train(x[train_idx], labels[train_idx].astype(int), seed=args.seed)
    # round to 6 decimals so the JSON file is compact and the float weights are exact decimals
    ws = [np.round(w, 6) for w in ws]
    bs = [np.round(b, 6) for b in bs]
    print(f"train acc {accuracy(ws, bs, x[train_idx], labels[train_idx]):.3f}, "
          f"test acc {accuracy(ws, bs, x[test], labels[test]):.3f}")
    net = build_network([w.tolist() for w in ws], [b.tolist() for b in bs], name="digits-784-16-16-10",
                        mode="float")
    save_network(net, out / "digits_784_16_16_10.net")


if __name__ == "__main__":
    main()
