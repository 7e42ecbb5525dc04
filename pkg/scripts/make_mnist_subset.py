"""Build gzip IDX files from the 5000-image MNIST sample bundled with mlxtend.

The sample holds 500 images per digit taken from the official MNIST
training set. The first 400 of each digit go to ``train-*``, the last 100
to ``t10k-*``, so the output mirrors the standard four-file layout.

    python scripts/make_mnist_subset.py --out data/mnist
    python scripts/make_mnist_subset.py --source mlxtend-0.24.0-py3-none-any.whl --out data/mnist
"""
import argparse
import gzip
import io
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

import numpy as np

from fvtrain.data import write_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_source(source):
    source = Path(source)
    if source.suffix == ".whl":
        raw = zipfile.ZipFile(source).read(MEMBER)
    else:
        raw = source.read_bytes()
    table = np.loadtxt(io.StringIO(gzip.decompress(raw).decode()), delimiter=",", dtype=np.int64)
    return table[:, :-1].reshape(-1, 28, 28).astype(np.uint8), table[:, -1].astype(np.uint8)


def download_wheel(dest):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--only-binary=:all:", "-d", str(dest), "mlxtend"],
        check=True,
    )
    return next(Path(dest).glob("mlxtend-*.whl"))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--source", help="mlxtend wheel or mnist_5k.csv.gz (downloaded when omitted)")
    parser.add_argument("--out", default="data/mnist")
    parser.add_argument("--test-per-class", type=int, default=100)
    args = parser.parse_args(argv)

    with tempfile.TemporaryDirectory() as tmp:
        images, labels = read_source(args.source or download_wheel(tmp))

    train_idx, test_idx = [], []
    for digit in range(10):
        idx = np.flatnonzero(labels == digit)
        train_idx.append(idx[: -args.test_per_class])
        test_idx.append(idx[-args.test_per_class :])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for prefix, parts in (("train", train_idx), ("t10k", test_idx)):
        idx = np.concatenate(parts)
        write_idx(out / f"{prefix}-images-idx3-ubyte.gz", images[idx])
        write_idx(out / f"{prefix}-labels-idx1-ubyte.gz", labels[idx])
        print(f"{prefix}: {idx.size} images -> {out}")


if __name__ == "__main__":
    main()
