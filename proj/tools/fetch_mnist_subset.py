#!/usr/bin/env python3
"""Build MNIST-format IDX files from the digits bundled in the `mnist` npm package.

The package ships about 1000 real MNIST digits per class as JSON floats.
Each class is split into a training part and a test part, and the four
files are written in the standard IDX layout:

    train-images-idx3-ubyte  train-labels-idx1-ubyte
    t10k-images-idx3-ubyte   t10k-labels-idx1-ubyte

Usage:
    tools/fetch_mnist_subset.py --out data/mnist-subset
    tools/fetch_mnist_subset.py --tarball mnist-1.1.0.tgz --out data/mnist-subset
"""

import argparse
import json
import struct
import subprocess
import tarfile
import tempfile
from pathlib import Path

SIDE = 28
PIXELS = SIDE * SIDE


def fetch_tarball(workdir: Path) -> Path:
    out = subprocess.run(
        ["npm", "pack", "mnist@1.1.0", "--silent"],
        cwd=workdir, check=True, capture_output=True, text=True,
    )
    return workdir / out.stdout.strip().splitlines()[-1]


def load_digits(tarball: Path) -> dict[int, list[bytes]]:
    digits = {}
    with tarfile.open(tarball) as tar:
        for label in range(10):
            member = tar.extractfile(f"package/src/digits/{label}.json")
            flat = json.load(member)["data"]
            if len(flat) % PIXELS:
                raise ValueError(f"digit {label}: {len(flat)} values is not a multiple of {PIXELS}")
            images = []
            for i in range(0, len(flat), PIXELS):
                px = flat[i:i + PIXELS]
                images.append(bytes(min(255, max(0, round(v * 255))) for v in px))
            digits[label] = images
    return digits


def write_idx(directory: Path, prefix: str, samples: list[tuple[int, bytes]]) -> None:
    with open(directory / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), SIDE, SIDE))
        for _, img in samples:
            f.write(img)
    with open(directory / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(samples)))
        f.write(bytes(label for label, _ in samples))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("data/mnist-subset"))
    ap.add_argument("--tarball", type=Path, help="use an already downloaded mnist-1.1.0.tgz")
    ap.add_argument("--train-fraction", type=float, default=0.8)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        tarball = args.tarball or fetch_tarball(Path(tmp))
        digits = load_digits(tarball)

    train, test = [], []
    for label, images in digits.items():
        cut = int(len(images) * args.train_fraction)
        train += [(label, img) for img in images[:cut]]
        test += [(label, img) for img in images[cut:]]

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out, "train", train)
    write_idx(args.out, "t10k", test)
    print(f"wrote {len(train)} training and {len(test)} test digits to {args.out}")


if __name__ == "__main__":
    main()
