# SPDX-License-Identifier: Apache-2.0
"""Convert the digit samples bundled in the npm `mnist` package into IDX files.

usage: python3 tools/mnist_from_npm.py <package dir> <out dir> [--test N] [--seed S]

Writes train-images.idx, train-labels.idx, test-images.idx, test-labels.idx.
"""

import argparse
import json
import random
import struct
from pathlib import Path


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(bytes(min(255, max(0, round(v * 255))) for v in img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("package")
    ap.add_argument("out")
    ap.add_argument("--test", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    samples = []
    for digit in range(10):
        raw = json.loads((Path(args.package) / "src" / "digits" / f"{digit}.json").read_text())["data"]
        for i in range(0, len(raw), 784):
            samples.append((raw[i : i + 784], digit))
    random.Random(args.seed).shuffle(samples)
    test, train = samples[: args.test], samples[args.test :]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("test", test)):
        write_images(out / f"{name}-images.idx", [s[0] for s in part])
        write_labels(out / f"{name}-labels.idx", [s[1] for s in part])
    print(f"{len(train)} train / {len(test)} test samples -> {out}")


if __name__ == "__main__":
    main()
