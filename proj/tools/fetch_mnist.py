#!/usr/bin/env python3
"""Fetch the digit samples bundled with the `mnist` npm package and write them
as standard IDX files (images: magic 0x00000803, labels: magic 0x00000801).

The package ships roughly 10k MNIST digits as JSON, one file per class, with
pixels stored as byte/255 rounded to three decimals. Bytes are recovered
exactly by round(v * 255). Samples are interleaved round-robin across classes
so any prefix is class-balanced.
"""
import argparse
import json
import pathlib
import struct
import subprocess
import tarfile
import tempfile

ROWS = COLS = 28


def load_digits(package_dir: pathlib.Path):
    per_class = []
    for digit in range(10):
        with open(package_dir / "src" / "digits" / f"{digit}.json") as fh:
            flat = json.load(fh)["data"]
        count = len(flat) // (ROWS * COLS)
        images = [flat[i * ROWS * COLS:(i + 1) * ROWS * COLS] for i in range(count)]
        per_class.append(images)
    return per_class


def interleave(per_class):
    images, labels = [], []
    depth = max(len(c) for c in per_class)
    for i in range(depth):
        for digit, items in enumerate(per_class):
            if i < len(items):
                images.append(items[i])
                labels.append(digit)
    return images, labels


def write_idx(out_dir: pathlib.Path, images, labels):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "images-idx3-ubyte", "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, len(images), ROWS, COLS))
        for img in images:
            fh.write(bytes(min(255, max(0, round(v * 255))) for v in img))
    with open(out_dir / "labels-idx1-ubyte", "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, len(labels)))
        fh.write(bytes(labels))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "mnist"))
    args = parser.parse_args()
    out_dir = pathlib.Path(args.out)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(["npm", "pack", "mnist@1.1.0", "--silent"], cwd=tmp, check=True,
                       stdout=subprocess.DEVNULL)
        tgz = next(pathlib.Path(tmp).glob("mnist-*.tgz"))
        with tarfile.open(tgz) as tar:
            tar.extractall(tmp)
        images, labels = interleave(load_digits(pathlib.Path(tmp) / "package"))
    write_idx(out_dir, images, labels)
    print(f"wrote {len(images)} images to {out_dir}")


if __name__ == "__main__":
    main()
