#!/usr/bin/env python3
"""Convert the npm `fashion-mnist` JSON bundle into IDX files.

The npm package ships every Fashion-MNIST image (70,000, grouped by class) as
JSON arrays of 784 bytes. This writes a class-balanced training subset and a
disjoint test subset in the IDX format read by tavaal::data::load_idx.

    npm pack fashion-mnist && tar xzf fashion-mnist-1.1.0.tgz
    python3 tools/make_fashion_idx.py package/src/clothes data/fashion-mnist
"""
import argparse
import json
import pathlib
import random
import struct


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("clothes_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--train-per-class", type=int, default=1000)
    ap.add_argument("--test-per-class", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20200101)
    args = ap.parse_args()

    train, test = [], []
    for c in range(10):
        data = json.load(open(pathlib.Path(args.clothes_dir) / f"{c}.json"))["data"]
        data = [img for img in data if len(img) == 28 * 28]  # class 0 carries two empty entries
        need = args.train_per_class + args.test_per_class
        if len(data) < need:
            raise SystemExit(f"class {c}: only {len(data)} images, need {need}")
        train += [(img, c) for img in data[: args.train_per_class]]
        test += [(img, c) for img in data[args.train_per_class : need]]

    rng = random.Random(args.seed)
    rng.shuffle(train)
    rng.shuffle(test)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", [i for i, _ in train])
    write_labels(out / "train-labels-idx1-ubyte", [c for _, c in train])
    write_images(out / "test-images-idx3-ubyte", [i for i, _ in test])
    write_labels(out / "test-labels-idx1-ubyte", [c for _, c in test])
    print(f"wrote {len(train)} train / {len(test)} test samples to {out}")


if __name__ == "__main__":
    main()
