#!/usr/bin/env python3
"""Convert the digits bundled with the `mnist` npm package into IDX files.

The npm package ships 10,000 MNIST digits as JSON arrays of pixel values
already divided by 255 and rounded to three decimals; every distinct value
maps back onto a unique byte, so the original 8-bit pixels are recovered
exactly with round(v * 255).

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_npm_to_idx.py package/src/digits data/mnist
"""
import argparse
import gzip
import json
import random
import struct
from pathlib import Path

ROWS = COLS = 28


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + bytes(payload))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--test", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20200101)
    args = ap.parse_args()

    samples = []
    for label in range(10):
        raw = json.loads(Path(args.digits_dir, f"{label}.json").read_text())["data"]
        n = len(raw) // (ROWS * COLS)
        for i in range(n):
            px = raw[i * ROWS * COLS:(i + 1) * ROWS * COLS]
            samples.append((bytes(int(round(v * 255)) for v in px), label))

    random.Random(args.seed).shuffle(samples)
    splits = {"t10k": samples[:args.test], "train": samples[args.test:]}
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in splits.items():
        images = b"".join(p for p, _ in part)
        labels = bytes(l for _, l in part)
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x00000803, [len(part), ROWS, COLS], images)
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x00000801, [len(part)], labels)
        print(name, len(part))


if __name__ == "__main__":
    main()
