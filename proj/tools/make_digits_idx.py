#!/usr/bin/env python3
"""Export the sklearn digits set as IDX files.

The 8x8 images are upscaled to 16x16 by nearest-neighbour (2x pixel
replication) and rescaled from [0,16] to [0,255]. The natural dataset order
is kept and split 1200 train / 597 test, so the output is fully
deterministic. Usage: make_digits_idx.py OUTDIR
"""

import os
import struct
import sys

import numpy as np
from sklearn.datasets import load_digits

TRAIN = 1200


def write_images(path, images):
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">iiii", 0x00000803, n, h, w))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">ii", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    if len(sys.argv) != 2:
        print("usage: make_digits_idx.py OUTDIR", file=sys.stderr)
        return 1
    outdir = sys.argv[1]
    os.makedirs(outdir, exist_ok=True)

    d = load_digits()
    images = np.repeat(np.repeat(d.images, 2, axis=1), 2, axis=2)
    images = np.rint(images * (255.0 / 16.0)).clip(0, 255)
    labels = d.target

    write_images(os.path.join(outdir, "digits16-train-images-idx3-ubyte"), images[:TRAIN])
    write_labels(os.path.join(outdir, "digits16-train-labels-idx1-ubyte"), labels[:TRAIN])
    write_images(os.path.join(outdir, "digits16-test-images-idx3-ubyte"), images[TRAIN:])
    write_labels(os.path.join(outdir, "digits16-test-labels-idx1-ubyte"), labels[TRAIN:])
    print(f"wrote {TRAIN} train / {len(labels) - TRAIN} test images to {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
