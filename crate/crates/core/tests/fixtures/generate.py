#!/usr/bin/env python3
"""Regenerates the golden fixtures in this directory from a standalone
reimplementation of the generator, encoders and index file writer."""

import json
import math
import os
import struct

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
HERE = os.path.dirname(os.path.abspath(__file__))


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK
        self.spare = None

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def uniform(self):
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_nonzero(self):
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def normal(self):
        if self.spare is not None:
            z, self.spare = self.spare, None
            return z
        u1 = self.uniform_nonzero()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self.spare = r * math.sin(theta)
        return r * math.cos(theta)


def random_projection(x, out_dim, seed):
    rng = SplitMix64(seed)
    scale = 1.0 / math.sqrt(out_dim)
    rows = [[rng.normal() * scale for _ in x] for _ in range(out_dim)]
    return [math.fsum(a * b for a, b in zip(row, x)) for row in rows]


def downsample(x, out_dim):
    block = len(x) // out_dim
    return [math.fsum(x[i * block:(i + 1) * block]) / block for i in range(out_dim)]


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK
    return h


def write_index(path, rows):
    dim = len(rows[0][1])
    body = bytearray(b"EDGSHLD1")
    body += struct.pack("<III", 1, len(rows), dim)
    for ident, vec in rows:
        raw = ident.encode("utf-8")
        norm = math.sqrt(math.fsum(v * v for v in vec))
        body += struct.pack("<H", len(raw)) + raw
        body += struct.pack("<%df" % dim, *(v / norm for v in vec))
    body += struct.pack("<Q", fnv1a64(body))
    with open(path, "wb") as f:
        f.write(body)


def main():
    rng = SplitMix64(1234567)
    u64 = [rng.next_u64() for _ in range(5)]
    rng = SplitMix64(42)
    normals = [rng.normal() for _ in range(8)]

    src = SplitMix64(7)
    x = [src.normal() for _ in range(32)]
    golden = {
        "splitmix_seed": 1234567,
        "splitmix_u64": [str(v) for v in u64],
        "normal_seed": 42,
        "normals": normals,
        "input": x,
        "random_projection": {"out_dim": 8, "seed": 99, "expected": random_projection(x, 8, 99)},
        "downsample": {"out_dim": 4, "expected": downsample(x, 4)},
    }
    with open(os.path.join(HERE, "encoder_golden.json"), "w") as f:
        json.dump(golden, f, indent=1)
        f.write("\n")

    # Twelve "category/item" rows, unnormalized on input.
    src = SplitMix64(2024)
    rows = []
    for cat in ("landmark", "artwork", "character"):
        for item in range(4):
            rows.append(("%s/item%02d" % (cat, item), [src.normal() + 0.1 for _ in range(24)]))
    write_index(os.path.join(HERE, "exported_12x24.idx"), rows)


if __name__ == "__main__":
    main()
