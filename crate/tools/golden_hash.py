#!/usr/bin/env python3
"""Recompute the weight-bundle digest of the modified LeNet-5 fixture.

Written without reference to the Rust sources' control flow: a plain
SplitMix64, the CBT byte layout and hashlib. Usage:

    python3 tools/golden_hash.py [seed] [b2]
"""
import hashlib
import struct
import sys

MASK = (1 << 64) - 1

# Layer index, weight dims; the inner-product length is the product of dims[1:].
LAYERS = [
    (0, [6, 1, 5, 5]),
    (1, [6, 6, 3, 3]),
    (2, [16, 6, 5, 5]),
    (3, [16, 16, 3, 3]),
    (5, [32, 16]),
    (6, [10, 32]),
]


def splitmix64(seed):
    state = seed & MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def dtype_for(bits):
    if bits <= 8:
        return 1, "b"
    if bits <= 16:
        return 2, "h"
    return 3, "i"


def cbt(dims, values, bits):
    code, fmt = dtype_for(bits)
    head = b"CBT1" + struct.pack("<HBB", 1, code, len(dims))
    head += b"".join(struct.pack("<I", d) for d in dims)
    return head + struct.pack("<%d%s" % (len(values), fmt), *values)


def shift(b2, np_):
    ceil_log2 = (np_ - 1).bit_length()
    return max(0, b2 + (ceil_log2 + 1) // 2 - 3)


def bundle_bytes(seed, b2):
    rng = splitmix64(seed)
    draw = lambda: (next(rng) >> (64 - b2)) - (1 << (b2 - 1))
    out = b""
    for index, dims in LAYERS:
        n = dims[0]
        np_ = 1
        for d in dims[1:]:
            np_ *= d
        weight = [draw() for _ in range(n * np_)]
        bias = [draw() for _ in range(n)]
        out += struct.pack("<I", index)
        out += cbt(dims, weight, b2)
        out += cbt([n], bias, b2)
        out += struct.pack("<I", shift(b2, np_))
    return out


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 42
    b2 = int(sys.argv[2]) if len(sys.argv) > 2 else 8
    data = bundle_bytes(seed, b2)
    print(len(data), hashlib.sha256(data).hexdigest())


if __name__ == "__main__":
    main()
