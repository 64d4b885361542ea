#!/usr/bin/env python3
"""Reference SplitMix64 + modulo Fisher-Yates seed pool, independent of the C++ code.

Prints the first `count` seeds of chunks 0..n-1 for a master key and pool size,
plus a few green-membership probes. Used once to freeze expected values into
tests/test_keys_partition.cpp.
"""
import sys

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + GOLDEN) & MASK
        return mix64(self.state)


def chunk_seeds(key, pool_size, chunks, count):
    rng = SplitMix64(key)
    pool = list(range(1, pool_size + 1))
    out = []
    for _ in range(chunks):
        for i in range(pool_size - 1, 0, -1):
            j = rng.next() % (i + 1)
            pool[i], pool[j] = pool[j], pool[i]
        out.append(pool[:count])
    return out


def is_green(token_id, seed, gamma):
    bits = mix64(((seed ^ mix64(token_id)) + GOLDEN) & MASK)
    return (bits >> 11) * 2.0 ** -53 < gamma


if __name__ == "__main__":
    key = int(sys.argv[1]) if len(sys.argv) > 1 else 41
    for i, s in enumerate(chunk_seeds(key, 5000, 3, 4)):
        print(f"chunk {i}: {s}")
    print("pool 10 key 7 chunk 0..1:", chunk_seeds(7, 10, 2, 10))
    print("first outputs of SplitMix64(0):", [hex(x) for x in (lambda r: [r.next() for _ in range(3)])(SplitMix64(0))])
    print("green probes (token, seed=24, gamma=0.5):", [int(is_green(t, 24, 0.5)) for t in range(16)])
