"""Independent recomputation of the seeded-hash token embeddings.

Used to freeze expected cosine values in the coherence tests. Mirrors the
documented construction only (FNV-1a token hash, splitmix64 component
stream, mean pooling); shares no code with the Rust implementation.
"""
import math
import re
import sys

MASK = (1 << 64) - 1
DEFAULT_SEED = 0x5EED_C0DE_7A1C_0001
DIM = 64
GOLDEN = 0x9E3779B97F4A7C15


def fnv1a(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def splitmix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def tokens(text: str):
    out = []
    for raw in re.split(r"[^0-9a-z']+", text.lower()):
        t = raw.strip("'")
        if t:
            out.append(t)
    return out


def token_vec(tok: str, seed: int = DEFAULT_SEED):
    h = fnv1a(tok.encode()) ^ seed
    v = []
    for j in range(DIM):
        x = splitmix((h + (j + 1) * GOLDEN) & MASK)
        v.append((x >> 11) / float(1 << 53) * 2.0 - 1.0)
    return v


def pooled(text: str):
    toks = tokens(text)
    acc = [0.0] * DIM
    for t in toks:
        for j, c in enumerate(token_vec(t)):
            acc[j] += c
    if not toks:
        return acc
    return [a / len(toks) for a in acc]


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


if __name__ == "__main__":
    a, b = sys.argv[1], sys.argv[2]
    print(repr(cosine(pooled(a), pooled(b))))
