"""Shared fixtures and independent oracles used across the test modules."""

from __future__ import annotations

import struct
import warnings
from functools import lru_cache

import numpy as np
import pytest

from freqywm.dataset import TokenDataset
from freqywm.embed import wm_generate
from freqywm.synth import SynthSpec, generate

# --------------------------------------------------------------------------
# pure-python SHA-256, independent of hashlib
# --------------------------------------------------------------------------

_K = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
]


def _rotr(x, n):
    return ((x >> n) | (x << (32 - n))) & 0xFFFFFFFF


def pure_sha256(msg: bytes) -> bytes:
    h = [0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19]
    bitlen = len(msg) * 8
    msg = msg + b"\x80"
    msg += b"\x00" * ((56 - len(msg) % 64) % 64) + struct.pack(">Q", bitlen)
    for off in range(0, len(msg), 64):
        w = list(struct.unpack(">16I", msg[off:off + 64]))
        for i in range(16, 64):
            s0 = _rotr(w[i - 15], 7) ^ _rotr(w[i - 15], 18) ^ (w[i - 15] >> 3)
            s1 = _rotr(w[i - 2], 17) ^ _rotr(w[i - 2], 19) ^ (w[i - 2] >> 10)
            w.append((w[i - 16] + s0 + w[i - 7] + s1) & 0xFFFFFFFF)
        a, b, c, d, e, f, g, hh = h
        for i in range(64):
            t1 = (hh + (_rotr(e, 6) ^ _rotr(e, 11) ^ _rotr(e, 25)) + ((e & f) ^ (~e & g)) + _K[i] + w[i]) & 0xFFFFFFFF
            t2 = ((_rotr(a, 2) ^ _rotr(a, 13) ^ _rotr(a, 22)) + ((a & b) ^ (a & c) ^ (b & c))) & 0xFFFFFFFF
            hh, g, f, e, d, c, b, a = g, f, e, (d + t1) & 0xFFFFFFFF, c, b, a, (t1 + t2) & 0xFFFFFFFF
        h = [(x + y) & 0xFFFFFFFF for x, y in zip(h, [a, b, c, d, e, f, g, hh])]
    return b"".join(struct.pack(">I", x) for x in h)


def oracle_sij(tok_i: str, tok_j: str, r: bytes, z: int) -> int:
    inner = pure_sha256(r + tok_j.encode("utf-8"))
    return int.from_bytes(pure_sha256(tok_i.encode("utf-8") + inner), "big") % z


# --------------------------------------------------------------------------
# combinatorial oracles
# --------------------------------------------------------------------------

def brute_force_matching(n: int, edges: list[tuple[int, int, int]], maxcardinality: bool = False):
    """Best (cardinality, weight) or weight over all matchings by exhaustive recursion."""
    adj = {}
    for u, v, w in edges:
        key = (min(u, v), max(u, v))
        adj[key] = max(w, adj.get(key, w))

    @lru_cache(maxsize=None)
    def best(mask: int):
        # lowest free vertex either stays unmatched or is matched to a later free vertex
        free = [v for v in range(n) if not mask >> v & 1]
        if not free:
            return (0, 0)
        u = free[0]
        top = best(mask | 1 << u)
        for v in free[1:]:
            w = adj.get((u, v))
            if w is None:
                continue
            c, wt = best(mask | 1 << u | 1 << v)
            cand = (c + 1, wt + w)
            if (cand if maxcardinality else (cand[1], cand[0])) > (top if maxcardinality else (top[1], top[0])):
                top = cand
        return top

    return best(0)


def dp_survival(probs, k: int) -> float:
    """P(S >= k) by direct convolution of Bernoulli PMFs."""
    pmf = np.zeros(len(probs) + 1)
    pmf[0] = 1.0
    for p in probs:
        pmf[1:] = pmf[1:] * (1 - p) + pmf[:-1] * p
        pmf[0] *= 1 - p
    return float(pmf[max(k, 0):].sum())


# --------------------------------------------------------------------------
# datasets
# --------------------------------------------------------------------------

def small_dataset(rng: np.random.Generator, n_tokens: int, n_samples: int, alpha: float) -> TokenDataset:
    p = np.arange(1, n_tokens + 1, dtype=float) ** -alpha
    idx = rng.choice(n_tokens, size=n_samples, p=p / p.sum())
    return TokenDataset(tuple(f"t{i}" for i in idx.tolist()))


def quiet_generate(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return wm_generate(*args, **kwargs)


@pytest.fixture(scope="session")
def synth_100k():
    return generate(SynthSpec(1000, 100_000, 0.5, seed=1))


@pytest.fixture(scope="session")
def asset_100k(synth_100k):
    return wm_generate(synth_100k, 2, 131, seed=7)


# --------------------------------------------------------------------------
# acceptance summary
# --------------------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record():
    """``record(n, ok, detail)`` stores the one-line verdict of criterion ``n``."""

    def _record(n: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
