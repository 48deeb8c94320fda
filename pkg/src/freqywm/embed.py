"""Frequency modification, dataset rewriting and the generation pipeline."""

from __future__ import annotations

import time
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import rng as _rng
from .analysis import z_range
from .dataset import Histogram, TokenDataset, build_histogram, cosine_similarity
from .errors import ContractViolation, FreqyWMWarning, ParameterError
from .keying import WatermarkSecret, generate_secret_material
from .selection import (
    STRATEGIES,
    EligiblePair,
    SelectionPlan,
    eligible_pairs,
    frequency_shift,
    is_eligible,
    select,
)


@dataclass(frozen=True)
class FrequencyDelta:
    token: str
    delta: int


@dataclass(frozen=True)
class WatermarkedAsset:
    data: TokenDataset
    secret: WatermarkSecret
    report: dict = field(default_factory=dict)

    @property
    def pairs_embedded(self) -> int:
        return len(self.secret.pairs)


def compute_deltas(pair: EligiblePair, h: Histogram | None = None) -> tuple[FrequencyDelta, FrequencyDelta]:
    """Per-token changes that zero the pair's remainder modulo ``s``.

    Passing the histogram the pair came from also re-checks its boundaries.
    """
    if pair.s < 2 or pair.f_i < pair.f_j or pair.remainder != (pair.f_i - pair.f_j) % pair.s:
        raise ContractViolation(f"pair {pair.tokens} is not a well-formed eligible pair")
    if h is not None and not is_eligible(h, pair.i_rank, pair.j_rank, pair.s):
        raise ContractViolation(f"pair {pair.tokens} violates its rank boundaries for s={pair.s}")
    d_i, d_j = frequency_shift(pair.f_i, pair.f_j, pair.s)
    return FrequencyDelta(pair.token_i, d_i), FrequencyDelta(pair.token_j, d_j)


def rewrite_dataset(d: TokenDataset, deltas: Mapping[str, int], gen: np.random.Generator,
                    original_total_count: int | None = None) -> TokenDataset:
    """Remove/insert occurrences so each token's count changes by ``deltas[token]``.

    Removed occurrences are chosen uniformly without replacement; inserted
    copies land at uniformly random positions of the output.
    """
    tokens = d.tokens
    removals = {t: -v for t, v in deltas.items() if v < 0}
    insertions = {t: v for t, v in deltas.items() if v > 0}
    if removals:
        positions: dict[str, list[int]] = {t: [] for t in removals}
        for idx, tok in enumerate(tokens):
            bucket = positions.get(tok)
            if bucket is not None:
                bucket.append(idx)
        drop = np.zeros(len(tokens), dtype=bool)
        for tok in sorted(removals):
            pos, want = positions[tok], removals[tok]
            if want > len(pos):
                raise ParameterError(f"cannot remove {want} occurrences of {tok!r}; only {len(pos)} present")
            drop[np.asarray(pos, dtype=np.int64)[gen.choice(len(pos), size=want, replace=False)]] = True
        kept = [tok for tok, gone in zip(tokens, drop.tolist()) if not gone]
    else:
        kept = list(tokens)
    if insertions:
        extra = [tok for tok in sorted(insertions) for _ in range(insertions[tok])]
        order = gen.permutation(len(extra))
        slots = np.sort(gen.integers(0, len(kept) + 1, size=len(extra)))
        out, prev = [], 0
        for slot, k in zip(slots.tolist(), order.tolist()):
            out.extend(kept[prev:slot])
            out.append(extra[k])
            prev = slot
        out.extend(kept[prev:])
        kept = out
    return TokenDataset(tuple(kept), original_total_count)


def check_rank_preserved(before: Histogram, after: Mapping[str, int]) -> bool:
    """Every strict order between consecutive ranks of ``before`` is still strict."""
    f = [after.get(t, 0) for t in before.tokens]
    return all(f[r] > f[r + 1] for r in range(len(f) - 1) if before.freqs[r] > before.freqs[r + 1])


def apply_plan(d: TokenDataset, plan: SelectionPlan, secret: WatermarkSecret,
               seed: int | None = None, h: Histogram | None = None) -> WatermarkedAsset:
    """Rewrite ``d`` according to ``plan`` and return the asset with the filled-in secret."""
    h = h or build_histogram(d)
    deltas: dict[str, int] = {}
    for pair in plan.chosen:
        for tok, f in ((pair.token_i, pair.f_i), (pair.token_j, pair.f_j)):
            if h.freq(tok) != f:
                raise ParameterError(f"plan does not match dataset: {tok!r} has frequency {h.freq(tok)}, plan says {f}")
        for fd in compute_deltas(pair):
            if fd.token in deltas:
                raise ContractViolation(f"token {fd.token!r} appears in two planned pairs")
            deltas[fd.token] = fd.delta
    new_counts = h.as_counts()
    for tok, dlt in deltas.items():
        new_counts[tok] += dlt
    for pair in plan.chosen:
        if (new_counts[pair.token_i] - new_counts[pair.token_j]) % pair.s:
            raise ContractViolation(f"pair {pair.tokens} not zeroed by its deltas")
    if not check_rank_preserved(h, new_counts):
        raise ContractViolation("plan would change the rank order of the histogram")
    gen = _rng.substream(seed, _rng.PLACEMENT)
    data = rewrite_dataset(d, {t: v for t, v in deltas.items() if v}, gen) if plan.chosen else d
    out_secret = secret.with_pairs(plan.pairs)
    sim = cosine_similarity(h.as_counts(), {t: v for t, v in new_counts.items() if v})
    report = {
        "pairs_embedded": len(plan.chosen),
        "similarity": sim,
        "tokens_added": sum(v for v in deltas.values() if v > 0),
        "tokens_removed": -sum(v for v in deltas.values() if v < 0),
    }
    return WatermarkedAsset(data, out_secret, report)


def wm_generate(d: TokenDataset, b: float, z: int, strategy: str = "optimal", seed: int | None = None,
                cost_mode: str = "complement", production: bool = False) -> WatermarkedAsset:
    """Embed a fresh watermark into ``d`` with similarity budget ``b`` (percent) and modulus ``z``."""
    if not 0 < b < 100:
        raise ParameterError(f"budget b must lie in (0, 100), got {b}")
    if strategy not in STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    timings = {}
    t0 = time.perf_counter()
    h = build_histogram(d)
    timings["histogram"] = time.perf_counter() - t0
    uniform = len(h) < 2 or h.freqs[0] == h.freqs[-1]
    if not uniform:
        _, r_max = z_range(h)
        if not 2 <= z <= r_max:
            raise ParameterError(f"z={z} outside the admissible range [2, {r_max}] for this dataset")
    elif z < 2:
        raise ParameterError(f"z must be >= 2, got {z}")
    secret = WatermarkSecret(generate_secret_material(seed, production=production), z)
    t0 = time.perf_counter()
    eligible = eligible_pairs(h, secret)
    timings["eligible"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    plan = select(strategy, h, eligible, b, seed=seed, cost_mode=cost_mode)
    timings["select"] = time.perf_counter() - t0
    if not plan.chosen:
        warnings.warn("no eligible pairs could be watermarked; returning the data unchanged",
                      FreqyWMWarning, stacklevel=2)
    t0 = time.perf_counter()
    asset = apply_plan(d, plan, secret, seed=seed, h=h)
    timings["rewrite"] = time.perf_counter() - t0
    asset.report.update({
        "eligible_pairs": len(eligible),
        "distinct_tokens": len(h),
        "config": {"b": b, "z": z, "strategy": strategy, "cost_mode": cost_mode, "seed": seed},
        "timings": timings,
    })
    return asset


@dataclass
class MultiWatermarkResult:
    assets: list[WatermarkedAsset]
    similarity_to_original: list[float]
    final_detection_rates: list[float]

    @property
    def final(self) -> WatermarkedAsset:
        return self.assets[-1]


def multi_watermark(d: TokenDataset, n: int, b: float, z: int, strategy: str = "optimal",
                    seed: int | None = None, cost_mode: str = "complement") -> MultiWatermarkResult:
    """Watermark ``d`` ``n`` times in succession, each round with fresh secret material.

    Reports each round's similarity to the original and, on the final data,
    the fraction of each round's pairs still verified at ``t=0``.
    """
    from .detect import DetectionParams, wm_detect

    if n < 1:
        raise ParameterError("n must be >= 1")
    original = Counter(d.tokens)
    assets, sims = [], []
    cur = d
    for it in range(n):
        asset = wm_generate(cur, b, z, strategy, seed=_rng.child_seed(seed, "multiwm", it), cost_mode=cost_mode)
        assets.append(asset)
        sims.append(cosine_similarity(original, Counter(asset.data.tokens)))
        cur = asset.data
    final_h = build_histogram(cur)
    rates = []
    for asset in assets:
        n_pairs = asset.pairs_embedded
        if n_pairs == 0:
            rates.append(float("nan"))
            continue
        rep = wm_detect(final_h, asset.secret, DetectionParams(t=0, k=n_pairs))
        rates.append(rep.accepted_count / n_pairs)
    return MultiWatermarkResult(assets, sims, rates)
