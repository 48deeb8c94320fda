"""Attack simulations against watermarked datasets and a robustness sweep.

Every attack is a deterministic function of its inputs and seed.  Frequency
attacks draw new counts on the histogram and then rewrite the dataset with
the same add/remove machinery used for embedding.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import rng as _rng
from .dataset import Histogram, TokenDataset, build_histogram
from .detect import MODES, DetectionParams, wm_detect
from .embed import WatermarkedAsset, rewrite_dataset, wm_generate
from .errors import FreqyWMWarning, ParameterError
from .keying import SECRET_BYTES, WatermarkSecret

ATTACK_KINDS = ("none", "sampling", "destroy_random_bounded", "destroy_percent", "destroy_reorder", "rewatermark")
CSV_FIELDS = ("attack", "intensity", "t", "mode", "rate", "reps")


def _data(x: TokenDataset | WatermarkedAsset) -> TokenDataset:
    return x.data if isinstance(x, WatermarkedAsset) else x


def _check_pct(pct: float, allow_zero: bool = False) -> None:
    lo_ok = pct >= 0 if allow_zero else pct > 0
    if not (lo_ok and pct <= 100):
        raise ParameterError(f"percentage must lie in {'[0' if allow_zero else '(0'}, 100], got {pct}")


def _with_counts(d: TokenDataset, h: Histogram, new: Sequence[int], gen: np.random.Generator) -> TokenDataset:
    deltas = {tok: int(nf) - f for tok, f, nf in zip(h.tokens, h.freqs, new) if int(nf) != f}
    if not deltas:
        return d
    return rewrite_dataset(d, deltas, gen, d.original_total_count)


def attack_sampling(asset: TokenDataset | WatermarkedAsset, pct: float, seed: int) -> TokenDataset:
    """Uniform subsample without replacement of ``floor(len * pct / 100)`` tokens.

    The result declares the source size so detection can scale it back up.
    """
    _check_pct(pct)
    d = _data(asset)
    n = len(d)
    size = math.floor(n * pct / 100)
    if size == 0:
        raise ParameterError(f"a {pct}% sample of {n} tokens is empty")
    gen = _rng.substream(seed, _rng.ATTACK, 0)
    idx = np.sort(gen.choice(n, size=size, replace=False))
    tokens = d.tokens
    return TokenDataset(tuple(tokens[i] for i in idx.tolist()), original_total_count=n)


def _bounded_walk(h: Histogram, gen: np.random.Generator, scale: float | None) -> list[int]:
    """Rank-order walk drawing ``r_i`` uniformly from ``[-l_i, u_i]``.

    ``u_i`` is measured against the already-perturbed previous rank, so order
    can tie but never invert.  The open-ended extremes (top upper, bottom
    lower) mirror the token's inner gap.
    """
    f = h.freqs
    n = len(f)
    new = [0] * n
    for i in range(n):
        if n == 1:
            lo = up = 0
        else:
            lo = h.lower[i] if i < n - 1 else h.upper[i]
            up = new[i - 1] - f[i] if i > 0 else h.lower[0]
        if scale is not None:
            lo, up = math.floor(lo * scale), math.floor(up * scale)
        new[i] = f[i] + int(gen.integers(-lo, up + 1))
    return new


def attack_destroy_bounded(asset: TokenDataset | WatermarkedAsset, seed: int) -> TokenDataset:
    """Perturb every frequency within its rank boundaries (no re-ordering)."""
    d = _data(asset)
    h = build_histogram(d)
    gen = _rng.substream(seed, _rng.ATTACK, 1)
    return _with_counts(d, h, _bounded_walk(h, gen, None), gen)


def attack_destroy_percent(asset: TokenDataset | WatermarkedAsset, max_pct: float, seed: int) -> TokenDataset:
    """As :func:`attack_destroy_bounded` with boundaries shrunk to ``floor(b * max_pct / 100)``."""
    _check_pct(max_pct, allow_zero=True)
    d = _data(asset)
    h = build_histogram(d)
    gen = _rng.substream(seed, _rng.ATTACK, 2)
    return _with_counts(d, h, _bounded_walk(h, gen, max_pct / 100), gen)


def attack_destroy_reorder(asset: TokenDataset | WatermarkedAsset, pct: float, seed: int) -> TokenDataset:
    """Scale every frequency by an independent uniform factor in ``[1 - pct/100, 1 + pct/100]``."""
    _check_pct(pct, allow_zero=True)
    d = _data(asset)
    h = build_histogram(d)
    gen = _rng.substream(seed, _rng.ATTACK, 3)
    factors = gen.uniform(-pct / 100, pct / 100, size=len(h))
    new = np.maximum(0, np.floor(np.asarray(h.freqs, dtype=float) * (1 + factors) + 0.5)).astype(np.int64)
    return _with_counts(d, h, new.tolist(), gen)


def attack_rewatermark(asset: TokenDataset | WatermarkedAsset, b: float, z: int, seed: int,
                       strategy: str = "optimal") -> WatermarkedAsset:
    """Overlay a fresh watermark on the victim's data, as a false claimant would."""
    return wm_generate(_data(asset), b, z, strategy, seed=_rng.child_seed(seed, "rewatermark"))


@dataclass(frozen=True)
class GuessCost:
    secret_bits: float
    modulus_bits: float
    pair_subset_bits: float

    @property
    def total_bits(self) -> float:
        return self.secret_bits + self.modulus_bits + self.pair_subset_bits


def guess_attack_cost(histogram_size: int, k: int, t: int, z: int) -> GuessCost:
    """log2 work factor of guessing ``(R, z, pairs)`` blindly.

    ``R`` contributes its full 256 bits; ``z`` the log of the candidate moduli
    up to ``z``; the pairs at least ``log2 C(C(n,2), k)``.  ``t`` only relaxes
    verification and does not shrink the search space.
    """
    if histogram_size < 0 or k < 0 or z < 2 or t < 0:
        raise ParameterError("histogram_size, k, t must be non-negative and z >= 2")
    if k == 0:
        warnings.warn("k=0 accepts everything; the guess attack is trivial", FreqyWMWarning, stacklevel=2)
    n_pairs = math.comb(histogram_size, 2)
    subsets = math.comb(n_pairs, k) if k <= n_pairs else 0
    return GuessCost(
        secret_bits=8.0 * SECRET_BYTES,
        modulus_bits=math.log2(z - 1) if z > 2 else 0.0,
        pair_subset_bits=math.log2(subsets) if subsets > 0 else 0.0,
    )


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AttackSpec:
    """One attack configuration.  ``intensity`` is the kind's percentage
    (sample size, max change or perturbation); unused by ``destroy_random_bounded``
    and ``none``.  ``b``/``z`` parameterise ``rewatermark``."""

    kind: str
    intensity: float | None = None
    seed: int = 0
    b: float = 2.0
    z: int = 131

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ParameterError(f"unknown attack {self.kind!r}; expected one of {ATTACK_KINDS}")
        if self.kind in ("sampling", "destroy_percent", "destroy_reorder") and self.intensity is None:
            raise ParameterError(f"attack {self.kind} needs an intensity")


def run_attack(spec: AttackSpec, asset: TokenDataset | WatermarkedAsset) -> TokenDataset:
    d = _data(asset)
    if spec.kind == "none":
        return d
    if spec.kind == "sampling":
        return attack_sampling(d, spec.intensity, spec.seed)
    if spec.kind == "destroy_random_bounded":
        return attack_destroy_bounded(d, spec.seed)
    if spec.kind == "destroy_percent":
        return attack_destroy_percent(d, spec.intensity, spec.seed)
    if spec.kind == "destroy_reorder":
        return attack_destroy_reorder(d, spec.intensity, spec.seed)
    return attack_rewatermark(d, spec.b, spec.z, spec.seed).data


@dataclass(frozen=True)
class CurvePoint:
    attack: str
    intensity: float | None
    t: int
    mode: str
    rate: float
    reps: int


@dataclass
class RobustnessCurve:
    points: list[CurvePoint] = field(default_factory=list)

    def rate(self, attack: str, t: int, mode: str = "remainder", intensity: float | None = None) -> float:
        for p in self.points:
            if p.attack == attack and p.t == t and p.mode == mode and (intensity is None or p.intensity == intensity):
                return p.rate
        raise KeyError((attack, t, mode, intensity))

    def to_csv(self, out: TextIO | None = None) -> str:
        buf = out or io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for p in self.points:
            w.writerow([p.attack, "" if p.intensity is None else f"{p.intensity:g}", p.t, p.mode, f"{p.rate:.6f}", p.reps])
        return buf.getvalue() if out is None else ""


def _rates(counts: Counter, secret: WatermarkSecret, t_values: Sequence[int], modes: Sequence[str],
           scale_to: int | None) -> dict[tuple[int, str], float]:
    n = len(secret.pairs)
    return {
        (t, mode): wm_detect(counts, secret, DetectionParams(t=t, k=max(1, n), mode=mode, scale_to=scale_to)).accepted_count / n
        for t in t_values for mode in modes
    }


def _one_rep(spec: AttackSpec, data: TokenDataset, secret: WatermarkSecret, t_values, modes):
    attacked = run_attack(spec, data)
    scale_to = attacked.original_total_count
    return _rates(Counter(attacked.tokens), secret, t_values, modes, scale_to)


_WORKER_STATE: dict = {}


def _init_worker(data, secret, t_values, modes):
    _WORKER_STATE.update(data=data, secret=secret, t_values=t_values, modes=modes)


def _worker(spec):
    st = _WORKER_STATE
    return _one_rep(spec, st["data"], st["secret"], st["t_values"], st["modes"])


def run_robustness_sweep(asset: WatermarkedAsset, attack_grid: Iterable[AttackSpec], t_values: Sequence[int],
                         reps: int, modes: Sequence[str] = ("remainder",), baseline: TokenDataset | None = None,
                         seed: int = 0, workers: int = 1) -> RobustnessCurve:
    """Average fraction of the asset's pairs verified after each attack.

    Repetition ``r`` of an attack runs with a seed derived from ``seed``, the
    attack kind, its intensity and ``r``.  ``baseline`` (a dataset that never
    carried the watermark) is reported as attack ``"baseline"``.
    """
    if reps < 1:
        raise ParameterError("reps must be >= 1")
    if not asset.secret.pairs:
        raise ParameterError("asset carries no watermark pairs")
    for m in modes:
        if m not in MODES:
            raise ParameterError(f"unknown mode {m!r}")
    grid = list(attack_grid)
    jobs = []
    for g_idx, spec in enumerate(grid):
        for r in range(reps):
            jobs.append((g_idx, replace(spec, seed=_rng.child_seed(seed, spec.kind, g_idx, r))))
    specs = [s for _, s in jobs]
    if workers > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker,
                                 initargs=(asset.data, asset.secret, tuple(t_values), tuple(modes))) as ex:
            results = list(ex.map(_worker, specs, chunksize=max(1, len(specs) // (4 * workers))))
    else:
        results = [_one_rep(s, asset.data, asset.secret, t_values, modes) for s in specs]

    curve = RobustnessCurve()
    for g_idx, spec in enumerate(grid):
        mine = [res for (gi, _), res in zip(jobs, results) if gi == g_idx]
        for t in t_values:
            for mode in modes:
                rate = float(np.mean([m[(t, mode)] for m in mine]))
                curve.points.append(CurvePoint(spec.kind, spec.intensity, t, mode, rate, reps))
    if baseline is not None:
        base = _rates(Counter(baseline.tokens), asset.secret, t_values, modes, None)
        for t in t_values:
            for mode in modes:
                curve.points.append(CurvePoint("baseline", None, t, mode, base[(t, mode)], 1))
    return curve
