"""Watermark verification, sample scale-up and the two-claim judge."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .analysis import t_effective
from .dataset import Histogram, TokenDataset
from .errors import FreqyWMWarning, ParameterError
from .keying import WatermarkSecret, derive_sij

MODES = ("remainder", "symmetric")


@dataclass(frozen=True)
class DetectionParams:
    """Thresholds for :func:`wm_detect`.

    ``t`` is a constant per-pair threshold; ``t_pct`` switches to the per-pair
    threshold ``floor(s * t_pct)``.  ``k`` is the number of verified pairs
    required; ``k_fraction`` expresses it relative to the secret's pair count
    (rounded up).  With neither, every pair must verify.
    """

    t: int = 0
    t_pct: float | None = None
    k: int | None = None
    k_fraction: float | None = None
    mode: str = "remainder"
    scale_to: int | None = None

    def __post_init__(self):
        if self.t < 0:
            raise ParameterError("t must be non-negative")
        if self.t_pct is not None and not 0 <= self.t_pct < 1:
            raise ParameterError(f"t_pct must lie in [0, 1), got {self.t_pct}")
        if self.k is not None and self.k < 1:
            raise ParameterError("k must be a positive integer")
        if self.k is not None and self.k_fraction is not None:
            raise ParameterError("give k or k_fraction, not both")
        if self.k_fraction is not None and not 0 < self.k_fraction <= 1:
            raise ParameterError("k_fraction must lie in (0, 1]")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scale_to is not None and self.scale_to < 1:
            raise ParameterError("scale_to must be positive")

    def threshold(self, s: int) -> int:
        return t_effective(s, self.t_pct) if self.t_pct is not None else self.t

    def required(self, n_pairs: int) -> int:
        if self.k is not None:
            return self.k
        if self.k_fraction is not None:
            return max(1, math.ceil(self.k_fraction * n_pairs))
        return max(1, n_pairs)


@dataclass(frozen=True)
class PairVerdict:
    pair: tuple[str, str]
    found: bool
    s: int
    remainder: int | None
    accepted: bool


@dataclass(frozen=True)
class DetectionReport:
    per_pair: tuple[PairVerdict, ...]
    accepted_count: int
    k: int
    params: DetectionParams

    @property
    def verdict(self) -> str:
        return "accept" if self.accepted_count >= self.k else "reject"

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"

    @property
    def rate(self) -> float:
        """Fraction of the secret's pairs that verified."""
        return self.accepted_count / len(self.per_pair) if self.per_pair else 0.0

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "accepted_count": self.accepted_count,
            "pairs": len(self.per_pair),
            "k": self.k,
            "t": self.params.t,
            "t_pct": self.params.t_pct,
            "mode": self.params.mode,
            "scale_to": self.params.scale_to,
            "per_pair": [
                {"i": v.pair[0], "j": v.pair[1], "found": v.found, "s": v.s,
                 "remainder": v.remainder, "accepted": v.accepted}
                for v in self.per_pair
            ],
        }


def _round_half_up(num: int, den: int) -> int:
    return (2 * num + den) // (2 * den)


def scale_up(h: Histogram | Mapping[str, int], sample_total: int, original_total: int) -> Histogram:
    """Multiply every frequency by ``original_total / sample_total``, rounding half away from zero."""
    if sample_total <= 0 or original_total <= 0:
        raise ParameterError("totals must be positive")
    if original_total < sample_total:
        warnings.warn(f"declared original size {original_total} is smaller than the sample ({sample_total})",
                      FreqyWMWarning, stacklevel=2)
    counts = h.as_counts() if isinstance(h, Histogram) else h
    return Histogram.from_counts(
        {tok: _round_half_up(f * original_total, sample_total) for tok, f in counts.items()})


def wm_detect(d: TokenDataset | Histogram | Mapping[str, int], secret: WatermarkSecret,
              params: DetectionParams | None = None) -> DetectionReport:
    """Count the secret's pairs whose frequency difference is (nearly) a multiple of ``s``.

    A declared sample (``original_total_count``) or ``params.scale_to`` makes
    frequencies scale up first.  Pairs with a missing token do not count.
    """
    params = params or DetectionParams()
    if params.t_pct is None and params.t > secret.z - 1:
        raise ParameterError(f"t={params.t} exceeds z-1={secret.z - 1}, the largest meaningful threshold")
    target = params.scale_to
    if isinstance(d, TokenDataset):
        counts: Mapping[str, int] = Counter(d.tokens)
        if target is None:
            target = d.original_total_count
        total = len(d)
    else:
        counts = d.as_counts() if isinstance(d, Histogram) else d
        total = sum(counts.values())
    if target is not None and total and target != total:
        counts = scale_up(counts, total, target).as_counts()

    verdicts = []
    accepted = 0
    for tok_i, tok_j in secret.pairs:
        s = derive_sij(tok_i, tok_j, secret.r, secret.z)
        f_i, f_j = counts.get(tok_i, 0), counts.get(tok_j, 0)
        if not (f_i and f_j):
            verdicts.append(PairVerdict((tok_i, tok_j), False, s, None, False))
            continue
        if s < 2:  # never produced by generation; a modulus of 0 or 1 carries no mark
            verdicts.append(PairVerdict((tok_i, tok_j), True, s, None, False))
            continue
        rm = (f_i - f_j) % s
        dist = rm if params.mode == "remainder" else min(rm, s - rm)
        ok = dist <= params.threshold(s)
        accepted += ok
        verdicts.append(PairVerdict((tok_i, tok_j), True, s, rm, ok))
    return DetectionReport(tuple(verdicts), accepted, params.required(len(secret.pairs)), params)


@dataclass(frozen=True)
class JudgeResult:
    owner: str
    reports: dict[tuple[str, str], DetectionReport]

    def matrix(self) -> dict[str, dict[str, str]]:
        """``{secret_of: {data_of: verdict}}``."""
        out: dict[str, dict[str, str]] = {"A": {}, "B": {}}
        for (sec, dat), rep in self.reports.items():
            out[sec][dat] = rep.verdict
        return out


def judge(claim_a: tuple[TokenDataset, WatermarkSecret], claim_b: tuple[TokenDataset, WatermarkSecret],
          params: DetectionParams | None = None) -> JudgeResult:
    """Resolve two ownership claims by running each secret on each claimant's data.

    The owner is the claimant whose secret verifies on both datasets; when
    both or neither do, the outcome is ``"inconclusive"``.
    """
    params = params or DetectionParams(k_fraction=0.8)
    data = {"A": claim_a[0], "B": claim_b[0]}
    secrets_ = {"A": claim_a[1], "B": claim_b[1]}
    reports = {(s, dname): wm_detect(data[dname], secrets_[s], params)
               for s in ("A", "B") for dname in ("A", "B")}
    both = [s for s in ("A", "B") if reports[(s, "A")].accepted and reports[(s, "B")].accepted]
    owner = both[0] if len(both) == 1 else "inconclusive"
    return JudgeResult(owner, reports)
