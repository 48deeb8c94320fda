"""False-positive probabilities and admissible ranges for ``z`` and ``t``.

A pair of an unrelated dataset is modelled as having a remainder drawn
uniformly from ``0..s-1``, so it passes a threshold ``t`` with probability
``min(t+1, s)/s``.  The number of passing pairs is then Poisson-Binomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Histogram
from .errors import NumericalError, ParameterError

IMAG_TOL = 1e-9


def acceptance_probability(s: int, t: int) -> float:
    """Chance that a uniform remainder in ``[0, s-1]`` is at most ``t``."""
    if s < 1:
        raise ParameterError("modulus must be positive")
    return min(t + 1, s) / s if t >= 0 else 0.0


def pair_acceptance_probs(s_values: Sequence[int], t: int | None = None, pct: float | None = None) -> list[float]:
    """Per-pair acceptance probabilities for a constant ``t`` or a per-pair ``t = floor(s*pct)``."""
    if (t is None) == (pct is None):
        raise ParameterError("give exactly one of t or pct")
    if pct is not None:
        return [acceptance_probability(s, t_effective(s, pct)) for s in s_values]
    return [acceptance_probability(s, t) for s in s_values]


def markov_bound(probs: Sequence[float], k: float) -> float:
    """Markov's inequality ``P(S >= k) <= mu/k``, capped at 1 (and 1 for ``k <= 0``)."""
    if k <= 0:
        return 1.0
    return min(1.0, float(sum(probs)) / k)


def poisson_binomial_pmf(probs: Sequence[float]) -> np.ndarray:
    """PMF of the number of successes, via the DFT of the characteristic function."""
    p = np.asarray(probs, dtype=float)
    if p.size and (p.min() < 0 or p.max() > 1):
        raise ParameterError("probabilities must lie in [0, 1]")
    n = p.size
    omega = np.exp(2j * np.pi * np.arange(n + 1) / (n + 1))
    # characteristic function sampled at the (n+1)-th roots of unity
    phi = np.prod(1.0 + np.outer(omega - 1.0, p), axis=1) if n else np.ones(1, dtype=complex)
    pmf = np.fft.fft(phi) / (n + 1)
    residue = float(np.abs(pmf.imag).max())
    if residue > IMAG_TOL:
        raise NumericalError(f"imaginary residue {residue:.3g} exceeds {IMAG_TOL}")
    return np.clip(pmf.real, 0.0, 1.0)


def poisson_binomial_survival(probs: Sequence[float], k: int) -> float:
    """Exact ``P(S >= k)`` for independent Bernoulli trials with ``probs``."""
    n = len(probs)
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    pmf = poisson_binomial_pmf(probs)
    return float(min(1.0, max(0.0, pmf[k:].sum())))


@dataclass(frozen=True)
class FalsePositiveEstimate:
    n: int
    k: int
    t: int | None
    markov_bound: float
    exact_survival: float


def false_positive(s_values: Sequence[int], k: int, t: int | None = None, pct: float | None = None) -> FalsePositiveEstimate:
    probs = pair_acceptance_probs(s_values, t=t, pct=pct)
    return FalsePositiveEstimate(
        n=len(probs), k=k, t=t,
        markov_bound=markov_bound(probs, k),
        exact_survival=poisson_binomial_survival(probs, k),
    )


def mean_acceptance_for_z(z: int, t: int) -> float:
    """Average of ``min(t+1,s)/s`` over usable moduli ``s`` in ``[2, z-1]``."""
    if z < 3:
        raise ParameterError("z must be >= 3 to have a usable modulus")
    return sum(acceptance_probability(s, t) for s in range(2, z)) / (z - 2)


def z_range(h: Histogram) -> tuple[int, int]:
    """Inclusive range ``(2, r_max)`` for the modulus, ``r_max = f_max - f_min``."""
    if len(h) < 2 or h.freqs[0] == h.freqs[-1]:
        raise ParameterError("no valid z; dataset unwatermarkable (all frequencies are equal)")
    r_max = h.freqs[0] - h.freqs[-1]
    if r_max < 2:
        raise ParameterError(f"no valid z; dataset unwatermarkable (r_max = {r_max})")
    return 2, r_max


def t_range(z: int) -> int:
    """Largest constant threshold that is meaningful for modulus ``z``."""
    if z < 2:
        raise ParameterError("z must be >= 2")
    return z - 1


def t_effective(s: int, pct: float) -> int:
    """Per-pair threshold ``floor(s * pct)`` for the percentage mode."""
    if not 0 <= pct < 1:
        raise ParameterError(f"percentage threshold must lie in [0, 1), got {pct}")
    return math.floor(s * pct)
