"""Power-law synthetic token datasets with tunable skew."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .dataset import TokenDataset
from .errors import ParameterError


@dataclass(frozen=True)
class SynthSpec:
    n_tokens: int = 1000
    n_samples: int = 1_000_000
    alpha: float = 0.5
    seed: int | None = 0

    def __post_init__(self):
        if self.n_tokens < 1 or self.n_samples < 1:
            raise ParameterError("n_tokens and n_samples must be positive")
        if not 0 <= self.alpha <= 1:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")


def token_name(i: int) -> str:
    return f"tk{i}"


def probabilities(n_tokens: int, alpha: float) -> np.ndarray:
    """``p_i`` proportional to ``(i+1)**-alpha``; uniform at ``alpha=0``."""
    p = np.arange(1, n_tokens + 1, dtype=float) ** -alpha
    return p / p.sum()


def generate(spec: SynthSpec) -> TokenDataset:
    """Draw ``n_samples`` i.i.d. tokens ``tk<i>``."""
    gen = _rng.substream(spec.seed, _rng.SYNTH)
    idx = gen.choice(spec.n_tokens, size=spec.n_samples, p=probabilities(spec.n_tokens, spec.alpha))
    names = [token_name(i) for i in range(spec.n_tokens)]
    return TokenDataset(tuple(names[i] for i in idx.tolist()))
