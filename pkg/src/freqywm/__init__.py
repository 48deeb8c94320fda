"""Ownership watermarks carried by the token-frequency histogram of a dataset."""

from .analysis import false_positive, markov_bound, poisson_binomial_survival, t_range, z_range
from .attacks import (
    AttackSpec,
    RobustnessCurve,
    attack_destroy_bounded,
    attack_destroy_percent,
    attack_destroy_reorder,
    attack_rewatermark,
    attack_sampling,
    guess_attack_cost,
    run_robustness_sweep,
)
from .dataset import Histogram, TokenDataset, build_histogram, cosine_similarity, ingest, rank_sequence, write_dataset
from .detect import DetectionParams, DetectionReport, judge, scale_up, wm_detect
from .embed import WatermarkedAsset, apply_plan, compute_deltas, multi_watermark, wm_generate
from .errors import ContractViolation, FreqyWMError, FreqyWMWarning, IngestError, ParameterError, SecretFormatError
from .keying import WatermarkSecret, derive_sij, load_secret, save_secret
from .selection import eligible_pairs, select
from .synth import SynthSpec, generate as synth_generate

__all__ = [
    "AttackSpec", "ContractViolation", "DetectionParams", "DetectionReport", "FreqyWMError", "FreqyWMWarning",
    "Histogram", "IngestError", "ParameterError", "RobustnessCurve", "SecretFormatError", "SynthSpec",
    "TokenDataset", "WatermarkSecret", "WatermarkedAsset", "apply_plan", "attack_destroy_bounded",
    "attack_destroy_percent", "attack_destroy_reorder", "attack_rewatermark", "attack_sampling",
    "build_histogram", "compute_deltas", "cosine_similarity", "derive_sij", "eligible_pairs", "false_positive",
    "guess_attack_cost", "ingest", "judge", "load_secret", "markov_bound", "multi_watermark",
    "poisson_binomial_survival", "rank_sequence", "run_robustness_sweep", "save_secret", "scale_up", "select",
    "synth_generate", "t_range", "wm_detect", "wm_generate", "write_dataset", "z_range",
]

__version__ = "0.1.0"
