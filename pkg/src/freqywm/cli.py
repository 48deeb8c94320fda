"""Command-line entry point: ``freqywm <subcommand> ...``.

Exit codes: 0 success / watermark accepted, 1 watermark rejected (or an
inconclusive judge), 2 any error.  ``FREQWM_SEED`` supplies the default seed.
Reports are JSON with the full effective configuration under ``"config"``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import rng as _rng
from .analysis import false_positive, mean_acceptance_for_z, z_range
from .attacks import (
    ATTACK_KINDS,
    AttackSpec,
    attack_rewatermark,
    guess_attack_cost,
    run_attack,
    run_robustness_sweep,
)
from .dataset import build_histogram, ingest, write_dataset
from .detect import MODES, DetectionParams, judge, wm_detect
from .embed import multi_watermark, wm_generate
from .errors import FreqyWMError
from .keying import load_secret, save_secret
from .selection import COST_MODES, STRATEGIES
from .synth import SynthSpec, generate as synth_generate

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


def _env_seed() -> int | None:
    raw = os.environ.get("FREQWM_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"FREQWM_SEED must be an integer, got {raw!r}") from None


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _emit(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config(args: argparse.Namespace) -> dict:
    skip = {"func", "handler"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _add_io(p: argparse.ArgumentParser, required: bool = True, flag: str = "--in", dest: str = "inp") -> None:
    p.add_argument(flag, dest=dest, required=required, help="input dataset")
    p.add_argument("--format", choices=("lines", "csv"), default="lines")
    p.add_argument("--columns", type=_str_list, default=None, help="csv token columns, comma separated")
    p.add_argument("--delimiter", default=",")


def _read(args, path: str | None = None):
    return ingest(path or args.inp, args.format, args.columns, args.delimiter)


def _write(args, d, path: str) -> None:
    write_dataset(d, path, args.format, args.columns, args.delimiter)


def _detection_params(args) -> DetectionParams:
    return DetectionParams(
        t=args.t, t_pct=args.t_pct, k=args.k, k_fraction=args.k_fraction,
        mode=args.mode, scale_to=getattr(args, "scale_to", None))


def _add_detection(p: argparse.ArgumentParser, k_fraction: float | None = None) -> None:
    p.add_argument("--t", type=int, default=0, help="per-pair remainder threshold")
    p.add_argument("--t-pct", type=float, default=None, help="per-pair threshold as floor(s * pct)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int, default=None, help="verified pairs required (default: all)")
    g.add_argument("--k-fraction", type=float, default=k_fraction, help="k as a fraction of the pairs")
    p.add_argument("--mode", choices=MODES, default="remainder")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_synth(args) -> int:
    d = synth_generate(SynthSpec(args.tokens, args.samples, args.alpha, args.seed))
    write_dataset(d, args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    d = _read(args)
    asset = wm_generate(d, args.budget, args.z, args.strategy, seed=args.seed, cost_mode=args.cost_mode)
    _write(args, asset.data, args.out)
    save_secret(asset.secret, args.secret)
    report = {k: v for k, v in asset.report.items() if k != "timings" or args.timings}
    _emit({"config": _config(args), "result": report}, args.report)
    return EXIT_OK


def cmd_detect(args) -> int:
    secret = load_secret(args.secret)
    d = _read(args)
    rep = wm_detect(d, secret, _detection_params(args))
    _emit({"config": _config(args), "result": rep.to_dict()}, args.report)
    return EXIT_OK if rep.accepted else EXIT_REJECT


def cmd_attack(args) -> int:
    d = _read(args)
    if args.kind == "rewatermark":
        asset = attack_rewatermark(d, args.budget, args.z, args.seed, args.strategy)
        _write(args, asset.data, args.out)
        if args.secret_out:
            save_secret(asset.secret, args.secret_out)
        result = {k: v for k, v in asset.report.items() if k != "timings"}
    else:
        spec = AttackSpec(args.kind, args.pct, args.seed)
        out = run_attack(spec, d)
        _write(args, out, args.out)
        result = {"tokens_in": len(d), "tokens_out": len(out), "original_total_count": out.original_total_count}
    _emit({"config": _config(args), "result": result}, args.report)
    return EXIT_OK


def _parse_attack(text: str) -> AttackSpec:
    kind, _, intensity = text.partition(":")
    return AttackSpec(kind.strip(), float(intensity) if intensity else None)


def cmd_sweep(args) -> int:
    from .embed import WatermarkedAsset

    secret = load_secret(args.secret)
    asset = WatermarkedAsset(_read(args), secret)
    baseline = _read(args, args.baseline) if args.baseline else None
    grid = [_parse_attack(a) for a in args.attacks]
    curve = run_robustness_sweep(asset, grid, args.t_values, args.reps, modes=args.modes, baseline=baseline,
                                 seed=args.seed, workers=args.workers)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            curve.to_csv(fh)
    else:
        sys.stdout.write(curve.to_csv())
    return EXIT_OK


def cmd_analyze_fp(args) -> int:
    if args.secret:
        secret = load_secret(args.secret)
        s_values = [secret.sij(i, j) for i, j in secret.pairs]
    else:
        gen = _rng.substream(args.seed, "analyze")
        s_values = gen.integers(2, args.z, size=args.n).tolist()
    n = len(s_values)
    ks = range(0, n + 1) if args.k_sweep else [args.k if args.k is not None else n]
    rows = []
    for k in ks:
        est = false_positive(s_values, k, t=None if args.t_pct is not None else args.t, pct=args.t_pct)
        rows.append((k, est.markov_bound, est.exact_survival))
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        out.write("k,markov,exact\n")
        for k, m, e in rows:
            out.write(f"{k},{m:.12g},{e:.12g}\n")
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_analyze_range(args) -> int:
    h = build_histogram(_read(args))
    lo, hi = z_range(h)
    doc = {"config": _config(args),
           "result": {"z_min": lo, "z_max": hi, "distinct_tokens": len(h), "total": h.total}}
    if args.z is not None:
        doc["result"]["t_max"] = args.z - 1
        if args.z >= 3:
            doc["result"]["mean_pair_acceptance_t0"] = mean_acceptance_for_z(args.z, 0)
    _emit(doc, args.report)
    return EXIT_OK


def cmd_analyze_guess(args) -> int:
    cost = guess_attack_cost(args.histogram_size, args.k, args.t, args.z)
    _emit({"config": _config(args), "result": {
        "secret_bits": cost.secret_bits, "modulus_bits": cost.modulus_bits,
        "pair_subset_bits": cost.pair_subset_bits, "total_bits": cost.total_bits}}, args.report)
    return EXIT_OK


def cmd_judge(args) -> int:
    a = (_read(args, args.data_a), load_secret(args.secret_a))
    b = (_read(args, args.data_b), load_secret(args.secret_b))
    res = judge(a, b, _detection_params(args))
    print(f"owner: {res.owner}")
    if args.report:
        _emit({"config": _config(args), "result": {
            "owner": res.owner,
            "matrix": res.matrix(),
            "rates": {f"{s}_on_{d}": rep.rate for (s, d), rep in sorted(res.reports.items())},
        }}, args.report)
    return EXIT_OK if res.owner != "inconclusive" else EXIT_REJECT


def cmd_multiwm(args) -> int:
    d = _read(args)
    res = multi_watermark(d, args.n, args.budget, args.z, args.strategy, seed=args.seed, cost_mode=args.cost_mode)
    if args.out:
        _write(args, res.final.data, args.out)
    if args.secrets_dir:
        sdir = Path(args.secrets_dir)
        sdir.mkdir(parents=True, exist_ok=True)
        for i, asset in enumerate(res.assets):
            save_secret(asset.secret, sdir / f"secret_{i:02d}.json")
    rates = [None if np.isnan(r) else r for r in res.final_detection_rates]
    _emit({"config": _config(args), "result": {
        "pairs_embedded": [a.pairs_embedded for a in res.assets],
        "similarity_to_original": res.similarity_to_original,
        "final_detection_rates": rates,
    }}, args.report)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    seed_default = _env_seed()
    parser = argparse.ArgumentParser(prog="freqywm", description="Frequency-histogram watermarking for token datasets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=int, default=seed_default,
                       help="master seed (default: $FREQWM_SEED, else OS entropy)")

    p = sub.add_parser("synth", help="write a power-law synthetic dataset")
    p.add_argument("--tokens", type=int, default=1000)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--out", required=True)
    seeded(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("generate", help="embed a watermark")
    _add_io(p)
    p.add_argument("--budget", "-b", type=float, default=2.0, help="similarity budget in percent")
    p.add_argument("--z", type=int, required=True, help="modulus upper bound")
    p.add_argument("--strategy", choices=STRATEGIES, default="optimal")
    p.add_argument("--cost-mode", choices=COST_MODES, default="complement")
    p.add_argument("--out", required=True, help="watermarked dataset")
    p.add_argument("--secret", required=True, help="secret file to write")
    p.add_argument("--report", default=None, help="JSON report path (default: stdout)")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    seeded(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="verify a watermark")
    _add_io(p)
    p.add_argument("--secret", required=True)
    _add_detection(p)
    p.add_argument("--scale-to", type=int, default=None, help="declared original token count")
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("attack", help="apply one attack to a dataset")
    p.add_argument("kind", choices=[k for k in ATTACK_KINDS if k != "none"])
    _add_io(p)
    p.add_argument("--pct", type=float, default=None, help="sample size, max change or perturbation (percent)")
    p.add_argument("--budget", "-b", type=float, default=2.0)
    p.add_argument("--z", type=int, default=131)
    p.add_argument("--strategy", choices=STRATEGIES, default="optimal")
    p.add_argument("--out", required=True)
    p.add_argument("--secret-out", default=None, help="attacker secret (rewatermark)")
    p.add_argument("--report", default=None)
    seeded(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sweep", help="robustness sweep over attacks and thresholds (CSV)")
    _add_io(p)
    p.add_argument("--secret", required=True)
    p.add_argument("--attacks", type=_str_list, required=True,
                   help="comma separated kind[:intensity], e.g. destroy_percent:1,destroy_random_bounded")
    p.add_argument("--t-values", type=_int_list, default=[0, 1, 2, 4, 10])
    p.add_argument("--modes", type=_str_list, default=["remainder"])
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--baseline", default=None, help="non-watermarked dataset for the false-positive curve")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    seeded(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="false-positive and parameter-range calculators")
    asub = p.add_subparsers(dest="what", required=True)
    q = asub.add_parser("fp", help="Markov bound and exact survival (CSV: k,markov,exact)")
    q.add_argument("--n", type=int, default=50, help="pairs, with s drawn uniformly from [2, z-1]")
    q.add_argument("--z", type=int, default=131)
    q.add_argument("--t", type=int, default=0)
    q.add_argument("--t-pct", type=float, default=None)
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--k-sweep", action="store_true", help="emit every k in [0, n]")
    q.add_argument("--secret", default=None, help="use the s values of an actual secret")
    q.add_argument("--out", default=None)
    seeded(q)
    q.set_defaults(func=cmd_analyze_fp)
    q = asub.add_parser("range", help="admissible z range of a dataset")
    _add_io(q)
    q.add_argument("--z", type=int, default=None)
    q.add_argument("--report", default=None)
    q.set_defaults(func=cmd_analyze_range)
    q = asub.add_parser("guess", help="log2 work factor of the guess attack")
    q.add_argument("--histogram-size", type=int, required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--t", type=int, default=0)
    q.add_argument("--z", type=int, default=131)
    q.add_argument("--report", default=None)
    q.set_defaults(func=cmd_analyze_guess)

    p = sub.add_parser("judge", help="resolve two ownership claims")
    p.add_argument("--data-a", required=True)
    p.add_argument("--secret-a", required=True)
    p.add_argument("--data-b", required=True)
    p.add_argument("--secret-b", required=True)
    p.add_argument("--format", choices=("lines", "csv"), default="lines")
    p.add_argument("--columns", type=_str_list, default=None)
    p.add_argument("--delimiter", default=",")
    _add_detection(p, k_fraction=0.8)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("multiwm", help="watermark a dataset N times in succession")
    _add_io(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--budget", "-b", type=float, default=2.0)
    p.add_argument("--z", type=int, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="optimal")
    p.add_argument("--cost-mode", choices=COST_MODES, default="complement")
    p.add_argument("--out", default=None, help="final watermarked dataset")
    p.add_argument("--secrets-dir", default=None)
    p.add_argument("--report", default=None)
    seeded(p)
    p.set_defaults(func=cmd_multiwm)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser()
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    args = parser.parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        try:
            return args.func(args)
        except (FreqyWMError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
