"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The measured values are printed in the "acceptance criteria" section of the
pytest terminal summary.  Tolerances are fixed here and never adapted to the
measurements.
"""

from __future__ import annotations

import hashlib
import itertools
import shutil
import time
import warnings
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from conftest import brute_force_matching, dp_survival, quiet_generate, small_dataset
from freqywm import rng as _rng
from freqywm.analysis import markov_bound, poisson_binomial_survival, z_range
from freqywm.attacks import AttackSpec, attack_rewatermark, run_robustness_sweep
from freqywm.cli import main
from freqywm.dataset import build_histogram, cosine_similarity
from freqywm.detect import DetectionParams, judge, wm_detect
from freqywm.embed import check_rank_preserved, compute_deltas, multi_watermark, wm_generate
from freqywm.keying import WatermarkSecret, generate_secret_material
from freqywm.selection import (
    EligiblePair,
    eligible_pairs,
    equal_value_knapsack,
    frequency_shift,
    max_weight_matching,
    select,
)
from freqywm.synth import SynthSpec, generate

T_GRID = (0, 1, 2, 4, 10)
REPS = 100


@pytest.fixture(scope="module")
def robustness_setup():
    """Reference setup at 100K samples: alpha=0.5, z=131, b=2, plus an alpha=0.7 non-watermarked baseline."""
    d = generate(SynthSpec(1000, 100_000, 0.5, seed=101))
    asset = wm_generate(d, 2, 131, seed=202)
    baseline = generate(SynthSpec(1000, 100_000, 0.7, seed=303))
    return asset, baseline


@pytest.fixture(scope="module")
def dataset_1m():
    return generate(SynthSpec(1000, 1_000_000, 0.5, seed=404))


# --------------------------------------------------------------------------

def test_01_embedding_correctness(record):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    checked = pairs = 0
    failures = []
    while checked < 200:
        n_tokens = int(rng.integers(5, 201))
        d = small_dataset(rng, n_tokens, int(rng.integers(500, 30_000)), float(rng.uniform(0.2, 1.2)))
        h0 = build_histogram(d)
        if len(h0) < 2 or h0.freqs[0] - h0.freqs[-1] < 2:
            continue
        _, r_max = z_range(h0)
        b = float(rng.choice([0.5, 1, 2, 5, 10]))
        z = int(rng.integers(2, min(r_max, 1031) + 1))
        strategy = ("optimal", "greedy", "random")[checked % 3]
        asset = quiet_generate(d, b, z, strategy, seed=checked)
        c1 = Counter(asset.data.tokens)
        for i, j in asset.secret.pairs:
            if (c1[i] - c1[j]) % asset.secret.sij(i, j):
                failures.append(("remainder", checked, i, j))
        if not check_rank_preserved(h0, c1):
            failures.append(("rank", checked))
        if cosine_similarity(h0, c1) < 100 - b:
            failures.append(("similarity", checked))
        pairs += asset.pairs_embedded
        checked += 1
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 120
    record(1, ok, f"200 datasets, {pairs} pairs, {len(failures)} violations, {elapsed:.1f}s (< 120s)")
    assert ok, failures[:5]


def test_02_running_example_arithmetic(record):
    d_i, d_j = frequency_shift(1098, 537, 129)
    rm = (1098 - 537) % 129
    via_pair = compute_deltas(EligiblePair(0, 1, "x", "y", 1098, 537, 129, rm, min(rm, 129 - rm)))
    got = (1098 + d_i, 537 + d_j)
    ok = got == (1075, 559) and (via_pair[0].delta, via_pair[1].delta) == (d_i, d_j)
    record(2, ok, f"(1098, 537) mod 129 -> {got}, expected (1075, 559)")
    assert ok


def test_03_roundtrip_detection(record):
    bad = []
    total = 0
    for seed in range(50):
        d = generate(SynthSpec(1000, 50_000, 0.5, seed=seed))
        for strategy in ("optimal", "greedy", "random"):
            asset = wm_generate(d, 2, 131, strategy, seed=seed)
            n = asset.pairs_embedded
            rep = wm_detect(asset.data, asset.secret, DetectionParams(t=0, k=max(1, n)))
            total += 1
            if n == 0 or not rep.accepted or rep.accepted_count != n:
                bad.append((seed, strategy, n, rep.accepted_count))
    ok = not bad
    record(3, ok, f"{total - len(bad)}/{total} (seed, strategy) runs verified 100% of pairs")
    assert ok, bad[:5]


def test_04_mwm_oracle(record):
    rng = np.random.default_rng(44)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(500):
        n = int(rng.integers(2, 11))
        edges = [(u, v, int(rng.integers(1, 1000)))
                 for u, v in itertools.combinations(range(n), 2) if rng.random() < 0.6]
        m = max_weight_matching(edges)
        w = {(min(u, v), max(u, v)): wt for u, v, wt in edges}
        if sum(w[e] for e in m) != brute_force_matching(n, edges)[1]:
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    record(4, ok, f"500 graphs, {mismatches} weight mismatches vs enumeration, {elapsed:.1f}s (< 60s)")
    assert ok


def test_05_knapsack_oracle(record):
    rng = np.random.default_rng(55)
    mismatches = 0
    for _ in range(500):
        n = int(rng.integers(1, 16))
        weights = rng.uniform(0.001, 1.0, size=n).tolist()
        cap = float(rng.uniform(0, sum(weights)))
        chosen = equal_value_knapsack(weights, cap)
        best = 0
        for mask in range(1 << n):
            if sum(weights[i] for i in range(n) if mask >> i & 1) <= cap:
                best = max(best, bin(mask).count("1"))
        if len(chosen) != best or sum(weights[i] for i in chosen) > cap:
            mismatches += 1
    ok = mismatches == 0
    record(5, ok, f"500 instances, {mismatches} cardinality mismatches vs brute force")
    assert ok


def test_06_poisson_binomial(record):
    rng = np.random.default_rng(66)
    worst = 0.0
    for _ in range(200):
        p = rng.random(int(rng.integers(1, 21)))
        for k in range(p.size + 1):
            worst = max(worst, abs(poisson_binomial_survival(p, k) - dp_survival(p, k)))
    tail = float(np.mean([poisson_binomial_survival(rng.random(50), 50) for _ in range(50)]))
    markov_violations = 0
    for _ in range(500):
        p = rng.random(int(rng.integers(1, 40))) * rng.random()
        k = int(rng.integers(1, p.size + 1))
        m = markov_bound(p, k)
        if m < 1 and poisson_binomial_survival(p, k) > m + 1e-12:
            markov_violations += 1
    ok = worst < 1e-9 and tail < 1e-6 and markov_violations == 0
    record(6, ok, f"max |DFT-DP| {worst:.2e} (< 1e-9); n=50,k=50 survival {tail:.2e} (< 1e-6); "
                  f"Markov violations {markov_violations}")
    assert ok


def _strategy_counts(d, z, b, seed):
    h = build_histogram(d)
    el = eligible_pairs(h, WatermarkSecret(generate_secret_material(_rng.child_seed(seed, "secret-material")), z))
    return {s: len(select(s, h, el, b, seed=seed)) for s in ("optimal", "greedy", "random")}


def test_07_heuristic_gap_trend(record):
    start = time.perf_counter()
    parts, ok = [], True
    for alpha in (0.2, 0.5, 0.7):
        d = generate(SynthSpec(1000, 100_000, alpha, seed=int(alpha * 10)))
        tot = Counter()
        for seed in range(10):
            tot.update(_strategy_counts(d, 1031, 2, seed))
        gap = (tot["optimal"] - tot["greedy"]) / tot["optimal"] if tot["optimal"] else float("nan")
        this = tot["optimal"] >= tot["greedy"] >= tot["random"] and 0.05 <= gap <= 0.40
        ok &= this
        parts.append(f"a={alpha}: opt/greedy/random={tot['optimal']}/{tot['greedy']}/{tot['random']} gap {gap:.0%}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600
    record(7, ok, "; ".join(parts) + f" (10 secrets each, gap in [5%, 40%]); {elapsed:.0f}s")
    assert ok


def test_08_modulo_size_trend(record):
    d = generate(SynthSpec(1000, 100_000, 0.5, seed=8))
    small = _strategy_counts(d, 10, 2, 8)
    large = _strategy_counts(d, 1031, 2, 8)
    ok = all(small[s] > large[s] for s in small)
    record(8, ok, f"z=10 {small} vs z=1031 {large}")
    assert ok


def test_09_budget_trend(record):
    d = generate(SynthSpec(1000, 100_000, 0.7, seed=9))
    budgets = (0.5, 1, 2, 5)
    sums = {b: Counter() for b in budgets}
    h = build_histogram(d)
    for seed in range(30):
        el = eligible_pairs(h, WatermarkSecret(generate_secret_material(_rng.child_seed(seed, "secret-material")), 1031))
        for b in budgets:
            sums[b].update({s: len(select(s, h, el, b, seed=seed)) for s in ("optimal", "greedy", "random")})
    ratios = {}
    for heur in ("greedy", "random"):
        ratios[heur] = [sums[b][heur] / sums[b]["optimal"] for b in budgets]
    ok = all(all(a <= b + 1e-12 for a, b in zip(r, r[1:])) for r in ratios.values())
    fmt = {k: [round(x, 3) for x in v] for k, v in ratios.items()}
    record(9, ok, f"heuristic/optimal ratio over b={budgets}: {fmt}")
    assert ok


def test_10_sampling_robustness(record, robustness_setup):
    asset, _ = robustness_setup
    n_distinct = len(build_histogram(asset.data))
    pcts = [p for p in (1, 2, 5, 10, 20, 50, 90) if len(asset.data) * p / 100 >= n_distinct]
    curve = run_robustness_sweep(asset, [AttackSpec("sampling", p) for p in pcts], T_GRID, REPS,
                                 modes=("remainder", "symmetric"), seed=10)
    results = {}
    for mode in ("remainder", "symmetric"):
        m1 = np.mean([curve.rate("sampling", 1, mode, p) for p in pcts])
        m10 = np.mean([curve.rate("sampling", 10, mode, p) for p in pcts])
        r20 = curve.rate("sampling", 10, mode, 20)
        results[mode] = (m1, m10, r20, m1 >= 0.6 and m10 >= 0.90 and r20 >= 0.90)
    ok = any(v[3] for v in results.values())
    detail = "; ".join(f"{m}: t=1 {v[0]:.3f} (>=0.6), t=10 {v[1]:.3f} (>=0.9), 20%@t=10 {v[2]:.3f} (>=0.9)"
                       for m, v in results.items())
    record(10, ok, f"{asset.pairs_embedded} pairs, sample pcts {pcts}; {detail}")
    assert ok


def test_11_destroy_robustness(record, robustness_setup):
    asset, baseline = robustness_setup
    start = time.perf_counter()
    curve = run_robustness_sweep(asset, [AttackSpec("destroy_percent", 1), AttackSpec("destroy_random_bounded")],
                                 T_GRID, REPS, modes=("remainder", "symmetric"), baseline=baseline, seed=11)
    elapsed = time.perf_counter() - start
    r = {(a, t): curve.rate(a, t) for a in ("destroy_percent", "destroy_random_bounded", "baseline") for t in T_GRID}
    checks = {
        "percent t=0 in 0.90+-0.08": abs(r["destroy_percent", 0] - 0.90) <= 0.08,
        "bounded t=0 >= 0.30": r["destroy_random_bounded", 0] >= 0.30,
        "bounded t=10 in 0.90+-0.08": abs(r["destroy_random_bounded", 10] - 0.90) <= 0.08,
        "baseline t=0 <= 0.05": r["baseline", 0] <= 0.05,
        "ordering percent>=bounded>=baseline": all(
            r["destroy_percent", t] >= r["destroy_random_bounded", t] >= r["baseline", t] for t in T_GRID),
        "runtime < 15 min": elapsed < 900,
    }
    ok = all(checks.values())
    rows = ", ".join(f"{a.split('_')[-1]}=[{' '.join(f'{r[a, t]:.2f}' for t in T_GRID)}]"
                     for a in ("destroy_percent", "destroy_random_bounded", "baseline"))
    failed = [k for k, v in checks.items() if not v]
    record(11, ok, f"remainder rates over t={T_GRID}: {rows}; failed: {failed or 'none'}")
    assert ok, failed


def test_12_reorder_destroy(record, robustness_setup):
    asset, _ = robustness_setup
    curve = run_robustness_sweep(asset, [AttackSpec("destroy_reorder", p) for p in (10, 30, 50, 60, 80, 90)],
                                 [4], REPS, modes=("remainder", "symmetric"), seed=12)
    r10 = curve.rate("destroy_reorder", 4, "remainder", 10)
    r90 = curve.rate("destroy_reorder", 4, "remainder", 90)
    ok = abs(r10 - 0.94) <= 0.10 and abs(r90 - 0.76) <= 0.10
    series = [round(curve.rate("destroy_reorder", 4, "remainder", p), 2) for p in (10, 30, 50, 60, 80, 90)]
    record(12, ok, f"t=4 rates over 10..90% = {series}; 10%: {r10:.3f} (0.94+-0.10), 90%: {r90:.3f} (0.76+-0.10)")
    assert ok


@pytest.mark.slow
def test_13_judge_protocol(record, dataset_1m):
    owners, rates = 0, []
    for run in range(100):
        owner = wm_generate(dataset_1m, 2, 131, seed=13_000 + run)
        attacker = attack_rewatermark(owner, 2, 131, seed=23_000 + run)
        res = judge((owner.data, owner.secret), (attacker.data, attacker.secret))
        owners += res.owner == "A"
        rates.append(res.reports[("A", "B")].rate)
    mean_rate = float(np.mean(rates))
    ok = owners >= 95 and abs(mean_rate - 0.92) <= 0.08
    record(13, ok, f"owner identified in {owners}/100 (>= 95); owner rate on attacker data at t=0 "
                   f"{mean_rate:.3f} (0.92+-0.08)")
    assert ok


@pytest.mark.slow
def test_14_multi_watermark(record):
    sims, firsts = [], []
    for seed in range(5):
        d = generate(SynthSpec(1000, 1_000_000, 0.5, seed=1400 + seed))
        res = multi_watermark(d, 10, 2, 131, seed=seed)
        sims.append(res.similarity_to_original[-1])
        firsts.append(res.final_detection_rates[0])
    ok = min(sims) >= 99 and float(np.mean(firsts)) >= 0.8
    record(14, ok, f"final similarity min {min(sims):.5f}% (>= 99); first watermark rate at t=0 "
                   f"mean {np.mean(firsts):.3f} (>= 0.8), per seed {[round(x, 2) for x in firsts]}")
    assert ok


def _run_everything(root: Path) -> dict[str, str]:
    root.mkdir(parents=True, exist_ok=True)
    p = {name: str(root / name) for name in (
        "d.txt", "dw.txt", "s.json", "gen.json", "det.json", "samp.txt", "samp.json", "bnd.txt", "bnd.json",
        "pct.txt", "pct.json", "reo.txt", "reo.json", "rw.txt", "rw.json", "rws.json", "sweep.csv", "fp.csv",
        "judge.json", "m.txt", "m.json", "msec")}
    cmds = [
        ["synth", "--tokens", "500", "--samples", "40000", "--alpha", "0.5", "--seed", "1", "--out", p["d.txt"]],
        ["generate", "--in", p["d.txt"], "--z", "131", "--seed", "2", "--out", p["dw.txt"], "--secret", p["s.json"],
         "--report", p["gen.json"]],
        ["detect", "--in", p["dw.txt"], "--secret", p["s.json"], "--report", p["det.json"]],
        ["attack", "sampling", "--pct", "20", "--in", p["dw.txt"], "--seed", "3", "--out", p["samp.txt"],
         "--report", p["samp.json"]],
        ["attack", "destroy_random_bounded", "--in", p["dw.txt"], "--seed", "3", "--out", p["bnd.txt"],
         "--report", p["bnd.json"]],
        ["attack", "destroy_percent", "--pct", "1", "--in", p["dw.txt"], "--seed", "3", "--out", p["pct.txt"],
         "--report", p["pct.json"]],
        ["attack", "destroy_reorder", "--pct", "50", "--in", p["dw.txt"], "--seed", "3", "--out", p["reo.txt"],
         "--report", p["reo.json"]],
        ["attack", "rewatermark", "--in", p["dw.txt"], "--seed", "3", "--out", p["rw.txt"],
         "--secret-out", p["rws.json"], "--report", p["rw.json"]],
        ["sweep", "--in", p["dw.txt"], "--secret", p["s.json"], "--attacks",
         "sampling:20,destroy_percent:1,destroy_random_bounded,destroy_reorder:50", "--reps", "3", "--seed", "4",
         "--modes", "remainder,symmetric", "--baseline", p["d.txt"], "--out", p["sweep.csv"]],
        ["analyze", "fp", "--n", "50", "--k-sweep", "--seed", "5", "--out", p["fp.csv"]],
        ["judge", "--data-a", p["dw.txt"], "--secret-a", p["s.json"], "--data-b", p["rw.txt"],
         "--secret-b", p["rws.json"], "--report", p["judge.json"]],
        ["multiwm", "--in", p["d.txt"], "--n", "3", "--z", "131", "--seed", "6", "--out", p["m.txt"],
         "--secrets-dir", p["msec"], "--report", p["m.json"]],
    ]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for c in cmds:
            assert main(c) in (0, 1), c
    digests = {}
    for f in sorted(root.rglob("*")):
        if f.is_file():
            digests[str(f.relative_to(root))] = hashlib.sha256(f.read_bytes()).hexdigest()
    return digests


def test_15_determinism(record, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    # reports embed their paths, so both runs use the same relative layout
    a = _run_everything(Path("run"))
    shutil.rmtree("run")
    b = _run_everything(Path("run"))
    differing = sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))
    ok = not differing and len(a) >= 20
    record(15, ok, f"{len(a)} artifacts from 12 seeded commands, {len(differing)} differ on rerun")
    assert ok, differing


def test_16_performance(record, dataset_1m):
    t0 = time.perf_counter()
    asset = wm_generate(dataset_1m, 2, 131, seed=16)
    gen_s = time.perf_counter() - t0
    secret = asset.secret.with_pairs(asset.secret.pairs[:139])
    t0 = time.perf_counter()
    rep = wm_detect(asset.data, secret, DetectionParams(t=0))
    det_s = time.perf_counter() - t0
    ok = len(secret.pairs) == 139 and rep.accepted and det_s < 1.0 and gen_s < 60
    record(16, ok, f"detection on {len(asset.data):,} tokens with {len(secret.pairs)} pairs: {det_s:.3f}s (< 1s); "
                   f"generation: {gen_s:.1f}s (< 60s), {asset.pairs_embedded} pairs")
    assert ok
