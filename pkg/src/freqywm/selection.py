"""Eligible pairs and the choice of which pairs carry the watermark.

Three strategies share one acceptance routine.  Candidates are visited in
strategy order; a candidate that shares a token with the plan or would tie
two originally distinct ranks is skipped, and the walk stops at the first
candidate that would push the projected similarity below ``100 - b``.

* ``optimal``: maximum-weight matching on the eligibility graph, with
  weight ``T - cost`` so that cardinality dominates, followed by the
  equal-value knapsack (cheapest first) under the similarity budget.
* ``greedy``: all eligible pairs by ascending cost.
* ``random``: all eligible pairs in a seeded random order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

import networkx as nx

from . import rng as _rng
from .dataset import Histogram
from .errors import ParameterError
from .keying import WatermarkSecret, inner_digest, sij_from_inner

STRATEGIES = ("optimal", "greedy", "random")
COST_MODES = ("complement", "raw")

T_ = TypeVar("T_")


def frequency_shift(f_i: int, f_j: int, s: int) -> tuple[int, int]:
    """Changes to ``(f_i, f_j)`` that make ``f_i - f_j`` a multiple of ``s``.

    The difference moves to the nearest multiple: down when the remainder is
    at most ``floor(s/2)``, otherwise up by the complement.  The higher member
    takes the ceiling half of the move.
    """
    rm = (f_i - f_j) % s
    if rm == 0:
        return 0, 0
    if rm <= s // 2:
        return -((rm + 1) // 2), rm // 2
    c = s - rm
    return (c + 1) // 2, -(c // 2)


@dataclass(frozen=True)
class EligiblePair:
    i_rank: int
    j_rank: int
    token_i: str
    token_j: str
    f_i: int
    f_j: int
    s: int
    remainder: int
    cost: int

    @property
    def tokens(self) -> tuple[str, str]:
        return self.token_i, self.token_j

    def deltas(self) -> tuple[int, int]:
        return frequency_shift(self.f_i, self.f_j, self.s)

    def weight_cost(self, cost_mode: str = "complement") -> int:
        return self.cost if cost_mode == "complement" else self.remainder


@dataclass(frozen=True)
class SelectionPlan:
    chosen: tuple[EligiblePair, ...]
    strategy: str
    budget: float
    projected_similarity: float

    def __len__(self) -> int:
        return len(self.chosen)

    @property
    def pairs(self) -> list[tuple[str, str]]:
        return [p.tokens for p in self.chosen]


def is_eligible(h: Histogram, i: int, j: int, s: int) -> bool:
    """The four boundaries of ranks ``i`` and ``j`` are all at least ``ceil(s/2)``."""
    need = (s + 1) // 2
    return s >= 2 and min(h.upper[i], h.lower[i], h.upper[j], h.lower[j]) >= need


def eligible_pairs(h: Histogram, secret: WatermarkSecret) -> list[EligiblePair]:
    """All pairs whose four rank boundaries can absorb ``ceil(s/2)`` with ``s >= 2``.

    Pairs are oriented by rank (``i`` more frequent than ``j``) and listed in
    rank order.  Tokens with a zero boundary are skipped up front since no
    usable modulus fits them.
    """
    if not len(h):
        raise ParameterError("empty histogram")
    z = secret.z
    slack = [min(h.upper[i], h.lower[i]) for i in range(len(h))]
    cand = [i for i in range(len(h)) if slack[i] >= 1]
    enc = {i: h.tokens[i] for i in cand}
    inner = {j: inner_digest(secret.r, h.tokens[j]) for j in cand}
    out = []
    for a, i in enumerate(cand):
        tok_i, f_i, sl_i = enc[i], h.freqs[i], slack[i]
        for j in cand[a + 1:]:
            cap = 2 * min(sl_i, slack[j])  # largest s with ceil(s/2) <= slack
            s = sij_from_inner(tok_i, inner[j], z)
            if s < 2 or s > cap:
                continue
            f_j = h.freqs[j]
            rm = (f_i - f_j) % s
            out.append(EligiblePair(i, j, tok_i, h.tokens[j], f_i, f_j, s, rm, min(rm, s - rm)))
    return out


# --------------------------------------------------------------------------
# projection of a partial plan onto the histogram
# --------------------------------------------------------------------------

class PlanProjection:
    """Incrementally tracks the would-be watermarked histogram.

    Keeps the cosine terms (dot product and squared norms) so each candidate
    is checked in O(1), plus a rank guard against the neighbouring ranks.
    """

    def __init__(self, h: Histogram):
        self.h = h
        self.freqs = list(h.freqs)
        self.dot = sum(f * f for f in h.freqs)
        self.norm_o = self.dot
        self.norm_w = self.dot
        self.used: set[int] = set()

    @property
    def similarity(self) -> float:
        if self.norm_w == 0:
            return 0.0
        return min(100.0, 100.0 * self.dot / math.sqrt(self.norm_o * self.norm_w))

    def _rank_ok(self, changes: dict[int, int]) -> bool:
        orig, new, n = self.h.freqs, self.freqs, len(self.freqs)

        def cur(r):
            return new[r] + changes.get(r, 0)

        for r in changes:
            if cur(r) < 0:
                return False
            if r > 0 and orig[r - 1] > orig[r] and not cur(r - 1) > cur(r):
                return False
            if r + 1 < n and orig[r] > orig[r + 1] and not cur(r) > cur(r + 1):
                return False
        return True

    def admissible(self, pair: EligiblePair) -> bool:
        """Vertex-disjoint from the plan so far and keeps strict ranks strict."""
        if pair.i_rank in self.used or pair.j_rank in self.used:
            return False
        d_i, d_j = pair.deltas()
        return self._rank_ok({pair.i_rank: d_i, pair.j_rank: d_j})

    def within_budget(self, pair: EligiblePair, b: float) -> bool:
        d_i, d_j = pair.deltas()
        dot, norm_w = self._terms_after({pair.i_rank: d_i, pair.j_rank: d_j})
        sim = 100.0 * dot / math.sqrt(self.norm_o * norm_w) if norm_w else 0.0
        return sim >= 100.0 - b

    def _terms_after(self, changes: dict[int, int]) -> tuple[int, int]:
        dot, norm_w = self.dot, self.norm_w
        for r, d in changes.items():
            if d:
                cur = self.freqs[r]
                dot += self.h.freqs[r] * d
                norm_w += (cur + d) ** 2 - cur * cur
        return dot, norm_w

    def add(self, pair: EligiblePair) -> None:
        d_i, d_j = pair.deltas()
        changes = {pair.i_rank: d_i, pair.j_rank: d_j}
        self.dot, self.norm_w = self._terms_after(changes)
        for r, d in changes.items():
            self.freqs[r] += d
        self.used.update((pair.i_rank, pair.j_rank))


def greedy_fill(items: Iterable[T_], admissible: Callable[[T_], bool],
                within_budget: Callable[[T_], bool], commit: Callable[[T_], None]) -> list[T_]:
    """Visit ``items`` in order; skip inadmissible ones, stop at the first over budget.

    With equal item values and items pre-sorted by weight this is the exact
    solution of the equal-value 0/1 knapsack for an additive capacity.
    """
    taken = []
    for item in items:
        if not admissible(item):
            continue
        if not within_budget(item):
            break
        commit(item)
        taken.append(item)
    return taken


def equal_value_knapsack(weights: Sequence[float], capacity: float) -> list[int]:
    """Indices of a maximum-cardinality subset with total weight ``<= capacity``."""
    used = [0.0]

    def within(i):
        return used[0] + weights[i] <= capacity

    def commit(i):
        used[0] += weights[i]

    order = sorted(range(len(weights)), key=lambda i: (weights[i], i))
    return sorted(greedy_fill(order, lambda i: True, within, commit))


def _fill(h: Histogram, ordered: Iterable[EligiblePair], b: float, strategy: str) -> SelectionPlan:
    proj = PlanProjection(h)
    chosen = greedy_fill(ordered, proj.admissible, lambda p: proj.within_budget(p, b), proj.add)
    return SelectionPlan(tuple(chosen), strategy, b, proj.similarity)


def _check_budget(b: float) -> None:
    if not 0 < b < 100:
        raise ParameterError(f"budget b must lie in (0, 100), got {b}")


def _check_cost_mode(cost_mode: str) -> None:
    if cost_mode not in COST_MODES:
        raise ParameterError(f"cost_mode must be one of {COST_MODES}, got {cost_mode!r}")


def matching_offset(eligible: Sequence[EligiblePair]) -> int:
    """``T``: one more than the largest frequency difference among eligible pairs."""
    return max(p.f_i - p.f_j for p in eligible) + 1


def max_weight_matching(edges: Sequence[tuple[int, int, int]], maxcardinality: bool = False) -> set[tuple[int, int]]:
    """Maximum-weight matching of a general graph; pairs come back as ``(min, max)``.

    With ``maxcardinality`` the weight is maximised among maximum-cardinality
    matchings only.
    """
    g = nx.Graph()
    g.add_weighted_edges_from(edges)
    return {(min(u, v), max(u, v)) for u, v in nx.max_weight_matching(g, maxcardinality=maxcardinality)}


def select_optimal(h: Histogram, eligible: Sequence[EligiblePair], b: float,
                   cost_mode: str = "complement") -> SelectionPlan:
    _check_budget(b)
    _check_cost_mode(cost_mode)
    if not eligible:
        return SelectionPlan((), "optimal", b, 100.0)
    big_t = matching_offset(eligible)
    by_edge = {(p.i_rank, p.j_rank): p for p in eligible}
    # T only needs to outweigh any cost difference; maxcardinality makes the
    # pair count dominate regardless of how large T is.
    matched = max_weight_matching(
        [(p.i_rank, p.j_rank, big_t - p.weight_cost(cost_mode)) for p in eligible], maxcardinality=True)
    ordered = sorted((by_edge[e] for e in matched),
                     key=lambda p: (p.weight_cost(cost_mode), p.i_rank, p.j_rank))
    return _fill(h, ordered, b, "optimal")


def select_greedy(h: Histogram, eligible: Sequence[EligiblePair], b: float,
                  cost_mode: str = "complement") -> SelectionPlan:
    _check_budget(b)
    _check_cost_mode(cost_mode)
    ordered = sorted(eligible, key=lambda p: (p.weight_cost(cost_mode), p.i_rank, p.j_rank))
    return _fill(h, ordered, b, "greedy")


def select_random(h: Histogram, eligible: Sequence[EligiblePair], b: float,
                  seed: int | None = None) -> SelectionPlan:
    _check_budget(b)
    order = _rng.substream(seed, _rng.SELECTION).permutation(len(eligible))
    return _fill(h, (eligible[i] for i in order), b, "random")


def select(strategy: str, h: Histogram, eligible: Sequence[EligiblePair], b: float,
           seed: int | None = None, cost_mode: str = "complement") -> SelectionPlan:
    if strategy == "optimal":
        return select_optimal(h, eligible, b, cost_mode)
    if strategy == "greedy":
        return select_greedy(h, eligible, b, cost_mode)
    if strategy == "random":
        return select_random(h, eligible, b, seed)
    raise ParameterError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
