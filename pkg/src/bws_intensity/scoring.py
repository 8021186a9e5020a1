"""Score aggregation, reliability estimation and hashtag-impact analysis.

Counting scores are exact rationals: an item chosen best b times and worst w
times over a appearances scores (b - w)/a in [-1, 1], mapped to the unipolar
[0, 1] scale by (x + 1)/2.  Correlations and the signed-rank test are
implemented here directly so their tie handling and exact small-sample
enumeration are pinned down rather than inherited.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .annotation import Response, ResponseSet
from .corpus import Item
from .errors import DegenerateInputError, ValidationError

WILCOXON_EXACT_MAX = 15


@dataclass(frozen=True)
class ScoreTable:
    """Per-item intensity scores with their underlying counts."""

    raw: dict[str, Fraction]
    unipolar: dict[str, Fraction]
    counts: dict[str, tuple[int, int, int]]  # appearances, best, worst

    def items(self):
        return self.raw.keys()

    def unipolar_floats(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.unipolar.items()}


def compute_scores(responses: ResponseSet) -> ScoreTable:
    """Counting scores over every item that appears in a responded tuple."""
    if not responses.responses:
        raise ValidationError("cannot score an empty response set")
    appearances: dict[str, int] = {}
    best: dict[str, int] = {}
    worst: dict[str, int] = {}
    tuples = responses.design.tuples
    for r in responses.responses:
        for item in tuples[r.tuple_index]:
            appearances[item] = appearances.get(item, 0) + 1
        best[r.best] = best.get(r.best, 0) + 1
        worst[r.worst] = worst.get(r.worst, 0) + 1
    raw = {}
    unipolar = {}
    counts = {}
    for item, app in appearances.items():
        b = best.get(item, 0)
        w = worst.get(item, 0)
        score = Fraction(b - w, app)
        raw[item] = score
        unipolar[item] = (score + 1) / 2
        counts[item] = (app, b, w)
    return ScoreTable(raw=raw, unipolar=unipolar, counts=counts)


def write_scores(table: ScoreTable, path) -> None:
    """TSV: item_id, raw, unipolar, appearances, best_count, worst_count."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in sorted(table.raw):
            app, b, w = table.counts[item]
            fh.write(
                f"{item}\t{float(table.raw[item])!r}\t{float(table.unipolar[item])!r}"
                f"\t{app}\t{b}\t{w}\n"
            )


def expand_pair_orders(
    items: Sequence[str], best: str, worst: str
) -> list[tuple[str, str]]:
    """The five item orderings implied by one best/worst judgment.

    Choosing A best and D worst among {A, B, C, D} orders every pair except
    (B, C): A>B, A>C, A>D, B>D, C>D.
    """
    if best == worst or best not in items or worst not in items:
        raise ValidationError("best/worst must be distinct tuple members")
    pairs = [(best, x) for x in items if x != best]
    pairs.extend((x, worst) for x in items if x != worst and x != best)
    return pairs


def response_pair_orders(responses: ResponseSet) -> list[tuple[str, str]]:
    out = []
    tuples = responses.design.tuples
    for r in responses.responses:
        out.extend(expand_pair_orders(tuples[r.tuple_index], r.best, r.worst))
    return out


# --- statistics --------------------------------------------------------------


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; errors on constant input."""
    if len(x) != len(y):
        raise ValidationError("sequences differ in length")
    n = len(x)
    if n < 2:
        raise DegenerateInputError("need at least two points")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("correlation undefined for constant input")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2  # positions are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation: pearson over average ranks."""
    return pearson(average_ranks(x), average_ranks(y))


def wilcoxon_signed_rank(
    paired: Sequence[tuple[float, float]]
) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test over (a, b) pairs.

    Zero differences are dropped; tied absolute differences get average
    ranks.  The null distribution is enumerated exactly for n <= 15 and
    approximated normally (continuity corrected, tie-adjusted variance)
    beyond that.  Returns (min(W+, W-), p).
    """
    diffs = [a - b for a, b in paired if a != b]
    n = len(diffs)
    if n == 0:
        raise DegenerateInputError("all differences are zero")
    ranks = average_ranks([abs(d) for d in diffs])
    w_plus = math.fsum(r for d, r in zip(diffs, ranks) if d > 0)
    total = n * (n + 1) / 2
    statistic = min(w_plus, total - w_plus)
    if n <= WILCOXON_EXACT_MAX:
        p = _wilcoxon_exact_p(ranks, w_plus)
    else:
        p = _wilcoxon_normal_p(diffs, ranks, w_plus)
    return statistic, p


def _wilcoxon_exact_p(ranks: Sequence[float], w_plus: float) -> float:
    # double the ranks so every sum is an integer and comparisons are exact
    r2 = [int(round(2 * r)) for r in ranks]
    total2 = sum(r2)
    obs_dev = abs(int(round(2 * w_plus)) * 2 - total2)  # |2*W+ - S| scaled by 2
    n = len(r2)
    hits = 0
    for mask in range(1 << n):
        t2 = 0
        m = mask
        i = 0
        while m:
            if m & 1:
                t2 += r2[i]
            m >>= 1
            i += 1
        if abs(2 * t2 - total2) >= obs_dev:
            hits += 1
    return hits / (1 << n)


def _wilcoxon_normal_p(diffs, ranks, w_plus: float) -> float:
    n = len(diffs)
    mean = n * (n + 1) / 4
    var = n * (n + 1) * (2 * n + 1) / 24
    # tie correction: for each group of t tied |d|, subtract (t^3 - t)/48
    seen: dict[float, int] = {}
    for d in diffs:
        a = abs(d)
        seen[a] = seen.get(a, 0) + 1
    var -= sum(t**3 - t for t in seen.values()) / 48
    if var <= 0:
        raise DegenerateInputError("zero variance in signed-rank statistic")
    dev = w_plus - mean
    if dev > 0.5:
        dev -= 0.5
    elif dev < -0.5:
        dev += 0.5
    else:
        dev = 0.0
    z = dev / math.sqrt(var)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2)))


# --- split-half reliability ---------------------------------------------------


@dataclass(frozen=True)
class ShrResult:
    repetitions: int
    mean_pearson: float
    mean_spearman: float
    per_repetition: tuple[tuple[float, float], ...]


def split_half_reliability(
    responses: ResponseSet, repetitions: int = 100, seed: int = 0
) -> ShrResult:
    """Average correlation between scores from two halves of the annotations.

    Each repetition routes half of every tuple's annotations to one bin and
    the rest to the other (for odd counts, which bin gets the extra one is a
    per-repetition coin flip, so identical annotators split into bins with
    identical judgment proportions), scores each bin independently, and
    correlates the unipolar scores of items present in both bins.
    """
    grouped = responses.by_tuple()
    if not grouped:
        raise ValidationError("cannot estimate reliability of an empty response set")
    for t, rs in grouped.items():
        if len(rs) < 2:
            raise DegenerateInputError(
                f"tuple {t} has {len(rs)} annotation(s); need at least 2"
            )
    per_rep = []
    for rep in range(repetitions):
        for retry in range(10):
            rng = random.Random(f"shr:{seed}:{rep}:{retry}")
            try:
                per_rep.append(_shr_once(responses, grouped, rng))
                break
            except DegenerateInputError:
                continue
        else:
            raise DegenerateInputError(
                "split-half correlation degenerate after bounded retries"
            )
    mean_p = math.fsum(p for p, _ in per_rep) / repetitions
    mean_s = math.fsum(s for _, s in per_rep) / repetitions
    return ShrResult(
        repetitions=repetitions,
        mean_pearson=mean_p,
        mean_spearman=mean_s,
        per_repetition=tuple(per_rep),
    )


def _shr_once(responses: ResponseSet, grouped, rng) -> tuple[float, float]:
    extra_to_a = rng.random() < 0.5
    bin_a: list[Response] = []
    bin_b: list[Response] = []
    for t in sorted(grouped):
        rs = grouped[t]
        k = len(rs)
        size_a = k // 2 + (k % 2 if extra_to_a else 0)
        chosen = set(rng.sample(range(k), size_a))
        for i, r in enumerate(rs):
            (bin_a if i in chosen else bin_b).append(r)
    table_a = compute_scores(
        ResponseSet(responses.design, tuple(bin_a), responses.per_tuple)
    )
    table_b = compute_scores(
        ResponseSet(responses.design, tuple(bin_b), responses.per_tuple)
    )
    common = sorted(set(table_a.unipolar) & set(table_b.unipolar))
    if len(common) < 2:
        raise DegenerateInputError("fewer than two items scored in both bins")
    xs = [float(table_a.unipolar[i]) for i in common]
    ys = [float(table_b.unipolar[i]) for i in common]
    return pearson(xs, ys), spearman(xs, ys)


# --- hashtag impact ------------------------------------------------------------


@dataclass(frozen=True)
class HashtagImpactReport:
    pair_count: int
    pct_drop: float
    pct_rise: float
    pct_none: float
    mean_hqt: float
    mean_nqt: float
    mean_drop_magnitude: float
    mean_rise_magnitude: float
    wilcoxon_p: Optional[float]

    def render(self) -> str:
        lines = [
            f"pairs analyzed: {self.pair_count}",
            f"score drops:    {self.pct_drop:.1f}%",
            f"score rises:    {self.pct_rise:.1f}%",
            f"no change:      {self.pct_none:.1f}%",
            f"mean score with hashtag:    {self.mean_hqt:.2f}",
            f"mean score without hashtag: {self.mean_nqt:.2f}",
            f"mean drop magnitude: {self.mean_drop_magnitude:.2f}",
            f"mean rise magnitude: {self.mean_rise_magnitude:.2f}",
        ]
        if self.wilcoxon_p is None:
            lines.append("wilcoxon signed-rank: degenerate (all pairs equal)")
        else:
            lines.append(f"wilcoxon signed-rank p: {self.wilcoxon_p:.4g}")
        return "\n".join(lines)

    def to_kv(self) -> dict[str, str]:
        kv = {
            "pair_count": str(self.pair_count),
            "pct_drop": repr(self.pct_drop),
            "pct_rise": repr(self.pct_rise),
            "pct_none": repr(self.pct_none),
            "mean_hqt": repr(self.mean_hqt),
            "mean_nqt": repr(self.mean_nqt),
            "mean_drop_magnitude": repr(self.mean_drop_magnitude),
            "mean_rise_magnitude": repr(self.mean_rise_magnitude),
        }
        kv["wilcoxon_p"] = "NONE" if self.wilcoxon_p is None else repr(self.wilcoxon_p)
        return kv


def hashtag_impact(pairs: Sequence[tuple[Item, Item]]) -> HashtagImpactReport:
    """Summarize how removing the trailing emotion hashtag moves scores.

    Classification uses exact score equality for "no change"; counting
    scores are small rationals, so equal means equal.
    """
    if not pairs:
        raise ValidationError("no pairs to analyze")
    scored = []
    for hqt, nqt in pairs:
        if hqt.gold_score is None or nqt.gold_score is None:
            raise ValidationError(
                f"pair ({hqt.id}, {nqt.id}) lacks scores on one or both sides"
            )
        scored.append((hqt.gold_score, nqt.gold_score))
    n = len(scored)
    drops = [h - q for h, q in scored if q < h]
    rises = [q - h for h, q in scored if q > h]
    n_none = n - len(drops) - len(rises)
    try:
        _, p = wilcoxon_signed_rank(scored)
        wilcoxon_p: Optional[float] = p
    except DegenerateInputError:
        wilcoxon_p = None
    return HashtagImpactReport(
        pair_count=n,
        pct_drop=100.0 * len(drops) / n,
        pct_rise=100.0 * len(rises) / n,
        pct_none=100.0 * n_none / n,
        mean_hqt=math.fsum(h for h, _ in scored) / n,
        mean_nqt=math.fsum(q for _, q in scored) / n,
        mean_drop_magnitude=math.fsum(drops) / len(drops) if drops else 0.0,
        mean_rise_magnitude=math.fsum(rises) / len(rises) if rises else 0.0,
        wilcoxon_p=wilcoxon_p,
    )


def scatter_rows(pairs: Iterable[tuple[Item, Item]]) -> list[tuple[float, float, str]]:
    """(hqt_score, nqt_score, removed-hashtag-label) rows for external plotting."""
    rows = []
    for hqt, nqt in pairs:
        if hqt.gold_score is None or nqt.gold_score is None:
            raise ValidationError(
                f"pair ({hqt.id}, {nqt.id}) lacks scores on one or both sides"
            )
        removed = [t for t in hqt.text.split() if t.startswith("#")]
        kept = nqt.text.split()
        label = " ".join(t for t in removed if t not in kept)
        rows.append((hqt.gold_score, nqt.gold_score, label))
    return rows
