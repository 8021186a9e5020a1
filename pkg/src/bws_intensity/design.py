"""Random maximum-diversity 4-tuple designs.

A valid design over N items has 2N tuples of four distinct items, places
every item in exactly eight tuples, and never repeats an unordered item
pair.  Those constraints make every item co-occur with 24 distinct others,
hence the N >= 25 feasibility bound.

Construction is randomized greedy fill (eight shuffled copies of the item
list chunked into 4-tuples) with conflict repair by pairwise slot swaps and
bounded restarts.  That search thrashes when nearly every pair must be used:
at N = 25 the design is a perfect pair cover (12N = C(25,2)) and for
25 <= N < 40 the slack is tiny.  Those sizes are built directly from
difference families instead (translates of base blocks whose pairwise
differences never repeat), randomized by a seeded relabeling; the result
satisfies exactly the same invariants.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .errors import DesignSearchError, InfeasibleDesignError, ParseError, ValidationError

MIN_ITEMS = 25
APPEARANCES = 8
TUPLE_SIZE = 4

_PAIR_SLOTS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

# Base blocks of a perfect (25, 4, 1) difference family over Z5 x Z5
# (elements encoded 5*x + y): every nonzero group element occurs exactly
# once as a difference, so the 50 translates cover all 300 pairs once.
_DF25 = ((0, 1, 5, 12), (0, 2, 8, 17))

_SEARCH_MAX = 40  # below this, use difference constructions


@dataclass(frozen=True)
class TupleDesign:
    """2N 4-tuples over N item ids; seed records how they were generated."""

    item_ids: tuple[str, ...]
    tuples: tuple[tuple[str, str, str, str], ...]
    seed: int

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    def __len__(self):
        return len(self.tuples)


@dataclass
class DesignReport:
    n_items: int
    n_tuples: int
    tuple_count_ok: bool
    items_distinct_ok: bool
    appearance_ok: bool
    pairs_ok: bool
    appearance_histogram: dict[str, int]
    bad_appearance_items: list[str]
    duplicate_pairs: list[tuple[str, str]]
    bad_tuples: list[int]

    @property
    def ok(self) -> bool:
        return (
            self.tuple_count_ok
            and self.items_distinct_ok
            and self.appearance_ok
            and self.pairs_ok
        )


def generate_design(
    item_ids: Sequence[str],
    seed: int,
    restart_budget: int = 1000,
    max_repair_steps: int | None = None,
) -> TupleDesign:
    """Build a valid design; deterministic given (item order, seed)."""
    ids = tuple(item_ids)
    n = len(ids)
    if len(set(ids)) != n:
        raise ValidationError("item ids must be distinct")
    if n < MIN_ITEMS:
        raise InfeasibleDesignError(
            f"{n} items cannot form a valid design: each item must co-occur "
            f"with {APPEARANCES * (TUPLE_SIZE - 1)} distinct others, so at "
            f"least {MIN_ITEMS} items are required"
        )
    rng = random.Random(seed)
    if n == 25:
        index_tuples = _translate_design(_DF25, _add_z5z5, 25, rng)
    elif n < _SEARCH_MAX:
        base = _find_cyclic_base_blocks(n, rng)
        index_tuples = _translate_design(base, lambda u, g, m=n: (u + g) % m, n, rng)
    else:
        if max_repair_steps is None:
            max_repair_steps = 200 * n
        index_tuples = _search_design(n, rng, restart_budget, max_repair_steps, seed)
    tuples = tuple(
        (ids[a], ids[b], ids[c], ids[d]) for a, b, c, d in index_tuples
    )
    return TupleDesign(item_ids=ids, tuples=tuples, seed=seed)


def verify_design(design: TupleDesign) -> DesignReport:
    """Exhaustive per-invariant check with diagnostics."""
    n = design.n_items
    histogram = {item: 0 for item in design.item_ids}
    pair_count: Counter = Counter()
    bad_tuples = []
    for t, tup in enumerate(design.tuples):
        if len(set(tup)) != TUPLE_SIZE:
            bad_tuples.append(t)
        for item in tup:
            if item in histogram:
                histogram[item] += 1
        for i, j in _PAIR_SLOTS:
            a, b = tup[i], tup[j]
            if a != b:
                pair_count[(a, b) if a < b else (b, a)] += 1
    duplicate_pairs = sorted(p for p, c in pair_count.items() if c > 1)
    bad_items = sorted(i for i, c in histogram.items() if c != APPEARANCES)
    return DesignReport(
        n_items=n,
        n_tuples=len(design.tuples),
        tuple_count_ok=len(design.tuples) == 2 * n,
        items_distinct_ok=not bad_tuples,
        appearance_ok=not bad_items,
        pairs_ok=not duplicate_pairs,
        appearance_histogram=histogram,
        bad_appearance_items=bad_items,
        duplicate_pairs=duplicate_pairs,
        bad_tuples=bad_tuples,
    )


def serialize_design(design: TupleDesign) -> str:
    lines = [f"# n={design.n_items} seed={design.seed}"]
    lines.extend("\t".join(tup) for tup in design.tuples)
    return "\n".join(lines) + "\n"


def write_design(design: TupleDesign, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_design(design))


def read_design(path) -> TupleDesign:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("# n="):
            raise ParseError("missing design header", 1)
        try:
            fields = dict(part.split("=", 1) for part in header[2:].split())
            n = int(fields["n"])
            seed = int(fields["seed"])
        except (ValueError, KeyError):
            raise ParseError(f"bad design header {header!r}", 1) from None
        tuples = []
        ids: dict[str, None] = {}
        for line_number, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            tup = tuple(line.split("\t"))
            if len(tup) != TUPLE_SIZE:
                raise ParseError("expected 4 tab-separated ids", line_number)
            tuples.append(tup)
            for item in tup:
                ids.setdefault(item)
    if len(ids) != n:
        raise ValidationError(
            f"design header declares {n} items, file contains {len(ids)}"
        )
    return TupleDesign(item_ids=tuple(ids), tuples=tuple(tuples), seed=seed)


# --- difference-family constructions (25 <= N < 40) ---


def _add_z5z5(u: int, g: int) -> int:
    return 5 * ((u // 5 + g // 5) % 5) + ((u % 5 + g % 5) % 5)


def _signed_diffs_zn(block: tuple[int, ...], n: int) -> list[int]:
    out = []
    for a, b in combinations(block, 2):
        d = (b - a) % n
        out.append(d)
        out.append((n - d) % n)
    return out


def _find_cyclic_base_blocks(n: int, rng: random.Random):
    """Two 4-blocks over Z_n whose 24 signed differences are all distinct.

    Their full translate orbits then form 2n tuples with every item in 8 and
    no repeated pair.  Exists for every n in [26, 40); verified by search.
    """
    valid = []
    for rest in combinations(range(1, n), 3):
        block = (0,) + rest
        diffs = _signed_diffs_zn(block, n)
        if len(set(diffs)) == 12:
            valid.append((block, frozenset(diffs)))
    rng.shuffle(valid)
    for i in range(len(valid)):
        for j in range(i + 1, len(valid)):
            if not (valid[i][1] & valid[j][1]):
                return valid[i][0], valid[j][0]
    raise DesignSearchError(
        f"no cyclic base blocks found for n={n}", seed=None, attempts=len(valid)
    )


def _translate_design(base_blocks, add, n: int, rng: random.Random):
    """All translates of the base blocks, randomized by seeded relabeling."""
    relabel = list(range(n))
    rng.shuffle(relabel)
    tuples = []
    for block in base_blocks:
        for g in range(n):
            tup = [relabel[add(u, g)] for u in block]
            rng.shuffle(tup)
            tuples.append(tuple(tup))
    rng.shuffle(tuples)
    return tuples


# --- randomized greedy fill with swap repair (N >= 40) ---


class _SlotState:
    """2N tuples as a flat slot array plus an unordered-pair usage counter.

    Energy counts constraint violations: within-tuple duplicate items and
    pair usages beyond the first.  Repair swaps preserve per-item appearance
    counts by construction, so only pair conflicts need fixing.
    """

    def __init__(self, n: int, slots: list[int]):
        self.n = n
        self.slots = slots
        self.cnt: Counter = Counter()
        for t in range(2 * n):
            for k in self._keys(t):
                if k is not None:
                    self.cnt[k] += 1
        self.energy = self._full_energy()

    def _keys(self, t: int):
        s = self.slots
        base = 4 * t
        tup = s[base : base + 4]
        n = self.n
        out = []
        for i, j in _PAIR_SLOTS:
            a, b = tup[i], tup[j]
            if a == b:
                out.append(None)
            else:
                out.append(a * n + b if a < b else b * n + a)
        return out

    def _full_energy(self) -> int:
        dup = 0
        for t in range(2 * self.n):
            dup += sum(1 for k in self._keys(t) if k is None)
        over = sum(c - 1 for c in self.cnt.values() if c > 1)
        return dup + over

    def is_violating(self, t: int) -> bool:
        seen: dict[int, int] = {}
        for k in self._keys(t):
            if k is None:
                return True
            seen[k] = seen.get(k, 0) + 1
            if self.cnt[k] > 1 or seen[k] > 1:
                return True
        return False

    def _joint_contrib(self, t1: int, t2: int) -> int:
        """Energy owed by two tuples, their own keys removed from cnt.

        A shared counter across both tuples is required: a pair occurring in
        each tuple once is a conflict even when no third tuple uses it.
        """
        e = 0
        seen: dict[int, int] = {}
        for t in (t1, t2):
            for k in self._keys(t):
                if k is None:
                    e += 1
                else:
                    seen[k] = seen.get(k, 0) + 1
                    if self.cnt[k] + seen[k] > 1:
                        e += 1
        return e

    def swap_delta(self, s1: int, s2: int) -> int | None:
        t1, t2 = s1 // 4, s2 // 4
        if t1 == t2:
            return None
        slots = self.slots
        self._detach(t1, t2)
        old = self._joint_contrib(t1, t2)
        slots[s1], slots[s2] = slots[s2], slots[s1]
        new = self._joint_contrib(t1, t2)
        slots[s1], slots[s2] = slots[s2], slots[s1]
        self._attach(t1, t2)
        return new - old

    def do_swap(self, s1: int, s2: int) -> None:
        t1, t2 = s1 // 4, s2 // 4
        self._detach(t1, t2)
        old = self._joint_contrib(t1, t2)
        self.slots[s1], self.slots[s2] = self.slots[s2], self.slots[s1]
        new = self._joint_contrib(t1, t2)
        self._attach(t1, t2)
        self.energy += new - old

    def _detach(self, t1: int, t2: int) -> None:
        for t in (t1, t2):
            for k in self._keys(t):
                if k is not None:
                    self.cnt[k] -= 1

    def _attach(self, t1: int, t2: int) -> None:
        for t in (t1, t2):
            for k in self._keys(t):
                if k is not None:
                    self.cnt[k] += 1


def _repair_attempt(n: int, rng: random.Random, max_steps: int, sample: int = 32):
    slots: list[int] = []
    for _ in range(APPEARANCES):
        perm = list(range(n))
        rng.shuffle(perm)
        slots.extend(perm)
    st = _SlotState(n, slots)
    n_slots = APPEARANCES * n
    bad = [t for t in range(2 * n) if st.is_violating(t)]
    stall = 0
    steps = 0
    while st.energy > 0 and steps < max_steps:
        steps += 1
        if not bad or steps % 200 == 0:
            bad = [t for t in range(2 * n) if st.is_violating(t)]
            if not bad:
                break
        t1 = bad[rng.randrange(len(bad))]
        if not st.is_violating(t1):
            bad = [t for t in range(2 * n) if st.is_violating(t)]
            continue
        s1 = 4 * t1 + rng.randrange(4)
        best_d = None
        best_s2 = None
        for _ in range(sample):
            s2 = rng.randrange(n_slots)
            d = st.swap_delta(s1, s2)
            if d is None:
                continue
            if best_d is None or d < best_d:
                best_d, best_s2 = d, s2
                if d < 0:
                    break
        if best_s2 is None:
            continue
        if best_d <= 0:
            st.do_swap(s1, best_s2)
            stall = 0 if best_d < 0 else stall + 1
        else:
            stall += 1
        if stall > 50:
            s2 = rng.randrange(n_slots)
            if s2 // 4 != t1:
                st.do_swap(s1, s2)
            stall = 0
    if st.energy != 0:
        return None
    return [tuple(st.slots[4 * t : 4 * t + 4]) for t in range(2 * n)]


def _search_design(n, rng, restart_budget, max_repair_steps, seed):
    for attempt in range(1, restart_budget + 1):
        result = _repair_attempt(n, rng, max_repair_steps)
        if result is not None:
            return result
    raise DesignSearchError(
        f"design search for n={n} exhausted {restart_budget} restarts "
        f"(seed {seed})",
        seed=seed,
        attempts=restart_budget,
    )
