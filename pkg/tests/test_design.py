from itertools import combinations

import pytest

from bws_intensity import design
from bws_intensity.errors import InfeasibleDesignError, ValidationError


def ids(n):
    return [f"i{k:04d}" for k in range(n)]


def all_pairs_of(d):
    """Independent exhaustive pair count (does not reuse verify_design)."""
    seen = {}
    for tup in d.tuples:
        for a, b in combinations(sorted(tup), 2):
            seen[(a, b)] = seen.get((a, b), 0) + 1
    return seen


def test_too_few_items_is_infeasible():
    with pytest.raises(InfeasibleDesignError, match="24"):
        design.generate_design(ids(24), seed=0)


def test_duplicate_ids_rejected():
    with pytest.raises(ValidationError):
        design.generate_design(["a"] * 25 + ["b"], seed=0)


def test_perfect_cover_at_25():
    d = design.generate_design(ids(25), seed=0)
    assert len(d.tuples) == 50
    pairs = all_pairs_of(d)
    assert len(pairs) == 25 * 24 // 2  # every pair exactly once
    assert set(pairs.values()) == {1}
    assert design.verify_design(d).ok


@pytest.mark.parametrize("n", [26, 30, 39, 41, 100])
def test_invariants_across_construction_paths(n):
    d = design.generate_design(ids(n), seed=3)
    report = design.verify_design(d)
    assert report.ok
    assert len(d.tuples) == 2 * n
    assert set(report.appearance_histogram.values()) == {8}
    pairs = all_pairs_of(d)
    assert len(pairs) == 12 * n
    assert max(pairs.values()) == 1


def test_determinism_same_seed():
    a = design.generate_design(ids(40), seed=11)
    b = design.generate_design(ids(40), seed=11)
    assert design.serialize_design(a) == design.serialize_design(b)


@pytest.mark.parametrize("n", [25, 40])
def test_seed_sensitivity(n):
    baseline = design.serialize_design(design.generate_design(ids(n), seed=0))
    others = [
        design.serialize_design(design.generate_design(ids(n), seed=s))
        for s in range(1, 11)
    ]
    assert any(o != baseline for o in others)


def test_verify_reports_duplicated_tuple():
    d = design.generate_design(ids(25), seed=0)
    tampered = design.TupleDesign(
        item_ids=d.item_ids, tuples=d.tuples[:-1] + (d.tuples[0],), seed=d.seed
    )
    report = design.verify_design(tampered)
    assert not report.ok
    assert len(report.duplicate_pairs) == 6  # the duplicated tuple's 6 pairs
    expected = {tuple(sorted(p)) for p in combinations(d.tuples[0], 2)}
    assert set(report.duplicate_pairs) == expected


def test_verify_reports_appearance_imbalance():
    d = design.generate_design(ids(25), seed=0)
    # overwrite one occurrence of an item with another: 7 vs 9 appearances
    tampered_tuples = [list(t) for t in d.tuples]
    victim, replacement = tampered_tuples[0][0], tampered_tuples[1][0]
    if replacement == victim:
        replacement = tampered_tuples[1][1]
    tampered_tuples[0][0] = replacement
    tampered = design.TupleDesign(
        item_ids=d.item_ids,
        tuples=tuple(tuple(t) for t in tampered_tuples),
        seed=d.seed,
    )
    report = design.verify_design(tampered)
    assert not report.ok
    assert victim in report.bad_appearance_items
    assert replacement in report.bad_appearance_items
    assert report.appearance_histogram[victim] == 7
    assert report.appearance_histogram[replacement] == 9


def test_serialization_round_trip(tmp_path):
    d = design.generate_design(ids(26), seed=5)
    path = tmp_path / "tuples.tsv"
    design.write_design(d, path)
    loaded = design.read_design(path)
    assert loaded.tuples == d.tuples
    assert loaded.seed == d.seed
    assert design.serialize_design(loaded) == design.serialize_design(d)
