"""Tweet dataset ingestion, validation, partition checks and HQT/NQT pairing.

File format (``scored_tsv``): one item per line, six tab-separated columns ::

    id <TAB> text <TAB> emotion <TAB> partition <TAB> kind:pair_id <TAB> score

``kind`` is one of HQT/NQT/QT; ``pair_id`` and ``score`` use the literal
string ``NONE`` when absent.  ``raw_tsv`` is the same layout without the
score column.  Files are UTF-8 with LF line endings, trailing newline
optional.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .errors import ParseError, ValidationError

EMOTIONS = ("anger", "fear", "joy", "sadness")
PARTITIONS = ("train", "dev", "test", "unassigned")
KINDS = ("HQT", "NQT", "QT")

_NONE = "NONE"


@dataclass(frozen=True)
class Item:
    """One annotatable tweet."""

    id: str
    text: str
    emotion: str
    partition: str = "unassigned"
    kind: str = "QT"
    pair_id: Optional[str] = None
    gold_score: Optional[float] = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError(f"item {self.id!r}: text is empty after trimming")
        if self.emotion not in EMOTIONS:
            raise ValidationError(f"item {self.id!r}: unknown emotion {self.emotion!r}")
        if self.partition not in PARTITIONS:
            raise ValidationError(f"item {self.id!r}: unknown partition {self.partition!r}")
        if self.kind not in KINDS:
            raise ValidationError(f"item {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "NQT" and self.pair_id is None:
            raise ValidationError(f"item {self.id!r}: NQT item lacks a pair_id")
        if self.kind == "QT" and self.pair_id is not None:
            raise ValidationError(f"item {self.id!r}: QT item carries a pair_id")
        if self.gold_score is not None and not 0.0 <= self.gold_score <= 1.0:
            raise ValidationError(
                f"item {self.id!r}: score {self.gold_score} outside [0, 1]"
            )


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of items sharing one emotion category."""

    items: tuple[Item, ...]
    emotion: Optional[str] = None

    def __post_init__(self):
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise ValidationError(f"duplicate item id {item.id!r}")
            seen.add(item.id)
            if self.emotion is not None and item.emotion != self.emotion:
                raise ValidationError(
                    f"item {item.id!r} has emotion {item.emotion!r}, "
                    f"dataset is {self.emotion!r}"
                )

    def __len__(self):
        return len(self.items)

    def by_id(self):
        return {item.id: item for item in self.items}

    def partition_items(self, partition: str) -> tuple[Item, ...]:
        return tuple(i for i in self.items if i.partition == partition)


def _parse_score(raw: str, line_number: int) -> Optional[float]:
    if raw == _NONE:
        return None
    try:
        score = float(raw)
    except ValueError:
        raise ParseError(f"bad score {raw!r}", line_number) from None
    if not 0.0 <= score <= 1.0:
        raise ValidationError(f"line {line_number}: score {score} outside [0, 1]")
    return score


def load_dataset(path, format: str = "scored_tsv") -> Dataset:
    """Read a dataset file; ``scored_tsv`` populates gold_score."""
    if format not in ("scored_tsv", "raw_tsv"):
        raise ValidationError(f"unknown dataset format {format!r}")
    want = 6 if format == "scored_tsv" else 5
    items = []
    emotion = None
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != want:
                raise ParseError(
                    f"expected {want} columns, found {len(cols)}", line_number
                )
            item_id, text, emo, partition, kindfield = cols[:5]
            if ":" not in kindfield:
                raise ParseError(f"bad kind field {kindfield!r}", line_number)
            kind, _, pair_id = kindfield.partition(":")
            score = _parse_score(cols[5], line_number) if want == 6 else None
            try:
                item = Item(
                    id=item_id,
                    text=text,
                    emotion=emo,
                    partition=partition,
                    kind=kind,
                    pair_id=None if pair_id == _NONE else pair_id,
                    gold_score=score,
                )
            except ValidationError as exc:
                raise ValidationError(f"line {line_number}: {exc}") from None
            if emotion is None:
                emotion = item.emotion
            items.append(item)
    return Dataset(items=tuple(items), emotion=emotion)


def write_dataset(dataset: Dataset, path, format: str = "scored_tsv") -> None:
    """Inverse of load_dataset (round-trips up to line endings)."""
    if format not in ("scored_tsv", "raw_tsv"):
        raise ValidationError(f"unknown dataset format {format!r}")
    with open(path, "w", encoding="utf-8") as fh:
        for item in dataset.items:
            if "\t" in item.text or "\n" in item.text:
                raise ValidationError(
                    f"item {item.id!r}: text contains tab or newline"
                )
            kindfield = f"{item.kind}:{item.pair_id if item.pair_id else _NONE}"
            cols = [item.id, item.text, item.emotion, item.partition, kindfield]
            if format == "scored_tsv":
                cols.append(_NONE if item.gold_score is None else repr(item.gold_score))
            fh.write("\t".join(cols) + "\n")


def _hashtag_word(token: str) -> Optional[str]:
    """The query-matchable word of a hashtag token, or None.

    Case folded; one trailing punctuation character is ignored (tweets often
    end hashtags with '!'/'.').
    """
    if not token.startswith("#") or len(token) < 2:
        return None
    word = token[1:].lower()
    if word and not word[-1].isalnum():
        word = word[:-1]
    return word or None


def strip_trailing_hashtag(text: str, query_terms: Iterable[str]) -> Optional[str]:
    """Remove query-term hashtags from a tweet's trailing hashtag run.

    Returns the updated text (whitespace normalized) when the tweet ends in a
    run of hashtag tokens at least one of which is a query-term hashtag;
    returns None otherwise.  This manufactures the NQT copy of an HQT tweet.
    """
    terms = {t.lower() for t in query_terms}
    if not terms:
        raise ValidationError("query_terms must be non-empty")
    tokens = text.split()
    run_start = len(tokens)
    while run_start > 0 and tokens[run_start - 1].startswith("#"):
        run_start -= 1
    run = tokens[run_start:]
    if not run:
        return None
    keep = [t for t in run if _hashtag_word(t) not in terms]
    if len(keep) == len(run):
        return None
    return " ".join(tokens[:run_start] + keep)


def hqt_nqt_pairs(dataset: Dataset) -> list[tuple[Item, Item]]:
    """All (HQT, NQT) pairs, matched by pair_id.

    Raises ValidationError when a pair_id dangles on either side.
    """
    hqt = {}
    nqt = {}
    for item in dataset.items:
        if item.pair_id is None:
            continue
        side = hqt if item.kind == "HQT" else nqt
        if item.pair_id in side:
            raise ValidationError(
                f"pair_id {item.pair_id!r} appears twice on the {item.kind} side"
            )
        side[item.pair_id] = item
    dangling = set(hqt) ^ set(nqt)
    if dangling:
        raise ValidationError(
            "dangling pair_id(s): " + ", ".join(sorted(dangling))
        )
    return [(h, nqt[pid]) for pid, h in hqt.items()]


@dataclass
class PartitionReport:
    counts: dict[str, int]
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_partitions(dataset: Dataset) -> PartitionReport:
    """Per-partition counts plus every HQT/NQT co-partition violation."""
    counts: dict[str, int] = {}
    for item in dataset.items:
        counts[item.partition] = counts.get(item.partition, 0) + 1
    by_pair_hqt = {
        i.pair_id: i for i in dataset.items if i.kind == "HQT" and i.pair_id
    }
    violations = []
    for item in dataset.items:
        if item.kind != "NQT":
            continue
        original = by_pair_hqt.get(item.pair_id)
        if original is not None and original.partition != item.partition:
            violations.append((original.id, item.id))
    return PartitionReport(counts=counts, violations=violations)


@dataclass
class ReconstructionReport:
    matched: int
    unmatched_hqt: list[str]
    ambiguous: list[str]


def reconstruct_pairs(
    dataset: Dataset, query_terms: Iterable[str]
) -> tuple[list[tuple[Item, Item]], ReconstructionReport]:
    """Best-effort HQT/NQT pairing for files lacking pair_id metadata.

    An HQT candidate is any item whose trailing hashtag run contains a query
    term; its NQT copy is located by exact text match against
    strip_trailing_hashtag's output.  Never assumed complete: the report
    carries every miss.
    """
    terms = {t.lower() for t in query_terms}
    by_text: dict[str, list[Item]] = {}
    for item in dataset.items:
        by_text.setdefault(" ".join(item.text.split()), []).append(item)
    pairs = []
    unmatched = []
    ambiguous = []
    for item in dataset.items:
        stripped = strip_trailing_hashtag(item.text, terms)
        if stripped is None:
            continue
        candidates = [c for c in by_text.get(stripped, ()) if c.id != item.id]
        if not candidates:
            unmatched.append(item.id)
        elif len(candidates) > 1:
            ambiguous.append(item.id)
        else:
            pairs.append((item, candidates[0]))
    report = ReconstructionReport(
        matched=len(pairs), unmatched_hqt=unmatched, ambiguous=ambiguous
    )
    return pairs, report


def with_pair_metadata(
    dataset: Dataset, pairs: Sequence[tuple[Item, Item]]
) -> Dataset:
    """Rewrite kind/pair_id fields to record reconstructed pairs."""
    pair_of = {}
    for k, (h, n) in enumerate(pairs):
        pid = f"p{k}"
        pair_of[h.id] = ("HQT", pid)
        pair_of[n.id] = ("NQT", pid)
    items = []
    for item in dataset.items:
        if item.id in pair_of:
            kind, pid = pair_of[item.id]
            items.append(replace(item, kind=kind, pair_id=pid))
        else:
            items.append(item)
    return Dataset(items=tuple(items), emotion=dataset.emotion)
