"""Annotation protocol: question streams, gold-question gating, simulation.

A session serves each annotator a deterministic stream of questions built
from a seeded permutation of the design's tuples, with gold questions
interleaved at a steady stride.  Gold answers are judged immediately; an
annotator whose gold accuracy falls below the threshold is rejected and all
of their ordinary responses are expunged, returning those tuples to the
pending pool.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .design import TupleDesign
from .errors import (
    ConfigurationError,
    ParseError,
    RejectedAnnotatorError,
    ValidationError,
)

ACCURACY_THRESHOLD = 0.70
GRACE_GOLDS = 3


@dataclass(frozen=True)
class GoldQuestion:
    """A pre-annotated tuple; several best/worst answers may be acceptable."""

    tuple_index: int
    acceptable_best: frozenset[str]
    acceptable_worst: frozenset[str]

    def __post_init__(self):
        if not self.acceptable_best or not self.acceptable_worst:
            raise ValidationError("gold question needs non-empty acceptable sets")
        if self.acceptable_best & self.acceptable_worst:
            raise ValidationError(
                "acceptable_best and acceptable_worst must be disjoint"
            )


@dataclass(frozen=True)
class Response:
    annotator_id: str
    tuple_index: int
    best: str
    worst: str
    ordinal: Optional[int] = None


@dataclass
class AnnotatorState:
    annotator_id: str
    gold_seen: int = 0
    gold_correct: int = 0
    status: str = "active"

    @property
    def accuracy(self) -> float:
        return self.gold_correct / self.gold_seen if self.gold_seen else 1.0


@dataclass(frozen=True)
class ResponseSet:
    """Collected best/worst judgments over a design."""

    design: TupleDesign
    responses: tuple[Response, ...]
    per_tuple: int = 3

    def by_tuple(self) -> dict[int, list[Response]]:
        grouped: dict[int, list[Response]] = {}
        for r in self.responses:
            grouped.setdefault(r.tuple_index, []).append(r)
        return grouped


@dataclass(frozen=True)
class Question:
    kind: str  # "ordinary" | "gold"
    tuple_index: int
    items: tuple[str, str, str, str]
    position: int
    gold_index: Optional[int] = None


@dataclass
class Outcome:
    kind: str  # "accepted" | "gold" | "rejected"
    gold_correct: Optional[bool] = None


@dataclass
class _AnnotatorRecord:
    state: AnnotatorState
    perm: list[int]
    gold_order: list[int]
    gold_positions: list[int]
    answered: set[int] = field(default_factory=set)
    n_ordinary: int = 0
    n_gold: int = 0


def _stable_int(*parts) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


class Session:
    """Mutable annotation session.  Callers must serialize concurrent
    mutations; distinct sessions are independent."""

    def __init__(
        self,
        design: TupleDesign,
        gold: Sequence[GoldQuestion] = (),
        per_tuple: int = 3,
        seed: int = 0,
        accuracy_threshold: float = ACCURACY_THRESHOLD,
        grace_golds: int = GRACE_GOLDS,
    ):
        if per_tuple < 1:
            raise ConfigurationError("per_tuple must be >= 1")
        n_tuples = len(design.tuples)
        if len(gold) > n_tuples:
            raise ConfigurationError(
                f"{len(gold)} gold questions over {n_tuples} tuples: gold "
                "fraction above 50% degenerates the interleaving"
            )
        for g in gold:
            if not 0 <= g.tuple_index < n_tuples:
                raise ValidationError(f"gold tuple_index {g.tuple_index} out of range")
            members = set(design.tuples[g.tuple_index])
            if not (g.acceptable_best <= members and g.acceptable_worst <= members):
                raise ValidationError(
                    f"gold answers for tuple {g.tuple_index} are not tuple members"
                )
        self.design = design
        self.gold = tuple(gold)
        self.per_tuple = per_tuple
        self.seed = seed
        self.accuracy_threshold = accuracy_threshold
        self.grace_golds = grace_golds
        self._annotators: dict[str, _AnnotatorRecord] = {}
        self._responses: list[Response] = []
        self._accepted: dict[int, int] = {t: 0 for t in range(n_tuples)}
        self._ordinal = 0

    # -- annotator streams ------------------------------------------------

    def _record(self, annotator_id: str) -> _AnnotatorRecord:
        rec = self._annotators.get(annotator_id)
        if rec is None:
            rng = random.Random(_stable_int("stream", self.seed, annotator_id))
            perm = list(range(len(self.design.tuples)))
            rng.shuffle(perm)
            gold_order = list(range(len(self.gold)))
            rng.shuffle(gold_order)
            positions = []
            n_gold = len(self.gold)
            if n_gold:
                stride = (len(perm) + n_gold) // n_gold
                for k in range(n_gold):
                    positions.append(k * stride + rng.randrange(stride))
            rec = _AnnotatorRecord(
                state=AnnotatorState(annotator_id=annotator_id),
                perm=perm,
                gold_order=gold_order,
                gold_positions=positions,
            )
            self._annotators[annotator_id] = rec
        return rec

    def _next_ordinary_tuple(self, rec: _AnnotatorRecord) -> Optional[int]:
        for t in rec.perm:
            if self._accepted[t] < self.per_tuple and t not in rec.answered:
                return t
        return None

    def next_question(self, annotator_id: str) -> Optional[Question]:
        """The annotator's current question; None when nothing remains.

        Stable across repeated calls until a response is accepted.
        """
        rec = self._record(annotator_id)
        if rec.state.status == "rejected":
            raise RejectedAnnotatorError(
                f"annotator {annotator_id!r} fell below "
                f"{self.accuracy_threshold:.0%} gold accuracy"
            )
        t = self._next_ordinary_tuple(rec)
        position = rec.n_ordinary + rec.n_gold
        gold_pending = rec.n_gold < len(rec.gold_positions)
        # a gold is served at its scheduled stream position, or unconditionally
        # once the ordinary pool has drained (so no scheduled gold is starved)
        if gold_pending and (t is None or position >= rec.gold_positions[rec.n_gold]):
            gold_index = rec.gold_order[rec.n_gold]
            g = self.gold[gold_index]
            return Question(
                kind="gold",
                tuple_index=g.tuple_index,
                items=self.design.tuples[g.tuple_index],
                position=position,
                gold_index=gold_index,
            )
        if t is None:
            return None
        return Question(
            kind="ordinary",
            tuple_index=t,
            items=self.design.tuples[t],
            position=position,
        )

    # -- submissions -------------------------------------------------------

    def submit_response(self, response: Response) -> Outcome:
        rec = self._record(response.annotator_id)
        if rec.state.status == "rejected":
            raise RejectedAnnotatorError(
                f"annotator {response.annotator_id!r} was rejected; "
                "submissions are no longer accepted"
            )
        question = self.next_question(response.annotator_id)
        if question is None:
            raise ValidationError("no question is pending for this annotator")
        if response.tuple_index != question.tuple_index:
            raise ValidationError(
                f"response targets tuple {response.tuple_index}, current "
                f"question is tuple {question.tuple_index}"
            )
        members = set(question.items)
        if response.best not in members or response.worst not in members:
            raise ValidationError("best/worst must be members of the tuple")
        if response.best == response.worst:
            raise ValidationError("best and worst must differ")

        if question.kind == "gold":
            return self._submit_gold(rec, question, response)
        rec.n_ordinary += 1
        rec.answered.add(question.tuple_index)
        stored = Response(
            annotator_id=response.annotator_id,
            tuple_index=response.tuple_index,
            best=response.best,
            worst=response.worst,
            ordinal=self._ordinal,
        )
        self._ordinal += 1
        self._responses.append(stored)
        self._accepted[question.tuple_index] += 1
        return Outcome(kind="accepted")

    def _submit_gold(self, rec, question: Question, response: Response) -> Outcome:
        g = self.gold[question.gold_index]
        correct = (
            response.best in g.acceptable_best
            and response.worst in g.acceptable_worst
        )
        rec.n_gold += 1
        rec.state.gold_seen += 1
        if correct:
            rec.state.gold_correct += 1
        if (
            rec.state.gold_seen >= self.grace_golds
            and rec.state.accuracy < self.accuracy_threshold
        ):
            self._reject(rec)
            return Outcome(kind="rejected", gold_correct=correct)
        return Outcome(kind="gold", gold_correct=correct)

    def _reject(self, rec: _AnnotatorRecord) -> None:
        rec.state.status = "rejected"
        annotator_id = rec.state.annotator_id
        kept = []
        for r in self._responses:
            if r.annotator_id == annotator_id:
                self._accepted[r.tuple_index] -= 1
            else:
                kept.append(r)
        self._responses = kept

    # -- progress / export -------------------------------------------------

    def is_complete(self) -> bool:
        return all(c == self.per_tuple for c in self._accepted.values())

    def progress(self) -> dict:
        complete = sum(1 for c in self._accepted.values() if c == self.per_tuple)
        return {
            "tuples_total": len(self.design.tuples),
            "tuples_complete": complete,
            "responses_accepted": len(self._responses),
            "responses_needed": self.per_tuple * len(self.design.tuples),
            "per_tuple": self.per_tuple,
            "complete": self.is_complete(),
        }

    def annotator_state(self, annotator_id: str) -> AnnotatorState:
        return self._record(annotator_id).state

    def response_set(self) -> ResponseSet:
        responses = tuple(sorted(self._responses, key=lambda r: r.ordinal))
        return ResponseSet(
            design=self.design, responses=responses, per_tuple=self.per_tuple
        )

    # -- persistence --------------------------------------------------------

    def to_document(self) -> dict:
        return {
            "per_tuple": self.per_tuple,
            "seed": self.seed,
            "accuracy_threshold": self.accuracy_threshold,
            "grace_golds": self.grace_golds,
            "ordinal": self._ordinal,
            "gold": [
                {
                    "tuple_index": g.tuple_index,
                    "acceptable_best": sorted(g.acceptable_best),
                    "acceptable_worst": sorted(g.acceptable_worst),
                }
                for g in self.gold
            ],
            "responses": [
                {
                    "annotator_id": r.annotator_id,
                    "tuple_index": r.tuple_index,
                    "best": r.best,
                    "worst": r.worst,
                    "ordinal": r.ordinal,
                }
                for r in self._responses
            ],
            "annotators": {
                a: {
                    "status": rec.state.status,
                    "gold_seen": rec.state.gold_seen,
                    "gold_correct": rec.state.gold_correct,
                    "answered": sorted(rec.answered),
                    "n_ordinary": rec.n_ordinary,
                    "n_gold": rec.n_gold,
                }
                for a, rec in self._annotators.items()
            },
        }

    @classmethod
    def from_document(cls, design: TupleDesign, doc: dict) -> "Session":
        session = cls(
            design=design,
            gold=[
                GoldQuestion(
                    tuple_index=g["tuple_index"],
                    acceptable_best=frozenset(g["acceptable_best"]),
                    acceptable_worst=frozenset(g["acceptable_worst"]),
                )
                for g in doc["gold"]
            ],
            per_tuple=doc["per_tuple"],
            seed=doc["seed"],
            accuracy_threshold=doc["accuracy_threshold"],
            grace_golds=doc["grace_golds"],
        )
        session._ordinal = doc["ordinal"]
        for r in doc["responses"]:
            session._responses.append(Response(**r))
            session._accepted[r["tuple_index"]] += 1
        for a, rdoc in doc["annotators"].items():
            rec = session._record(a)
            rec.state.status = rdoc["status"]
            rec.state.gold_seen = rdoc["gold_seen"]
            rec.state.gold_correct = rdoc["gold_correct"]
            rec.answered = set(rdoc["answered"])
            rec.n_ordinary = rdoc["n_ordinary"]
            rec.n_gold = rdoc["n_gold"]
        return session


def create_session(
    design: TupleDesign,
    gold: Sequence[GoldQuestion] = (),
    per_tuple: int = 3,
    seed: int = 0,
) -> Session:
    return Session(design=design, gold=gold, per_tuple=per_tuple, seed=seed)


def simulate_annotators(
    design: TupleDesign,
    latent: Mapping[str, float],
    accuracy_p: float,
    per_tuple: int = 3,
    seed: int = 0,
) -> ResponseSet:
    """Stand-in for a crowd: noisy annotators over a known latent intensity.

    With probability accuracy_p an annotator reports the true extremes of the
    latent values within the tuple (ties: lowest id wins best, highest id
    wins worst); otherwise a uniformly random valid (best, worst) pair.
    """
    if not 0.5 <= accuracy_p <= 1.0:
        raise ValidationError("accuracy_p must lie in [0.5, 1]")
    missing = [i for i in design.item_ids if i not in latent]
    if missing:
        raise ValidationError(
            f"latent scores missing for {len(missing)} items, e.g. {missing[0]!r}"
        )
    rng = random.Random(seed)
    responses = []
    ordinal = 0
    for tuple_index, items in enumerate(design.tuples):
        for a in range(per_tuple):
            if rng.random() < accuracy_p:
                top = max(latent[i] for i in items)
                bottom = min(latent[i] for i in items)
                best = min(i for i in items if latent[i] == top)
                worst = max(i for i in items if latent[i] == bottom)
                if best == worst:  # constant latent in tuple
                    worst = max(i for i in items if i != best)
            else:
                best, worst = rng.sample(items, 2)
            responses.append(
                Response(
                    annotator_id=f"sim{a}",
                    tuple_index=tuple_index,
                    best=best,
                    worst=worst,
                    ordinal=ordinal,
                )
            )
            ordinal += 1
    return ResponseSet(
        design=design, responses=tuple(responses), per_tuple=per_tuple
    )


def write_gold_questions(gold: Sequence[GoldQuestion], path) -> None:
    """TSV: tuple_index, comma-joined acceptable best ids, ditto worst."""
    with open(path, "w", encoding="utf-8") as fh:
        for g in gold:
            fh.write(
                f"{g.tuple_index}\t{','.join(sorted(g.acceptable_best))}"
                f"\t{','.join(sorted(g.acceptable_worst))}\n"
            )


def read_gold_questions(path) -> list[GoldQuestion]:
    gold = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError("expected 3 columns", line_number)
            try:
                tuple_index = int(cols[0])
            except ValueError:
                raise ParseError("tuple_index must be an integer", line_number) from None
            gold.append(
                GoldQuestion(
                    tuple_index=tuple_index,
                    acceptable_best=frozenset(x for x in cols[1].split(",") if x),
                    acceptable_worst=frozenset(x for x in cols[2].split(",") if x),
                )
            )
    return gold


def write_responses(responses: ResponseSet, path) -> None:
    """TSV: annotator_id, tuple_index, best_id, worst_id, ordinal."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in responses.responses:
            fh.write(
                f"{r.annotator_id}\t{r.tuple_index}\t{r.best}\t{r.worst}\t{r.ordinal}\n"
            )


def read_responses(path, design: TupleDesign, per_tuple: int = 3) -> ResponseSet:
    responses = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ParseError("expected 5 columns", line_number)
            annotator_id, t, best, worst, ordinal = cols
            try:
                tuple_index = int(t)
                ordinal_n = int(ordinal)
            except ValueError:
                raise ParseError("tuple_index/ordinal must be integers", line_number) from None
            if not 0 <= tuple_index < len(design.tuples):
                raise ValidationError(
                    f"line {line_number}: tuple index {tuple_index} out of range"
                )
            members = design.tuples[tuple_index]
            if best not in members or worst not in members or best == worst:
                raise ValidationError(
                    f"line {line_number}: best/worst invalid for tuple {tuple_index}"
                )
            responses.append(
                Response(
                    annotator_id=annotator_id,
                    tuple_index=tuple_index,
                    best=best,
                    worst=worst,
                    ordinal=ordinal_n,
                )
            )
    return ResponseSet(design=design, responses=tuple(responses), per_tuple=per_tuple)
