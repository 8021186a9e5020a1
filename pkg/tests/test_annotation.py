import pytest

from bws_intensity import annotation, design
from bws_intensity.annotation import GoldQuestion, Response
from bws_intensity.errors import (
    ConfigurationError,
    RejectedAnnotatorError,
    ValidationError,
)


def mini_design(n_tuples=8):
    """Hand-built design for protocol tests; validity is not required here."""
    items = [f"x{k}" for k in range(n_tuples + 3)]
    tuples = tuple(
        (items[k], items[k + 1], items[k + 2], items[k + 3]) for k in range(n_tuples)
    )
    return design.TupleDesign(item_ids=tuple(items), tuples=tuples, seed=0)


def answer_current(session, annotator, chooser=None):
    """Answer the annotator's current question; returns (question, outcome)."""
    q = session.next_question(annotator)
    if q is None:
        return None, None
    if chooser is None:
        best, worst = q.items[0], q.items[1]
    else:
        best, worst = chooser(q)
    outcome = session.submit_response(
        Response(annotator_id=annotator, tuple_index=q.tuple_index, best=best, worst=worst)
    )
    return q, outcome


class TestSessionBasics:
    def test_single_annotator_completes_per_tuple_one(self):
        session = annotation.create_session(mini_design(8), per_tuple=1)
        answered = 0
        while True:
            q, _ = answer_current(session, "a1")
            if q is None:
                break
            answered += 1
        assert answered == 8
        assert session.is_complete()
        assert len(session.response_set().responses) == 8

    def test_no_gold_means_no_gating(self):
        session = annotation.create_session(mini_design(8), per_tuple=1)
        for _ in range(8):
            answer_current(session, "a1")
        assert session.annotator_state("a1").status == "active"

    def test_completion_accounting_three_annotators(self):
        session = annotation.create_session(mini_design(6), per_tuple=3)
        for annotator in ("a1", "a2", "a3"):
            while True:
                q, _ = answer_current(session, annotator)
                if q is None:
                    break
        assert session.is_complete()
        assert len(session.response_set().responses) == 3 * 6

    def test_same_annotator_never_answers_tuple_twice(self):
        session = annotation.create_session(mini_design(6), per_tuple=3)
        seen = set()
        while True:
            q, _ = answer_current(session, "solo")
            if q is None:
                break
            assert q.tuple_index not in seen
            seen.add(q.tuple_index)
        assert not session.is_complete()  # needs distinct annotators

    def test_gold_fraction_above_half_rejected(self):
        d = mini_design(4)
        gold = [
            GoldQuestion(
                tuple_index=k,
                acceptable_best=frozenset([d.tuples[k][0]]),
                acceptable_worst=frozenset([d.tuples[k][1]]),
            )
            for k in range(4)
        ] * 2
        with pytest.raises(ConfigurationError):
            annotation.create_session(d, gold=gold[:5], per_tuple=1)


class TestSubmissionValidation:
    def test_best_equals_worst(self):
        session = annotation.create_session(mini_design(), per_tuple=1)
        q = session.next_question("a1")
        with pytest.raises(ValidationError, match="differ"):
            session.submit_response(
                Response("a1", q.tuple_index, best=q.items[0], worst=q.items[0])
            )

    def test_non_member_item(self):
        session = annotation.create_session(mini_design(), per_tuple=1)
        q = session.next_question("a1")
        with pytest.raises(ValidationError, match="member"):
            session.submit_response(
                Response("a1", q.tuple_index, best="nope", worst=q.items[1])
            )

    def test_wrong_tuple(self):
        session = annotation.create_session(mini_design(), per_tuple=1)
        q = session.next_question("a1")
        other = (q.tuple_index + 1) % 8
        members = session.design.tuples[other]
        with pytest.raises(ValidationError, match="current question"):
            session.submit_response(
                Response("a1", other, best=members[0], worst=members[1])
            )


def gold_for(d, k):
    return GoldQuestion(
        tuple_index=k,
        acceptable_best=frozenset([d.tuples[k][0]]),
        acceptable_worst=frozenset([d.tuples[k][3]]),
    )


class TestGoldGate:
    def run_golds(self, correct_sequence, n_tuples=40):
        """Drive one annotator, answering golds per the given right/wrong plan."""
        d = mini_design(n_tuples)
        gold = [gold_for(d, k) for k in range(len(correct_sequence))]
        session = annotation.create_session(d, gold=gold, per_tuple=1, seed=1)
        gold_answered = 0
        outcomes = []
        while gold_answered < len(correct_sequence):
            q = session.next_question("a1")
            assert q is not None, "ran out of questions before exhausting golds"
            if q.kind == "gold":
                g = session.gold[q.gold_index]
                if correct_sequence[gold_answered]:
                    best = next(iter(g.acceptable_best))
                    worst = next(iter(g.acceptable_worst))
                else:
                    best = next(iter(g.acceptable_worst))
                    worst = next(iter(g.acceptable_best))
                outcome = session.submit_response(
                    Response("a1", q.tuple_index, best=best, worst=worst)
                )
                outcomes.append(outcome)
                gold_answered += 1
                if outcome.kind == "rejected":
                    break
            else:
                session.submit_response(
                    Response("a1", q.tuple_index, best=q.items[0], worst=q.items[1])
                )
        return session, outcomes

    def test_all_correct_stays_active(self):
        session, outcomes = self.run_golds([True] * 5)
        assert session.annotator_state("a1").status == "active"
        assert all(o.kind == "gold" and o.gold_correct for o in outcomes)

    def test_feedback_is_immediate_and_truthful(self):
        # 3/4 = 0.75 and 4/5 = 0.8 keep the annotator above the gate
        session, outcomes = self.run_golds([True, True, True, False, True])
        assert [o.gold_correct for o in outcomes] == [True, True, True, False, True]
        assert all(o.kind == "gold" for o in outcomes)

    def test_grace_period_tolerates_early_miss(self):
        # 0/1 and 1/2 are below 70% but fall inside the 3-gold grace window
        session, outcomes = self.run_golds([False, True])
        assert session.annotator_state("a1").status == "active"
        assert [o.kind for o in outcomes] == ["gold", "gold"]

    def test_rejection_below_seventy_percent(self):
        # C C C W W -> 3/5 = 0.6 < 0.7 at the fifth gold
        session, outcomes = self.run_golds([True, True, True, False, False])
        assert outcomes[-1].kind == "rejected"
        state = session.annotator_state("a1")
        assert state.status == "rejected"
        assert state.gold_seen == 5 and state.gold_correct == 3

    def test_rejection_expunges_prior_ordinary_responses(self):
        session, _ = self.run_golds([True, True, True, False, False])
        responses = session.response_set().responses
        assert all(r.annotator_id != "a1" for r in responses)
        assert len(responses) == 0

    def test_rejected_annotator_cannot_continue(self):
        session, _ = self.run_golds([True, True, True, False, False])
        with pytest.raises(RejectedAnnotatorError):
            session.next_question("a1")
        with pytest.raises(RejectedAnnotatorError):
            session.submit_response(Response("a1", 0, best="x0", worst="x1"))

    def test_expunged_tuples_return_to_pool(self):
        session, _ = self.run_golds([True, True, True, False, False], n_tuples=10)
        # a fresh annotator (answering golds correctly) completes the session
        while True:
            q, _ = answer_current(session, "a2", chooser=lambda q: (q.items[0], q.items[3]))
            if q is None:
                break
        assert session.is_complete()

    def test_multiple_acceptable_answers(self):
        d = mini_design(12)
        g = GoldQuestion(
            tuple_index=0,
            acceptable_best=frozenset([d.tuples[0][0], d.tuples[0][1]]),
            acceptable_worst=frozenset([d.tuples[0][3]]),
        )
        session = annotation.create_session(d, gold=[g], per_tuple=1, seed=0)
        while True:
            q = session.next_question("a1")
            assert q is not None
            if q.kind == "gold":
                outcome = session.submit_response(
                    Response("a1", q.tuple_index, best=d.tuples[0][1], worst=d.tuples[0][3])
                )
                assert outcome.kind == "gold" and outcome.gold_correct
                break
            session.submit_response(
                Response("a1", q.tuple_index, best=q.items[0], worst=q.items[1])
            )


class TestGoldInterleaving:
    def test_gold_density_roughly_five_percent(self):
        d = design.generate_design([f"i{k:03d}" for k in range(100)], seed=0)
        gold = [gold_for(d, k) for k in range(10)]
        session = annotation.create_session(d, gold=gold, per_tuple=3, seed=0)
        rec = session._record("worker")
        assert len(rec.gold_positions) == 10
        stream_len = len(d.tuples) + 10
        assert all(0 <= p < stream_len for p in rec.gold_positions)
        assert rec.gold_positions == sorted(rec.gold_positions)
        # spread: positions fall in distinct stride windows
        stride = stream_len // 10
        assert len({p // stride for p in rec.gold_positions}) == 10


class TestPersistence:
    def test_document_round_trip_mid_session(self):
        d = mini_design(10)
        gold = [gold_for(d, 0), gold_for(d, 5)]
        session = annotation.create_session(d, gold=gold, per_tuple=2, seed=3)
        for annotator in ("a1", "a2"):
            for _ in range(4):
                q, _ = answer_current(session, annotator)
                if q is None:
                    break
        doc = session.to_document()
        restored = annotation.Session.from_document(d, doc)
        assert restored.to_document() == doc
        # both sessions continue identically
        q1 = session.next_question("a1")
        q2 = restored.next_question("a1")
        assert q1 == q2


class TestSimulation:
    def test_perfect_accuracy_reports_true_extremes(self):
        d = design.generate_design([f"i{k:03d}" for k in range(25)], seed=0)
        latent = {item: k for k, item in enumerate(d.item_ids)}
        rs = annotation.simulate_annotators(d, latent, accuracy_p=1.0, per_tuple=3, seed=0)
        assert len(rs.responses) == 3 * len(d.tuples)
        for r in rs.responses:
            members = d.tuples[r.tuple_index]
            assert r.best == max(members, key=latent.get)
            assert r.worst == min(members, key=latent.get)

    def test_constant_latent_tie_break_by_id_order(self):
        d = design.generate_design([f"i{k:03d}" for k in range(25)], seed=0)
        latent = {item: 0.5 for item in d.item_ids}
        rs = annotation.simulate_annotators(d, latent, accuracy_p=1.0, per_tuple=1, seed=0)
        for r in rs.responses:
            members = d.tuples[r.tuple_index]
            assert r.best == min(members)
            assert r.worst == max(members)

    def test_deterministic_under_seed(self):
        d = design.generate_design([f"i{k:03d}" for k in range(25)], seed=0)
        latent = {item: k % 7 for k, item in enumerate(d.item_ids)}
        a = annotation.simulate_annotators(d, latent, 0.8, per_tuple=3, seed=42)
        b = annotation.simulate_annotators(d, latent, 0.8, per_tuple=3, seed=42)
        assert a.responses == b.responses
        c = annotation.simulate_annotators(d, latent, 0.8, per_tuple=3, seed=43)
        assert a.responses != c.responses

    def test_accuracy_out_of_range(self):
        d = mini_design()
        latent = {i: 0.0 for i in d.item_ids}
        with pytest.raises(ValidationError):
            annotation.simulate_annotators(d, latent, accuracy_p=0.3)

    def test_missing_latent_entries(self):
        d = mini_design()
        with pytest.raises(ValidationError, match="missing"):
            annotation.simulate_annotators(d, {d.item_ids[0]: 1.0}, accuracy_p=1.0)


def test_response_file_round_trip(tmp_path):
    d = design.generate_design([f"i{k:03d}" for k in range(25)], seed=0)
    latent = {item: k for k, item in enumerate(d.item_ids)}
    rs = annotation.simulate_annotators(d, latent, accuracy_p=0.9, per_tuple=3, seed=5)
    path = tmp_path / "responses.tsv"
    annotation.write_responses(rs, path)
    loaded = annotation.read_responses(path, d, per_tuple=3)
    assert loaded.responses == rs.responses


def test_gold_file_round_trip(tmp_path):
    d = mini_design(6)
    gold = [
        GoldQuestion(
            tuple_index=2,
            acceptable_best=frozenset([d.tuples[2][0], d.tuples[2][2]]),
            acceptable_worst=frozenset([d.tuples[2][3]]),
        )
    ]
    path = tmp_path / "gold.tsv"
    annotation.write_gold_questions(gold, path)
    assert annotation.read_gold_questions(path) == gold
