import pytest
from fastapi.testclient import TestClient

from bws_intensity import annotation, design, scoring
from bws_intensity.annotation import GoldQuestion, Response, ResponseSet
from bws_intensity.service import PROTOCOL_VERSION, ServiceConfig, SessionStore, create_app


@pytest.fixture()
def setup(tmp_path):
    d = design.generate_design([f"i{k:03d}" for k in range(25)], seed=0)
    latent = {item: k / 24 for k, item in enumerate(d.item_ids)}
    texts = {item: f"tweet text for {item}" for item in d.item_ids}
    gold = [
        GoldQuestion(
            tuple_index=t,
            acceptable_best=frozenset([max(d.tuples[t], key=latent.get)]),
            acceptable_worst=frozenset([min(d.tuples[t], key=latent.get)]),
        )
        for t in (0, 10, 20, 30, 40)
    ]
    config = ServiceConfig(
        design=d,
        gold=tuple(gold),
        texts=texts,
        emotion="fear",
        per_tuple=3,
        seed=0,
        storage_dir=str(tmp_path / "sessions"),
    )
    return d, latent, config


def make_client(config):
    store = SessionStore(config)
    return store, TestClient(create_app(store))


def drive_annotator(client, sid, annotator, latent, texts_to_item=None):
    """Loop fetch -> answer (by latent) -> submit until done/rejected."""
    submitted = []
    while True:
        r = client.get(
            f"/api/sessions/{sid}/next", params={"annotator_id": annotator}
        )
        if r.status_code == 403:
            return "rejected", submitted
        body = r.json()
        if body.get("done"):
            return "done", submitted
        ids = [s["item_id"] for s in body["speakers"]]
        best = max(ids, key=latent.get)
        worst = min(ids, key=latent.get)
        resp = client.post(
            f"/api/sessions/{sid}/responses",
            json={
                "annotator_id": annotator,
                "tuple_index": body["tuple_index"],
                "best_id": best,
                "worst_id": worst,
            },
        )
        assert resp.status_code == 200, resp.text
        outcome = resp.json()
        submitted.append((body["tuple_index"], best, worst, outcome["outcome"]))
        if outcome["outcome"] == "rejected":
            return "rejected", submitted


def test_version_endpoint(setup):
    _, _, config = setup
    _, client = make_client(config)
    body = client.get("/api/version").json()
    assert body == {"protocol_version": PROTOCOL_VERSION, "emotion": "fear"}


def test_full_session_equivalence_with_file_path(setup):
    d, latent, config = setup
    store, client = make_client(config)
    sid = client.post("/api/sessions").json()["session_id"]

    ordinary = []
    for annotator in ("w1", "w2", "w3"):
        state, submitted = drive_annotator(client, sid, annotator, latent)
        assert state == "done"
        ordinary.extend(
            (annotator, t, b, w)
            for t, b, w, kind in submitted
            if kind == "accepted"
        )

    progress = client.get(f"/api/sessions/{sid}").json()
    assert progress["complete"] is True
    assert progress["responses_accepted"] == 3 * len(d.tuples)

    # scores from the exported responses
    export = client.get(f"/api/sessions/{sid}/export").text
    rows = [line.split("\t") for line in export.splitlines()]
    exported = ResponseSet(
        design=d,
        responses=tuple(
            Response(a, int(t), best=b, worst=w, ordinal=int(o))
            for a, t, b, w, o in rows
        ),
        per_tuple=3,
    )
    service_scores = scoring.compute_scores(exported)

    # the same response stream written directly, bypassing the service
    direct = ResponseSet(
        design=d,
        responses=tuple(
            Response(a, t, best=b, worst=w, ordinal=k)
            for k, (a, t, b, w) in enumerate(ordinary)
        ),
        per_tuple=3,
    )
    direct_scores = scoring.compute_scores(direct)
    assert service_scores.raw == direct_scores.raw
    assert service_scores.unipolar == direct_scores.unipolar


def test_question_payload_wording(setup):
    _, _, config = setup
    _, client = make_client(config)
    sid = client.post("/api/sessions").json()["session_id"]
    body = client.get(
        f"/api/sessions/{sid}/next", params={"annotator_id": "w1"}
    ).json()
    assert body["prompt_most"] == (
        "Which of the four speakers is likely to be the MOST fearful?"
    )
    assert body["prompt_least"] == (
        "Which of the four speakers is likely to be the LEAST fearful?"
    )
    assert len(body["speakers"]) == 4
    assert body["speakers"][0]["label"] == "Speaker 1"
    assert body["speakers"][0]["text"].startswith("tweet text")
    assert any("instinct" in note for note in body["notes"])


def test_best_equals_worst_is_bad_request(setup):
    _, _, config = setup
    _, client = make_client(config)
    sid = client.post("/api/sessions").json()["session_id"]
    q = client.get(f"/api/sessions/{sid}/next", params={"annotator_id": "w1"}).json()
    item = q["speakers"][0]["item_id"]
    r = client.post(
        f"/api/sessions/{sid}/responses",
        json={
            "annotator_id": "w1",
            "tuple_index": q["tuple_index"],
            "best_id": item,
            "worst_id": item,
        },
    )
    assert r.status_code == 400
    assert "differ" in r.json()["error"]


def test_malformed_body_is_bad_request(setup):
    _, _, config = setup
    _, client = make_client(config)
    sid = client.post("/api/sessions").json()["session_id"]
    r = client.post(f"/api/sessions/{sid}/responses", json={"annotator_id": "w1"})
    assert r.status_code == 400


def test_unknown_session_not_found(setup):
    _, _, config = setup
    _, client = make_client(config)
    assert client.get("/api/sessions/nope").status_code == 404
    assert (
        client.get("/api/sessions/nope/next", params={"annotator_id": "a"}).status_code
        == 404
    )


def test_gold_failure_rejects_and_forbids(setup):
    d, latent, config = setup
    _, client = make_client(config)
    sid = client.post("/api/sessions").json()["session_id"]
    # answer golds deliberately wrong: invert latent
    inverted = {k: -v for k, v in latent.items()}
    state, submitted = drive_annotator(client, sid, "cheat", inverted)
    assert state == "rejected"
    assert submitted[-1][3] == "rejected"
    # all their eventually-expunged work is gone from the export
    export = client.get(f"/api/sessions/{sid}/export").text
    assert "cheat" not in export
    # further fetches are forbidden with the gate explanation
    r = client.get(f"/api/sessions/{sid}/next", params={"annotator_id": "cheat"})
    assert r.status_code == 403
    assert "70%" in r.json()["explanation"]
    # and so are submissions
    r = client.post(
        f"/api/sessions/{sid}/responses",
        json={
            "annotator_id": "cheat",
            "tuple_index": 0,
            "best_id": d.tuples[0][0],
            "worst_id": d.tuples[0][1],
        },
    )
    assert r.status_code == 403


def test_crash_recovery_loses_nothing(setup):
    d, latent, config = setup
    store, client = make_client(config)
    sid = client.post("/api/sessions").json()["session_id"]
    # partially annotate, then simulate a crash by rebuilding from disk
    answered = 0
    while answered < 40:
        q = client.get(
            f"/api/sessions/{sid}/next", params={"annotator_id": "w1"}
        ).json()
        if q.get("done"):
            break
        ids = [s["item_id"] for s in q["speakers"]]
        client.post(
            f"/api/sessions/{sid}/responses",
            json={
                "annotator_id": "w1",
                "tuple_index": q["tuple_index"],
                "best_id": max(ids, key=latent.get),
                "worst_id": min(ids, key=latent.get),
            },
        )
        answered += 1
    before = client.get(f"/api/sessions/{sid}").json()
    export_before = client.get(f"/api/sessions/{sid}/export").text

    store2 = SessionStore(config)  # fresh process, same storage dir
    client2 = TestClient(create_app(store2))
    after = client2.get(f"/api/sessions/{sid}").json()
    export_after = client2.get(f"/api/sessions/{sid}/export").text
    assert after == before
    assert export_after == export_before
    # the restored session continues to completion
    for annotator in ("w1", "w2", "w3"):
        state, _ = drive_annotator(client2, sid, annotator, latent)
        assert state == "done"
    assert client2.get(f"/api/sessions/{sid}").json()["complete"] is True


def test_sessions_are_independent(setup):
    _, latent, config = setup
    _, client = make_client(config)
    sid1 = client.post("/api/sessions").json()["session_id"]
    sid2 = client.post("/api/sessions").json()["session_id"]
    assert sid1 != sid2
    drive_annotator(client, sid1, "w1", latent)
    p1 = client.get(f"/api/sessions/{sid1}").json()
    p2 = client.get(f"/api/sessions/{sid2}").json()
    assert p1["responses_accepted"] > 0
    assert p2["responses_accepted"] == 0
