import io
import random
import sys

import pytest

from bws_intensity import annotation, cli, design, scoring


def run(argv, capsys=None):
    return cli.main([str(a) for a in argv])


@pytest.fixture()
def items_file(tmp_path):
    path = tmp_path / "items.txt"
    path.write_text("".join(f"it{k:03d}\n" for k in range(100)), encoding="utf-8")
    return path


def test_design_writes_2n_tuples(tmp_path, items_file):
    out = tmp_path / "tuples.tsv"
    assert run(["design", "--items", items_file, "--seed", 7, "--out", out]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# n=100 seed=7")
    assert len(lines) == 1 + 200


def test_design_deterministic_bytes(tmp_path, items_file):
    a = tmp_path / "a.tsv"
    b = tmp_path / "b.tsv"
    run(["design", "--items", items_file, "--seed", 7, "--out", a])
    run(["design", "--items", items_file, "--seed", 7, "--out", b])
    assert a.read_bytes() == b.read_bytes()


def test_design_infeasible_exit_code(tmp_path, capsys):
    path = tmp_path / "few.txt"
    path.write_text("a\nb\nc\n", encoding="utf-8")
    assert run(["design", "--items", path]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(items_file):
    with pytest.raises(SystemExit) as exc:
        run(["design", "--items", items_file, "--bogus"])
    assert exc.value.code == 2


def test_verify_subcommand(tmp_path, items_file, capsys):
    out = tmp_path / "tuples.tsv"
    run(["design", "--items", items_file, "--seed", 1, "--out", out])
    assert run(["verify", "--tuples", out]) == 0
    assert "ok" in capsys.readouterr().out


def write_latent(tmp_path, d, values=None):
    path = tmp_path / "latent.tsv"
    rng = random.Random(3)
    with open(path, "w", encoding="utf-8") as fh:
        for k, item in enumerate(d.item_ids):
            v = values[k] if values else rng.uniform(0, 1)
            fh.write(f"{item}\t{v!r}\n")
    return path


def test_simulate_then_score_recovers_latent(tmp_path, items_file):
    tuples_path = tmp_path / "tuples.tsv"
    run(["design", "--items", items_file, "--seed", 2, "--out", tuples_path])
    d = design.read_design(tuples_path)
    latent_path = write_latent(tmp_path, d, values=[k / 99 for k in range(100)])
    responses_path = tmp_path / "resp.tsv"
    assert run([
        "simulate", "--tuples", tuples_path, "--latent", latent_path,
        "--accuracy", 1.0, "--per-tuple", 3, "--seed", 5, "--out", responses_path,
    ]) == 0
    scores_path = tmp_path / "scores.tsv"
    assert run([
        "score", "--responses", responses_path, "--tuples", tuples_path,
        "--out", scores_path,
    ]) == 0
    unipolar = {}
    for line in scores_path.read_text(encoding="utf-8").splitlines():
        cols = line.split("\t")
        unipolar[cols[0]] = float(cols[2])
        assert int(cols[3]) == 24  # 8 tuples x 3 annotators
    latent = {item: k / 99 for k, item in enumerate(d.item_ids)}
    items = sorted(unipolar)
    rho = scoring.spearman([unipolar[i] for i in items], [latent[i] for i in items])
    # perfectly consistent annotators give strong but not perfect rank
    # recovery: counting scores over 8 tuples take at most 17 distinct
    # values, so many of the 100 items tie, and an item's score also depends
    # on which competitors its tuples happened to draw
    assert rho >= 0.9


def test_simulate_deterministic(tmp_path, items_file):
    tuples_path = tmp_path / "tuples.tsv"
    run(["design", "--items", items_file, "--seed", 2, "--out", tuples_path])
    d = design.read_design(tuples_path)
    latent_path = write_latent(tmp_path, d)
    a = tmp_path / "a.tsv"
    b = tmp_path / "b.tsv"
    for out in (a, b):
        run([
            "simulate", "--tuples", tuples_path, "--latent", latent_path,
            "--accuracy", 0.8, "--seed", 11, "--out", out,
        ])
    assert a.read_bytes() == b.read_bytes()


def test_score_empty_responses_fails(tmp_path, items_file, capsys):
    tuples_path = tmp_path / "tuples.tsv"
    run(["design", "--items", items_file, "--seed", 2, "--out", tuples_path])
    empty = tmp_path / "empty.tsv"
    empty.write_text("", encoding="utf-8")
    assert run(["score", "--responses", empty, "--tuples", tuples_path]) == 1
    assert "error:" in capsys.readouterr().err


def test_shr_subcommand(tmp_path, items_file):
    tuples_path = tmp_path / "tuples.tsv"
    run(["design", "--items", items_file, "--seed", 2, "--out", tuples_path])
    d = design.read_design(tuples_path)
    latent_path = write_latent(tmp_path, d, values=[k / 99 for k in range(100)])
    responses_path = tmp_path / "resp.tsv"
    run([
        "simulate", "--tuples", tuples_path, "--latent", latent_path,
        "--accuracy", 1.0, "--per-tuple", 3, "--out", responses_path,
    ])
    out = tmp_path / "shr.kv"
    assert run([
        "shr", "--responses", responses_path, "--tuples", tuples_path,
        "--repetitions", 5, "--seed", 3, "--out", out,
    ]) == 0
    kv = dict(line.split("=", 1) for line in out.read_text().splitlines())
    assert float(kv["mean_pearson"]) == pytest.approx(1.0, abs=1e-9)
    assert kv["repetitions"] == "5"


def test_hashtag_impact_subcommand(tmp_path, capsys):
    data = tmp_path / "pairs.tsv"
    rows = []
    for k, (h, q) in enumerate([(0.6, 0.4), (0.5, 0.4), (0.4, 0.5), (0.5, 0.5)]):
        rows.append(f"h{k}\ttext {k} #tag\tfear\ttrain\tHQT:p{k}\t{h!r}")
        rows.append(f"n{k}\ttext {k}\tfear\ttrain\tNQT:p{k}\t{q!r}")
    data.write_text("".join(r + "\n" for r in rows), encoding="utf-8")
    out = tmp_path / "impact.kv"
    scatter = tmp_path / "scatter.tsv"
    assert run([
        "hashtag-impact", "--dataset", data, "--out", out, "--scatter-out", scatter,
    ]) == 0
    assert "pairs analyzed: 4" in capsys.readouterr().out
    kv = dict(line.split("=", 1) for line in out.read_text().splitlines())
    assert kv["pair_count"] == "4"
    assert float(kv["pct_drop"]) == pytest.approx(50.0)
    assert len(scatter.read_text().splitlines()) == 4


def test_hashtag_impact_reconstruction(tmp_path):
    data = tmp_path / "pairs.tsv"
    rows = [
        "h0\tawful day #sad\tsadness\ttrain\tQT:NONE\t0.7",
        "n0\tawful day\tsadness\ttrain\tQT:NONE\t0.5",
    ]
    data.write_text("".join(r + "\n" for r in rows), encoding="utf-8")
    terms = tmp_path / "terms.txt"
    terms.write_text("sad\n", encoding="utf-8")
    out = tmp_path / "impact.kv"
    assert run([
        "hashtag-impact", "--dataset", data, "--reconstruct",
        "--query-terms", terms, "--out", out,
    ]) == 0
    kv = dict(line.split("=", 1) for line in out.read_text().splitlines())
    assert kv["pair_count"] == "1"


@pytest.fixture()
def tiny_corpus(tmp_path):
    """Dataset + lexicon whose gold scores track a planted intensity word."""
    rng = random.Random(9)
    words = ["calm", "uneasy", "worried", "scared", "terrified"]
    lines = []
    for k in range(80):
        level = rng.randrange(5)
        score = round(min(1.0, max(0.0, 0.1 + 0.2 * level + rng.gauss(0, 0.02))), 3)
        partition = "train" if k % 2 == 0 else ("dev" if k % 10 == 1 else "test")
        lines.append(
            f"t{k}\tfeeling {words[level]} right now\tfear\t{partition}\tQT:NONE\t{score!r}"
        )
    data = tmp_path / "fear.tsv"
    data.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    lex = tmp_path / "scale.tsv"
    lex.write_text(
        "# mode: numeric\n# name: Scale\n"
        + "".join(f"{w}\tlevel\t{k * 0.25}\n" for k, w in enumerate(words)),
        encoding="utf-8",
    )
    return data, lex


def test_features_subcommand(tmp_path, tiny_corpus):
    data, lex = tiny_corpus
    out = tmp_path / "features.tsv"
    assert run([
        "features", "--dataset", data, "--config", "WN+L",
        "--lexicon", lex, "--out", out,
    ]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert any("\tlex:Scale:level\t" in line for line in lines)
    assert any("\twn:feeling\t" in line for line in lines)


def test_train_eval_round_trip(tmp_path, tiny_corpus):
    data, lex = tiny_corpus
    model_path = tmp_path / "model.tsv"
    assert run([
        "train", "--train", data, "--config", "L:Scale", "--lexicon", lex,
        "--out", model_path,
    ]) == 0
    out = tmp_path / "eval.kv"
    assert run([
        "eval", "--model", model_path, "--test", data, "--lexicon", lex,
        "--out", out,
    ]) == 0
    kv = dict(line.split("=", 1) for line in out.read_text().splitlines())
    assert float(kv["pearson"]) > 0.9
    # range-restricted evaluation
    out2 = tmp_path / "eval2.kv"
    assert run([
        "eval", "--model", model_path, "--test", data, "--lexicon", lex,
        "--subset-threshold", 0.5, "--out", out2,
    ]) == 0
    kv2 = dict(line.split("=", 1) for line in out2.read_text().splitlines())
    assert int(kv2["n"]) < int(kv["n"])


def test_ablate_subcommand(tmp_path, tiny_corpus, capsys):
    data, lex = tiny_corpus
    out = tmp_path / "ablation.kv"
    assert run([
        "ablate", "--dataset", f"fear={data}", "--configs", "WN;L:Scale",
        "--lexicon", lex, "--out", out,
    ]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0] == "config\tfear\tavg"
    kv = dict(line.split("=", 1) for line in out.read_text().splitlines())
    assert "L:Scale/fear/pearson" in kv


def test_transfer_subcommand(tmp_path, tiny_corpus, capsys):
    data, lex = tiny_corpus
    assert run([
        "transfer", "--dataset", f"fear={data}", "--config", "L:Scale",
        "--lexicon", lex,
    ]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0] == "train\\test\tfear"
