import json
import math

import pytest

from polyeval.cli import run
from polyeval.core import validate_generation_set
from polyeval.dataio import read_jsonl, text_key, write_jsonl
from polyeval.stats import cohen_kappa, gwet_ac1


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines))


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("POLYEVAL_THREADS", raising=False)
    return tmp_path


def make_examples(path, n=2, refs=("they feel proud", "they want rest")):
    write_jsonl(
        path,
        [
            {
                "example_id": f"e{i}",
                "dialogue": [
                    {"speaker": "Listener (A)", "text": "hi"},
                    {"speaker": "Speaker (B)", "text": "hello there"},
                ],
                "type": "Desire",
                "references": list(refs),
            }
            for i in range(n)
        ],
    )


def make_generations(path, n=2, runs=(("they feel proud", "nothing matches"),)):
    write_jsonl(
        path,
        [
            {
                "example_id": f"e{i}",
                "mode": "monomorphic_beam",
                "runs": [list(r) for r in runs],
            }
            for i in range(n)
        ],
    )


# --- exit codes ---------------------------------------------------------------


def test_missing_input_file_exits_2(workdir, capsys):
    make_generations(workdir / "g.jsonl")
    code = run(
        ["eval", "--examples", "absent.jsonl", "--generations", "g.jsonl",
         "--report", "r.json"]
    )
    assert code == 2
    assert "absent.jsonl" in capsys.readouterr().err


def test_malformed_jsonl_names_line_and_exits_1(workdir, capsys):
    good = json.dumps(
        {
            "example_id": "e0",
            "dialogue": [{"speaker": "Speaker (A)", "text": "hi"}],
            "type": "Desire",
            "references": ["ok"],
        }
    )
    write_lines(workdir / "bad.jsonl", [good] * 6 + ["{not json"])
    code = run(["datastats", "--examples", "bad.jsonl", "--report", "r.json"])
    assert code == 1
    err = capsys.readouterr().err
    assert "line 7" in err


def test_validation_error_exits_1(workdir, capsys):
    make_examples(workdir / "u.jsonl", n=2)
    make_generations(workdir / "g.jsonl", n=1)  # e1 has no generations
    code = run(
        ["eval", "--examples", "u.jsonl", "--generations", "g.jsonl",
         "--topk", "1", "--report", "r.json"]
    )
    assert code == 1
    assert "e1" in capsys.readouterr().err


# --- eval ----------------------------------------------------------------------


def test_eval_bleu_reports_scaled_and_raw(workdir):
    make_examples(workdir / "u.jsonl")
    make_generations(workdir / "g.jsonl")
    code = run(
        ["eval", "--examples", "u.jsonl", "--generations", "g.jsonl",
         "--metric", "bleu", "--topk", "5", "--matching", "bipartite",
         "--threads", "1", "--report", "r.json"]
    )
    assert code == 0
    report = json.loads((workdir / "r.json").read_text())
    assert report["tool"] == "eval"
    assert report["config"]["coverage_cap"] is True
    assert report["overall"] == pytest.approx(report["raw"]["overall"] * 100, rel=1e-9)
    assert report["raw"]["overall"] <= 1.0
    assert report["n_examples"] == 2


def test_eval_rerun_is_byte_identical(workdir):
    make_examples(workdir / "u.jsonl")
    make_generations(workdir / "g.jsonl")
    argv = ["eval", "--examples", "u.jsonl", "--generations", "g.jsonl",
            "--topk", "5", "--threads", "2", "--report", "r1.json"]
    assert run(argv) == 0
    assert run(argv[:-1] + ["r2.json"]) == 0
    assert (workdir / "r1.json").read_bytes() == (workdir / "r2.json").read_bytes()


def test_eval_embed_metric(workdir):
    make_examples(workdir / "u.jsonl", refs=("ref one", "ref two"))
    make_generations(workdir / "g.jsonl", runs=(("out one", "out two"),))
    write_jsonl(
        workdir / "emb.jsonl",
        [
            {"key": text_key(t), "vector": v}
            for t, v in [
                ("ref one", [1.0, 0.0]),
                ("ref two", [0.0, 1.0]),
                ("out one", [1.0, 0.0]),
                ("out two", [1.0, 1.0]),
            ]
        ],
    )
    code = run(
        ["eval", "--examples", "u.jsonl", "--generations", "g.jsonl",
         "--metric", "embed", "--embeddings", "emb.jsonl", "--topk", "5",
         "--threads", "1", "--report", "r.json"]
    )
    assert code == 0
    report = json.loads((workdir / "r.json").read_text())
    # optimal pairing: out one->ref one (1.0), out two->ref two (0.7071)
    assert report["overall"] == pytest.approx((1.0 + math.sqrt(0.5)) / 2, abs=1e-6)
    assert "raw" not in report  # only bleu is rescaled


def test_eval_external_scores(workdir):
    make_examples(workdir / "u.jsonl", n=1)
    make_generations(workdir / "g.jsonl", n=1, runs=(("a", "b"),))
    write_jsonl(
        workdir / "x.jsonl",
        [{"example_id": "e0", "scores": [[0.9, 0.1], [0.2, 0.8]]}],
    )
    code = run(
        ["eval", "--examples", "u.jsonl", "--generations", "g.jsonl",
         "--metric", "external", "--external-scores", "x.jsonl", "--topk", "5",
         "--threads", "1", "--report", "r.json"]
    )
    assert code == 0
    report = json.loads((workdir / "r.json").read_text())
    assert report["overall"] == pytest.approx(0.85, abs=1e-9)
    # sidecar is mandatory for the external metric
    assert run(
        ["eval", "--examples", "u.jsonl", "--generations", "g.jsonl",
         "--metric", "external", "--report", "r2.json"]
    ) == 1


def test_eval_threads_default_echoed(workdir, monkeypatch):
    make_examples(workdir / "u.jsonl")
    make_generations(workdir / "g.jsonl")
    assert run(["eval", "--examples", "u.jsonl", "--generations", "g.jsonl",
                "--topk", "1", "--report", "r.json"]) == 0
    assert json.loads((workdir / "r.json").read_text())["config"]["threads"] == "auto"
    monkeypatch.setenv("POLYEVAL_THREADS", "3")
    assert run(["eval", "--examples", "u.jsonl", "--generations", "g.jsonl",
                "--topk", "1", "--report", "r2.json"]) == 0
    assert json.loads((workdir / "r2.json").read_text())["config"]["threads"] == "3"


# --- normalize -------------------------------------------------------------------


def test_normalize_writes_unified_and_counts_exclusions(workdir):
    write_jsonl(
        workdir / "raw.jsonl",
        [
            {
                "example_id": "a",
                "utterances": [
                    {"speaker": "A", "text": "one"},
                    {"speaker": "A", "text": "two"},
                    {"speaker": "B", "text": "three"},
                ],
                "type_label": "xWant",
                "inferences": ["they want tea"],
            },
            {
                "example_id": "b",
                "utterances": [{"speaker": "A", "text": "solo"}],
                "type_label": "isAfter",
                "inferences": ["dropped"],
            },
        ],
    )
    code = run(
        ["normalize", "--in", "raw.jsonl", "--source", "generic",
         "--out", "u.jsonl", "--seed", "5", "--report", "r.json"]
    )
    assert code == 0
    report = json.loads((workdir / "r.json").read_text())
    assert report["examples"] == 1
    assert report["excluded"] == 1
    assert report["by_type"] == {"Desire": 1}
    rows = [rec for _, rec in read_jsonl(workdir / "u.jsonl")]
    assert rows[0]["dialogue"][0]["text"] == "one two"
    assert rows[0]["question"] == "What does Speaker want to do next?"


def test_normalize_unknown_label_fails(workdir, capsys):
    write_jsonl(
        workdir / "raw.jsonl",
        [{
            "example_id": "a",
            "utterances": [{"speaker": "A", "text": "one"}],
            "type_label": "notAType",
            "inferences": ["x"],
        }],
    )
    code = run(["normalize", "--in", "raw.jsonl", "--source", "generic",
                "--out", "u.jsonl", "--report", "r.json"])
    assert code == 1
    assert "notAType" in capsys.readouterr().err


# --- diversity / datastats ---------------------------------------------------------


def test_diversity_with_gold_clusters(workdir):
    make_generations(
        workdir / "g.jsonl", n=1,
        runs=(("they feel proud", "they feel happy", "they want rest"),),
    )
    write_jsonl(
        workdir / "emb.jsonl",
        [
            {"key": text_key("they feel proud"), "vector": [1.0, 0.0, 0.1]},
            {"key": text_key("they feel happy"), "vector": [1.0, 0.0, 0.0]},
            {"key": text_key("they want rest"), "vector": [0.0, 1.0, 0.0]},
        ],
    )
    write_jsonl(workdir / "gold.jsonl", [{"example_id": "e0", "clusters": [[0, 1], [2]]}])
    code = run(
        ["diversity", "--generations", "g.jsonl", "--embeddings", "emb.jsonl",
         "--tau", "0.8", "--gold-clusters", "gold.jsonl",
         "--out-clusters", "pred.jsonl", "--report", "r.json"]
    )
    assert code == 0
    report = json.loads((workdir / "r.json").read_text())
    assert report["avg_clusters"] == 2.0
    assert report["bcubed"]["f1"] == pytest.approx(1.0, abs=1e-12)
    pred = [rec for _, rec in read_jsonl(workdir / "pred.jsonl")]
    assert pred[0]["clusters"] == [[0, 1], [2]]


def test_diversity_needs_some_clustering_source(workdir, capsys):
    make_generations(workdir / "g.jsonl", n=1)
    assert run(["diversity", "--generations", "g.jsonl", "--report", "r.json"]) == 1


def test_datastats_report(workdir):
    make_examples(workdir / "u.jsonl", n=3)
    assert run(["datastats", "--examples", "u.jsonl", "--report", "r.json"]) == 0
    report = json.loads((workdir / "r.json").read_text())
    assert report["per_type"]["Desire"]["examples"] == 3
    assert "overall" in report


# --- stats -----------------------------------------------------------------------


def annotation_rows():
    rows = []
    # 20 items per system; X mostly positive, Y mixed; annotators disagree on
    # a few items
    for i in range(20):
        for system, base in (("X", True), ("Y", i % 2 == 0)):
            label_a = "always_likely" if base else "never_farfetched"
            flip = system == "Y" and i in (3, 5)
            label_b = (
                "sometimes_possible"
                if (base and not flip) or (not base and flip)
                else "invalid_nonsense"
            )
            for annotator, label in (("A", label_a), ("B", label_b)):
                rows.append(
                    {
                        "item_id": f"i{i}",
                        "task": "reasonability",
                        "system": system,
                        "annotator": annotator,
                        "label": label,
                    }
                )
    return rows


def test_stats_agree(workdir):
    write_jsonl(workdir / "ann.jsonl", annotation_rows())
    assert run(["stats", "agree", "--in", "ann.jsonl", "--report", "r.json"]) == 0
    report = json.loads((workdir / "r.json").read_text())
    block = report["tasks"]["reasonability"]
    assert block["n_items"] == 40
    # reproduce with the library on the same pairs
    pairs = []
    for i in range(20):
        for system, base in (("X", True), ("Y", i % 2 == 0)):
            flip = system == "Y" and i in (3, 5)
            pairs.append((base, (base and not flip) or (not base and flip)))
    assert block["ac1"] == pytest.approx(gwet_ac1(pairs), rel=1e-7)
    assert block["kappa"] == pytest.approx(cohen_kappa(pairs), rel=1e-7)


def test_stats_mcnemar_deterministic(workdir):
    write_jsonl(workdir / "ann.jsonl", annotation_rows())
    argv = ["stats", "mcnemar", "--in", "ann.jsonl", "--repeats", "25",
            "--seed", "11", "--report", "m1.json"]
    assert run(argv) == 0
    assert run(argv[:-1] + ["m2.json"]) == 0
    assert (workdir / "m1.json").read_bytes() == (workdir / "m2.json").read_bytes()
    report = json.loads((workdir / "m1.json").read_text())
    block = report["tasks"]["reasonability"]
    assert block["repeats"] == 25
    assert 0.0 <= block["mean_rate_y"] <= 1.0
    assert isinstance(block["significant"], bool)


def test_stats_prop(workdir):
    assert run(["stats", "prop", "--successes", "93,75", "--trials", "100,100",
                "--report", "p.json"]) == 0
    report = json.loads((workdir / "p.json").read_text())
    assert report["statistic"] == pytest.approx(675 / 56, rel=1e-7)
    assert report["significant"] is True
    assert report["df"] == 1


def test_stats_ttest(workdir):
    write_jsonl(
        workdir / "scores.jsonl",
        [
            {"name": "m1", "values": [0.8, 0.7, 0.9, 0.65, 0.85]},
            {"name": "m2", "values": [0.75, 0.72, 0.8, 0.6, 0.8]},
            {"name": "m3", "values": [0.5, 0.45, 0.6, 0.4, 0.55]},
        ],
    )
    assert run(["stats", "ttest", "--scores", "scores.jsonl", "--report", "t.json"]) == 0
    report = json.loads((workdir / "t.json").read_text())
    assert report["m"] == 3
    assert len(report["pairs"]) == 3
    for pair in report["pairs"]:
        assert pair["p_adjusted"] == pytest.approx(
            min(1.0, pair["p_value"] * 3), rel=1e-7
        )


# --- decode ------------------------------------------------------------------------


TOY_LM = {
    "order": 2,
    "end_token": "</s>",
    "vocab": ["(1)", "; (2)", "left", "right", "</s>"],
    "cond": [
        {"context": [], "probs": {"(1)": 1.0}},
        {"context": ["(1)"], "probs": {"left": 0.6, "right": 0.4}},
        {"context": ["left"], "probs": {"; (2)": 0.3, "</s>": 0.7}},
        {"context": ["right"], "probs": {"</s>": 1.0}},
        {"context": ["; (2)"], "probs": {"right": 1.0}},
    ],
}


def test_decode_strategies(workdir):
    (workdir / "lm.json").write_text(json.dumps(TOY_LM))
    make_examples(workdir / "u.jsonl", n=2)
    for strategy, mode in (
        ("beam", "monomorphic_beam"),
        ("dbs", "monomorphic_diverse_beam"),
        ("poly", "polymorphic"),
    ):
        code = run(
            ["decode", "--lm", "lm.json", "--examples", "u.jsonl",
             "--strategy", strategy, "--beams", "4", "--groups", "4",
             "--penalty", "0.5", "--runs", "3", "--seed", "3",
             "--max-len", "6", "--out", f"g_{strategy}.jsonl",
             "--report", f"r_{strategy}.json"]
        )
        assert code == 0
        rows = [rec for _, rec in read_jsonl(workdir / f"g_{strategy}.jsonl")]
        assert len(rows) == 2
        for row in rows:
            gen_set, _ = validate_generation_set(row)
            assert gen_set.mode.value == mode
        report = json.loads((workdir / f"r_{strategy}.json").read_text())
        assert report["examples"] == 2
        if strategy == "poly":
            assert report["config"]["rep_penalty"] == 5.0  # polymorphic preset
        else:
            assert report["config"]["rep_penalty"] == 1.0


def test_decode_poly_from_beams(workdir):
    (workdir / "lm.json").write_text(json.dumps(TOY_LM))
    make_examples(workdir / "u.jsonl", n=1)
    code = run(
        ["decode", "--lm", "lm.json", "--examples", "u.jsonl", "--strategy",
         "poly", "--poly-from-beams", "--runs", "2", "--beams", "4",
         "--rep-penalty", "1.0", "--max-len", "6", "--seed", "0",
         "--out", "g.jsonl", "--report", "r.json"]
    )
    assert code == 0
    rows = [rec for _, rec in read_jsonl(workdir / "g.jsonl")]
    # top beams parsed as numbered lists: "(1) left" -> ["left"], ...
    assert rows[0]["runs"][0] == ["left"]
    assert len(rows[0]["runs"]) == 2


def test_report_to_stdout(workdir, capsys):
    make_examples(workdir / "u.jsonl", n=1)
    assert run(["datastats", "--examples", "u.jsonl"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out)["tool"] == "datastats"
