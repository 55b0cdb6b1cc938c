"""Command-line interface: normalize, eval, diversity, datastats, stats,
and decode subcommands, all emitting machine-readable JSON reports.

Exit codes: 0 success, 1 validation error (bad input data), 2 I/O error.
Every report echoes the effective configuration (defaults made explicit) and
is byte-identical across reruns with the same inputs and seeds.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys
from collections import Counter

from . import __version__
from .core import (
    EvalConfig,
    GenerationMode,
    example_to_record,
    make_generation_set,
    validate_example,
    validate_generation_set,
)
from .dataio import (
    RAW_SOURCES,
    load_clusters,
    load_embeddings,
    normalize,
    read_jsonl,
    validate_raw_record,
    write_jsonl,
)
from .decode import (
    BeamConfig,
    beam_search,
    diverse_beam_search,
    load_ngram_lm,
    parse_polymorphic,
    sample_runs,
)
from .diversity import bcubed, cluster_greedy, diversity_report, ngram_uniqueness
from .errors import (
    ExcludedType,
    PolyevalError,
    UnparseableSequence,
    ValidationError,
)
from .report import make_report, write_report
from .scoring import corpus_score, top1_corpus
from .stats import (
    AnnotationTable,
    binarize,
    chi_square_proportions,
    cohen_kappa,
    gwet_ac1,
    paired_t_bonferroni,
    resolve_and_repeat,
)
from .textmetrics import load_external_scores, make_metric

BLEU_NOTES = (
    "sentence-level; lowercased whitespace tokens; n=1..4 uniform weights; "
    "add-one smoothing for zero precisions at n>=2; brevity penalty "
    "exp(min(0, 1-|r|/|c|)); reported x100, raw values in [0,1]"
)


def _resolve_threads(requested: str) -> int:
    if requested == "auto":
        return os.cpu_count() or 1
    count = int(requested)
    if count < 1:
        raise ValidationError("--threads must be >= 1")
    return count


def _default_threads() -> str:
    return os.environ.get("POLYEVAL_THREADS", "auto")


def _stable_salt(example_id: str) -> int:
    return int.from_bytes(hashlib.sha256(example_id.encode("utf-8")).digest()[:8], "big")


def _load_examples(path: str) -> list:
    return [validate_example(record) for _, record in read_jsonl(path)]


def _load_generations(path: str) -> tuple[dict, int]:
    generations = {}
    dropped = 0
    for _, record in read_jsonl(path):
        gen_set, n = validate_generation_set(record)
        if gen_set.example_id in generations:
            raise ValidationError(
                f"duplicate generation record for example {gen_set.example_id!r}"
            )
        generations[gen_set.example_id] = gen_set
        dropped += n
    return generations, dropped


# --- normalize --------------------------------------------------------------


def _cmd_normalize(args) -> int:
    records = []
    excluded = 0
    by_type: Counter[str] = Counter()
    for _, raw in read_jsonl(args.infile):
        record = validate_raw_record(raw, default_source=args.source)
        try:
            example = normalize(record, seed=args.seed)
        except ExcludedType:
            excluded += 1
            continue
        by_type[example.inference_type.value] += 1
        records.append(example_to_record(example))
    write_jsonl(args.out, records)
    report = make_report(
        "normalize",
        {
            "in": args.infile,
            "source": args.source,
            "out": args.out,
            "seed": args.seed,
        },
        {
            "examples": len(records),
            "excluded": excluded,
            "by_type": dict(sorted(by_type.items())),
        },
        warnings=[],
    )
    write_report(report, args.report)
    return 0


# --- eval -------------------------------------------------------------------


def _scale_bleu(body: dict) -> dict:
    raw = {
        "overall": body["overall"],
        "per_type": dict(body["per_type"]),
        "macro": body["macro"],
    }
    body["overall"] = body["overall"] * 100.0
    body["per_type"] = {k: v * 100.0 for k, v in body["per_type"].items()}
    body["macro"] = body["macro"] * 100.0
    body["raw"] = raw
    return body


def _cmd_eval(args) -> int:
    examples = _load_examples(args.examples)
    generations, dropped = _load_generations(args.generations)
    threads = _resolve_threads(args.threads)

    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    external = load_external_scores(args.external_scores) if args.external_scores else None
    clusters = load_clusters(args.clusters) if args.clusters else None

    metric_id = args.metric
    if metric_id == "external":
        if external is None:
            raise ValidationError("--metric external requires --external-scores")
        metric = None
    else:
        metric = make_metric(
            "embed_cosine" if metric_id == "embed" else metric_id, embeddings
        )
        external = None

    config = EvalConfig(
        top_k=args.topk,
        selection={"max": "maximum"}.get(args.selection, args.selection),
        matching={"max": "maximum"}.get(args.matching, args.matching),
        cluster_constrained=args.clusters is not None and args.topk > 1,
        coverage_cap=not args.no_coverage_cap,
        metric_id=metric_id,
        seed=args.seed,
    )

    warnings = []
    if dropped:
        warnings.append(f"dropped_duplicate_outputs:{dropped}")

    if config.top_k == 1:
        result = top1_corpus(
            examples, generations, metric, config.selection,
            external=external, threads=threads,
        )
        body = {
            "overall": result.overall,
            "per_type": result.per_type,
            "macro": result.macro,
            "n_examples": result.n_examples,
            "per_example": [
                {"example_id": eid, "score": score}
                for eid, score in result.per_example
            ],
        }
    else:
        result = corpus_score(
            examples, generations, config, metric,
            clusters=clusters, external=external, threads=threads,
        )
        body = {
            "overall": result.overall,
            "per_type": result.per_type,
            "macro": result.macro,
            "n_examples": result.n_examples,
            "n_references": result.n_references,
            "per_example": [
                {
                    "example_id": s.example_id,
                    "score": s.score,
                    "coverage": s.coverage,
                    "n_outs": s.n_outs,
                    "n_refs": s.n_refs,
                    "contribution": s.contribution,
                }
                for s in result.example_scores
            ],
        }
    if metric_id == "bleu":
        body = _scale_bleu(body)
        body["metric_notes"] = BLEU_NOTES

    report = make_report(
        "eval",
        {
            "examples": args.examples,
            "generations": args.generations,
            "metric": metric_id,
            "topk": args.topk,
            "selection": config.selection,
            "matching": config.matching,
            "clusters": args.clusters,
            "coverage_cap": config.coverage_cap,
            "embeddings": args.embeddings,
            "external_scores": args.external_scores,
            "seed": args.seed,
            "threads": args.threads,
        },
        body,
        warnings,
    )
    write_report(report, args.report)
    return 0


# --- diversity ---------------------------------------------------------------


def _cmd_diversity(args) -> int:
    generations, dropped = _load_generations(args.generations)
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    gold = load_clusters(args.gold_clusters) if args.gold_clusters else None

    outputs_by_example = {}
    for example_id in sorted(generations):
        outputs = list(generations[example_id].runs[0])
        if args.topk:
            outputs = outputs[: args.topk]
        outputs_by_example[example_id] = outputs

    if embeddings is not None:
        clusterings = {
            eid: cluster_greedy(outs, embeddings, tau=args.tau)
            for eid, outs in outputs_by_example.items()
        }
    elif gold is not None:
        clusterings = {eid: gold[eid] for eid in outputs_by_example}
    else:
        raise ValidationError("diversity needs --embeddings or --gold-clusters")

    summary = diversity_report(outputs_by_example, clusterings)
    body = {
        "avg_clusters": summary.avg_clusters,
        "pct_unique": summary.pct_unique,
        "avg_words": summary.avg_words,
        "n_examples": summary.n_examples,
        "per_example": [
            {"example_id": eid, "n_clusters": len(clusterings[eid])}
            for eid in sorted(clusterings)
        ],
    }
    if gold is not None and embeddings is not None:
        rows = []
        for eid in sorted(outputs_by_example):
            if eid not in gold:
                raise ValidationError(f"no gold clustering for example {eid!r}")
            p, r, f1 = bcubed(clusterings[eid], gold[eid])
            rows.append((p, r, f1))
        body["bcubed"] = {
            "precision": sum(p for p, _, _ in rows) / len(rows),
            "recall": sum(r for _, r, _ in rows) / len(rows),
            "f1": sum(f for _, _, f in rows) / len(rows),
        }
    if args.out_clusters:
        write_jsonl(
            args.out_clusters,
            (
                {"example_id": eid, "clusters": [list(g) for g in clusterings[eid]]}
                for eid in sorted(clusterings)
            ),
        )

    warnings = []
    if dropped:
        warnings.append(f"dropped_duplicate_outputs:{dropped}")
    report = make_report(
        "diversity",
        {
            "generations": args.generations,
            "embeddings": args.embeddings,
            "tau": args.tau,
            "topk": args.topk,
            "gold_clusters": args.gold_clusters,
            "out_clusters": args.out_clusters,
        },
        body,
        warnings,
    )
    write_report(report, args.report)
    return 0


# --- datastats ----------------------------------------------------------------


def _cmd_datastats(args) -> int:
    examples = _load_examples(args.examples)
    table = ngram_uniqueness(examples)
    overall = table.pop("_overall")
    report = make_report(
        "datastats",
        {"examples": args.examples},
        {"per_type": table, "overall": overall},
        warnings=[],
    )
    write_report(report, args.report)
    return 0


# --- stats ---------------------------------------------------------------------


def _load_annotations(path: str) -> dict:
    """rows[(task, system)][item_id] -> {annotator: label}"""
    rows: dict = {}
    for lineno, record in read_jsonl(path):
        try:
            task = str(record["task"])
            system = str(record["system"])
            item_id = str(record["item_id"])
            annotator = str(record["annotator"])
            label = str(record["label"])
        except KeyError as exc:
            raise ValidationError(f"{path}:{lineno}: missing field {exc}") from None
        rows.setdefault((task, system), {}).setdefault(item_id, {})[annotator] = label
    if not rows:
        raise ValidationError(f"{path}: no annotation rows")
    return rows


def _paired_items(items: dict) -> AnnotationTable:
    table = []
    for item_id in sorted(items):
        labels = items[item_id]
        if set(labels) != {"A", "B"}:
            raise ValidationError(
                f"item {item_id!r} needs exactly annotators A and B, has {sorted(labels)}"
            )
        table.append((item_id, labels["A"], labels["B"]))
    return AnnotationTable(tuple(table))


def _cmd_stats_agree(args) -> int:
    rows = _load_annotations(args.infile)
    body: dict = {}
    for task in sorted({task for task, _ in rows}):
        task_items: dict = {}
        for (t, system), items in rows.items():
            if t != task:
                continue
            for item_id, labels in items.items():
                task_items[f"{system}:{item_id}"] = labels
        pairs = [(a, b) for _, a, b in binarize(_paired_items(task_items))]
        body[task] = {
            "ac1": gwet_ac1(pairs),
            "kappa": cohen_kappa(pairs),
            "n_items": len(pairs),
        }
    report = make_report("stats.agree", {"in": args.infile}, {"tasks": body}, [])
    write_report(report, args.report)
    return 0


def _cmd_stats_mcnemar(args) -> int:
    rows = _load_annotations(args.infile)
    body: dict = {}
    for task in sorted({task for task, _ in rows}):
        try:
            x_items = rows[(task, "X")]
            y_items = rows[(task, "Y")]
        except KeyError:
            raise ValidationError(
                f"task {task!r} needs annotations for both systems X and Y"
            ) from None
        shared = sorted(set(x_items) & set(y_items))
        if not shared:
            raise ValidationError(f"task {task!r} has no items shared by X and Y")
        x_table = binarize(
            _paired_items({item_id: x_items[item_id] for item_id in shared})
        )
        y_table = binarize(
            _paired_items({item_id: y_items[item_id] for item_id in shared})
        )
        result = resolve_and_repeat(
            [(a, b) for _, a, b in x_table],
            [(a, b) for _, a, b in y_table],
            repeats=args.repeats,
            seed=args.seed,
            alpha=args.alpha,
        )
        body[task] = {
            "mean_rate_x": result.mean_rate_x,
            "mean_rate_y": result.mean_rate_y,
            "mean_discordance": result.mean_discordance,
            "significant": result.significant,
            "repeats": result.repeats,
            "alpha": result.alpha,
            "p_max": max(result.p_values),
            "p_min": min(result.p_values),
            "n_items": len(shared),
        }
    report = make_report(
        "stats.mcnemar",
        {
            "in": args.infile,
            "repeats": args.repeats,
            "seed": args.seed,
            "alpha": args.alpha,
        },
        {"tasks": body},
        [],
    )
    write_report(report, args.report)
    return 0


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(f"{flag} must be a comma-separated integer list") from None


def _cmd_stats_prop(args) -> int:
    successes = _parse_int_list(args.successes, "--successes")
    trials = _parse_int_list(args.trials, "--trials")
    statistic, p_value = chi_square_proportions(successes, trials)
    report = make_report(
        "stats.prop",
        {"successes": successes, "trials": trials, "alpha": args.alpha},
        {
            "statistic": statistic,
            "p_value": p_value,
            "df": len(trials) - 1,
            "significant": p_value < args.alpha,
        },
        [],
    )
    write_report(report, args.report)
    return 0


def _cmd_stats_ttest(args) -> int:
    vectors = []
    for lineno, record in read_jsonl(args.scores):
        if "name" not in record or "values" not in record:
            raise ValidationError(f"{args.scores}:{lineno}: need name and values")
        vectors.append((str(record["name"]), [float(v) for v in record["values"]]))
    results = paired_t_bonferroni(vectors, m=args.m)
    body = {
        "m": args.m if args.m is not None else len(results),
        "pairs": [
            {
                "x": r.name_x,
                "y": r.name_y,
                "t": r.t,
                "p_value": r.p_value,
                "p_adjusted": r.p_adjusted,
                "significant": r.p_adjusted < args.alpha,
            }
            for r in results
        ],
    }
    report = make_report(
        "stats.ttest",
        {"scores": args.scores, "m": args.m, "alpha": args.alpha},
        body,
        [],
    )
    write_report(report, args.report)
    return 0


# --- decode -----------------------------------------------------------------


def _parse_sequences_as_runs(example_id: str, sequences) -> tuple[object, list[str]]:
    """One polymorphic run per decoded sequence."""
    run_lists = []
    warnings = []
    for seq in sequences:
        if not seq.finished:
            warnings.append("max_len_without_end")
        try:
            parsed = parse_polymorphic(seq.text)
            warnings.extend(parsed.warnings)
            items = list(parsed.items)
        except UnparseableSequence:
            items = []
        if not items:
            items = [seq.text]
            warnings.append("unparseable_fallback")
        run_lists.append(items)
    gen_set, dropped = make_generation_set(
        example_id, GenerationMode.POLYMORPHIC, run_lists
    )
    if dropped:
        warnings.append(f"dropped_duplicates:{dropped}")
    return gen_set, warnings


def _cmd_decode(args) -> int:
    lm = load_ngram_lm(args.lm)
    examples = _load_examples(args.examples)
    rep_default = 5.0 if args.strategy == "poly" else 1.0
    rep_penalty = rep_default if args.rep_penalty is None else args.rep_penalty

    records = []
    warning_counts: Counter[str] = Counter()
    for example in examples:
        if args.strategy == "beam":
            config = BeamConfig(
                beams=args.beams,
                groups=1,
                repetition_penalty=rep_penalty,
                max_len=args.max_len,
            )
            sequences = beam_search(lm, config)
            mode = GenerationMode.MONOMORPHIC_BEAM
        elif args.strategy == "dbs":
            config = BeamConfig(
                beams=args.beams,
                groups=args.groups,
                diversity_penalty=args.penalty,
                repetition_penalty=rep_penalty,
                max_len=args.max_len,
            )
            sequences = diverse_beam_search(lm, config)
            mode = GenerationMode.MONOMORPHIC_DIVERSE_BEAM
        else:  # poly
            if args.poly_from_beams:
                config = BeamConfig(
                    beams=max(args.beams, args.runs),
                    groups=1,
                    repetition_penalty=rep_penalty,
                    max_len=args.max_len,
                )
                top = beam_search(lm, config, k=args.runs)
                gen_set, warnings = _parse_sequences_as_runs(example.example_id, top)
            else:
                gen_set, warnings = sample_runs(
                    lm,
                    example_id=example.example_id,
                    mode=GenerationMode.POLYMORPHIC,
                    runs=args.runs,
                    temperature=args.temperature,
                    seed=args.seed,
                    salt=_stable_salt(example.example_id),
                    max_len=args.max_len,
                    repetition_penalty=rep_penalty,
                )
            warning_counts.update(warnings)
            records.append(
                {
                    "example_id": gen_set.example_id,
                    "mode": gen_set.mode.value,
                    "runs": [list(run) for run in gen_set.runs],
                }
            )
            continue
        warning_counts["max_len_without_end"] += sum(
            1 for s in sequences if not s.finished
        )
        gen_set, dropped = make_generation_set(
            example.example_id, mode, [[s.text for s in sequences]]
        )
        if dropped:
            warning_counts["dropped_duplicates"] += dropped
        records.append(
            {
                "example_id": gen_set.example_id,
                "mode": gen_set.mode.value,
                "runs": [list(run) for run in gen_set.runs],
            }
        )
    write_jsonl(args.out, records)
    report = make_report(
        "decode",
        {
            "lm": args.lm,
            "examples": args.examples,
            "strategy": args.strategy,
            "beams": args.beams,
            "groups": args.groups,
            "penalty": args.penalty,
            "rep_penalty": rep_penalty,
            "runs": args.runs,
            "temperature": args.temperature,
            "max_len": args.max_len,
            "seed": args.seed,
            "poly_from_beams": args.poly_from_beams,
            "out": args.out,
        },
        {"examples": len(records)},
        warnings=[f"{name}:{count}" for name, count in sorted(warning_counts.items())],
    )
    write_report(report, args.report)
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyeval",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "normalize",
        help="convert raw source records to the unified example format",
        description=(
            "Raw JSONL: {example_id, source?, utterances: [{speaker, text}], "
            "type_label, inferences: [...]}. Output JSONL: {example_id, "
            "dialogue: [{speaker, text}], type, question, answer_prefix, "
            "references}."
        ),
    )
    p.add_argument("--in", dest="infile", required=True, help="raw records (JSONL)")
    p.add_argument("--source", required=True, choices=RAW_SOURCES)
    p.add_argument("--out", required=True, help="unified examples (JSONL)")
    p.add_argument("--seed", type=int, default=0, help="seed for A/B tag assignment")
    p.add_argument("--report", default=None, help="report path (default: stdout)")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser(
        "eval",
        help="score generations against reference sets",
        description=(
            "Generations JSONL: {example_id, mode, runs: [[...], ...]}. "
            "External scores JSONL: {example_id, scores: [[...], ...]} "
            "(outputs x references, row-major). Clusters JSONL: {example_id, "
            "clusters: [[output_index, ...], ...]}."
        ),
    )
    p.add_argument("--examples", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--metric", default="bleu", choices=("bleu", "embed", "external"))
    p.add_argument("--topk", type=int, default=1)
    p.add_argument("--selection", default="maximum", choices=("maximum", "max", "order"))
    p.add_argument(
        "--matching", default="bipartite", choices=("bipartite", "maximum", "max")
    )
    p.add_argument("--clusters", default=None, help="cluster-constrained evaluation")
    p.add_argument("--no-coverage-cap", action="store_true")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--external-scores", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", default=_default_threads())
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("diversity", help="cluster outputs and measure diversity")
    p.add_argument("--generations", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--tau", type=float, default=0.8)
    p.add_argument("--topk", type=int, default=0, help="truncate outputs (0 = all)")
    p.add_argument("--gold-clusters", default=None)
    p.add_argument("--out-clusters", default=None, help="write predicted clusters")
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_diversity)

    p = sub.add_parser("datastats", help="corpus n-gram uniqueness statistics")
    p.add_argument("--examples", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_datastats)

    p = sub.add_parser(
        "stats",
        help="annotation agreement and significance tests",
        description=(
            "Annotations JSONL: {item_id, task: reasonability|novelty, "
            "system: X|Y, annotator: A|B, label}."
        ),
    )
    stats_sub = p.add_subparsers(dest="stats_command", required=True)

    q = stats_sub.add_parser("agree", help="Gwet AC1 and Cohen's kappa per task")
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--report", default=None)
    q.set_defaults(func=_cmd_stats_agree)

    q = stats_sub.add_parser(
        "mcnemar", help="matched-pairs test with random disagreement resolution"
    )
    q.add_argument("--in", dest="infile", required=True)
    q.add_argument("--repeats", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--alpha", type=float, default=0.05)
    q.add_argument("--report", default=None)
    q.set_defaults(func=_cmd_stats_mcnemar)

    q = stats_sub.add_parser("prop", help="pooled chi-square proportions test")
    q.add_argument("--successes", required=True, help="comma list, e.g. 93,75")
    q.add_argument("--trials", required=True, help="comma list, e.g. 100,100")
    q.add_argument("--alpha", type=float, default=0.05)
    q.add_argument("--report", default=None)
    q.set_defaults(func=_cmd_stats_prop)

    q = stats_sub.add_parser(
        "ttest", help="Bonferroni-corrected paired t-tests over score vectors"
    )
    q.add_argument(
        "--scores", required=True, help="JSONL rows {name, values: [...]}"
    )
    q.add_argument("--m", type=int, default=None, help="comparisons (default: #pairs)")
    q.add_argument("--alpha", type=float, default=0.05)
    q.add_argument("--report", default=None)
    q.set_defaults(func=_cmd_stats_ttest)

    p = sub.add_parser(
        "decode",
        help="generate outputs from a toy LM config",
        description=(
            "LM config JSON: {order, vocab, end_token, cond: [{context: "
            "[...], probs: {token: p}}, ...]}."
        ),
    )
    p.add_argument("--lm", required=True)
    p.add_argument("--examples", required=True)
    p.add_argument("--strategy", required=True, choices=("beam", "dbs", "poly"))
    p.add_argument("--beams", type=int, default=10)
    p.add_argument("--groups", type=int, default=10)
    p.add_argument("--penalty", type=float, default=0.5)
    p.add_argument(
        "--rep-penalty", type=float, default=None,
        help="repetition penalty (default 1.0; 5.0 for poly)",
    )
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--max-len", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--poly-from-beams", action="store_true",
        help="derive polymorphic runs from top beams instead of sampling",
    )
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_decode)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PolyevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        name = getattr(exc, "filename", None)
        where = f" ({name})" if name else ""
        print(f"i/o error: {exc}{where}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))
