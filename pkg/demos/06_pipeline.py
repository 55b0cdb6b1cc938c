"""The full command-line pipeline on the bundled fixture corpus.

normalize -> decode (three strategies) -> eval (top-1 and top-5 in several
matching modes) -> diversity -> datastats, all through the `polyeval` CLI,
in a scratch directory.  Every report is deterministic JSON.
"""
import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from pipeline_steps import INPUT_FILES, PIPELINE, run_pipeline  # noqa: E402

fixtures = ROOT / "tests" / "fixtures"

with tempfile.TemporaryDirectory() as tmp:
    workdir = Path(tmp)
    for name in INPUT_FILES:
        shutil.copy(fixtures / name, workdir / name)

    print("running steps:")
    for (name, _), (_, code) in zip(PIPELINE, run_pipeline(workdir)):
        print(f"  {name:<22} exit {code}")

    print("\nheadline numbers (BLEU reported x100):")
    for report_name, label in [
        ("report_eval_top1_max.json", "top-1, maximum selection (beam)"),
        ("report_eval_top1_order.json", "top-1, order selection (list model)"),
        ("report_eval_top5_bipartite.json", "top-5, bipartite matching"),
        ("report_eval_top5_max.json", "top-5, maximum matching"),
        ("report_eval_top5_cluster.json", "top-5, cluster-constrained"),
    ]:
        report = json.loads((workdir / report_name).read_text())
        print(f"  {label:<38} overall = {report['overall']:.3f}")

    diversity = json.loads((workdir / "report_diversity.json").read_text())
    print(f"\ndiversity: {diversity['avg_clusters']:.2f} clusters/example, "
          f"{diversity['pct_unique']:.0f}% unique outputs, "
          f"{diversity['avg_words']:.1f} words/output")

    stats = json.loads((workdir / "report_datastats.json").read_text())
    overall = stats["overall"]
    print(f"corpus: {overall['examples']} examples, "
          f"{overall['inferences_total']} references, "
          f"mean {overall['inferences_mean']:.2f} refs/example")
