"""Scoring a SET of generated texts against a SET of references.

A model that produces several outputs for one prompt should be rewarded for
covering distinct references, not for rephrasing one idea five times.  The
set score pairs outputs to references one-to-one (an optimal assignment) and
averages the matched metric values.
"""
import numpy as np

from polyeval import (
    EvalConfig,
    Example,
    InferenceType,
    Turn,
    corpus_score,
    coverage,
    make_generation_set,
    polyagg,
    solve_max,
)
from polyeval.textmetrics import bleu, exact_match, score_matrix

references = [
    "they feel proud of the clean kitchen",
    "they want to rest after the effort",
    "they plan to cook a big dinner",
]
outputs = [
    "they are proud of the spotless kitchen",
    "they want to take a long rest",
]

print("score matrix (BLEU), outputs x references:")
matrix = score_matrix(outputs, references, bleu)
print(np.round(matrix, 3))

assignment = solve_max(matrix)
print("\noptimal one-to-one assignment:", assignment.pairs)
print("assigned mean:", round(polyagg(outputs, references, bleu), 4))

# Two outputs cannot cover three references; the coverage ratio discounts
# under-generation (capped at 1 so over-generation is not rewarded).
c = coverage(len(outputs), len(references))
print("coverage moderator:", round(c, 4))

# At the corpus level each example's (set score * coverage) is weighted by
# its reference count: examples with richer reference sets count for more.
def ex(example_id, refs, itype):
    return Example(
        example_id,
        (Turn("Listener (A)", "hi"), Turn("Speaker (B)", "hello")),
        itype,
        tuple(refs),
    )

examples = [
    ex("high_diversity", ["a", "b", "c", "d"], InferenceType.DESIRE),
    ex("low_diversity", ["e"], InferenceType.REACTION),
]
generations = {
    "high_diversity": make_generation_set(
        "high_diversity", "polymorphic", [["a", "b", "x"]]
    )[0],
    "low_diversity": make_generation_set("low_diversity", "polymorphic", [["e"]])[0],
}
result = corpus_score(
    examples, generations, EvalConfig(top_k=5, matching="bipartite"), exact_match
)
print("\nper-example contributions (score * coverage * n_refs):")
for s in result.example_scores:
    print(f"  {s.example_id}: score={s.score:.3f} C={s.coverage:.3f} "
          f"n_refs={s.n_refs} -> {s.contribution:.3f}")
print("reference-weighted corpus score:", round(result.overall, 4))
print("per type:", {k: round(v, 4) for k, v in result.per_type.items()})
