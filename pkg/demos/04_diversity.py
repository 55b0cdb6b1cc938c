"""Measuring output diversity by semantic clustering.

Outputs are grouped greedily by embedding cosine: an output joins the first
cluster containing a sufficiently similar member, else starts its own.
B-cubed precision/recall compares a predicted clustering against a gold one.
"""
import numpy as np

from polyeval import EmbeddingStore, bcubed, cluster_greedy, ngram_uniqueness, text_key
from polyeval.core import Example, InferenceType, Turn

outputs = [
    "they feel proud",
    "they are very proud",
    "they want to rest",
    "they need a nap",
    "they plan a trip",
]
# toy embeddings: direction encodes the meaning group
directions = {
    "they feel proud": [1.0, 0.05, 0.0],
    "they are very proud": [1.0, 0.0, 0.05],
    "they want to rest": [0.0, 1.0, 0.05],
    "they need a nap": [0.05, 1.0, 0.0],
    "they plan a trip": [0.0, 0.05, 1.0],
}
store = EmbeddingStore(
    {text_key(t): np.asarray(v, dtype=float) for t, v in directions.items()}
)

clusters = cluster_greedy(outputs, store, tau=0.8)
print("greedy clusters at tau=0.8:")
for group in clusters:
    print("  ", [outputs[i] for i in group])
print("unique-information count:", len(clusters), "of", len(outputs), "outputs")

gold = [[0, 1], [2, 3], [4]]
p, r, f1 = bcubed(clusters, gold)
print(f"b-cubed vs gold: precision={p:.3f} recall={r:.3f} f1={f1:.3f}")

# corpus-level reference statistics: vocabulary spread and repetition
def ex(example_id, refs):
    return Example(
        example_id,
        (Turn("Listener (A)", "hi"), Turn("Speaker (B)", "hello")),
        InferenceType.DESIRE,
        tuple(refs),
    )

stats = ngram_uniqueness(
    [
        ex("e1", ["they feel proud", "they want rest", "they plan a trip"]),
        ex("e2", ["they bake bread", "they bake bread"]),
    ]
)
row = stats["Desire"]
print("\nreference statistics for the Desire examples:")
print(f"  mean words/inference : {row['words']:.2f}")
print(f"  unique unigram %     : {row['u1_pct']:.1f}")
print(f"  unique inference %   : {row['ul_pct']:.1f} (repetition in e2 shows here)")
