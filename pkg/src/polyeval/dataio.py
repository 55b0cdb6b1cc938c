"""File formats and the normalization pipeline.

Converts heterogeneous source records into the unified example format:
consecutive same-speaker utterances are merged, Speaker/Listener tags are
assigned backwards from the terminal utterance, participant names are folded
into the tags as "Speaker (A)", and participant names inside inference texts
are replaced by "the speaker".

File formats (all JSONL, one record per line):
  examples:    {"example_id", "dialogue": [{"speaker", "text"}], "type",
                "question", "answer_prefix", "references": [...]}
  generations: {"example_id", "mode", "runs": [[...], ...]}
  embeddings:  {"key": <sha256 hex>, "vector": [...]}  (or "text" instead of
                "key"; the key is then computed at load)
  clusters:    {"example_id", "clusters": [[output_index, ...], ...]}
  raw records: {"example_id", "source", "utterances": [{"speaker", "text"}],
                "type_label", "inferences": [...]}
"""
from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import (
    Example,
    GenerationMode,
    GenerationSet,
    InferenceType,
    LISTENER,
    SPEAKER,
    Turn,
    dumps_canonical,
    normalize_text,
)
from .errors import (
    DimensionMismatch,
    ExcludedType,
    InsufficientRuns,
    MissingEmbedding,
    NonFiniteEntry,
    UnknownSourceLabel,
    ValidationError,
)

RAW_SOURCES = ("convosense", "comfact", "cicero", "reflect", "generic")


class _Excluded:
    """Sentinel for source labels that are dropped rather than mapped."""

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return "Excluded"


EXCLUDED = _Excluded()

# Source label -> canonical inference type.  Cause/effect subtypes from the
# source datasets collapse into single Cause/Effect/Prerequisite types;
# isBefore/isAfter carry temporal order without causation and are excluded.
TYPE_SYNTHESIS: dict[str, InferenceType | _Excluded] = {
    "isBefore": EXCLUDED,
    "isAfter": EXCLUDED,
    "Causes": InferenceType.EFFECT,
    "xEffect": InferenceType.EFFECT,
    "oEffect": InferenceType.EFFECT,
    "SubsequentEvents": InferenceType.EFFECT,
    "Subsequent Events": InferenceType.EFFECT,
    "SubsequentEvent": InferenceType.EFFECT,
    "Subsequent Event": InferenceType.EFFECT,
    "Consequences": InferenceType.EFFECT,
    "xReason": InferenceType.CAUSE,
    "xNeed": InferenceType.PREREQUISITE,
    "Prerequisites": InferenceType.PREREQUISITE,
    "xIntent": InferenceType.MOTIVATION,
    "xAttr": InferenceType.ATTRIBUTE,
    "xReact": InferenceType.REACTION,
    "oReact": InferenceType.REACTION_O,
    "xWant": InferenceType.DESIRE,
    "oWant": InferenceType.DESIRE_O,
    "HasSubEvent": InferenceType.CONSTITUENTS,
    "HinderedBy": InferenceType.OBSTACLE,
}
# Canonical names map to themselves (already-unified / generic sources).
TYPE_SYNTHESIS.update({t.value: t for t in InferenceType})


def map_type(label: str) -> InferenceType | _Excluded:
    """Map a source-specific type label to its canonical type (or EXCLUDED)."""
    try:
        return TYPE_SYNTHESIS[label]
    except KeyError:
        raise UnknownSourceLabel(f"unknown source type label {label!r}") from None


@dataclass(frozen=True)
class RawRecord:
    example_id: str
    source: str
    utterances: tuple[tuple[str, str], ...]  # (speaker_name, text)
    type_label: str
    inferences: tuple[str, ...]


def validate_raw_record(raw: dict, default_source: str = "generic") -> RawRecord:
    example_id = str(raw.get("example_id", "")).strip()
    if not example_id:
        raise ValidationError("raw record is missing example_id")
    source = str(raw.get("source", default_source))
    if source not in RAW_SOURCES:
        raise ValidationError(f"example {example_id!r}: unknown source {source!r}")
    utterances = []
    for entry in raw.get("utterances", []):
        name = normalize_text(str(entry.get("speaker", "")))
        text = normalize_text(str(entry.get("text", "")))
        if not text:
            raise ValidationError(f"example {example_id!r}: empty utterance text")
        utterances.append((name, text))
    if not utterances:
        raise ValidationError(f"example {example_id!r}: no utterances")
    inferences = tuple(normalize_text(str(i)) for i in raw.get("inferences", []))
    return RawRecord(
        example_id,
        source,
        tuple(utterances),
        str(raw.get("type_label", "")),
        inferences,
    )


_TAGGED_NAME = re.compile(r"^(?:Speaker|Listener) \((.+)\)$")


def _participant_key(name: str) -> str:
    """Identity of a participant, seeing through an already-applied tag."""
    m = _TAGGED_NAME.match(name)
    return m.group(1) if m else name


def _assign_letters(participants: list[str], example_id: str, seed: int) -> dict[str, str]:
    """Map participant identities to 'A'/'B'.

    Identities that already are single letters are kept.  Otherwise the
    assignment is drawn from a PRNG keyed by (seed, example_id) so that runs
    are reproducible.
    """
    if len(participants) > 2:
        raise ValidationError(
            f"example {example_id!r}: more than two participants: {participants}"
        )
    if all(p in ("A", "B") for p in participants):
        return {p: p for p in participants}
    letters = ["A", "B"]
    rng = random.Random(f"{seed}:{example_id}")
    rng.shuffle(letters)
    return {p: letters[i] for i, p in enumerate(participants)}


def _replace_names(text: str, names: Iterable[str]) -> str:
    """Replace whole-word, case-insensitive participant names by "the speaker".

    Single-character names and the role words themselves are left alone; only
    real names (as in sources that use them) are folded.
    """
    for name in names:
        if len(name) < 2 or name.lower() in ("speaker", "listener"):
            continue
        pattern = re.compile(
            r"\b" + r"\s+".join(re.escape(tok) for tok in name.split()) + r"\b",
            re.IGNORECASE,
        )
        text = pattern.sub("the speaker", text)
    return normalize_text(text)


def normalize(raw: RawRecord, seed: int = 0) -> Example:
    """Convert a raw source record into a unified Example.

    Idempotent on already-unified records: existing "Speaker (A)"-style names
    are recognized and re-tagged identically.
    """
    mapped = map_type(raw.type_label)
    if mapped is EXCLUDED:
        raise ExcludedType(
            f"example {raw.example_id!r}: type label {raw.type_label!r} is excluded"
        )

    # Merge consecutive utterances from the same participant.  Records with no
    # speaker names at all are assumed to already alternate.
    named = [bool(name) for name, _ in raw.utterances]
    if any(named) and not all(named):
        raise ValidationError(
            f"example {raw.example_id!r}: mix of named and unnamed utterances"
        )
    merged: list[tuple[str, str]] = []  # (participant, text)
    for idx, (name, text) in enumerate(raw.utterances):
        participant = _participant_key(name) if name else f"#{idx % 2}"
        if merged and merged[-1][0] == participant:
            merged[-1] = (participant, merged[-1][1] + " " + text)
        else:
            merged.append((participant, text))

    participants = list(dict.fromkeys(p for p, _ in merged))
    letters = _assign_letters(participants, raw.example_id, seed)

    turns = []
    last = len(merged) - 1
    for idx, (participant, text) in enumerate(merged):
        role = SPEAKER if (last - idx) % 2 == 0 else LISTENER
        turns.append(Turn(f"{role} ({letters[participant]})", text))

    original_names = [p for p in participants if not p.startswith("#")]
    references = tuple(
        _replace_names(inf, original_names) for inf in raw.inferences if inf
    )
    if not references:
        raise ValidationError(f"example {raw.example_id!r}: no inferences")

    return Example(raw.example_id, tuple(turns), mapped, references)


def example_to_raw_record(example: Example) -> RawRecord:
    """View a unified Example as a RawRecord (for re-normalization)."""
    return RawRecord(
        example.example_id,
        "generic",
        tuple((t.speaker_tag, t.text) for t in example.dialogue),
        example.inference_type.value,
        example.references,
    )


def accumulate_runs(
    generation_set: GenerationSet,
    setting: str,
    paired_polymorphic: GenerationSet | None = None,
) -> list[str]:
    """Flatten a generation set's runs for the lowN / highN regimes.

    lowN uses run 1 only; highN concatenates runs 1-3 of a polymorphic set,
    deduplicated in order.  Monomorphic sets contribute their beams, truncated
    to the size of the paired polymorphic set's accumulation when one is
    supplied.
    """
    if setting not in ("lowN", "highN"):
        raise ValidationError(f"unknown accumulation setting {setting!r}")
    gs = generation_set
    if gs.mode is GenerationMode.POLYMORPHIC:
        if setting == "lowN":
            return list(gs.runs[0])
        if len(gs.runs) < 3:
            raise InsufficientRuns(
                f"example {gs.example_id!r}: highN needs 3 polymorphic runs, "
                f"got {len(gs.runs)}"
            )
        seen: set[str] = set()
        outputs = []
        for run in gs.runs[:3]:
            for text in run:
                if text not in seen:
                    seen.add(text)
                    outputs.append(text)
        return outputs
    outputs = list(gs.runs[0])
    if paired_polymorphic is not None:
        k = len(accumulate_runs(paired_polymorphic, setting))
        outputs = outputs[:k]
    return outputs


# --- embeddings -----------------------------------------------------------


def text_key(text: str) -> str:
    """SHA-256 hex key of the normalized UTF-8 text."""
    return hashlib.sha256(normalize_text(text).encode("utf-8")).hexdigest()


class EmbeddingStore:
    """Immutable map from text keys to fixed-dimension vectors."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        dims = {v.shape[0] for v in vectors.values()}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed embedding dimensions: {sorted(dims)}")
        if dims and next(iter(dims)) < 2:
            raise ValidationError("embedding dimension must be >= 2")
        self._vectors = vectors
        self.dim = next(iter(dims)) if dims else 0

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, text: str) -> bool:
        return text_key(text) in self._vectors

    def lookup(self, text: str, example_id: str | None = None) -> np.ndarray:
        key = text_key(text)
        try:
            return self._vectors[key]
        except KeyError:
            where = f" (example {example_id!r})" if example_id else ""
            raise MissingEmbedding(
                f"no embedding for text {text!r} (key {key}){where}"
            ) from None


def load_embeddings(path: str | Path) -> EmbeddingStore:
    vectors: dict[str, np.ndarray] = {}
    dim = None
    for lineno, record in read_jsonl(path):
        if "key" in record:
            key = str(record["key"])
        elif "text" in record:
            key = text_key(str(record["text"]))
        else:
            raise ValidationError(f"{path}:{lineno}: embedding row needs key or text")
        vec = np.asarray(record.get("vector", []), dtype=float)
        if vec.ndim != 1 or vec.shape[0] < 2:
            raise ValidationError(f"{path}:{lineno}: vector must be 1-D with d >= 2")
        if not np.all(np.isfinite(vec)):
            raise NonFiniteEntry(f"{path}:{lineno}: vector has NaN/Inf components")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise DimensionMismatch(
                f"{path}:{lineno}: vector dimension {vec.shape[0]} != {dim}"
            )
        vec.setflags(write=False)
        vectors[key] = vec
    return EmbeddingStore(vectors)


# --- clusters file ---------------------------------------------------------


def load_clusters(path: str | Path) -> dict[str, list[list[int]]]:
    """Load externally produced clusterings keyed by example_id."""
    clusters: dict[str, list[list[int]]] = {}
    for lineno, record in read_jsonl(path):
        example_id = str(record.get("example_id", "")).strip()
        if not example_id:
            raise ValidationError(f"{path}:{lineno}: cluster row missing example_id")
        groups = record.get("clusters", [])
        if not isinstance(groups, list) or any(not isinstance(g, list) for g in groups):
            raise ValidationError(f"{path}:{lineno}: clusters must be a list of lists")
        clusters[example_id] = [[int(i) for i in g] for g in groups]
    return clusters


# --- JSONL plumbing --------------------------------------------------------


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) pairs; malformed lines name their number."""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSONL at line {lineno}: {exc}") from None
            if not isinstance(record, dict):
                raise ValidationError(f"{path}: line {lineno} is not a JSON object")
            yield lineno, record


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(dumps_canonical(record))
            handle.write("\n")
