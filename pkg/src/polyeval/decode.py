"""Decoding harness over pluggable token scorers.

A scorer exposes ``logprobs(prefix) -> {token: logprob}`` over the tokens
with nonzero probability (log-probabilities are finite and logsumexp to 0)
plus an ``end_token`` attribute.  A deterministic n-gram toy language model
is provided as the desk-scale scorer for verification and demos.

Beam mechanics, shared by beam_search and each diverse-beam group: finished
candidates always move to the result pool without consuming beam slots, and
the surviving unfinished candidates are pruned to the beam width by
cumulative log-probability.  Final ranking is by length-normalized
log-probability (cumulative divided by token count, end token included);
ties break by token lexicographic order.
"""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .core import GenerationMode, GenerationSet, make_generation_set
from .errors import UnknownContext, UnparseableSequence, ValidationError


class TokenScorer(Protocol):
    end_token: str

    def logprobs(self, prefix: tuple[str, ...]) -> dict[str, float]: ...


@dataclass(frozen=True)
class BeamConfig:
    beams: int = 10
    groups: int = 1
    diversity_penalty: float = 0.0
    repetition_penalty: float = 1.0
    max_len: int = 32

    def __post_init__(self):
        if self.beams < 1 or self.groups < 1:
            raise ValidationError("beams and groups must be >= 1")
        if self.beams % self.groups != 0:
            raise ValidationError(
                f"beams ({self.beams}) must be divisible by groups ({self.groups})"
            )
        if self.diversity_penalty < 0:
            raise ValidationError("diversity penalty must be >= 0")
        if self.repetition_penalty < 1:
            raise ValidationError("repetition penalty must be >= 1")
        if self.max_len < 1:
            raise ValidationError("max_len must be >= 1")


@dataclass(frozen=True)
class DecodedSequence:
    tokens: tuple[str, ...]  # includes the end token when finished
    text: str  # tokens joined by spaces, end token omitted
    logprob: float  # cumulative search score
    score: float  # logprob / len(tokens)
    finished: bool  # False: force-terminated at max_len


def _sequence(tokens: tuple[str, ...], logprob: float, finished: bool,
              end_token: str) -> DecodedSequence:
    text = " ".join(t for t in tokens if t != end_token)
    return DecodedSequence(tokens, text, logprob, logprob / len(tokens), finished)


def apply_repetition_penalty(
    logprobs: Mapping[str, float], history: Iterable[str], penalty: float
) -> dict[str, float]:
    """Penalize tokens already generated: positive scores are divided by the
    penalty, negative scores multiplied."""
    if penalty < 1:
        raise ValidationError("repetition penalty must be >= 1")
    if penalty == 1.0:
        return dict(logprobs)
    seen = set(history)
    out = {}
    for token, value in logprobs.items():
        if token in seen:
            value = value / penalty if value > 0 else value * penalty
        out[token] = value
    return out


def _expand(scorer: TokenScorer, beams: list[tuple[tuple[str, ...], float]],
            repetition_penalty: float) -> list[tuple[tuple[str, ...], float, str]]:
    """All one-token extensions of the active beams: (tokens, logprob, token)."""
    candidates = []
    for tokens, logprob in beams:
        step = scorer.logprobs(tokens)
        if repetition_penalty > 1.0:
            step = apply_repetition_penalty(step, tokens, repetition_penalty)
        for token in sorted(step):
            candidates.append((tokens + (token,), logprob + step[token], token))
    return candidates


def _advance(
    candidates: list[tuple[tuple[str, ...], float, str]],
    width: int,
    end_token: str,
    finished: list[tuple[tuple[str, ...], float]],
) -> list[tuple[tuple[str, ...], float]]:
    """Pool finished candidates, keep the top ``width`` unfinished ones."""
    active = []
    for tokens, logprob, token in candidates:
        if token == end_token:
            finished.append((tokens, logprob))
        else:
            active.append((tokens, logprob))
    active.sort(key=lambda c: (-c[1], c[0]))
    return active[:width]


def _rank(pool: list[DecodedSequence]) -> list[DecodedSequence]:
    return sorted(pool, key=lambda s: (-s.score, s.tokens))


def beam_search(
    scorer: TokenScorer, config: BeamConfig, k: int | None = None
) -> list[DecodedSequence]:
    """Standard beam search; returns the top-k length-normalized sequences.

    Sequences still unfinished at max_len are force-terminated and flagged
    (``finished=False``).
    """
    if config.groups != 1:
        raise ValidationError("beam_search requires groups=1; see diverse_beam_search")
    k = config.beams if k is None else k
    if k > config.beams:
        raise ValidationError(f"k ({k}) cannot exceed beams ({config.beams})")
    end = scorer.end_token
    active: list[tuple[tuple[str, ...], float]] = [((), 0.0)]
    finished: list[tuple[tuple[str, ...], float]] = []
    for _ in range(config.max_len):
        if not active:
            break
        candidates = _expand(scorer, active, config.repetition_penalty)
        active = _advance(candidates, config.beams, end, finished)
    pool = [_sequence(t, lp, True, end) for t, lp in finished]
    pool += [_sequence(t, lp, False, end) for t, lp in active]
    return _rank(pool)[:k]


def diverse_beam_search(
    scorer: TokenScorer, config: BeamConfig
) -> list[DecodedSequence]:
    """Diversity-promoting beam search with a per-step token-count penalty.

    The ``groups`` groups (each of width beams/groups) advance sequentially
    at every step; a token picked by earlier groups at the current step costs
    later groups ``diversity_penalty`` per selection.  The result concatenates
    each group's beams (ranked by unpenalized normalized score) group by
    group, so with a zero penalty it is ``groups`` copies of the width
    beams/groups beam-search result.
    """
    width = config.beams // config.groups
    end = scorer.end_token
    active: list[list[tuple[tuple[str, ...], float]]] = [
        [((), 0.0)] for _ in range(config.groups)
    ]
    finished: list[list[tuple[tuple[str, ...], float]]] = [
        [] for _ in range(config.groups)
    ]
    for _ in range(config.max_len):
        if not any(active):
            break
        step_counts: Counter[str] = Counter()
        for g in range(config.groups):
            if not active[g]:
                continue
            candidates = _expand(scorer, active[g], config.repetition_penalty)
            # penalized selection, unpenalized bookkeeping
            penalized = sorted(
                candidates,
                key=lambda c: (
                    -(c[1] - config.diversity_penalty * step_counts[c[2]]),
                    c[0],
                ),
            )
            selected_active: list[tuple[tuple[str, ...], float]] = []
            for tokens, logprob, token in penalized:
                if token == end:
                    finished[g].append((tokens, logprob))
                    step_counts[token] += 1
                elif len(selected_active) < width:
                    selected_active.append((tokens, logprob))
                    step_counts[token] += 1
            selected_active.sort(key=lambda c: (-c[1], c[0]))
            active[g] = selected_active
    result: list[DecodedSequence] = []
    for g in range(config.groups):
        pool = [_sequence(t, lp, True, end) for t, lp in finished[g]]
        pool += [_sequence(t, lp, False, end) for t, lp in active[g]]
        result.extend(_rank(pool)[:width])
    return result


# --- sampling ---------------------------------------------------------------


def sample_sequences(
    scorer: TokenScorer,
    n: int,
    temperature: float = 1.0,
    seed: int = 0,
    salt: int = 0,
    max_len: int = 32,
    repetition_penalty: float = 1.0,
) -> list[DecodedSequence]:
    """Seeded ancestral sampling; run r uses the (seed, salt, r) stream.

    temperature scales log-probabilities before renormalization; 0 selects
    the argmax at every step (ties to the lexicographically smaller token).
    """
    if temperature < 0:
        raise ValidationError("temperature must be >= 0")
    if n < 1:
        raise ValidationError("need at least one run")
    end = scorer.end_token
    sequences = []
    for run in range(n):
        rng = np.random.default_rng([seed, salt, run])
        tokens: tuple[str, ...] = ()
        logprob = 0.0
        finished = False
        for _ in range(max_len):
            step_map = scorer.logprobs(tokens)
            if repetition_penalty > 1.0:
                step_map = apply_repetition_penalty(
                    step_map, tokens, repetition_penalty
                )
            step = sorted(step_map.items())
            if temperature == 0:
                token = max(step, key=lambda kv: kv[1])[0]
                # max() keeps the first (lexicographically smallest) on ties
            else:
                logits = np.array([v for _, v in step]) / temperature
                probs = np.exp(logits - logits.max())
                probs /= probs.sum()
                token = step[int(rng.choice(len(step), p=probs))][0]
            logprob += dict(step)[token]
            tokens += (token,)
            if token == end:
                finished = True
                break
        sequences.append(_sequence(tokens, logprob, finished, end))
    return sequences


def sample_runs(
    scorer: TokenScorer,
    example_id: str,
    mode: GenerationMode | str = GenerationMode.POLYMORPHIC,
    runs: int = 3,
    temperature: float = 1.0,
    seed: int = 0,
    salt: int = 0,
    max_len: int = 32,
    repetition_penalty: float = 1.0,
) -> tuple[GenerationSet, list[str]]:
    """Sample run sequences and package them as a GenerationSet.

    In polymorphic mode each run's text is parsed as a numbered inference
    list; a text with no list marker falls back to a single inference and is
    reported in the warnings.
    """
    mode = GenerationMode(mode)
    sequences = sample_sequences(
        scorer, runs, temperature, seed, salt, max_len, repetition_penalty
    )
    warnings: list[str] = []
    run_lists: list[list[str]] = []
    for seq in sequences:
        if not seq.finished:
            warnings.append("max_len_without_end")
        if not seq.text:
            # the run produced only the end token: no inference to keep
            warnings.append("empty_run_dropped")
            continue
        if mode is GenerationMode.POLYMORPHIC:
            try:
                parsed = parse_polymorphic(seq.text)
                warnings.extend(parsed.warnings)
                items = list(parsed.items)
            except UnparseableSequence:
                items = []
            if not items:
                items = [seq.text]
                warnings.append("unparseable_fallback")
        else:
            items = [seq.text]
        run_lists.append(items)
    if not run_lists:
        raise ValidationError(
            f"example {example_id!r}: every sampled run was empty"
        )
    gen_set, dropped = make_generation_set(example_id, mode, run_lists)
    if dropped:
        warnings.append(f"dropped_duplicates:{dropped}")
    return gen_set, warnings


# --- numbered-list codec ----------------------------------------------------

_LIST_BOUNDARY = re.compile(r"(?:^\s*|;\s*)\((\d+)\)\s*")
_BARE_MARKER = re.compile(r"\((\d+)\)\s*")


@dataclass(frozen=True)
class ParsedSequence:
    items: tuple[str, ...]
    indices: tuple[int, ...]
    warnings: tuple[str, ...]


def format_polymorphic(inferences: Sequence[str]) -> str:
    """Render inferences as a numbered, semicolon-delimited list."""
    if not inferences or any(not str(i).strip() for i in inferences):
        raise ValidationError("inference list must be nonempty strings")
    return "; ".join(f"({k}) {text}" for k, text in enumerate(inferences, start=1))


def parse_polymorphic(sequence: str) -> ParsedSequence:
    """Parse a numbered list back into inferences, in surface order.

    Item boundaries are "(k)" at the start of the string or after a
    semicolon, so a bare "(k)" inside an item does not split it; strings with
    only bare markers still parse by splitting on them.  Missing final
    semicolons are fine; duplicated, out-of-order, or non-contiguous indices
    parse with warnings.  It is an error only when no "(k)" marker exists.
    """
    matches = list(_LIST_BOUNDARY.finditer(sequence))
    bare_mode = not matches
    if bare_mode:
        matches = list(_BARE_MARKER.finditer(sequence))
    if not matches:
        raise UnparseableSequence(f"no list marker found in {sequence!r}")
    warnings = []
    if sequence[: matches[0].start()].strip():
        warnings.append("leading_text")
    items = []
    indices = []
    for k, match in enumerate(matches):
        end = matches[k + 1].start() if k + 1 < len(matches) else len(sequence)
        text = sequence[match.end() : end].strip()
        if (bare_mode or k + 1 == len(matches)) and text.endswith(";"):
            text = text[:-1].rstrip()  # tolerate a trailing semicolon
        if not text:
            warnings.append("empty_item")
            continue
        items.append(text)
        indices.append(int(match.group(1)))
    if len(set(indices)) < len(indices):
        warnings.append("duplicate_indices")
    elif any(b < a for a, b in zip(indices, indices[1:])):
        warnings.append("out_of_order_indices")
    elif indices != list(range(1, len(indices) + 1)):
        warnings.append("non_contiguous_indices")
    return ParsedSequence(tuple(items), tuple(indices), tuple(warnings))


# --- toy n-gram language model ----------------------------------------------


class NgramLM:
    """Order-n language model with explicit conditional tables.

    Conditioning context is the last order-1 tokens of the prefix (fewer near
    the start).  Every listed probability is positive and each conditional
    distribution sums to 1, so returned log-probabilities are finite and
    normalized.
    """

    def __init__(
        self,
        order: int,
        vocab: Sequence[str],
        table: Mapping[tuple[str, ...], Mapping[str, float]],
        end_token: str = "</s>",
    ):
        if order < 1:
            raise ValidationError("order must be >= 1")
        if end_token not in vocab:
            raise ValidationError(f"end token {end_token!r} missing from vocabulary")
        vocab_set = set(vocab)
        if len(vocab_set) != len(vocab):
            raise ValidationError("vocabulary has duplicate tokens")
        logtable: dict[tuple[str, ...], dict[str, float]] = {}
        for context, dist in table.items():
            context = tuple(context)
            if len(context) > order - 1:
                raise ValidationError(
                    f"context {context!r} longer than order-1 = {order - 1}"
                )
            if any(tok not in vocab_set for tok in context):
                raise ValidationError(f"context {context!r} uses unknown tokens")
            if not dist:
                raise ValidationError(f"context {context!r} has an empty distribution")
            total = 0.0
            logs = {}
            for token, prob in dist.items():
                if token not in vocab_set:
                    raise ValidationError(f"unknown token {token!r} in distribution")
                if not (prob > 0.0):
                    raise ValidationError(
                        f"probability for {token!r} given {context!r} must be > 0"
                    )
                total += prob
                logs[token] = math.log(prob)
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(
                    f"distribution for context {context!r} sums to {total!r}"
                )
            logtable[context] = logs
        self.order = order
        self.vocab = tuple(vocab)
        self.end_token = end_token
        self._table = logtable

    def logprobs(self, prefix: tuple[str, ...]) -> dict[str, float]:
        context = tuple(prefix[-(self.order - 1) :]) if self.order > 1 else ()
        if len(prefix) < self.order - 1:
            context = tuple(prefix)
        try:
            return dict(self._table[context])
        except KeyError:
            raise UnknownContext(f"no distribution for context {context!r}") from None


def load_ngram_lm(path: str | Path) -> NgramLM:
    """Load a toy LM config: {"order", "vocab", "end_token", "cond": [
    {"context": [...], "probs": {token: p}}, ...]}."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            config = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: malformed LM config: {exc}") from None
    if not isinstance(config, dict):
        raise ValidationError(f"{path}: LM config must be a JSON object")
    table = {}
    for row in config.get("cond", []):
        context = tuple(str(t) for t in row.get("context", []))
        if context in table:
            raise ValidationError(f"{path}: duplicate context {context!r}")
        table[context] = {str(t): float(p) for t, p in row.get("probs", {}).items()}
    return NgramLM(
        order=int(config.get("order", 1)),
        vocab=[str(t) for t in config.get("vocab", [])],
        table=table,
        end_token=str(config.get("end_token", "</s>")),
    )
