"""The three predictor families.

``grammar_predictor`` turns a weighted left context-sensitive grammar whose
sentential forms stay in the shape ``terminals, then at most one
nonterminal`` into a next-token predictor.  The predictor tracks the exact
posterior over the pending tail of the derivation given the tokens emitted
so far: each belief entry is a pair of (unemitted terminal buffer, pending
nonterminal or completion), and its probability.  The next-token
distribution marginalizes that belief, so END receives exactly the
probability that the derivation has already completed at the current
context.  Chained over a whole run, the predicted conditionals multiply out
to the grammar's own string probabilities.

``ngram_train`` builds a k-gram predictor: the state is the last
``min(k, len(context))`` tokens, transition counts are plain maximum
likelihood with END appended to every corpus line, and contexts never seen
in training fall back to the uniform distribution over vocabulary plus END.

``toy_attention_predictor`` is a single-layer, single-head causal
self-attention network with deterministically seeded weights.  With
vocabulary size n, embedding width d, and a context of L tokens it
computes:

    X[0]   = bos + P[0]
    X[i]   = E[token_i] + P[i]                      for i = 1..L
    P[p,j] = sin(p / 10000^(j/d))   for even j
             cos(p / 10000^((j-1)/d)) for odd j
    Q = X Wq,  K = X Wk,  V = X Wv
    S = Q K^T / sqrt(d),  masked to j <= i, row-softmaxed into A
    H = A V
    probs = softmax(H[L] Wo)        over the n tokens, then END

Weights are drawn from ``numpy.random.default_rng(seed)`` (PCG64) as
uniform(-0.5, 0.5) in the fixed order E (n x d), bos (d), Wq, Wk, Wv
(d x d each), Wo (d x (n+1)).  Positions are capped at 64, counting the
leading bos row.  The state encodes the full consumed context, so this
family is declared infinite-state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .autoregressive import (
    END,
    PredictorState,
    Token,
    TokenDistribution,
    UnknownTokenError,
)
from .grammar import ProductionClass, classify_production, validate_grammar
from .stochastic import DeadEndError, WeightedGrammar, ZeroMassError
from .symbols import Symbol, SymbolString, terminal


class NotLeftLinearizableError(ValueError):
    """A reachable sentential form places a nonterminal left of a terminal."""


class EmptyCorpusError(ValueError):
    """The training corpus has no lines."""


class ImpossibleContextError(ValueError):
    """The context has zero probability under the predictor's grammar."""


# ---------------------------------------------------------------------------
# Grammar-backed predictor


@dataclass(frozen=True)
class _Expansion:
    """One production prepared for belief expansion at a pending nonterminal."""

    gamma: tuple[str, ...]  # terminal left context required of the emitted prefix
    emitted: tuple[str, ...]  # terminals the production appends
    next_nt: str | None  # trailing nonterminal of the appended part, if any
    misshapen: bool  # appended part is not "terminals then one nonterminal"
    weight: Fraction


_Status = tuple[tuple[str, ...], str | None]  # (unemitted buffer, pending nonterminal)
_EXPANSION_ROUNDS = 10_000


class GrammarPredictor:
    """The state is a pure function of the context: the pair (recent window,
    posterior statuses).  Belief arithmetic is exact (rational), so two
    contexts that induce the same posterior really do share one state
    encoding; probabilities appear in encodings as (numerator, denominator)
    pairs.  Each call reconsumes its context from scratch, so the state
    argument is accepted for protocol uniformity but carries no extra
    information."""

    family = "grammar"
    finite_state = True

    def __init__(self, wg: WeightedGrammar):
        g = wg.grammar
        report = validate_grammar(g)
        if not report.is_valid:
            raise ValueError(f"invalid grammar: {report.violations[0]}")
        for p in g.productions:
            if ProductionClass.LEFT_CS not in classify_production(p):
                raise ValueError(f"production is not left context-sensitive: {p}")
        self.wg = wg
        self.vocabulary: tuple[Symbol, ...] = tuple(
            sorted(g.terminals, key=lambda s: s.name)
        )
        self._terminal_names = {s.name for s in g.terminals}
        self._context_need = max((len(p.lhs) - 1 for p in g.productions), default=0)
        self._table: dict[str, list[_Expansion]] = {}
        for p, w in zip(g.productions, wg.weights):
            gamma = p.lhs[:-1]
            if not gamma.is_all_terminal():
                continue  # can never match an all-terminal emitted prefix
            appended = p.rhs[len(gamma):]
            next_nt: str | None = None
            body = appended
            if len(body) and body[-1].is_nonterminal:
                next_nt = body[-1].name
                body = body[:-1]
            misshapen = not body.is_all_terminal()
            self._table.setdefault(p.lhs[-1].name, []).append(
                _Expansion(gamma.names(), body.names(), next_nt, misshapen, Fraction(w))
            )
        belief0: dict[_Status, Fraction] = {((), g.start.name): Fraction(1)}
        belief, recent = self._consume(belief0, (), ())
        # memo of consumed contexts; grows with the distinct contexts seen
        self._cache: dict[tuple[str, ...], tuple[dict[_Status, Fraction], tuple[str, ...]]]
        self._cache = {(): (belief, recent)}
        self.initial_state = self._encode(belief, recent)

    # -- belief bookkeeping

    def _expand(
        self, belief: dict[_Status, Fraction], recent: tuple[str, ...]
    ) -> dict[_Status, Fraction]:
        """Drain every (empty buffer, pending nonterminal) entry."""
        zero = Fraction(0)
        for _ in range(_EXPANSION_ROUNDS):
            pending = [s for s in belief if not s[0] and s[1] is not None]
            if not pending:
                return belief
            grown: dict[_Status, Fraction] = {}
            for status in sorted(belief, key=_status_key):
                mass = belief[status]
                buffer, nt = status
                if buffer or nt is None:
                    grown[status] = grown.get(status, zero) + mass
                    continue
                candidates = [
                    e
                    for e in self._table.get(nt, [])
                    if len(e.gamma) <= len(recent)
                    and recent[len(recent) - len(e.gamma):] == e.gamma
                ]
                if not candidates:
                    raise DeadEndError(f"no production rewrites {nt} after {recent}")
                total = sum(e.weight for e in candidates)
                if total == 0:
                    raise ZeroMassError(f"weights for {nt} sum to zero after {recent}")
                for e in candidates:
                    if e.misshapen:
                        raise NotLeftLinearizableError(
                            "a reachable form places a nonterminal left of a terminal"
                        )
                    child: _Status = (e.emitted, e.next_nt)
                    grown[child] = grown.get(child, zero) + mass * (e.weight / total)
            belief = grown
        raise ValueError("unit-production cycle: belief expansion did not settle")

    def _consume(
        self,
        belief: dict[_Status, Fraction],
        recent: tuple[str, ...],
        names: tuple[str, ...],
    ) -> tuple[dict[_Status, Fraction], tuple[str, ...]]:
        zero = Fraction(0)
        belief = self._expand(belief, recent)
        for name in names:
            kept: dict[_Status, Fraction] = {}
            kept_mass = zero
            for status in sorted(belief, key=_status_key):
                buffer, nt = status
                if buffer and buffer[0] == name:
                    child: _Status = (buffer[1:], nt)
                    kept[child] = kept.get(child, zero) + belief[status]
                    kept_mass += belief[status]
            if kept_mass == 0:
                raise ImpossibleContextError(f"the grammar cannot produce token {name!r} here")
            belief = {s: p / kept_mass for s, p in kept.items()}
            if self._context_need:
                recent = (recent + (name,))[-self._context_need:]
            belief = self._expand(belief, recent)
        return belief, recent

    def _encode(
        self, belief: dict[_Status, Fraction], recent: tuple[str, ...]
    ) -> PredictorState:
        statuses = tuple(
            (buf, nt, (belief[(buf, nt)].numerator, belief[(buf, nt)].denominator))
            for buf, nt in sorted(belief, key=_status_key)
        )
        return PredictorState(self.family, (recent, statuses))

    def _belief_for(
        self, names: tuple[str, ...]
    ) -> tuple[dict[_Status, Fraction], tuple[str, ...]]:
        """Posterior after the whole context, one new token at a time."""
        i = len(names)
        while names[:i] not in self._cache:
            i -= 1
        belief, recent = self._cache[names[:i]]
        for j in range(i, len(names)):
            belief, recent = self._consume(dict(belief), recent, (names[j],))
            self._cache[names[: j + 1]] = (belief, recent)
        return belief, recent

    def next_distribution(
        self, state: PredictorState, context: SymbolString
    ) -> tuple[TokenDistribution, PredictorState]:
        for s in context:
            if s.name not in self._terminal_names or not s.is_terminal:
                raise UnknownTokenError(f"token outside the grammar's terminals: {s!r}")
        belief, recent = self._belief_for(context.names())

        zero = Fraction(0)
        per_token = {s.name: zero for s in self.vocabulary}
        end_mass = zero
        for (buffer, nt), p in sorted(belief.items(), key=lambda kv: _status_key(kv[0])):
            if buffer:
                per_token[buffer[0]] += p
            elif nt is None:
                end_mass += p
        entries: list[tuple[Token, float]] = [
            (s, float(per_token[s.name])) for s in self.vocabulary
        ]
        entries.append((END, float(end_mass)))
        return TokenDistribution(tuple(entries)), self._encode(belief, recent)


def _status_key(status: _Status) -> tuple:
    return (status[0], status[1] or "")


def grammar_predictor(wg: WeightedGrammar) -> GrammarPredictor:
    """Wrap a weighted left context-sensitive grammar as a predictor."""
    return GrammarPredictor(wg)


# ---------------------------------------------------------------------------
# k-gram predictor


class NgramPredictor:
    family = "ngram"
    finite_state = True

    def __init__(
        self,
        k: int,
        vocabulary: tuple[Symbol, ...],
        table: dict[tuple[str, ...], tuple[tuple[Token, float], ...]],
    ):
        self.k = k
        self.vocabulary = vocabulary
        self._names = {s.name for s in vocabulary}
        self._table = table
        uniform = 1.0 / (len(vocabulary) + 1)
        self._fallback = tuple(
            [(s, uniform) for s in vocabulary] + [(END, uniform)]
        )
        self.initial_state = PredictorState(self.family, ())

    def next_distribution(
        self, state: PredictorState, context: SymbolString
    ) -> tuple[TokenDistribution, PredictorState]:
        for s in context:
            if s.name not in self._names or not s.is_terminal:
                raise UnknownTokenError(f"token outside the vocabulary: {s!r}")
        names = context.names()
        suffix = names[len(names) - self.k:] if self.k else ()
        entries = self._table.get(suffix, self._fallback)
        return TokenDistribution(entries), PredictorState(self.family, suffix)


def ngram_train(
    corpus: Sequence[Sequence[str]],
    k: int,
    vocab: Sequence[str] | None = None,
) -> NgramPredictor:
    """Train a k-gram predictor on whitespace-tokenized lines.

    Counts are raw maximum likelihood over (last-k-tokens -> next) pairs,
    with END appended to every line.  Unseen contexts fall back to the
    uniform distribution over vocabulary plus END.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    lines = [list(line) for line in corpus]
    if not lines:
        raise EmptyCorpusError("corpus has no lines")
    if vocab is None:
        vocab = sorted({tok for line in lines for tok in line})
    names = list(vocab)
    known = set(names)
    for line in lines:
        for tok in line:
            if tok not in known:
                raise UnknownTokenError(f"corpus token outside the vocabulary: {tok!r}")

    counts: dict[tuple[str, ...], dict[str | None, int]] = {}
    for line in lines:
        for i in range(len(line) + 1):
            ctx = tuple(line[max(0, i - k):i]) if k else ()
            nxt = line[i] if i < len(line) else None  # None stands for END
            bucket = counts.setdefault(ctx, {})
            bucket[nxt] = bucket.get(nxt, 0) + 1

    vocabulary = tuple(terminal(n) for n in names)
    table: dict[tuple[str, ...], tuple[tuple[Token, float], ...]] = {}
    for ctx, bucket in counts.items():
        total = sum(bucket.values())
        entries: list[tuple[Token, float]] = [
            (s, bucket.get(s.name, 0) / total) for s in vocabulary
        ]
        entries.append((END, bucket.get(None, 0) / total))
        table[ctx] = tuple(entries)
    return NgramPredictor(k, vocabulary, table)


# ---------------------------------------------------------------------------
# Toy attention predictor

_MAX_POSITIONS = 64


class ToyAttentionPredictor:
    family = "toy_attention"
    finite_state = False

    def __init__(self, seed: int, embed_dim: int, vocabulary: tuple[Symbol, ...]):
        if embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        self.seed = seed
        self.embed_dim = embed_dim
        self.vocabulary = vocabulary
        self._index = {s.name: i for i, s in enumerate(vocabulary)}
        n, d = len(vocabulary), embed_dim
        rng = np.random.default_rng(seed)
        self.embeddings = rng.uniform(-0.5, 0.5, (n, d))
        self.bos = rng.uniform(-0.5, 0.5, d)
        self.w_query = rng.uniform(-0.5, 0.5, (d, d))
        self.w_key = rng.uniform(-0.5, 0.5, (d, d))
        self.w_value = rng.uniform(-0.5, 0.5, (d, d))
        self.w_out = rng.uniform(-0.5, 0.5, (d, n + 1))
        positions = np.arange(_MAX_POSITIONS)[:, None]
        j = np.arange(d)[None, :]
        angles = positions / np.power(10000.0, (j - (j % 2)) / d)
        self.positional = np.where(j % 2 == 0, np.sin(angles), np.cos(angles))
        self.initial_state = PredictorState(self.family, ())

    def next_distribution(
        self, state: PredictorState, context: SymbolString
    ) -> tuple[TokenDistribution, PredictorState]:
        rows = [self.bos + self.positional[0]]
        for i, s in enumerate(context, start=1):
            if s.name not in self._index or not s.is_terminal:
                raise UnknownTokenError(f"token outside the vocabulary: {s!r}")
            if i >= _MAX_POSITIONS:
                raise ValueError(f"context exceeds {_MAX_POSITIONS - 1} tokens")
            rows.append(self.embeddings[self._index[s.name]] + self.positional[i])
        x = np.stack(rows)
        q, k, v = x @ self.w_query, x @ self.w_key, x @ self.w_value
        scores = (q @ k.T) / math.sqrt(self.embed_dim)
        mask = np.triu(np.ones(scores.shape, dtype=bool), k=1)
        scores = np.where(mask, -np.inf, scores)
        weights = np.exp(scores - scores.max(axis=1, keepdims=True))
        weights /= weights.sum(axis=1, keepdims=True)
        hidden = weights @ v
        logits = hidden[-1] @ self.w_out
        exps = np.exp(logits - logits.max())
        probs = exps / exps.sum()
        entries: list[tuple[Token, float]] = [
            (s, float(probs[i])) for i, s in enumerate(self.vocabulary)
        ]
        entries.append((END, float(probs[-1])))
        next_state = PredictorState(self.family, context.names())
        return TokenDistribution(tuple(entries)), next_state


def toy_attention_predictor(
    seed: int, embed_dim: int = 8, vocab: Sequence[str] | None = None
) -> ToyAttentionPredictor:
    """Build the seeded single-layer attention predictor over ``vocab``."""
    if not vocab:
        raise ValueError("vocab must name at least one token")
    return ToyAttentionPredictor(seed, embed_dim, tuple(terminal(n) for n in vocab))


# ---------------------------------------------------------------------------
# External formats


def read_corpus(text: str) -> list[list[str]]:
    """One whitespace-tokenized sequence per line; blank lines are empty sequences."""
    return [line.split() for line in text.splitlines()]


def read_vocab(text: str) -> tuple[str, ...]:
    """One symbol per non-blank line; order fixes the vocabulary index."""
    return tuple(line.strip() for line in text.splitlines() if line.strip())
