"""Weighted grammars: step distributions, seeded sampling, exact probabilities.

A ``WeightedGrammar`` attaches one nonnegative weight to each production.
At any sentential form the applicable steps are renormalized into a proper
distribution, so sampling walks the derivation space step by step.

Sampling is reproducible by construction: the generator is ``random.Random``
(MT19937), seeded explicitly, consuming exactly one uniform draw per
derivation step, and the step is chosen by inverse CDF over the successor
order of :func:`lcsg.derivation.successors`.  Identical seeds therefore
yield identical traces on every platform.

``string_probability`` computes the exact total probability of a terminal
string: the sum over all complete derivations of the product of step
probabilities.  The computation sweeps reachable forms in increasing length
order; probability mass that cycles among same-length forms is resolved by
a dense linear solve, which keeps the result exact rather than iterative.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .derivation import (
    DEFAULT_FUEL,
    DerivationStep,
    DerivationTrace,
    FuelExhaustedError,
    _search_profile,
    successors,
)
from .grammar import Grammar
from .symbols import SymbolString


class DeadEndError(RuntimeError):
    """A non-terminal form with no applicable step."""


class ZeroMassError(ValueError):
    """Applicable steps exist but their weights sum to zero."""


class BoundMismatchError(ValueError):
    """Two distributions with different bounds cannot be compared."""


@dataclass(frozen=True)
class WeightedGrammar:
    """A grammar plus one weight per production, aligned by index."""

    grammar: Grammar
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.weights, tuple):
            object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != len(self.grammar.productions):
            raise ValueError(
                f"{len(self.weights)} weights for {len(self.grammar.productions)} productions"
            )
        for w in self.weights:
            if not np.isfinite(w) or w < 0.0:
                raise ValueError(f"weights must be finite and >= 0: {w}")
        lhs_nonterminals = {
            s
            for p in self.grammar.productions
            for s in p.lhs
            if s.is_nonterminal
        }
        for nt in lhs_nonterminals:
            if not any(
                w > 0.0 and nt in p.lhs.symbols
                for p, w in zip(self.grammar.productions, self.weights)
            ):
                raise ValueError(f"no positive weight rewrites {nt.name}")

    @classmethod
    def from_grammar(cls, g: Grammar) -> "WeightedGrammar":
        """Adopt per-production weights from the grammar, defaulting to 1.0."""
        return cls(g, tuple(p.weight if p.weight is not None else 1.0 for p in g.productions))


@dataclass(frozen=True)
class StringDistribution:
    """Probabilities over terminal strings up to a length bound.

    ``residual`` tracks mass assigned to nothing in the support: truncated
    samples, or derivations that escape the bound.
    """

    probabilities: dict  # SymbolString -> float
    bound: int
    residual: float = 0.0

    def __post_init__(self) -> None:
        total = 0.0
        for w, p in self.probabilities.items():
            if len(w) > self.bound:
                raise ValueError(f"string longer than bound {self.bound}: {w}")
            if not 0.0 <= p <= 1.0 + 1e-9:
                raise ValueError(f"probability out of range for {w}: {p}")
            total += p
        if not 0.0 <= self.residual <= 1.0 + 1e-9:
            raise ValueError(f"residual out of range: {self.residual}")
        if total + self.residual > 1.0 + 1e-9:
            raise ValueError(f"total mass exceeds 1: {total + self.residual}")


@dataclass(frozen=True)
class SampledDerivation:
    """A sampled trace; ``truncated`` marks a run stopped at the step limit."""

    trace: DerivationTrace
    truncated: bool


def normalize_weights(
    wg: WeightedGrammar, form: SymbolString
) -> list[tuple[DerivationStep, float]]:
    """The renormalized step distribution at ``form``, in successor order."""
    steps = successors(form, wg.grammar)
    if not steps:
        if form.is_all_terminal():
            raise ValueError(f"form is all-terminal, no steps apply: {form}")
        raise DeadEndError(f"no applicable step at {form}")
    raw = [wg.weights[s.production_index] for s in steps]
    total = sum(raw)
    if total <= 0.0:
        raise ZeroMassError(f"applicable weights sum to zero at {form}")
    return [(s, w / total) for s, w in zip(steps, raw)]


def sample_derivation(
    wg: WeightedGrammar, seed: int, max_steps: int = 1000
) -> SampledDerivation:
    """Sample one derivation from the start symbol, seeded and deterministic."""
    rng = random.Random(seed)
    g = wg.grammar
    form = SymbolString((g.start,))
    steps: list[DerivationStep] = []
    while not form.is_all_terminal() and len(steps) < max_steps:
        distribution = normalize_weights(wg, form)
        u = rng.random()
        cumulative = 0.0
        chosen = distribution[-1][0]
        for step, p in distribution:
            cumulative += p
            if u < cumulative:
                chosen = step
                break
        steps.append(chosen)
        form = chosen.after
    return SampledDerivation(DerivationTrace(g, tuple(steps)), not form.is_all_terminal())


def string_probability(
    wg: WeightedGrammar, w: SymbolString, fuel: int = DEFAULT_FUEL
) -> float:
    """Exact probability of deriving the terminal string ``w``."""
    if not w.is_all_terminal():
        raise ValueError(f"string must contain only terminals: {w}")
    g = wg.grammar
    nullable = _search_profile(g)
    bound = len(w)

    def min_yield(form: SymbolString) -> int:
        if not nullable:
            return len(form)
        return sum(1 for s in form if s not in nullable)

    initial = SymbolString((g.start,))
    # Discover transient (non-terminal) forms and their outgoing distributions.
    edges: dict[SymbolString, list[tuple[SymbolString, float]]] = {}
    absorbing: set[SymbolString] = set()
    frontier = [initial]
    expanded = 0
    while frontier:
        form = frontier.pop()
        if form in edges:
            continue
        if expanded >= fuel:
            raise FuelExhaustedError(f"fuel {fuel} exhausted computing probability of {w}")
        expanded += 1
        try:
            distribution = normalize_weights(wg, form)
        except (DeadEndError, ZeroMassError):
            edges[form] = []
            continue
        out: list[tuple[SymbolString, float]] = []
        for step, p in distribution:
            child = step.after
            if child.is_all_terminal():
                absorbing.add(child)
                out.append((child, p))
            elif min_yield(child) <= bound:
                if len(child) < len(form):
                    raise ValueError(
                        f"erasure into non-terminal form {child} is unsupported "
                        "for exact probabilities"
                    )
                out.append((child, p))
                frontier.append(child)
            # else: mass escapes the bound and is dropped.
        edges[form] = out

    absorbed: dict[SymbolString, float] = {}
    mass_in: dict[SymbolString, float] = {initial: 1.0}
    for length in sorted({len(f) for f in edges}):
        layer = sorted(
            (f for f in edges if len(f) == length),
            key=lambda f: f.names(),
        )
        index = {f: i for i, f in enumerate(layer)}
        m0 = np.array([mass_in.get(f, 0.0) for f in layer])
        if not m0.any():
            continue
        same_layer = [
            (index[f], index[child], p)
            for f in layer
            for child, p in edges[f]
            if child in index
        ]
        if same_layer:
            q = np.zeros((len(layer), len(layer)))
            for i, j, p in same_layer:
                q[i, j] += p
            try:
                x = np.linalg.solve(np.eye(len(layer)) - q.T, m0)
            except np.linalg.LinAlgError:
                raise ValueError(
                    "probability mass trapped in a same-length cycle"
                ) from None
        else:
            x = m0
        for f in layer:
            visits = float(x[index[f]])
            if visits == 0.0:
                continue
            for child, p in edges[f]:
                if child in absorbing:
                    absorbed[child] = absorbed.get(child, 0.0) + visits * p
                elif len(child) > length:
                    mass_in[child] = mass_in.get(child, 0.0) + visits * p
    return absorbed.get(w, 0.0)


def exact_distribution(
    wg: WeightedGrammar, bound: int, fuel: int = DEFAULT_FUEL
) -> StringDistribution:
    """The exact distribution over derivable strings up to ``bound``."""
    from .derivation import enumerate_language

    probabilities = {
        w: string_probability(wg, w, fuel)
        for w in sorted(enumerate_language(wg.grammar, bound, fuel), key=lambda s: (len(s), s.names()))
    }
    residual = max(0.0, 1.0 - sum(probabilities.values()))
    return StringDistribution(probabilities, bound, residual)


def total_variation(d1: StringDistribution, d2: StringDistribution) -> float:
    """Half the L1 distance, counting residual mass as disagreement."""
    if d1.bound != d2.bound:
        raise BoundMismatchError(f"bounds differ: {d1.bound} != {d2.bound}")
    support = set(d1.probabilities) | set(d2.probabilities)
    diff = sum(
        abs(d1.probabilities.get(w, 0.0) - d2.probabilities.get(w, 0.0)) for w in support
    )
    return 0.5 * (diff + abs(d1.residual - d2.residual))
