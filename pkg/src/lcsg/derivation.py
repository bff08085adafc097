"""One-step rewriting and bounded derivation search.

``apply_step`` rewrites a single window of a sentential form.  ``successors``
enumerates every one-step rewrite of a form in (position, production index)
lexicographic order, which fixes the exploration order everywhere else.

``derives_bounded`` and ``enumerate_language`` run a breadth-first search
over sentential forms whose minimal terminal yield stays within the length
bound.  For grammars without erasing productions the yield of a form is its
length, so the search is the classic noncontracting membership procedure.
Erasing productions are accepted in exactly two shapes: the start symbol may
erase when it occurs on no right side, and grammars in which every left
side is a single nonterminal may erase freely (there the bound uses the
standard nullable-symbol closure).  Any other shrinking production raises
:class:`NotNoncontractingError`.

The search is fuelled: expanding more than ``fuel`` forms without emptying
the frontier raises :class:`FuelExhaustedError`, a deliberately distinct
outcome from a definitive "not derivable".
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

from .grammar import Grammar, Production, validate_grammar
from .symbols import Symbol, SymbolString

DEFAULT_FUEL = 1_000_000


class NoMatchError(ValueError):
    """The production's lhs does not occur at the requested position."""


class OutOfRangeError(IndexError):
    """The rewrite window does not fit inside the form."""


class NotNoncontractingError(ValueError):
    """The grammar shrinks in a shape the bounded search cannot handle."""


class FuelExhaustedError(RuntimeError):
    """The search ran out of fuel before reaching a definitive answer."""


@dataclass(frozen=True)
class DerivationStep:
    """One rewrite: ``before`` at ``position`` via production ``production_index``."""

    before: SymbolString
    production_index: int
    position: int
    after: SymbolString


@dataclass(frozen=True)
class DerivationTrace:
    """A chained sequence of rewrites over one grammar."""

    grammar: Grammar
    steps: tuple[DerivationStep, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.steps, tuple):
            object.__setattr__(self, "steps", tuple(self.steps))
        start_form = SymbolString((self.grammar.start,))
        for i, step in enumerate(self.steps):
            expected = start_form if i == 0 else self.steps[i - 1].after
            if step.before != expected:
                raise ValueError(f"trace breaks at step {i}: {step.before} != {expected}")

    @property
    def final(self) -> SymbolString:
        if self.steps:
            return self.steps[-1].after
        return SymbolString((self.grammar.start,))


def apply_step(w: SymbolString, p: Production, position: int) -> SymbolString:
    """Rewrite ``w`` by ``p`` at ``position``; the lhs must match exactly there."""
    if position < 0 or position + len(p.lhs) > len(w):
        raise OutOfRangeError(
            f"window [{position}, {position + len(p.lhs)}) outside form of length {len(w)}"
        )
    if w[position:position + len(p.lhs)] != p.lhs:
        raise NoMatchError(f"{p.lhs} does not occur at position {position} in {w}")
    return w[:position] + p.rhs + w[position + len(p.lhs):]


def successors(w: SymbolString, g: Grammar) -> list[DerivationStep]:
    """All one-step rewrites of ``w``, ordered by (position, production index)."""
    steps: list[DerivationStep] = []
    for position in range(len(w)):
        for index, p in enumerate(g.productions):
            if position + len(p.lhs) > len(w):
                continue
            if w[position:position + len(p.lhs)] == p.lhs:
                steps.append(DerivationStep(w, index, position, apply_step(w, p, position)))
    return steps


def _nullable_closure(g: Grammar) -> frozenset[Symbol]:
    nullable: set[Symbol] = set()
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            if len(p.lhs) != 1:
                continue
            head = p.lhs[0]
            if head in nullable:
                continue
            if all(s in nullable for s in p.rhs):
                nullable.add(head)
                changed = True
    return frozenset(nullable)


def _search_profile(g: Grammar) -> frozenset[Symbol]:
    """Vet the grammar for bounded search; return the nullable symbol set.

    The returned set is empty for purely monotone grammars (including the
    permitted lone ``start ->`` empty production), and the nullable closure
    for single-nonterminal-lhs grammars with erasing productions.
    """
    erasing = [p for p in g.productions if len(p.rhs) == 0]
    shrinking = [p for p in g.productions if len(p.rhs) < len(p.lhs)]
    if not shrinking:
        return frozenset()
    if all(len(p.lhs) == 1 for p in g.productions):
        return _nullable_closure(g)
    if not [p for p in shrinking if p not in erasing] and validate_grammar(g).noncontracting:
        # Only the permitted start erasure shrinks; it fires once, at the start form.
        return frozenset()
    raise NotNoncontractingError(
        "grammar mixes shrinking productions with multi-symbol left sides"
    )


@dataclass(frozen=True)
class _Reachability:
    parents: dict  # form -> (parent form, production_index, position) | None
    completed: bool


@lru_cache(maxsize=256)
def _bounded_reachability(g: Grammar, max_len: int, fuel: int) -> _Reachability:
    nullable = _search_profile(g)

    def min_yield(form: SymbolString) -> int:
        if not nullable:
            return len(form)
        return sum(1 for s in form if s not in nullable)

    initial = SymbolString((g.start,))
    parents: dict[SymbolString, tuple | None] = {initial: None}
    frontier: deque[SymbolString] = deque([initial])
    expanded = 0
    while frontier:
        if expanded >= fuel:
            return _Reachability(parents, completed=False)
        form = frontier.popleft()
        expanded += 1
        for step in successors(form, g):
            child = step.after
            if child in parents or min_yield(child) > max_len:
                continue
            parents[child] = (form, step.production_index, step.position)
            frontier.append(child)
    return _Reachability(parents, completed=True)


def _trace_from_parents(g: Grammar, parents: dict, target: SymbolString) -> DerivationTrace:
    chain: list[tuple[SymbolString, int, int]] = []
    form = target
    while parents[form] is not None:
        parent, index, position = parents[form]
        chain.append((parent, index, position))
        form = parent
    chain.reverse()
    steps = tuple(
        DerivationStep(before, index, position, apply_step(before, g.productions[index], position))
        for before, index, position in chain
    )
    return DerivationTrace(g, steps)


def derives_bounded(
    g: Grammar, target: SymbolString, fuel: int = DEFAULT_FUEL
) -> DerivationTrace | None:
    """Search for a derivation of ``target``, a terminal string.

    Returns a shortest derivation trace when one exists, ``None`` when the
    bounded search exhausts every form without finding the target (a
    definitive negative for the accepted grammar shapes), and raises
    :class:`FuelExhaustedError` when fuel runs out first.
    """
    if not target.is_all_terminal():
        raise ValueError(f"target must contain only terminals: {target}")
    reach = _bounded_reachability(g, len(target), fuel)
    if target in reach.parents:
        return _trace_from_parents(g, reach.parents, target)
    if reach.completed:
        return None
    raise FuelExhaustedError(f"fuel {fuel} exhausted searching for {target}")


def enumerate_language(
    g: Grammar, max_len: int, fuel: int = DEFAULT_FUEL
) -> set[SymbolString]:
    """Every terminal string of length at most ``max_len`` the grammar derives."""
    reach = _bounded_reachability(g, max_len, fuel)
    if not reach.completed:
        raise FuelExhaustedError(f"fuel {fuel} exhausted enumerating up to length {max_len}")
    return {
        form
        for form in reach.parents
        if len(form) <= max_len and form.is_all_terminal()
    }
