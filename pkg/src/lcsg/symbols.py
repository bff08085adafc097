"""Symbols and symbol strings.

Every grammar-facing module works over the same two value types: ``Symbol``,
a named terminal or nonterminal, and ``SymbolString``, an immutable sequence
of symbols.  The empty ``SymbolString`` is the canonical representation of
the empty string.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Union, overload


class SymbolKind(enum.Enum):
    TERMINAL = "terminal"
    NONTERMINAL = "nonterminal"


# Reserved by the grammar file format and the trace format.
_RESERVED_NAMES = frozenset({"_", "->", "|"})


@dataclass(frozen=True)
class Symbol:
    """A single terminal or nonterminal.

    Names must be non-empty, contain no whitespace, and avoid the tokens the
    file formats claim for themselves.  Two symbols are equal iff both name
    and kind agree, so a terminal ``x`` and a nonterminal ``x`` are distinct
    values (grammar validation reports the name collision).
    """

    name: str
    kind: SymbolKind

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("symbol name must be non-empty")
        if any(ch.isspace() for ch in self.name):
            raise ValueError(f"symbol name contains whitespace: {self.name!r}")
        if self.name in _RESERVED_NAMES:
            raise ValueError(f"symbol name is reserved: {self.name!r}")
        if not isinstance(self.kind, SymbolKind):
            raise ValueError(f"kind must be a SymbolKind, got {self.kind!r}")

    @property
    def is_terminal(self) -> bool:
        return self.kind is SymbolKind.TERMINAL

    @property
    def is_nonterminal(self) -> bool:
        return self.kind is SymbolKind.NONTERMINAL

    def __repr__(self) -> str:
        tag = "T" if self.is_terminal else "N"
        return f"{self.name}:{tag}"


def terminal(name: str) -> Symbol:
    return Symbol(name, SymbolKind.TERMINAL)


def nonterminal(name: str) -> Symbol:
    return Symbol(name, SymbolKind.NONTERMINAL)


@dataclass(frozen=True)
class SymbolString:
    """An immutable, hashable sequence of symbols.

    Supports length, indexing, slicing, iteration, and concatenation, which
    is enough for the window arithmetic the derivation engine performs.
    """

    symbols: tuple[Symbol, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.symbols, tuple):
            object.__setattr__(self, "symbols", tuple(self.symbols))
        for s in self.symbols:
            if not isinstance(s, Symbol):
                raise ValueError(f"not a Symbol: {s!r}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self.symbols)

    def __bool__(self) -> bool:
        return bool(self.symbols)

    @overload
    def __getitem__(self, index: int) -> Symbol: ...

    @overload
    def __getitem__(self, index: slice) -> "SymbolString": ...

    def __getitem__(self, index: Union[int, slice]):
        if isinstance(index, slice):
            return SymbolString(self.symbols[index])
        return self.symbols[index]

    def __add__(self, other: Union["SymbolString", Iterable[Symbol]]) -> "SymbolString":
        if isinstance(other, SymbolString):
            return SymbolString(self.symbols + other.symbols)
        return SymbolString(self.symbols + tuple(other))

    def startswith(self, prefix: "SymbolString") -> bool:
        return self.symbols[: len(prefix)] == prefix.symbols

    def endswith(self, suffix: "SymbolString") -> bool:
        if not suffix.symbols:
            return True
        return self.symbols[-len(suffix.symbols):] == suffix.symbols

    def is_all_terminal(self) -> bool:
        return all(s.is_terminal for s in self.symbols)

    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols)

    def __str__(self) -> str:
        return " ".join(s.name for s in self.symbols) if self.symbols else "_"

    def __repr__(self) -> str:
        return f"<{self}>"


EMPTY = SymbolString()
