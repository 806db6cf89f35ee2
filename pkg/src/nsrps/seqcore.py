"""Symbols, alphabets and sequences.

Symbols are dense integer ids ``0..size-1``. An :class:`Alphabet` records for
every id whether it is a base symbol or a derived symbol abbreviating a pair
of older ids, so a derived alphabet always knows how to expand itself.
Sequences are stored as read-only ``int32`` numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import NsrpsError, UnknownTokenError

MAX_ALPHABET = 2**16
SYMBOL_DTYPE = np.int32

Pair = tuple[int, int]


@dataclass(frozen=True)
class Alphabet:
    """Append-only symbol inventory.

    ``origins[i]`` is ``None`` for a base symbol and ``(a, b)`` for a symbol
    derived from the pair ``a b``; ``labels[i]`` is its printable token.
    """

    labels: tuple[str, ...]
    origins: tuple[Optional[Pair], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.labels) != len(self.origins):
            raise ValueError("labels and origins must have the same length")
        if len(self.labels) > MAX_ALPHABET:
            raise NsrpsError(f"alphabet larger than {MAX_ALPHABET} symbols")
        index = {}
        for i, label in enumerate(self.labels):
            if not label or any(c.isspace() for c in label):
                raise ValueError(f"invalid label {label!r}")
            if label in index:
                raise ValueError(f"duplicate label {label!r}")
            index[label] = i
        for i, origin in enumerate(self.origins):
            if origin is not None and not (0 <= origin[0] < i and 0 <= origin[1] < i):
                raise ValueError(f"derived symbol {i} must be built from older symbols")
        object.__setattr__(self, "_index", index)

    @classmethod
    def base(cls, labels: Iterable[str]) -> "Alphabet":
        labels = tuple(str(x) for x in labels)
        return cls(labels, (None,) * len(labels))

    @classmethod
    def binary(cls) -> "Alphabet":
        return cls.base(["0", "1"])

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownTokenError(f"unknown token {label!r}") from None

    def __contains__(self, label) -> bool:
        return label in self._index

    def is_derived(self, symbol: int) -> bool:
        return self.origins[symbol] is not None

    def with_pair(self, a: int, b: int, label: Optional[str] = None) -> tuple["Alphabet", int]:
        """Return a new alphabet with one more symbol standing for ``a b``."""
        if not (0 <= a < self.size and 0 <= b < self.size):
            raise ValueError(f"pair ({a}, {b}) outside alphabet of size {self.size}")
        if label is None:
            label = f"({self.labels[a]}.{self.labels[b]})"
        alpha = self.size
        return Alphabet(self.labels + (label,), self.origins + ((a, b),)), alpha

    def expansion(self, symbol: int) -> tuple[int, ...]:
        """Base symbols that ``symbol`` stands for."""
        out = []
        stack = [symbol]
        while stack:
            s = stack.pop()
            origin = self.origins[s]
            if origin is None:
                out.append(s)
            else:
                stack.append(origin[1])
                stack.append(origin[0])
        return tuple(out)

    def base_alphabet(self) -> "Alphabet":
        keep = [i for i, o in enumerate(self.origins) if o is None]
        if keep != list(range(len(keep))):
            raise NsrpsError("base symbols are not a prefix of the alphabet")
        return Alphabet.base(self.labels[: len(keep)])

    def extends(self, other: "Alphabet") -> bool:
        """True when ``other`` is a prefix of this alphabet."""
        n = other.size
        return self.labels[:n] == other.labels and self.origins[:n] == other.origins


@dataclass(frozen=True)
class SymbolSequence:
    """A finite word over ``alphabet``."""

    symbols: np.ndarray
    alphabet: Alphabet

    def __post_init__(self):
        arr = np.asarray(self.symbols)
        if arr.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if arr.dtype != SYMBOL_DTYPE:
            arr = arr.astype(SYMBOL_DTYPE)
        elif arr.flags.writeable:
            arr = arr.copy()
        if arr.size and (arr.min() < 0 or arr.max() >= self.alphabet.size):
            raise ValueError("symbol id outside the alphabet")
        arr.flags.writeable = False
        object.__setattr__(self, "symbols", arr)

    def __len__(self):
        return int(self.symbols.shape[0])

    def __iter__(self):
        return iter(self.symbols.tolist())

    def __getitem__(self, item):
        if isinstance(item, slice):
            return SymbolSequence(self.symbols[item], self.alphabet)
        return int(self.symbols[item])

    def __eq__(self, other):
        if not isinstance(other, SymbolSequence):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.symbols, other.symbols)

    def __hash__(self):
        return hash((self.alphabet.labels, self.symbols.tobytes()))

    def __repr__(self):
        head = " ".join(self.alphabet.labels[s] for s in self.symbols[:20].tolist())
        more = " ..." if len(self) > 20 else ""
        return f"SymbolSequence([{head}{more}], n={len(self)}, alphabet={self.alphabet.size})"

    @property
    def n(self) -> int:
        return len(self)

    def labels(self) -> list[str]:
        lab = self.alphabet.labels
        return [lab[s] for s in self.symbols.tolist()]

    def with_alphabet(self, alphabet: Alphabet) -> "SymbolSequence":
        """Re-attach to an alphabet that extends the current one."""
        if not alphabet.extends(self.alphabet):
            raise ValueError("new alphabet must extend the current one")
        return SymbolSequence(self.symbols, alphabet)

    def expand(self) -> "SymbolSequence":
        """Rewrite every derived symbol into its base symbols."""
        alpha = self.alphabet
        if not any(o is not None for o in alpha.origins):
            return self
        table = [alpha.expansion(s) for s in range(alpha.size)]
        out = [x for s in self.symbols.tolist() for x in table[s]]
        return SymbolSequence(np.array(out, dtype=SYMBOL_DTYPE), alpha.base_alphabet())


def sequence(symbols: Sequence[int], alphabet: Union[Alphabet, int, None] = None) -> SymbolSequence:
    """Build a sequence from integer ids; ``alphabet`` may be a size."""
    arr = np.asarray(symbols, dtype=SYMBOL_DTYPE)
    if alphabet is None:
        alphabet = int(arr.max()) + 1 if arr.size else 0
    if isinstance(alphabet, int):
        alphabet = Alphabet.base([str(i) for i in range(alphabet)])
    return SymbolSequence(arr, alphabet)


def infer_alphabet(*token_lists: Iterable[str]) -> Alphabet:
    """Base alphabet of the distinct tokens, in order of first appearance."""
    seen = {}
    for tokens in token_lists:
        for tok in tokens:
            if tok not in seen:
                seen[tok] = len(seen)
    return Alphabet.base(seen)


def sequence_from_tokens(text: Union[str, Sequence[str]], alphabet: Union[Alphabet, str] = "infer") -> SymbolSequence:
    """Parse a whitespace-separated token stream.

    With ``alphabet="infer"`` a base alphabet is built from the distinct
    tokens in order of first appearance; otherwise every token must be a
    label of ``alphabet``.

    >>> sequence_from_tokens("a b a c").symbols.tolist()
    [0, 1, 0, 2]
    """
    tokens = text.split() if isinstance(text, str) else list(text)
    if isinstance(alphabet, str):
        if alphabet != "infer":
            raise ValueError(f"alphabet must be an Alphabet or 'infer', got {alphabet!r}")
        alphabet = infer_alphabet(tokens)
    lookup = alphabet._index
    try:
        ids = [lookup[t] for t in tokens]
    except KeyError as exc:
        raise UnknownTokenError(f"unknown token {exc.args[0]!r}") from None
    return SymbolSequence(np.array(ids, dtype=SYMBOL_DTYPE), alphabet)


def sequence_to_tokens(seq: SymbolSequence) -> str:
    return " ".join(seq.labels())


def byte_label(value: int) -> str:
    return f"{value:02x}"


def sequence_from_bytes(data: bytes, alphabet: Union[Alphabet, str] = "infer") -> SymbolSequence:
    """One base symbol per byte; labels are two-digit lowercase hex."""
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    if isinstance(alphabet, str):
        if alphabet != "infer":
            raise ValueError(f"alphabet must be an Alphabet or 'infer', got {alphabet!r}")
        # first-appearance order, as in token mode
        values, first = np.unique(raw, return_index=True)
        order = values[np.argsort(first)]
        alphabet = Alphabet.base(byte_label(int(v)) for v in order)
    table = np.full(256, -1, dtype=np.int64)
    for i, label in enumerate(alphabet.labels):
        if alphabet.origins[i] is None and len(label) == 2:
            try:
                table[int(label, 16)] = i
            except ValueError:
                pass
    ids = table[raw]
    if ids.size and ids.min() < 0:
        bad = int(raw[np.argmax(ids < 0)])
        raise UnknownTokenError(f"unknown byte {bad:#04x}")
    return SymbolSequence(ids.astype(SYMBOL_DTYPE), alphabet)


def sequence_to_bytes(seq: SymbolSequence) -> bytes:
    """Inverse of :func:`sequence_from_bytes`; derived symbols are expanded."""
    seq = seq.expand()
    try:
        values = np.array([int(label, 16) for label in seq.alphabet.labels], dtype=np.int64)
    except ValueError:
        raise NsrpsError("alphabet labels are not byte values") from None
    if values.size and (values.min() < 0 or values.max() > 255):
        raise NsrpsError("alphabet labels are not byte values")
    return values[seq.symbols].astype(np.uint8).tobytes() if len(seq) else b""


def read_alphabet(path: Union[str, Path]) -> Alphabet:
    """Sidecar file: one label per line, line number is the symbol id."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return Alphabet.base(line.strip() for line in lines if line.strip())


def write_alphabet(alphabet: Alphabet, path: Union[str, Path]) -> None:
    Path(path).write_text("".join(label + "\n" for label in alphabet.labels), encoding="utf-8")


def read_sequence(path: Union[str, Path], fmt: str = "tokens", alphabet: Union[Alphabet, str] = "infer") -> SymbolSequence:
    path = Path(path)
    if fmt == "bytes":
        return sequence_from_bytes(path.read_bytes(), alphabet)
    if fmt == "tokens":
        return sequence_from_tokens(path.read_text(encoding="utf-8"), alphabet)
    raise ValueError(f"unknown format {fmt!r}")


def write_sequence(seq: SymbolSequence, path: Union[str, Path], fmt: str = "tokens") -> None:
    path = Path(path)
    if fmt == "bytes":
        path.write_bytes(sequence_to_bytes(seq))
    elif fmt == "tokens":
        text = sequence_to_tokens(seq)
        path.write_text(text + "\n" if text else "", encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}")
