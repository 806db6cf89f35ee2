"""Pair substitution and the recursive substitution driver.

A substitution ``a b -> alpha`` scans a sequence left to right and replaces
each occurrence of ``a b`` by ``alpha``, consuming both symbols, so runs of
``a a`` are paired off greedily from the left. All passes are vectorised
numpy operations and linear in the sequence length.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import AlphabetMismatchError, InvalidRuleError, NoPairError
from .seqcore import Alphabet, SymbolSequence

# above this many cells the pair table is built with np.unique instead of bincount
_DENSE_PAIR_LIMIT = 1 << 22


@dataclass(frozen=True)
class SubstitutionRule:
    a: int
    b: int
    alpha: int

    def check(self, alphabet: Alphabet) -> None:
        if not (0 <= self.alpha < alphabet.size):
            raise InvalidRuleError(f"symbol {self.alpha} is not in the alphabet")
        if self.alpha in (self.a, self.b):
            raise InvalidRuleError("derived symbol must differ from the pair it replaces")
        if alphabet.origins[self.alpha] != (self.a, self.b):
            raise InvalidRuleError(
                f"symbol {self.alpha} is not registered as derived from ({self.a}, {self.b})"
            )

    def labels(self, alphabet: Alphabet) -> tuple[str, str, str]:
        lab = alphabet.labels
        return lab[self.a], lab[self.b], lab[self.alpha]


@dataclass(frozen=True)
class SubstitutionStep:
    rule: SubstitutionRule
    replacements: int
    length_before: int
    length_after: int

    @property
    def z_step(self) -> float:
        """Inverse contraction rate ``length_before / length_after`` (1 for an empty result)."""
        if self.length_after == 0:
            return 1.0
        return self.length_before / self.length_after


def _pair_starts(s: np.ndarray, a: int, b: int) -> np.ndarray:
    """Start positions of the pairs a left-to-right scan replaces."""
    if s.shape[0] < 2:
        return np.empty(0, dtype=np.int64)
    if a != b:
        # occurrences of ab cannot overlap when a != b
        return np.flatnonzero((s[:-1] == a) & (s[1:] == b))
    pos = np.flatnonzero(s == a)
    if pos.size == 0:
        return pos
    new_run = np.ones(pos.size, dtype=bool)
    new_run[1:] = np.diff(pos) != 1
    run_start = np.maximum.accumulate(np.where(new_run, pos, 0))
    last_in_run = np.ones(pos.size, dtype=bool)
    last_in_run[:-1] = new_run[1:]
    keep = ((pos - run_start) % 2 == 0) & ~last_in_run
    return pos[keep]


def substitute_pair(seq: SymbolSequence, rule: SubstitutionRule) -> tuple[SymbolSequence, SubstitutionStep]:
    """Apply ``rule`` to ``seq``; the rule's symbol must already be in ``seq.alphabet``.

    >>> from nsrps.seqcore import sequence_from_tokens, Alphabet
    >>> alpha, s = Alphabet.binary().with_pair(0, 1)
    >>> x = sequence_from_tokens("0 0 1 0", alpha)
    >>> substitute_pair(x, SubstitutionRule(0, 1, s))[0].labels()
    ['0', '(0.1)', '0']
    """
    rule.check(seq.alphabet)
    s = seq.symbols
    starts = _pair_starts(s, rule.a, rule.b)
    n = s.shape[0]
    r = int(starts.size)
    if r == 0:
        out = seq
    else:
        keep = np.ones(n, dtype=bool)
        keep[starts + 1] = False
        new = s[keep]
        new[starts - np.arange(r)] = rule.alpha
        out = SymbolSequence(new, seq.alphabet)
    return out, SubstitutionStep(rule, r, n, n - r)


def expand_pair(seq: SymbolSequence, rule: SubstitutionRule) -> SymbolSequence:
    """Inverse of :func:`substitute_pair`: every ``alpha`` becomes ``a b``."""
    s = seq.symbols
    hits = np.flatnonzero(s == rule.alpha)
    if hits.size == 0:
        return seq
    reps = np.ones(s.shape[0], dtype=np.int64)
    reps[hits] = 2
    out = np.repeat(s, reps)
    first = hits + np.arange(hits.size)
    out[first] = rule.a
    out[first + 1] = rule.b
    return SymbolSequence(out, seq.alphabet)


def pair_counts(seq: SymbolSequence) -> tuple[np.ndarray, np.ndarray]:
    """Non-overlapping pair counts as (codes, counts), codes = a*m + b, sorted.

    For ``a != b`` this is the plain occurrence count; for ``a == a`` it is
    the number of pairs a left-to-right scan would replace, i.e. the sum of
    ``floor(L/2)`` over runs of ``a`` of length ``L``.
    """
    s = seq.symbols.astype(np.int64)
    m = seq.alphabet.size
    if s.shape[0] < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    codes = s[:-1] * m + s[1:]
    if m * m <= _DENSE_PAIR_LIMIT:
        dense = np.bincount(codes, minlength=m * m)
        codes = np.flatnonzero(dense)
        counts = dense[codes]
    else:
        codes, counts = np.unique(codes, return_counts=True)
    # replace overlapping self-pair counts by the run-based non-overlapping ones
    change = np.flatnonzero(s[1:] != s[:-1]) + 1
    bounds = np.concatenate(([0], change, [s.shape[0]]))
    values = s[bounds[:-1]]
    run_pairs = (np.diff(bounds) // 2).astype(np.int64)
    self_counts = np.bincount(values, weights=run_pairs, minlength=m).astype(np.int64)
    a = codes // m
    is_self = a == codes % m
    counts = counts.copy()
    counts[is_self] = self_counts[a[is_self]]
    nz = counts > 0
    return codes[nz], counts[nz]


def choose_pair_most_frequent(seq: SymbolSequence) -> tuple[int, int]:
    """Pair with the largest non-overlapping count; ties go to the smallest ``(a, b)``."""
    if len(seq) < 2:
        raise NoPairError("need at least two symbols to choose a pair")
    codes, counts = pair_counts(seq)
    # codes are sorted, so argmax returns the lexicographically smallest maximiser
    best = int(codes[int(np.argmax(counts))])
    m = seq.alphabet.size
    return best // m, best % m


Strategy = Callable[[SymbolSequence, int], Optional[tuple[int, int]]]


def most_frequent(seq: SymbolSequence, step: int) -> tuple[int, int]:
    """Strategy: substitute the currently most frequent pair."""
    return choose_pair_most_frequent(seq)


class FixedSchedule:
    """Strategy replaying an explicit list of pairs.

    Pairs are given as symbol ids or labels; labels are looked up in the
    alphabet current at that step, so a schedule may refer to symbols created
    by its own earlier entries (``"(0.1)"``). Returns ``None`` once exhausted.
    """

    def __init__(self, pairs: Sequence[tuple[Union[int, str], Union[int, str]]]):
        self.pairs = list(pairs)

    def __call__(self, seq: SymbolSequence, step: int) -> Optional[tuple[int, int]]:
        if step >= len(self.pairs):
            return None
        a, b = self.pairs[step]
        if isinstance(a, str):
            a = seq.alphabet.index(a)
        if isinstance(b, str):
            b = seq.alphabet.index(b)
        return int(a), int(b)

    @classmethod
    def from_file(cls, path) -> "FixedSchedule":
        """One pair per line, two whitespace-separated labels; '#' starts a comment."""
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"bad schedule line {line!r}")
                pairs.append((parts[0], parts[1]))
        return cls(pairs)


@dataclass(frozen=True)
class NsrpsTrace:
    initial_length: int
    steps: tuple[SubstitutionStep, ...]
    final_sequence: SymbolSequence
    stopped_early: bool = False
    stop_reason: str = ""
    zbar: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        # initial/current length: equal to the running product of z_step, without rounding drift
        zbar = tuple(
            self.initial_length / st.length_after if st.length_after else 1.0
            for st in self.steps
        )
        object.__setattr__(self, "zbar", zbar)

    @property
    def final_alphabet(self) -> Alphabet:
        return self.final_sequence.alphabet

    @property
    def rules(self) -> list[SubstitutionRule]:
        return [st.rule for st in self.steps]

    @property
    def z_steps(self) -> list[float]:
        return [st.z_step for st in self.steps]

    def __len__(self):
        return len(self.steps)

    def to_tsv(self, out: Optional[TextIO] = None) -> Optional[str]:
        """Columns: step, a, b, alpha, replacements, length_after, z_step, zbar."""
        buf = out if out is not None else io.StringIO()
        buf.write("step\ta\tb\talpha\treplacements\tlength_after\tz_step\tzbar\n")
        alphabet = self.final_alphabet
        for i, (st, zb) in enumerate(zip(self.steps, self.zbar), start=1):
            a, b, alpha = st.rule.labels(alphabet)
            buf.write(
                f"{i}\t{a}\t{b}\t{alpha}\t{st.replacements}\t{st.length_after}\t"
                f"{st.z_step:.12g}\t{zb:.12g}\n"
            )
        if out is None:
            return buf.getvalue()
        return None


def _register(alphabet: Alphabet, a: int, b: int) -> tuple[Alphabet, SubstitutionRule]:
    alphabet, alpha = alphabet.with_pair(a, b)
    return alphabet, SubstitutionRule(a, b, alpha)


def run_nsrps(seq: SymbolSequence, n_steps: int, strategy: Strategy = most_frequent,
              observe: Optional[Callable[[int, SymbolSequence], None]] = None) -> NsrpsTrace:
    """Apply ``n_steps`` substitutions, each on a freshly registered symbol.

    Stops early, flagging the trace, when fewer than two symbols remain or
    the strategy has no further pair. ``observe(i, seq)`` is called with the
    input (``i == 0``) and with the sequence after every step.
    """
    if n_steps < 0:
        raise ValueError("number of steps must be non-negative")
    current = seq
    steps = []
    reason = ""
    if observe is not None:
        observe(0, current)
    for step in range(n_steps):
        if len(current) < 2:
            reason = "sequence shorter than 2"
            break
        pair = strategy(current, step)
        if pair is None:
            reason = "strategy exhausted"
            break
        alphabet, rule = _register(current.alphabet, *pair)
        current, record = substitute_pair(current.with_alphabet(alphabet), rule)
        steps.append(record)
        if observe is not None:
            observe(step + 1, current)
    return NsrpsTrace(len(seq), tuple(steps), current, bool(reason), reason)


def run_paired_nsrps(
    seq_mu: SymbolSequence,
    seq_nu: SymbolSequence,
    n_steps: int,
    driver: str = "nu",
    strategy: Strategy = most_frequent,
    observe: Optional[Callable[[int, SymbolSequence, SymbolSequence], None]] = None,
) -> tuple[NsrpsTrace, NsrpsTrace]:
    """Substitute the same pairs in both sequences, choosing them on the driver.

    A rule whose pair never occurs in the other sequence is applied as a
    no-op there (zero replacements, ``z_step == 1``). ``observe(i, mu, nu)``
    sees both sequences before the first and after every step.
    """
    if driver not in ("mu", "nu"):
        raise ValueError(f"driver must be 'mu' or 'nu', got {driver!r}")
    if seq_mu.alphabet != seq_nu.alphabet:
        raise AlphabetMismatchError("both sequences must be written over the same alphabet")
    if n_steps < 0:
        raise ValueError("number of steps must be non-negative")
    mu, nu = seq_mu, seq_nu
    steps_mu, steps_nu = [], []
    reason = ""
    if observe is not None:
        observe(0, mu, nu)
    for step in range(n_steps):
        lead = nu if driver == "nu" else mu
        if len(lead) < 2:
            reason = "driver sequence shorter than 2"
            break
        pair = strategy(lead, step)
        if pair is None:
            reason = "strategy exhausted"
            break
        alphabet, rule = _register(lead.alphabet, *pair)
        mu, rec_mu = substitute_pair(mu.with_alphabet(alphabet), rule)
        nu, rec_nu = substitute_pair(nu.with_alphabet(alphabet), rule)
        steps_mu.append(rec_mu)
        steps_nu.append(rec_nu)
        if observe is not None:
            observe(step + 1, mu, nu)
    early = bool(reason)
    return (
        NsrpsTrace(len(seq_mu), tuple(steps_mu), mu, early, reason),
        NsrpsTrace(len(seq_nu), tuple(steps_nu), nu, early, reason),
    )
