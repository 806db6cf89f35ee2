"""Empirical block statistics and entropy functionals (natural log throughout).

Counts use overlapping windows without wraparound and are kept as integers;
entropies are computed in double precision from the counts.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass
from typing import Optional, TextIO, Union

import numpy as np

from .errors import DominationError, InsufficientDataError, NsrpsError
from .seqcore import SymbolSequence

_MAX_CODE = 1 << 62


# --------------------------------------------------------------------------
# zero-probability policies
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroPolicy:
    """How to treat a mu-positive cell that has zero probability under nu.

    ``strict`` raises :class:`DominationError`; ``epsilon`` adds ``c``
    pseudo-counts to every cell of each offending nu row; ``infinity``
    returns ``inf``.
    """

    kind: str
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("strict", "epsilon", "infinity"):
            raise ValueError(f"unknown zero policy {self.kind!r}")
        if self.kind == "epsilon" and not self.c > 0:
            raise ValueError("pseudo-count must be positive")

    @classmethod
    def parse(cls, spec: Union[str, "ZeroPolicy"]) -> "ZeroPolicy":
        """Accepts 'strict', 'infinity', 'epsilon', 'epsilon(0.5)' or 'epsilon:0.5'."""
        if isinstance(spec, ZeroPolicy):
            return spec
        m = re.fullmatch(r"\s*(\w+)\s*(?:[(:]\s*([0-9.eE+-]+)\s*\)?)?\s*", spec)
        if not m:
            raise ValueError(f"bad zero policy {spec!r}")
        kind, c = m.group(1), m.group(2)
        return cls(kind, float(c)) if c is not None else cls(kind)

    def __str__(self):
        return f"epsilon({self.c:g})" if self.kind == "epsilon" else self.kind


STRICT = ZeroPolicy("strict")
EPSILON = ZeroPolicy("epsilon", 1.0)
INFINITY = ZeroPolicy("infinity")


# --------------------------------------------------------------------------
# block encoding
# --------------------------------------------------------------------------

def _check_encodable(m: int, k: int) -> None:
    if max(m, 1) ** k >= _MAX_CODE:
        raise NsrpsError(f"{k}-blocks over {m} symbols do not fit a 64-bit code")


def encode_windows(symbols: np.ndarray, k: int, m: int, count: Optional[int] = None) -> np.ndarray:
    """Base-``m`` codes of the first ``count`` overlapping ``k``-windows."""
    _check_encodable(m, k)
    n = symbols.shape[0]
    w = n - k + 1 if count is None else count
    s = symbols.astype(np.int64)
    codes = np.zeros(max(w, 0), dtype=np.int64)
    for j in range(k):
        codes *= m
        codes += s[j : j + w]
    return codes


def decode_blocks(codes: np.ndarray, k: int, m: int) -> np.ndarray:
    out = np.empty((codes.shape[0], k), dtype=np.int64)
    c = codes.astype(np.int64).copy()
    for j in range(k - 1, -1, -1):
        out[:, j] = c % m
        c //= m
    return out


def plogp_sum(p: np.ndarray) -> float:
    """``-sum p log p`` over the strictly positive entries."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


# --------------------------------------------------------------------------
# block distributions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockDistribution:
    """Counts of the distinct ``k``-blocks seen in a sequence.

    ``codes`` are sorted base-``alphabet_size`` block codes (first symbol most
    significant) and ``counts`` the matching integer counts.
    """

    k: int
    codes: np.ndarray
    counts: np.ndarray
    alphabet_size: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def frequencies(self) -> np.ndarray:
        total = self.total
        return self.counts / total if total else self.counts.astype(float)

    @property
    def blocks(self) -> np.ndarray:
        return decode_blocks(self.codes, self.k, self.alphabet_size)

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return {tuple(b): int(c) for b, c in zip(self.blocks.tolist(), self.counts.tolist())}

    def count(self, block) -> int:
        code = 0
        for s in block:
            code = code * self.alphabet_size + int(s)
        i = np.searchsorted(self.codes, code)
        if i < self.codes.size and self.codes[i] == code:
            return int(self.counts[i])
        return 0

    def marginal(self) -> "BlockDistribution":
        """Sum out the last symbol: counts of the (k-1)-block prefixes."""
        if self.k < 1:
            raise ValueError("cannot marginalise a 0-block distribution")
        prefix = self.codes // self.alphabet_size
        codes, inv = np.unique(prefix, return_inverse=True)
        counts = np.bincount(inv, weights=self.counts).astype(np.int64)
        return BlockDistribution(self.k - 1, codes, counts, self.alphabet_size)

    def to_tsv(self, labels=None, out: Optional[TextIO] = None) -> Optional[str]:
        """Columns: block (space-separated labels), count."""
        buf = out if out is not None else io.StringIO()
        buf.write("block\tcount\n")
        for block, c in zip(self.blocks.tolist(), self.counts.tolist()):
            names = [labels[s] for s in block] if labels is not None else [str(s) for s in block]
            buf.write(f"{' '.join(names)}\t{c}\n")
        return buf.getvalue() if out is None else None


def block_distribution(seq: SymbolSequence, k: int, windows: Optional[int] = None) -> BlockDistribution:
    """Overlapping ``k``-block counts of ``seq``.

    ``windows`` limits the count to the first ``windows`` windows, which is
    how :func:`conditional_entropy` keeps the k- and (k+1)-block spans equal.
    """
    n = len(seq)
    if k < 1:
        raise ValueError("block length must be at least 1")
    if k > n:
        raise InsufficientDataError(f"need at least {k} symbols, got {n}")
    available = n - k + 1
    if windows is None:
        windows = available
    elif not 0 <= windows <= available:
        raise InsufficientDataError(f"only {available} windows of length {k}")
    m = seq.alphabet.size
    codes = encode_windows(seq.symbols, k, m, windows)
    if m**k <= 1 << 22:
        dense = np.bincount(codes, minlength=m**k)
        uniq = np.flatnonzero(dense)
        counts = dense[uniq].astype(np.int64)
    else:
        uniq, counts = np.unique(codes, return_counts=True)
    return BlockDistribution(k, uniq.astype(np.int64), counts.astype(np.int64), m)


def block_entropy(dist: BlockDistribution) -> float:
    """Shannon entropy of the empirical block frequencies, in nats."""
    return plogp_sum(dist.frequencies)


def conditional_entropy(seq: SymbolSequence, n: int) -> float:
    """``H_{n+1} - H_n`` with both terms counted over the same window starts."""
    if n < 0:
        raise ValueError("context length must be non-negative")
    length = len(seq)
    if length < n + 1:
        raise InsufficientDataError(f"need at least {n + 1} symbols, got {length}")
    if n == 0:
        return block_entropy(block_distribution(seq, 1))
    w = length - n
    upper = block_distribution(seq, n + 1, w)
    lower = block_distribution(seq, n, w)
    return block_entropy(upper) - block_entropy(lower)


# --------------------------------------------------------------------------
# transition matrices
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    """Order-``k`` conditional law, one row per context block.

    ``context_codes`` are the sorted codes of the row contexts; ``probs`` is
    ``(rows, m)``; ``marginal`` the row weights (the context distribution);
    ``counts`` the integer transition counts when estimated from data.
    ``flagged`` rows had no outgoing transitions and hold a uniform law.
    """

    order: int
    alphabet_size: int
    context_codes: np.ndarray
    probs: np.ndarray
    marginal: np.ndarray
    counts: Optional[np.ndarray] = None
    flagged: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.flagged is None:
            object.__setattr__(self, "flagged", np.zeros(self.probs.shape[0], dtype=bool))

    @property
    def contexts(self) -> np.ndarray:
        return decode_blocks(self.context_codes, self.order, self.alphabet_size)

    def row_of(self, context_codes: np.ndarray) -> np.ndarray:
        """Row index per context code, -1 where the context has no row."""
        context_codes = np.asarray(context_codes, dtype=np.int64)
        if self.order == 0:
            return np.zeros(context_codes.shape, dtype=np.int64)
        idx = np.searchsorted(self.context_codes, context_codes)
        idx = np.minimum(idx, max(self.context_codes.size - 1, 0))
        ok = self.context_codes.size > 0
        hit = (self.context_codes[idx] == context_codes) if ok else np.zeros(context_codes.shape, bool)
        return np.where(hit, idx, -1)

    def prob(self, context, symbol: int) -> float:
        code = 0
        for s in context:
            code = code * self.alphabet_size + int(s)
        row = int(self.row_of(np.array([code]))[0])
        return 0.0 if row < 0 else float(self.probs[row, symbol])

    @classmethod
    def from_dense(cls, probs, marginal=None, order: int = 1) -> "TransitionMatrix":
        """Exact matrix with one row per context, contexts in code order."""
        probs = np.asarray(probs, dtype=float)
        m = probs.shape[1]
        rows = probs.shape[0]
        if rows != m**order:
            raise ValueError(f"expected {m**order} rows for order {order}, got {rows}")
        if marginal is None:
            marginal = np.full(rows, 1.0 / rows)
        return cls(order, m, np.arange(rows, dtype=np.int64), probs, np.asarray(marginal, dtype=float))

    def to_tsv(self, labels=None, out: Optional[TextIO] = None) -> Optional[str]:
        """Columns: context (space-separated labels), symbol, probability."""
        buf = out if out is not None else io.StringIO()
        buf.write("context\tsymbol\tprobability\n")
        name = (lambda s: labels[s]) if labels is not None else str
        for ctx, row in zip(self.contexts.tolist(), self.probs):
            c = " ".join(name(s) for s in ctx) if ctx else "-"
            for a in np.flatnonzero(row).tolist():
                buf.write(f"{c}\t{name(a)}\t{row[a]:.17g}\n")
        return buf.getvalue() if out is None else None


def transition_matrix(seq: SymbolSequence, k: int) -> TransitionMatrix:
    """Empirical order-``k`` law from the overlapping (k+1)-window counts.

    Rows are the contexts observed in the first ``n - k`` windows; the row
    marginal is the context frequency over those windows.
    """
    m = seq.alphabet.size
    dist = block_distribution(seq, k + 1)
    ctx = dist.codes // m
    sym = dist.codes % m
    context_codes, row = np.unique(ctx, return_inverse=True)
    counts = np.zeros((context_codes.size, m), dtype=np.int64)
    counts[row, sym] = dist.counts
    rowsum = counts.sum(axis=1)
    probs = counts / rowsum[:, None]
    return TransitionMatrix(k, m, context_codes, probs, rowsum / dist.total, counts)


def markov1_projection(seq: SymbolSequence) -> TransitionMatrix:
    """Order-1 Markov chain with the pair statistics of ``seq``.

    Every symbol of the alphabet gets a row. A symbol with no outgoing pair
    (absent, or seen only as the last symbol) gets a uniform row and is
    flagged; its marginal weight is zero so it never enters KL sums.
    """
    n = len(seq)
    if n < 2:
        raise InsufficientDataError("need at least 2 symbols for a pair projection")
    m = seq.alphabet.size
    s = seq.symbols.astype(np.int64)
    counts = np.bincount(s[:-1] * m + s[1:], minlength=m * m).reshape(m, m)
    rowsum = counts.sum(axis=1)
    flagged = rowsum == 0
    probs = np.empty((m, m), dtype=float)
    probs[~flagged] = counts[~flagged] / rowsum[~flagged, None]
    probs[flagged] = 1.0 / m
    return TransitionMatrix(1, m, np.arange(m, dtype=np.int64), probs, rowsum / (n - 1), counts, flagged)


# --------------------------------------------------------------------------
# cross entropy and KL
# --------------------------------------------------------------------------

def _nu_cells(trans_nu: TransitionMatrix, ctx_codes, symbols, policy: ZeroPolicy):
    """nu-probabilities at the requested (context, symbol) cells after smoothing.

    Returns None when the infinity policy applies. Only the rows that would
    otherwise give zero probability to a requested cell are smoothed.
    """
    rows = trans_nu.row_of(ctx_codes)
    q = np.zeros(rows.shape, dtype=float)
    present = rows >= 0
    q[present] = trans_nu.probs[rows[present], symbols[present]]
    flagged = np.zeros(rows.shape, dtype=bool)
    flagged[present] = trans_nu.flagged[rows[present]]
    bad = ~present | flagged | (q <= 0)
    if not bad.any():
        return q
    if policy.kind == "strict":
        i = int(np.flatnonzero(bad)[0])
        ctx = tuple(decode_blocks(np.array([ctx_codes[i]]), trans_nu.order, trans_nu.alphabet_size)[0].tolist())
        block = ctx + (int(symbols[i]),)
        raise DominationError(f"block {block} has positive mu-frequency but zero nu-probability", block)
    if policy.kind == "infinity":
        return None
    if trans_nu.counts is None:
        raise ValueError("epsilon smoothing needs an empirical (count-based) nu model")
    m = trans_nu.alphabet_size
    c = policy.c
    # whole rows are smoothed: every cell of an offending row gets c pseudo-counts
    bad_rows = np.unique(rows[bad & present])
    smooth = np.zeros(rows.shape, dtype=bool)
    if bad_rows.size:
        smooth = np.isin(rows, bad_rows) & present
    cnt = trans_nu.counts
    if smooth.any():
        r = rows[smooth]
        q[smooth] = (cnt[r, symbols[smooth]] + c) / (cnt[r].sum(axis=1) + c * m)
    q[~present] = 1.0 / m
    return q


def cross_conditional_entropy(
    dist_mu: BlockDistribution,
    trans_nu: TransitionMatrix,
    policy: Union[str, ZeroPolicy, None] = None,
) -> float:
    """``-sum f_mu(w a) log nu(a | w)`` over (k+1)-blocks ``w a`` of ``dist_mu``.

    The default policy is ``strict`` for exact models and ``epsilon(1)`` for
    models carrying counts.
    """
    if dist_mu.k != trans_nu.order + 1:
        raise ValueError(f"block length {dist_mu.k} does not match model order {trans_nu.order}")
    if dist_mu.alphabet_size > trans_nu.alphabet_size:
        raise ValueError("mu blocks use symbols outside the nu alphabet")
    policy = _default_policy(trans_nu, policy)
    m = dist_mu.alphabet_size
    if m != trans_nu.alphabet_size:
        # re-code blocks in the nu alphabet radix
        blocks = dist_mu.blocks
        mn = trans_nu.alphabet_size
        ctx = np.zeros(blocks.shape[0], dtype=np.int64)
        for j in range(blocks.shape[1] - 1):
            ctx = ctx * mn + blocks[:, j]
        sym = blocks[:, -1]
    else:
        ctx = dist_mu.codes // m
        sym = dist_mu.codes % m
    f = dist_mu.frequencies
    q = _nu_cells(trans_nu, ctx, sym, policy)
    if q is None:
        return math.inf
    return float(-(f * np.log(q)).sum())


def kl_1block(
    trans_mu: TransitionMatrix,
    trans_nu: TransitionMatrix,
    policy: Union[str, ZeroPolicy, None] = None,
    marginal: Optional[np.ndarray] = None,
) -> float:
    """``sum_x pi(x) sum_y P(y|x) log(P(y|x) / Q(y|x))``.

    ``pi`` is ``trans_mu.marginal`` unless given; flagged mu rows are skipped.
    """
    if trans_mu.order != trans_nu.order or trans_mu.alphabet_size != trans_nu.alphabet_size:
        raise ValueError("models must share order and alphabet")
    policy = _default_policy(trans_nu, policy)
    pi = trans_mu.marginal if marginal is None else np.asarray(marginal, dtype=float)
    weights = pi[:, None] * trans_mu.probs
    weights[trans_mu.flagged] = 0.0
    r, y = np.nonzero(weights > 0)
    q = _nu_cells(trans_nu, trans_mu.context_codes[r], y, policy)
    if q is None:
        return math.inf
    p = trans_mu.probs[r, y]
    return float((weights[r, y] * (np.log(p) - np.log(q))).sum())


def _default_policy(trans_nu: TransitionMatrix, policy) -> ZeroPolicy:
    if policy is None:
        return EPSILON if trans_nu.counts is not None else STRICT
    return ZeroPolicy.parse(policy)
