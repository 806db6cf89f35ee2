"""Finite-memory Markov sources and their closed-form entropy rates.

A :class:`MarkovModel` of order ``k`` over ``m`` symbols stores one row per
``k``-block context (base-``m`` code, oldest symbol most significant); order
0 is an i.i.d. source with a single row. Besides sampling, the module
evaluates exact block probabilities, conditional entropies and cross
entropies, and the exact law of a Bernoulli source after the substitution
``0 1 -> 2``.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DominationError, ModelError
from .seqcore import SYMBOL_DTYPE, Alphabet, SymbolSequence
from .stats import TransitionMatrix, plogp_sum

ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MarkovModel:
    order: int
    transitions: np.ndarray
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        P = np.array(self.transitions, dtype=float)
        if P.ndim != 2:
            raise ModelError("transition table must be two-dimensional")
        m = P.shape[1]
        if self.order < 0:
            raise ModelError("order must be non-negative")
        if P.shape[0] != m**self.order:
            raise ModelError(f"order-{self.order} model over {m} symbols needs {m**self.order} rows")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1.0).max() > ROW_TOL:
            raise ModelError("transition rows must be non-negative and sum to 1")
        P.flags.writeable = False
        object.__setattr__(self, "transitions", P)
        labels = self.labels if self.labels is not None else tuple(str(i) for i in range(m))
        if len(labels) != m:
            raise ModelError("one label per symbol required")
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def alphabet_size(self) -> int:
        return self.transitions.shape[1]

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet.base(self.labels)

    @cached_property
    def stationary(self) -> np.ndarray:
        return stationary_distribution(self)

    # constructors -----------------------------------------------------------

    @classmethod
    def bernoulli(cls, p0: float) -> "MarkovModel":
        """Binary i.i.d. source with ``P(0) = p0``."""
        if not 0.0 <= p0 <= 1.0:
            raise ModelError("probability must lie in [0, 1]")
        return cls(0, np.array([[p0, 1.0 - p0]]))

    @classmethod
    def iid(cls, probs) -> "MarkovModel":
        return cls(0, np.asarray(probs, dtype=float)[None, :])

    @classmethod
    def flip(cls, q: float) -> "MarkovModel":
        """Binary order-1 chain that changes symbol with probability ``q``."""
        return cls(1, np.array([[1.0 - q, q], [q, 1.0 - q]]))

    @classmethod
    def random(cls, order: int, m: int = 2, seed=None, low: float = 0.1, high: float = 0.9) -> "MarkovModel":
        """Entries drawn uniformly in ``[low, high]`` then row-normalised."""
        rng = np.random.default_rng(seed)
        P = rng.uniform(low, high, size=(m**order, m))
        return cls(order, P / P.sum(axis=1, keepdims=True))

    @classmethod
    def markov5(cls, seed) -> "MarkovModel":
        """Binary order-5 model used by the convergence experiments."""
        return cls.random(5, 2, seed)

    def as_transition_matrix(self) -> TransitionMatrix:
        return TransitionMatrix.from_dense(self.transitions, self.stationary, self.order)


def _context_chain(model: MarkovModel) -> np.ndarray:
    """Dense transition matrix of the induced chain on k-block contexts."""
    k, m = model.order, model.alphabet_size
    S = m**k
    T = np.zeros((S, S))
    ctx = np.arange(S)
    for a in range(m):
        T[ctx, (ctx * m + a) % S] += model.transitions[:, a]
    return T


def stationary_distribution(model: MarkovModel, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Stationary law over ``k``-block contexts by power iteration.

    Iterates the lazy chain ``(I + T) / 2``, which has the same fixed point
    and is aperiodic, so periodic models converge too. Raises
    :class:`ModelError` when the chain has more than one closed class or
    fails to converge.
    """
    k, m = model.order, model.alphabet_size
    if k == 0:
        return np.ones(1)
    S = m**k
    T = _context_chain(model)
    graph = csr_matrix(T > 0)
    ncomp, comp = connected_components(graph, directed=True, connection="strong")
    if ncomp > 1:
        # closed classes are strongly connected components with no exit
        src, dst = graph.nonzero()
        leaving = np.zeros(ncomp, dtype=bool)
        leaving[comp[src][comp[src] != comp[dst]]] = True
        if (~leaving).sum() > 1:
            raise ModelError("context chain is reducible: stationary law is not unique")
    pi = np.full(S, 1.0 / S)
    M1 = S // m
    P = model.transitions.reshape(m, M1, m)
    for _ in range(max_iter):
        # mass moves from context (lead, suffix) to (suffix, a)
        step = (pi.reshape(m, M1)[:, :, None] * P).sum(axis=0).ravel()
        new = 0.5 * (pi + step)
        if np.abs(new - pi).sum() < tol:
            pi = new
            break
        pi = new
    else:
        raise ModelError(f"power iteration did not converge in {max_iter} iterations")
    return pi / pi.sum()


def block_probabilities(model: MarkovModel, length: int) -> np.ndarray:
    """Exact stationary probabilities of all ``length``-blocks, indexed by code."""
    k, m = model.order, model.alphabet_size
    if length < 0:
        raise ValueError("length must be non-negative")
    pi = model.stationary
    if length <= k:
        return pi.reshape(m**length, m ** (k - length)).sum(axis=1)
    probs = pi
    S = m**k
    for L in range(k, length):
        ctx = np.arange(m**L) % S
        probs = (probs[:, None] * model.transitions[ctx]).ravel()
    return probs


def generate(model: MarkovModel, n: int, seed=None) -> SymbolSequence:
    """Sample ``n`` symbols: an initial context from the stationary law, then the chain."""
    if n < 0:
        raise ValueError("length must be non-negative")
    rng = np.random.default_rng(seed)
    k, m = model.order, model.alphabet_size
    alphabet = model.alphabet
    if k == 0:
        cdf = np.cumsum(model.transitions[0])
        u = rng.random(n)
        out = np.minimum(np.searchsorted(cdf, u, side="right"), m - 1)
        return SymbolSequence(out.astype(SYMBOL_DTYPE), alphabet)
    pi = model.stationary
    first = int(min(np.searchsorted(np.cumsum(pi), rng.random(), side="right"), pi.size - 1))
    init = [(first // m ** (k - 1 - j)) % m for j in range(k)]
    if n <= k:
        return SymbolSequence(np.array(init[:n], dtype=SYMBOL_DTYPE), alphabet)
    S = m**k
    u = rng.random(n - k).tolist()
    out = np.empty(n, dtype=SYMBOL_DTYPE)
    out[:k] = init
    ctx = first
    if m == 2:
        p0 = model.transitions[:, 0].tolist()
        tail = []
        append = tail.append
        for x in u:
            a = 0 if x < p0[ctx] else 1
            append(a)
            ctx = (ctx * 2 + a) % S
    else:
        cdfs = [list(itertools.accumulate(row)) for row in model.transitions.tolist()]
        tail = []
        append = tail.append
        last = m - 1
        for x in u:
            a = min(bisect.bisect_right(cdfs[ctx], x), last)
            append(a)
            ctx = (ctx * m + a) % S
    out[k:] = tail
    return SymbolSequence(out, alphabet)


# --------------------------------------------------------------------------
# analytic rates
# --------------------------------------------------------------------------

def analytic_entropy_rate(model: MarkovModel) -> float:
    """``-sum_b pi(b) sum_a P(a|b) log P(a|b)`` in nats/symbol."""
    P = model.transitions
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(P), 0.0)
    return float(-(model.stationary * terms.sum(axis=1)).sum())


def analytic_block_entropy(model: MarkovModel, length: int) -> float:
    return plogp_sum(block_probabilities(model, length))


def analytic_conditional_entropy(model: MarkovModel, n: int) -> float:
    """Exact ``H_{n+1} - H_n`` of the stationary source."""
    return analytic_block_entropy(model, n + 1) - analytic_block_entropy(model, n)


def conditional_law(model: MarkovModel, context_length: int) -> np.ndarray:
    """``nu(a | w)`` for every ``w`` of the given length; rows indexed by code of ``w``.

    Rows for contexts of zero probability are left at zero.
    """
    k, m = model.order, model.alphabet_size
    if context_length >= k:
        ctx = np.arange(m**context_length) % (m**k)
        return model.transitions[ctx]
    joint = block_probabilities(model, context_length + 1).reshape(m**context_length, m)
    denom = joint.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, joint / denom, 0.0)


def analytic_cross_conditional_entropy(mu: MarkovModel, nu: MarkovModel, context_length: int) -> float:
    """``-sum mu(w a) log nu(a | w)`` over contexts ``w`` of the given length."""
    if mu.alphabet_size != nu.alphabet_size:
        raise ModelError("models must share an alphabet")
    m = mu.alphabet_size
    joint = block_probabilities(mu, context_length + 1).reshape(m**context_length, m)
    Q = conditional_law(nu, context_length)
    pos = joint > 0
    bad = pos & (Q <= 0)
    if bad.any():
        r, a = (int(x[0]) for x in np.nonzero(bad))
        block = tuple((r // m ** (context_length - 1 - j)) % m for j in range(context_length)) + (a,)
        raise DominationError(f"block {block} has positive mu-probability but zero nu-probability", block)
    return float(-(joint[pos] * np.log(Q[pos])).sum())


def analytic_cross_entropy_rate(mu: MarkovModel, nu: MarkovModel) -> float:
    """Cross entropy rate; saturated at context length ``max(k_mu, k_nu)``."""
    return analytic_cross_conditional_entropy(mu, nu, max(mu.order, nu.order))


def analytic_kl_rate(mu: MarkovModel, nu: MarkovModel) -> float:
    return analytic_cross_entropy_rate(mu, nu) - analytic_entropy_rate(mu)


# --------------------------------------------------------------------------
# exact law of a Bernoulli source after 01 -> 2
# --------------------------------------------------------------------------

def exact_bernoulli_transform(p: float) -> tuple[np.ndarray, TransitionMatrix]:
    """Stationary vector and transition matrix over ``{0, 1, 2}`` of the
    Bernoulli(``P(0) = p``) source rewritten by ``0 1 -> 2``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    q = 1.0 - p
    mu00, mu01 = p * p, p * q
    z = 1.0 / (1.0 - mu01)
    stationary = np.array([z * mu00, z * (q - mu01), z * mu01])
    P = np.array([
        [p, 0.0, q],
        [mu00, q, mu01],
        [mu00, q, mu01],
    ])
    return stationary, TransitionMatrix.from_dense(P, stationary, order=1)


def _block_key(block) -> str:
    if isinstance(block, str):
        return block
    return "".join(str(int(s)) for s in block)


def bernoulli_marginals(p: float, max_length: int = 4) -> dict[str, float]:
    """Block probabilities of a binary i.i.d. source, keyed by strings like ``"0101"``."""
    out = {}
    for L in range(1, max_length + 1):
        for bits in itertools.product("01", repeat=L):
            zeros = bits.count("0")
            out["".join(bits)] = p**zeros * (1.0 - p) ** (L - zeros)
    return out


def model_marginals(model: MarkovModel, max_length: int = 4) -> dict[str, float]:
    """Binary block probabilities of a model, in the format of :func:`exact_pair_table`."""
    if model.alphabet_size != 2:
        raise ModelError("only binary models have a 0/1 marginal table")
    out = {}
    for L in range(1, max_length + 1):
        probs = block_probabilities(model, L)
        for code, bits in enumerate(itertools.product("01", repeat=L)):
            out["".join(bits)] = float(probs[code])
    return out


def exact_pair_table(marginals: Mapping, tol: float = 1e-12) -> np.ndarray:
    """Pair law ``G(xy)`` over ``{0, 1, 2}`` after ``0 1 -> 2``, for any stationary binary source.

    ``marginals`` maps binary blocks of length 1..4 (strings or tuples) to
    probabilities. Row ``x``, column ``y`` of the result is ``G(xy)``.
    """
    mu = {_block_key(b): float(v) for b, v in marginals.items()}
    for L in range(2, 5):
        for bits in itertools.product("01", repeat=L - 1):
            w = "".join(bits)
            try:
                total = mu[w + "0"] + mu[w + "1"]
                if abs(total - mu[w]) > tol:
                    raise ValueError(f"marginals of {w!r} are inconsistent")
            except KeyError as exc:
                raise ValueError(f"missing block {exc.args[0]!r}") from None
    z = 1.0 / (1.0 - mu["01"])
    table = np.array([
        [mu["000"], 0.0, mu["001"]],
        [mu["10"] - mu["010"] - mu["101"] + mu["0101"], mu["11"] - mu["011"], mu["101"] - mu["0101"]],
        [mu["010"] - mu["0101"], mu["011"], mu["0101"]],
    ])
    return z * table


def pair_table_transition(table: np.ndarray) -> TransitionMatrix:
    """Order-1 law ``P(y|x) = G(xy) / G(x)`` from a pair table."""
    table = np.asarray(table, dtype=float)
    row = table.sum(axis=1)
    return TransitionMatrix.from_dense(table / row[:, None], row, order=1)


# --------------------------------------------------------------------------
# model files and specs
# --------------------------------------------------------------------------

def _format_block(block, labels, sep) -> str:
    return sep.join(labels[s] for s in block) if block else "-"


def write_model(model: MarkovModel, path: Union[str, Path]) -> None:
    """Header ``order k`` / ``alphabet m``, then ``block a prob`` rows."""
    m, k = model.alphabet_size, model.order
    labels = model.labels
    sep = "" if all(len(x) == 1 for x in labels) else ","
    lines = [f"order {k}", f"alphabet {m}"]
    for code in range(m**k):
        block = [(code // m ** (k - 1 - j)) % m for j in range(k)]
        for a in range(m):
            lines.append(f"{_format_block(block, labels, sep)} {labels[a]} {float(model.transitions[code, a])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_model(path: Union[str, Path]) -> MarkovModel:
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln]
    try:
        key1, k = lines[0].split()
        key2, m = lines[1].split()
        k, m = int(k), int(m)
    except (IndexError, ValueError):
        raise ModelError("model file must start with 'order k' and 'alphabet m'") from None
    if key1 != "order" or key2 != "alphabet":
        raise ModelError("model file must start with 'order k' and 'alphabet m'")
    labels = [str(i) for i in range(m)]
    index = {lab: i for i, lab in enumerate(labels)}
    P = np.full((m**k, m), np.nan)
    for ln in lines[2:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ModelError(f"bad model row {ln!r}")
        block, a, prob = parts
        if block == "-":
            syms = []
        elif "," in block:
            syms = block.split(",")
        else:
            syms = list(block)
        try:
            if len(syms) != k:
                raise KeyError(block)
            code = 0
            for s in syms:
                code = code * m + index[s]
            P[code, index[a]] = float(prob)
        except (KeyError, ValueError):
            raise ModelError(f"bad model row {ln!r}") from None
    if np.isnan(P).any():
        raise ModelError("model file does not define every transition")
    return MarkovModel(k, P)


def model_from_spec(spec: str) -> MarkovModel:
    """``bernoulli:P0``, ``flip:Q``, ``markov5:SEED`` (or ``markov5:seed=SEED``),
    ``markov:ORDER:SEED``, or a path to a model file."""
    name, _, arg = spec.partition(":")
    try:
        if name == "bernoulli":
            return MarkovModel.bernoulli(float(arg))
        if name == "flip":
            return MarkovModel.flip(float(arg))
        if name == "markov5":
            return MarkovModel.markov5(int(arg.removeprefix("seed=")))
        if name == "markov":
            order, _, seed = arg.partition(":")
            return MarkovModel.random(int(order), 2, int(seed.removeprefix("seed=")))
    except ValueError as exc:
        raise ModelError(f"bad model spec {spec!r}: {exc}") from None
    path = Path(spec)
    if not path.exists():
        raise ModelError(f"no such model file or spec: {spec!r}")
    return read_model(path)
