"""Entropy, cross entropy and KL estimates from recursive pair substitution,
plus the single-shot returning-time and waiting-time estimators.

After ``N`` substitutions the pair statistics of the shortened sequence,
divided by the cumulative contraction factor ``zbar``, estimate rates of the
original source. The full series over ``N = 0..n_steps`` is always returned;
no step count is singled out as best.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import DominationError
from .seqcore import SymbolSequence
from .stats import (
    ZeroPolicy,
    block_distribution,
    conditional_entropy,
    kl_1block,
    markov1_projection,
)
from .substitution import Strategy, SubstitutionRule, most_frequent, run_nsrps, run_paired_nsrps

DEFAULT_PREFIX_LENGTHS = (5, 10, 15, 20, 25)


@dataclass
class EstimateSeries:
    """Per-step estimates, step 0 being the untouched input.

    ``estimate[i] == h1[i] / zbar_mu[i]``. For cross entropy series ``h1``
    is the transformed 1-block cross entropy; for KL series it is the
    transformed 1-block KL. ``cross`` and ``kl`` are filled for paired runs.
    """

    kind: str
    steps: list[int]
    zbar_mu: list[float]
    zbar_nu: list[float]
    h1: list[float]
    estimate: list[float]
    cross: Optional[list[float]] = None
    kl: Optional[list[float]] = None
    entropy: Optional[list[float]] = None
    rules: list[SubstitutionRule] = field(default_factory=list)
    lengths_mu: list[int] = field(default_factory=list)
    lengths_nu: list[int] = field(default_factory=list)
    rule_bytes: list[int] = field(default_factory=list)
    table_bytes: list[int] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    policy: str = ""
    labels: Optional[Sequence[str]] = None

    def __len__(self):
        return len(self.steps)

    @property
    def final(self) -> float:
        return self.estimate[-1]

    def to_rows(self, bits: bool = False, analytic: Optional[float] = None) -> list[dict]:
        """One dict per step; rates converted to bits when ``bits``.

        ``rule_bytes`` and ``table_bytes`` are informational description
        lengths of the rule list and of the pair table; they are never
        subtracted from the estimates.
        """
        scale = 1.0 / math.log(2) if bits else 1.0
        rows = []
        for i, step in enumerate(self.steps):
            row = {
                "N": step,
                "zbar_mu": self.zbar_mu[i],
                "zbar_nu": self.zbar_nu[i],
                "h1": self.h1[i] * scale,
                "estimate": self.estimate[i] * scale,
            }
            if self.cross is not None:
                row["cross"] = self.cross[i] * scale
            if self.kl is not None:
                row["kl"] = self.kl[i] * scale
            if analytic is not None:
                row["analytic"] = analytic * scale
                row["rel_error"] = (self.estimate[i] - analytic) / analytic if analytic else math.nan
            row["rule_bytes"] = self.rule_bytes[i] if self.rule_bytes else 0
            row["table_bytes"] = self.table_bytes[i] if self.table_bytes else 0
            row["flags"] = self.flags[i] if self.flags else ""
            rows.append(row)
        return rows

    def to_tsv(self, out: Optional[TextIO] = None, bits: bool = False,
               analytic: Optional[float] = None, seed=None) -> Optional[str]:
        buf = out if out is not None else io.StringIO()
        rows = self.to_rows(bits=bits, analytic=analytic)
        if not rows:
            return buf.getvalue() if out is None else None
        cols = list(rows[0])
        if seed is not None:
            cols = ["seed"] + cols
        buf.write("\t".join(cols) + "\n")
        for row in rows:
            if seed is not None:
                row = {"seed": seed, **row}
            buf.write("\t".join(_fmt(row[c]) for c in cols) + "\n")
        return buf.getvalue() if out is None else None


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value) if value != "" else "-"


def _description_bytes(seq: SymbolSequence, n_rules: int) -> tuple[int, int]:
    """Bytes to write ``n_rules`` pairs and the non-zero pair-count table of ``seq``."""
    m = max(seq.alphabet.size, 2)
    sym_bytes = max(1, math.ceil(math.log2(m) / 8))
    rule_bytes = n_rules * 2 * sym_bytes
    if len(seq) < 2:
        return rule_bytes, 0
    counts = block_distribution(seq, 2)
    count_bytes = max(1, math.ceil(math.log2(int(counts.counts.max()) + 1) / 8))
    return rule_bytes, int(counts.codes.size) * (2 * sym_bytes + count_bytes)


def _h1(seq: SymbolSequence) -> float:
    return conditional_entropy(seq, 1) if len(seq) >= 2 else 0.0


def entropy_via_nsrps(seq: SymbolSequence, n_steps: int, strategy: Strategy = most_frequent) -> EstimateSeries:
    """``h_1`` of each transformed sequence divided by its contraction ``zbar``.

    >>> from nsrps.seqcore import sequence_from_tokens
    >>> s = entropy_via_nsrps(sequence_from_tokens("0 1 " * 50), 1)
    >>> [round(x, 12) for x in s.estimate]
    [0.0, 0.0]
    """
    series = EstimateSeries("entropy", [], [], [], [], [])
    n0 = len(seq)

    def observe(i, current):
        h1 = _h1(current)
        zb = n0 / len(current) if len(current) else 1.0
        rb, tb = _description_bytes(current, i)
        series.steps.append(i)
        series.zbar_mu.append(zb)
        series.zbar_nu.append(math.nan)
        series.h1.append(h1)
        series.estimate.append(h1 / zb)
        series.lengths_mu.append(len(current))
        series.rule_bytes.append(rb)
        series.table_bytes.append(tb)
        series.flags.append("")

    trace = run_nsrps(seq, n_steps, strategy, observe=observe)
    series.rules = trace.rules
    series.labels = trace.final_alphabet.labels
    if trace.stopped_early:
        series.flags[-1] = "early-stop"
    return series


def _paired_series(kind, seq_mu, seq_nu, n_steps, driver, policy, strategy) -> EstimateSeries:
    policy = ZeroPolicy.parse(policy)
    series = EstimateSeries(kind, [], [], [], [], [], cross=[], kl=[], entropy=[], policy=str(policy))
    n_mu, n_nu = len(seq_mu), len(seq_nu)

    def observe(i, mu_i, nu_i):
        try:
            h_mu = _h1(mu_i)
            model_nu = markov1_projection(nu_i)
            # cross = h + KL keeps self cross entropy exactly equal to the entropy
            kl_t = kl_1block(markov1_projection(mu_i), model_nu, policy)
        except DominationError as exc:
            exc.step = i
            raise
        cross_t = h_mu + kl_t
        zb = n_mu / len(mu_i) if len(mu_i) else 1.0
        h1 = cross_t if kind == "cross" else kl_t
        rb, tb = _description_bytes(mu_i, i)
        series.steps.append(i)
        series.zbar_mu.append(zb)
        series.zbar_nu.append(n_nu / len(nu_i) if len(nu_i) else 1.0)
        series.h1.append(h1)
        series.estimate.append(h1 / zb)
        series.cross.append(cross_t / zb)
        series.kl.append(kl_t / zb)
        series.entropy.append(h_mu / zb)
        series.lengths_mu.append(len(mu_i))
        series.lengths_nu.append(len(nu_i))
        series.rule_bytes.append(rb)
        series.table_bytes.append(tb)
        series.flags.append("nu-dangling" if model_nu.flagged.any() else "")

    tr_mu, _ = run_paired_nsrps(seq_mu, seq_nu, n_steps, driver, strategy, observe=observe)
    series.rules = tr_mu.rules
    series.labels = tr_mu.final_alphabet.labels
    if tr_mu.stopped_early:
        series.flags[-1] = ",".join(filter(None, [series.flags[-1], "early-stop"]))
    return series


def cross_entropy_via_nsrps(seq_mu: SymbolSequence, seq_nu: SymbolSequence, n_steps: int,
                            driver: str = "nu", policy: Union[str, ZeroPolicy] = "epsilon",
                            strategy: Strategy = most_frequent) -> EstimateSeries:
    """Cross entropy of the transformed mu-sequence against the pair chain of
    the transformed nu-sequence, rescaled by mu's contraction ``zbar``.

    Domination failures under the strict policy carry the step index.
    """
    return _paired_series("cross", seq_mu, seq_nu, n_steps, driver, policy, strategy)


def kl_via_nsrps(seq_mu: SymbolSequence, seq_nu: SymbolSequence, n_steps: int,
                 driver: str = "nu", policy: Union[str, ZeroPolicy] = "epsilon",
                 strategy: Strategy = most_frequent) -> EstimateSeries:
    """Cross-entropy series minus mu's entropy series, on one paired trace."""
    return _paired_series("kl", seq_mu, seq_nu, n_steps, driver, policy, strategy)


# --------------------------------------------------------------------------
# returning and waiting times
# --------------------------------------------------------------------------

def _find(haystack: np.ndarray, needle: np.ndarray, start: int) -> int:
    """Smallest index ``>= start`` where ``needle`` occurs in ``haystack``, or -1."""
    if needle.size == 0:
        return start if start <= haystack.size else -1
    width = 1 if max(int(haystack.max(initial=0)), int(needle.max(initial=0))) < 256 else 2
    dtype = np.uint8 if width == 1 else ">u2"
    hay = haystack.astype(dtype).tobytes()
    pat = needle.astype(dtype).tobytes()
    pos = start * width
    while True:
        i = hay.find(pat, pos)
        if i < 0:
            return -1
        if i % width == 0:
            return i // width
        pos = i + 1


def waiting_time(w: SymbolSequence, z: SymbolSequence, n: int) -> Optional[int]:
    """``min{k > 1 : z_k..z_{k+n-1} = w_1..w_n}`` (1-based), or None if absent.

    >>> from nsrps.seqcore import sequence
    >>> waiting_time(sequence([0, 1]), sequence([1, 1, 0, 1]), 2)
    3
    """
    if not 1 <= n <= len(w):
        raise ValueError(f"prefix length must be in 1..{len(w)}")
    i = _find(z.symbols, w.symbols[:n], 1)
    return None if i < 0 else i + 1


def returning_time(w: SymbolSequence, n: int) -> Optional[int]:
    """``min{k > 1 : w_k..w_{k+n-1} = w_1..w_n}`` (1-based), or None if absent."""
    return waiting_time(w, w, n)


@dataclass
class TimeSeries:
    """``(n, log(T)/n)`` pairs; ``missing`` lists the n with no occurrence."""

    n: list[int]
    rate: list[float]
    times: list[int]
    missing: list[int] = field(default_factory=list)
    short_target: list[int] = field(default_factory=list)


def entropy_via_returning_time(w: SymbolSequence, n_list: Iterable[int] = DEFAULT_PREFIX_LENGTHS) -> TimeSeries:
    out = TimeSeries([], [], [])
    for n in n_list:
        r = returning_time(w, n) if n <= len(w) else None
        if r is None:
            out.missing.append(n)
            continue
        out.n.append(n)
        out.times.append(r)
        out.rate.append(math.log(r) / n)
    return out


def cross_entropy_via_waiting_time(w: SymbolSequence, z: SymbolSequence,
                                   n_list: Iterable[int] = DEFAULT_PREFIX_LENGTHS,
                                   rate_hint: Optional[float] = None) -> TimeSeries:
    """Waiting-time cross entropy estimates over a ladder of prefix lengths.

    With ``rate_hint`` (a guess of the cross entropy in nats), prefix lengths
    for which ``len(z) < exp(n * rate_hint)`` are listed in ``short_target``:
    their waiting times are likely censored by the end of ``z``.
    """
    out = TimeSeries([], [], [])
    for n in n_list:
        if rate_hint is not None and len(z) < math.exp(n * rate_hint):
            out.short_target.append(n)
        t = waiting_time(w, z, n) if n <= len(w) else None
        if t is None:
            out.missing.append(n)
            continue
        out.n.append(n)
        out.times.append(t)
        out.rate.append(math.log(t) / n)
    return out
