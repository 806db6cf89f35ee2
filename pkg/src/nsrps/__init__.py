"""Entropy, cross entropy and KL divergence of symbolic sources via
non-sequential recursive pair substitution."""

__version__ = "0.1.0"

from .errors import (
    AlphabetMismatchError,
    DominationError,
    InsufficientDataError,
    InvalidRuleError,
    ModelError,
    NoPairError,
    NsrpsError,
    UnknownTokenError,
)
from .estimators import (
    EstimateSeries,
    cross_entropy_via_nsrps,
    cross_entropy_via_waiting_time,
    entropy_via_nsrps,
    entropy_via_returning_time,
    kl_via_nsrps,
    returning_time,
    waiting_time,
)
from .seqcore import Alphabet, SymbolSequence, sequence, sequence_from_tokens, sequence_to_tokens
from .sources import (
    MarkovModel,
    analytic_cross_entropy_rate,
    analytic_entropy_rate,
    analytic_kl_rate,
    exact_bernoulli_transform,
    exact_pair_table,
    generate,
    stationary_distribution,
)
from .stats import (
    BlockDistribution,
    TransitionMatrix,
    ZeroPolicy,
    block_distribution,
    block_entropy,
    conditional_entropy,
    cross_conditional_entropy,
    kl_1block,
    markov1_projection,
)
from .substitution import (
    FixedSchedule,
    NsrpsTrace,
    SubstitutionRule,
    SubstitutionStep,
    choose_pair_most_frequent,
    expand_pair,
    run_nsrps,
    run_paired_nsrps,
    substitute_pair,
)
