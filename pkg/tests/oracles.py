"""Slow, obviously-correct reference implementations used only by tests."""

from collections import Counter
import math


def scan_substitute(symbols, a, b, alpha):
    """Literal left-to-right scan: emit alpha and skip two on a match."""
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == a and symbols[i + 1] == b:
            out.append(alpha)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def scan_expand(symbols, a, b, alpha):
    out = []
    for s in symbols:
        out.extend((a, b) if s == alpha else (s,))
    return out


def nonoverlapping_count(symbols, a, b):
    return len(symbols) - len(scan_substitute(symbols, a, b, -1))


def brute_most_frequent(symbols, m):
    best, best_pair = -1, None
    for a in range(m):
        for b in range(m):
            c = nonoverlapping_count(symbols, a, b)
            if c > best:
                best, best_pair = c, (a, b)
    return best_pair, best


def window_counts(symbols, k, windows=None):
    n = len(symbols) - k + 1 if windows is None else windows
    return Counter(tuple(symbols[i:i + k]) for i in range(n))


def entropy_of_counts(counter):
    total = sum(counter.values())
    return -sum(c / total * math.log(c / total) for c in counter.values() if c)


def find_first(z, pattern, start):
    """Naive substring search over lists."""
    n = len(pattern)
    for k in range(start, len(z) - n + 1):
        if z[k:k + n] == pattern:
            return k
    return -1
