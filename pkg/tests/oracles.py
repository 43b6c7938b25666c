"""Independent brute-force oracles for the test suite.

Everything here recomputes expected values from first principles with
plain Python loops (itertools word enumeration, explicit chain rules,
set-based box counts), deliberately avoiding the library's vectorized
code paths.
"""

import itertools
import math

from scipy.optimize import brentq


def all_words(alphabet_size, length):
    return itertools.product(range(1, alphabet_size + 1), repeat=length)


def word_apply(maps, word, x):
    """s_{w_1} o ... o s_{w_k} (x) by explicit right-to-left folding."""
    for sym in reversed(word):
        x = maps[sym - 1](x)
    return x


def word_log_deriv(maps, derivs, word, x):
    """log |s_w'(x)| by the chain rule, one factor at a time."""
    total = 0.0
    for sym in reversed(word):
        total += math.log(abs(derivs[sym - 1](x)))
        x = maps[sym - 1](x)
    return total


def word_bounds_monotone(maps, derivs, word, lo, hi):
    """(r_w, R_w) for maps whose composite derivative is monotone."""
    a = word_log_deriv(maps, derivs, word, lo)
    b = word_log_deriv(maps, derivs, word, hi)
    return math.exp(min(a, b)), math.exp(max(a, b))


def cylinder_root(maps, derivs, depth, lo, hi, which, bracket=(0.05, 4.0)):
    """Root of sum_{|w|=depth} bound_w^s = 1.

    which = "lower" uses r_w (per-word inf over [lo, hi]), "upper" uses
    R_w. Exact endpoint bounds; valid for monotone composite
    derivatives over a forward-invariant interval.
    """
    n_alpha = len(maps)
    logs = []
    for word in all_words(n_alpha, depth):
        r, R = word_bounds_monotone(maps, derivs, word, lo, hi)
        logs.append(math.log(r if which == "lower" else R))

    def f(s):
        m = max(s * v for v in logs)
        return m + math.log(sum(math.exp(s * v - m) for v in logs))

    return brentq(f, bracket[0], bracket[1], xtol=1e-13)


def moran_root_oracle(ratios, lo=1e-9, hi=128.0):
    """Root of sum r_j^s = 1 via scipy bracketing (independent solver)."""

    def f(s):
        return sum(r ** s for r in ratios) - 1.0

    return brentq(f, lo, hi, xtol=1e-14)


def box_counts_oracle(points, scale):
    """Occupied boxes of a grid anchored at 0, via a plain Python set."""
    return len({math.floor(x / scale) for x in points})


def gauss_digit_maps(digits):
    maps = [lambda x, d=d: 1.0 / (d + x) for d in digits]
    derivs = [lambda x, d=d: -1.0 / (d + x) ** 2 for d in digits]
    return maps, derivs


def dyadic_maps(count):
    maps = [lambda x, j=j: 0.25 ** j * x + 2.0 ** -j - 4.0 ** -j for j in range(1, count + 1)]
    derivs = [lambda x, j=j: 0.25 ** j for j in range(1, count + 1)]
    return maps, derivs
