"""Single contractions on an interval and finite symbolic words.

A conformal map in one dimension is a strictly monotone C^1 injection with
nonvanishing derivative. Each map carries certified global derivative
bounds (r_inf, R_sup) and, when the derivative is itself monotone, an
exact range oracle over subintervals (endpoint evaluation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class ConformalMap:
    """One branch s of an IFS, with exact derivative access.

    func/dfunc accept scalars or numpy arrays. r_inf and R_sup bound
    |s'| over the family's domain; they must satisfy 0 < r_inf <= R_sup,
    and R_sup < 1 for a uniformly contractive branch. `affine` holds
    (slope, intercept) when s is affine, enabling closed-form word
    composition. `deriv_monotone` certifies that |s'| is monotone, so
    derivative ranges over subintervals are exact endpoint evaluations.
    """

    func: Callable = field(repr=False)
    dfunc: Callable = field(repr=False)
    r_inf: float = 0.0
    R_sup: float = 1.0
    affine: Optional[Tuple[float, float]] = None
    deriv_monotone: bool = False

    def __call__(self, x):
        return self.func(x)

    def deriv(self, x):
        return self.dfunc(x)

    def image(self, lo: float, hi: float) -> Tuple[float, float]:
        """Image of [lo, hi]; exact for strictly monotone maps."""
        a, b = self.func(lo), self.func(hi)
        return (a, b) if a <= b else (b, a)

    def deriv_bounds(self, lo: float, hi: float) -> Tuple[float, float]:
        """Bounds for |s'| over [lo, hi] within the domain.

        Exact (endpoint evaluation) when the derivative is monotone,
        otherwise the certified global bounds.
        """
        if self.affine is not None:
            d = abs(self.affine[0])
            return d, d
        if self.deriv_monotone:
            a, b = abs(self.dfunc(lo)), abs(self.dfunc(hi))
            return (a, b) if a <= b else (b, a)
        return self.r_inf, self.R_sup


def affine_map(slope: float, intercept: float) -> ConformalMap:
    if slope == 0.0:
        raise ValueError("slope must be nonzero")
    d = abs(slope)
    return ConformalMap(
        func=lambda x, a=slope, b=intercept: a * x + b,
        dfunc=lambda x, a=slope: a * np.ones_like(np.asarray(x, dtype=float)),
        r_inf=d,
        R_sup=d,
        affine=(slope, intercept),
        deriv_monotone=True,
    )


def identity_map() -> ConformalMap:
    return affine_map(1.0, 0.0)


@dataclass(frozen=True)
class Word:
    """A finite symbol string u = (u_1, ..., u_k), 1-based symbols.

    The induced map is s_u = s_{u_1} o s_{u_2} o ... o s_{u_k}; the
    empty word denotes the identity.
    """

    symbols: Tuple[int, ...] = ()

    def __post_init__(self):
        if any((not isinstance(s, (int, np.integer))) or s < 1 for s in self.symbols):
            raise ValueError("word symbols must be integers >= 1")
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.symbols + tuple(other))

    @classmethod
    def empty(cls) -> "Word":
        return cls(())

    @classmethod
    def of(cls, *symbols: int) -> "Word":
        return cls(tuple(symbols))

    @classmethod
    def constant(cls, symbol: int, length: int) -> "Word":
        return cls((symbol,) * length)


def as_word(u) -> Word:
    if isinstance(u, Word):
        return u
    return Word(tuple(u))


def fold_apply(maps: Sequence[ConformalMap], x):
    """Apply s_{u_1} o ... o s_{u_k} by folding from the innermost factor."""
    for m in reversed(maps):
        x = m(x)
    return x


def fold_deriv(maps: Sequence[ConformalMap], x):
    """Chain-rule derivative of the composition at x (signed)."""
    x = np.asarray(x, dtype=float)
    d = np.ones_like(x)
    for m in reversed(maps):
        d = d * m.deriv(x)
        x = m(x)
    return d
