"""Families of interval contractions: construction, words, distortion.

An IFSFamily is a finite or countable collection {s_j} of conformal
contractions of a closed interval X, together with certified tail data
(bounds on sums over the maps beyond a truncation cutoff) that every
numerical routine in the library threads through its error reporting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import zeta

from .errors import (
    DomainError,
    IndexOutOfFamilyError,
    UnboundedDistortionError,
)
from .maps import ConformalMap, Word, affine_map, as_word, fold_apply, fold_deriv, identity_map


@dataclass
class IFSFamily:
    """A countable family {s_j}_{j>=1} of interval contractions.

    map_at(j) produces the j-th branch (1-based). For infinite families
    tail_sup(t, N) certifies an upper bound on sum_{j>N} R_j^t, and
    tail_kind classifies the decay of R_j = sup|s_j'|:
    ("finite",), ("geometric", q), ("power", beta) or ("unknown",).

    contraction is sup_j R_j. A family with contraction >= 1 (possible
    only through a boundary point, e.g. the full Gauss family at x=0) is
    flagged `contractive=False` at construction and kept usable; word
    contraction bounds then fall back on pair_contraction, a certified
    bound on sup_{j,k} R_{jk} over two-fold compositions.
    """

    kind: str
    map_at: Callable[[int], ConformalMap] = field(repr=False)
    domain: Tuple[float, float] = (0.0, 1.0)
    n_maps: Optional[int] = None
    contraction: float = 1.0
    tail_sup: Callable[[float, int], float] = field(default=None, repr=False)
    tail_kind: Tuple = ("unknown",)
    dini_modulus: Optional[Callable[[float], float]] = field(default=None, repr=False)
    pair_contraction: Optional[float] = None
    hull: Optional[Tuple[float, float]] = None
    tail_moments: Optional[Callable] = field(default=None, repr=False)
    tail_cell_cutoff: Optional[Callable[[float], int]] = field(default=None, repr=False)
    composite_deriv_monotone: bool = False
    constant_derivative: bool = False
    kappa: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.tail_sup is None:
            if self.n_maps is None:
                raise ValueError("infinite families need a certified tail_sup")
            self.tail_sup = self._finite_tail
        self._map_cache: dict = {}
        self.contractive = self.contraction < 1.0
        if not self.contractive:
            warnings.warn(
                f"family {self.name or self.kind!r}: sup|s'| = {self.contraction} >= 1 "
                "(contractivity fails at a boundary point); flagged, not rejected",
                stacklevel=3,
            )

    def _finite_tail(self, t: float, n: int) -> float:
        if n >= self.n_maps:
            return 0.0
        return float(sum(self.map(j).R_sup ** t for j in range(n + 1, self.n_maps + 1)))

    # -- accessors ---------------------------------------------------------

    def map(self, j: int) -> ConformalMap:
        if j < 1 or (self.n_maps is not None and j > self.n_maps):
            raise IndexOutOfFamilyError(f"map index {j} outside family of size {self.n_maps}")
        m = self._map_cache.get(j)
        if m is None:
            m = self.map_at(j)
            self._map_cache[j] = m
        return m

    @property
    def diam(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def enlarged_domain(self) -> Tuple[float, float]:
        """X0: the domain padded by the conformality margin kappa."""
        return (self.domain[0] - self.kappa, self.domain[1] + self.kappa)

    def effective_maps(self, truncation: Optional[int]) -> int:
        if self.n_maps is not None:
            return self.n_maps if truncation is None else min(self.n_maps, truncation)
        if truncation is None:
            raise ValueError("infinite family requires a truncation")
        return truncation

    def R_values(self, n: int) -> np.ndarray:
        return np.array([self.map(j).R_sup for j in range(1, n + 1)])

    def r_values(self, n: int) -> np.ndarray:
        return np.array([self.map(j).r_inf for j in range(1, n + 1)])

    def psi(self, t: float, truncation: int) -> float:
        """Upper bound on sum_j R_j^t at the given truncation."""
        n = self.effective_maps(truncation)
        return float(np.sum(self.R_values(n) ** t) + self.tail_sup(t, n))

    def word_contraction(self, length: int) -> float:
        """Certified bound on sup_{|u|=length} R_u."""
        if length <= 0:
            return 1.0
        if self.contractive:
            return self.contraction ** length
        if self.pair_contraction is not None:
            return self.pair_contraction ** (length // 2)
        return 1.0

    def default_truncation(self, t: float, tol: float, cap: int = 200_000) -> int:
        """Smallest N with tail_sup(t, N) < tol/10, capped.

        Power-law tails may never reach the target within the cap; the
        cap is returned and callers must report the residual tail bound.
        """
        if self.n_maps is not None:
            return self.n_maps
        target = tol / 10.0
        n = 1
        while n < cap:
            if self.tail_sup(t, n) < target:
                return n
            n *= 2
        warnings.warn(
            f"tail target {target:g} not reachable below N={cap}; using the cap", stacklevel=2
        )
        return cap


# -- constructors ----------------------------------------------------------


def _validate_affine(slopes, intercepts, domain):
    lo, hi = domain
    for k, (a, b) in enumerate(zip(slopes, intercepts)):
        if not 0.0 < abs(a) < 1.0:
            raise ValueError(f"map {k + 1}: |slope| = {abs(a)} outside (0, 1)")
        ia, ib = sorted((a * lo + b, a * hi + b))
        if ia < lo - 1e-12 or ib > hi + 1e-12:
            raise DomainError(
                f"map {k + 1}: image [{ia}, {ib}] leaves the domain [{lo}, {hi}]"
            )


def affine_family(
    slopes: Sequence[float],
    intercepts: Sequence[float],
    domain: Tuple[float, float] = (0.0, 1.0),
    name: str = "",
) -> IFSFamily:
    """Explicit finite list of affine contractions a_j x + b_j."""
    if len(slopes) != len(intercepts) or not slopes:
        raise ValueError("slopes and intercepts must be nonempty and of equal length")
    _validate_affine(slopes, intercepts, domain)
    slopes = [float(a) for a in slopes]
    intercepts = [float(b) for b in intercepts]

    def map_at(j: int) -> ConformalMap:
        return affine_map(slopes[j - 1], intercepts[j - 1])

    return IFSFamily(
        kind="explicit-finite-list",
        map_at=map_at,
        domain=(float(domain[0]), float(domain[1])),
        n_maps=len(slopes),
        contraction=max(abs(a) for a in slopes),
        tail_kind=("finite",),
        dini_modulus=lambda t: 0.0,
        composite_deriv_monotone=True,
        constant_derivative=True,
        name=name,
    )


def cantor_pair_family(ratio: float = 1.0 / 3.0) -> IFSFamily:
    """Two affine maps {r x, r x + (1 - r)} on [0, 1]."""
    if not 0.0 < ratio < 0.5:
        raise ValueError("ratio must lie in (0, 1/2) for disjoint images")
    fam = affine_family([ratio, ratio], [0.0, 1.0 - ratio], (0.0, 1.0), name="cantor-pair")
    fam.hull = (0.0, 1.0)
    return fam


def dyadic_gap_family() -> IFSFamily:
    """Countably many similarities with slope 4^-j placed below 2^-j.

    s_j(x) = 4^-j x + (2^-j - 4^-j) on [0, 1]; the images tile the gaps
    (2^-j - 4^-j, 2^-j], all inside (0, 1/2]. Slopes and intercepts are
    exact binary fractions, so compositions stay exact in floats.
    """

    def map_at(j: int) -> ConformalMap:
        slope = float(np.exp2(-2.0 * j))
        return affine_map(slope, float(np.exp2(-float(j))) - slope)

    def tail_sup(t: float, n: int) -> float:
        if t <= 0:
            return math.inf
        q = float(np.exp2(-2.0 * t))
        return float(np.exp2(-2.0 * t * (n + 1)) / (1.0 - q))

    def tail_moments(s: float, x, n: int):
        # sum_{j>n} 4^{-js} and sum_{j>n} 4^{-js} * s_j(x), closed forms
        def geo(u: float) -> float:
            return float(np.exp2(-2.0 * u * (n + 1)) / (1.0 - np.exp2(-2.0 * u)))

        g_s1 = geo(s + 1.0)
        g2 = float(np.exp2(-(2.0 * s + 1.0) * (n + 1)) / (1.0 - np.exp2(-(2.0 * s + 1.0))))
        m0 = geo(s) * np.ones_like(np.asarray(x, dtype=float))
        m1 = np.asarray(x, dtype=float) * g_s1 + (g2 - g_s1)
        return m0, m1

    def tail_cell_cutoff(y: float) -> int:
        # images of maps j > N lie in (0, 2^-(N+1)]; need 2^-(N+1) <= y
        return max(1, math.ceil(-math.log2(y)) - 1) if y > 0 else 10**9

    return IFSFamily(
        kind="affine-geometric",
        map_at=map_at,
        domain=(0.0, 1.0),
        n_maps=None,
        contraction=0.25,
        tail_sup=tail_sup,
        tail_kind=("geometric", 0.25),
        dini_modulus=lambda t: 0.0,
        hull=(0.0, 1.0 / 3.0),
        tail_moments=tail_moments,
        tail_cell_cutoff=tail_cell_cutoff,
        composite_deriv_monotone=True,
        constant_derivative=True,
        name="dyadic-gap",
    )


def gauss_family(
    digits: Optional[Sequence[int]] = None,
    domain: Optional[Tuple[float, float]] = None,
) -> IFSFamily:
    """Continued-fraction branches s_d(x) = 1/(d + x).

    digits=None gives the full countable family on [0, 1] (flagged: the
    first branch has |s_1'(0)| = 1, so uniform contractivity fails at the
    boundary; two-fold compositions contract by 1/4). A finite digit set
    needs a forward-invariant domain, e.g. digits (1, 2) on [0.25, 0.85].
    """
    if digits is None:
        lo, hi = domain if domain is not None else (0.0, 1.0)
        if lo < 0:
            raise DomainError("Gauss branches need a domain inside [0, inf)")

        def map_at(j: int) -> ConformalMap:
            return ConformalMap(
                func=lambda x, d=j: 1.0 / (d + np.asarray(x, dtype=float)),
                dfunc=lambda x, d=j: -1.0 / (d + np.asarray(x, dtype=float)) ** 2,
                r_inf=1.0 / (j + hi) ** 2,
                R_sup=1.0 / (j + lo) ** 2,
                deriv_monotone=True,
            )

        def tail_sup(t: float, n: int) -> float:
            if 2.0 * t <= 1.0:
                return math.inf
            return float(zeta(2.0 * t, n + 1.0 + lo))

        def tail_moments(s: float, x, n: int):
            if 2.0 * s <= 1.0:
                raise ValueError("tail moments diverge for s <= 1/2")
            x = np.asarray(x, dtype=float)
            return zeta(2.0 * s, n + 1.0 + x), zeta(2.0 * s + 1.0, n + 1.0 + x)

        return IFSFamily(
            kind="gauss-digit-set",
            map_at=map_at,
            domain=(lo, hi),
            n_maps=None,
            contraction=1.0 / (1.0 + lo) ** 2,
            tail_sup=tail_sup,
            tail_kind=("power", 2.0),
            dini_modulus=lambda t: 2.0 * math.log1p(t / (1.0 + lo)),
            pair_contraction=1.0 / (2.0 + lo) ** 2,
            hull=(0.0, 1.0) if (lo, hi) == (0.0, 1.0) else None,
            tail_moments=tail_moments,
            tail_cell_cutoff=lambda y: max(1, math.ceil(1.0 / y) - 1),
            composite_deriv_monotone=True,
            name="gauss-full",
        )

    digits = [int(d) for d in digits]
    if any(d < 1 for d in digits) or len(set(digits)) != len(digits):
        raise ValueError("digits must be distinct integers >= 1")
    lo, hi = domain if domain is not None else (0.0, 1.0)
    dmin = min(digits)
    contraction = 1.0 / (dmin + lo) ** 2
    if contraction >= 1.0:
        raise ValueError(f"digit set {digits} is not contractive on [{lo}, {hi}]")
    for d in digits:
        ia, ib = 1.0 / (d + hi), 1.0 / (d + lo)
        if ia < lo - 1e-12 or ib > hi + 1e-12:
            raise DomainError(
                f"branch 1/({d}+x) maps [{lo}, {hi}] to [{ia:.6f}, {ib:.6f}], outside the domain"
            )

    def map_at(j: int) -> ConformalMap:
        d = digits[j - 1]
        return ConformalMap(
            func=lambda x, d=d: 1.0 / (d + np.asarray(x, dtype=float)),
            dfunc=lambda x, d=d: -1.0 / (d + np.asarray(x, dtype=float)) ** 2,
            r_inf=1.0 / (d + hi) ** 2,
            R_sup=1.0 / (d + lo) ** 2,
            deriv_monotone=True,
        )

    return IFSFamily(
        kind="gauss-digit-set",
        map_at=map_at,
        domain=(lo, hi),
        n_maps=len(digits),
        contraction=contraction,
        tail_kind=("finite",),
        dini_modulus=lambda t: 2.0 * math.log1p(t / (dmin + lo)),
        composite_deriv_monotone=True,
        name="gauss-digits-" + "".join(str(d) for d in digits),
    )


# -- word-level operations -------------------------------------------------


def compose_word(family: IFSFamily, u) -> ConformalMap:
    """The composite s_u = s_{u_1} o ... o s_{u_k} as a ConformalMap.

    Affine factors are composed in closed form (slope, intercept), so
    deep words accumulate no fold error; other families return a lazy
    fold with chain-rule derivative and certified bounds.
    """
    u = as_word(u)
    if len(u) == 0:
        return identity_map()
    maps = [family.map(j) for j in u]
    if all(m.affine is not None for m in maps):
        slope, intercept = 1.0, 0.0
        for m in maps:  # outermost first: s_u = s_{u_1}(s_{u_2}(...))
            a, b = m.affine
            slope, intercept = slope * a, slope * b + intercept
        return affine_map(slope, intercept)
    r, R = contraction_bounds(family, u)
    return ConformalMap(
        func=lambda x: fold_apply(maps, x),
        dfunc=lambda x: fold_deriv(maps, x),
        r_inf=r,
        R_sup=R,
        deriv_monotone=family.composite_deriv_monotone,
    )


def contraction_bounds(
    family: IFSFamily, u, domain: Optional[Tuple[float, float]] = None
) -> Tuple[float, float]:
    """(r_u, R_u): bounds for |s_u'| over the domain interval.

    Exact endpoint evaluation when composites have monotone derivative
    (affine and Moebius families); otherwise per-factor interval products
    along the propagated suffix images, which over-estimate the range but
    remain rigorous.
    """
    u = as_word(u)
    if len(u) == 0:
        raise ValueError("contraction bounds need a nonempty word")
    lo, hi = domain if domain is not None else family.domain
    maps = [family.map(j) for j in u]
    if family.composite_deriv_monotone:
        da, db = abs(fold_deriv(maps, lo)), abs(fold_deriv(maps, hi))
        return (float(min(da, db)), float(max(da, db)))
    r, R = 1.0, 1.0
    cur = (lo, hi)
    for m in reversed(maps):
        dlo, dhi = m.deriv_bounds(*cur)
        r, R = r * dlo, R * dhi
        cur = m.image(*cur)
    return (r, R)


def coding_map(family: IFSFamily, u, base: float) -> Tuple[float, float]:
    """s_u(base) together with the contraction bound on its distance to
    the coding-map limit of any infinite extension of u."""
    lo, hi = family.domain
    if not lo - 1e-12 <= base <= hi + 1e-12:
        raise DomainError(f"base {base} outside the domain [{lo}, {hi}]")
    u = as_word(u)
    point = float(fold_apply([family.map(j) for j in u], base))
    return point, family.word_contraction(len(u)) * family.diam


def attractor_hull(
    family: IFSFamily,
    truncation: Optional[int] = None,
    tol: float = 1e-15,
    max_iter: int = 1000,
) -> Tuple[float, float]:
    """Convex hull [min J, max J] of the limit set.

    Families may certify the hull exactly (field `hull`); otherwise the
    interval iteration H -> hull(U_j s_j(H)) is run to its fixed point.
    For infinite families this uses the first `truncation` maps, which
    under-covers the tail end of the limit set; exact hulls should be
    supplied on the family for tail-sensitive work.
    """
    if family.hull is not None:
        return family.hull
    n = family.effective_maps(truncation if truncation is not None else 64)
    lo, hi = family.domain
    for _ in range(max_iter):
        images = [family.map(j).image(lo, hi) for j in range(1, n + 1)]
        nlo = min(i[0] for i in images)
        nhi = max(i[1] for i in images)
        if abs(nlo - lo) <= tol and abs(nhi - hi) <= tol:
            return (nlo, nhi)
        lo, hi = nlo, nhi
    return (lo, hi)


# -- distortion ------------------------------------------------------------


@dataclass(frozen=True)
class DistortionData:
    """Bounded-distortion constants for a family.

    c1 >= 1 controls R_u <= c1 r_u for every word u and the chain
    inequality c1^-1 r_u r_v <= r_uv <= c1 r_u r_v. On an interval the
    mean value theorem gives r_u|x-y| <= |s_u(x)-s_u(y)| <= R_u|x-y|
    globally, so the local bi-Lipschitz constants collapse: c2 = c3 = c1
    at locality scale delta = diam(X).
    """

    c1: float
    phi_at_1: float
    c2: float
    c3: float
    delta: float


def estimate_distortion(
    family: IFSFamily, truncation: int = 64, samples: int = 0, rng_seed: int = 0
) -> DistortionData:
    """Distortion constants via the summed modulus of log|s'|.

    Affine families are exact (c1 = 1). Otherwise the family must carry a
    Dini modulus bound alpha(t); the summed bound Phi(t) = sum_m
    alpha(beta_m t), with beta_m the certified word-contraction sequence,
    gives c1 = exp(Phi(diam X0)). samples > 0 audits R_u <= c1 r_u on
    random words of length <= 6.
    """
    if family.constant_derivative:
        data = DistortionData(1.0, 0.0, 1.0, 1.0, family.diam)
    else:
        if family.dini_modulus is None:
            raise UnboundedDistortionError(
                f"family {family.name or family.kind!r} has no Dini modulus bound; "
                "cannot certify bounded distortion"
            )
        x0lo, x0hi = family.enlarged_domain
        t0 = x0hi - x0lo
        phi = 0.0
        m = 0
        while m < 200_000:
            term = family.dini_modulus(family.word_contraction(m) * t0)
            phi += term
            if term < 1e-18 and m > 2:
                break
            m += 1
        else:
            raise UnboundedDistortionError(
                "modulus series did not become negligible; family is not "
                "effectively contracting (no decaying word-contraction bound)"
            )
        c1 = math.exp(phi)
        data = DistortionData(c1, phi, c1, c1, family.diam)

    if samples > 0:
        rng = np.random.default_rng(rng_seed)
        n_alpha = family.effective_maps(truncation)
        for _ in range(samples):
            length = int(rng.integers(1, 7))
            word = Word(tuple(int(s) for s in rng.integers(1, n_alpha + 1, size=length)))
            r, R = contraction_bounds(family, word)
            if R > data.c1 * r * (1 + 1e-9):
                raise AssertionError(
                    f"distortion audit failed on word {word.symbols}: "
                    f"R_u = {R} > c1 r_u = {data.c1 * r}"
                )
    return data
