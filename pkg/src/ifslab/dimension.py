"""Pressure curve and the dimension root of the geometric potential.

The pressure P(s) = log rho(T_s) is bracketed rigorously at depth n by
cylinder sums: (1/n) log sum_w r_w^s <= P(s) <= (1/n) log sum_w R_w^s,
where r_w, R_w bound |s_w'| over a forward-invariant interval (Fekete:
r_uv >= r_u r_v and R_uv <= R_u R_v, so the two sides are super- and
sub-multiplicative and sandwich the spectral radius at every depth).
The dimension is the unique root of P, located by bisection on sign
certificates; a non-certified point estimate is refined inside the
certified bracket with the grid spectral radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import (
    BudgetExceededError,
    NoRootInRangeError,
    SummabilityError,
    ThetaUnknownError,
)
from .families import IFSFamily, attractor_hull
from .transfer import Potential, spectral_radius


def finiteness_exponent(family: IFSFamily) -> float:
    """theta = inf{t : sum_j R_j^t < inf}, from the family's tail class.

    Finite families and geometric tails give 0; power-law tails
    R_j ~ j^-beta give 1/beta. Unclassified tails are refused rather
    than guessed.
    """
    kind = family.tail_kind[0]
    if kind in ("finite", "geometric"):
        return 0.0
    if kind == "power":
        return 1.0 / family.tail_kind[1]
    raise ThetaUnknownError(
        f"family {family.name or family.kind!r} has no tail classification; "
        "supply a root bracket lower bound explicitly"
    )


# -- cylinder sum tables ------------------------------------------------------


class _CylinderTable:
    """Depth-n per-word derivative bounds, reusable across exponents s.

    Constant-derivative families store only the per-map ratios (the
    word sums factor exactly); otherwise all words over the truncated
    alphabet are enumerated with exact endpoint bounds when composite
    derivatives are monotone, or per-factor interval products.
    """

    def __init__(self, family: IFSFamily, truncation: int, depth: int,
                 domain: Optional[Tuple[float, float]] = None,
                 max_words: int = 2_000_000):
        self.family = family
        self.depth = depth
        self.n_alpha = family.effective_maps(truncation)
        self.truncation = self.n_alpha
        self.constant = family.constant_derivative
        lo, hi = domain if domain is not None else family.domain
        if self.constant:
            self.log_ratios = np.log(family.R_values(self.n_alpha))
            return
        if self.n_alpha ** depth > max_words:
            raise BudgetExceededError(
                f"{self.n_alpha}^{depth} words exceed the budget {max_words}"
            )
        maps = [family.map(j) for j in range(1, self.n_alpha + 1)]
        if family.composite_deriv_monotone:
            xa = np.array([lo])
            xb = np.array([hi])
            lda = np.zeros(1)
            ldb = np.zeros(1)
            for _ in range(depth):
                xs_a, xs_b, ds_a, ds_b = [], [], [], []
                for m in maps:
                    xs_a.append(m(xa))
                    xs_b.append(m(xb))
                    ds_a.append(lda + np.log(np.abs(m.deriv(xa))))
                    ds_b.append(ldb + np.log(np.abs(m.deriv(xb))))
                xa, xb = np.concatenate(xs_a), np.concatenate(xs_b)
                lda, ldb = np.concatenate(ds_a), np.concatenate(ds_b)
            self.ld_min = np.minimum(lda, ldb)
            self.ld_max = np.maximum(lda, ldb)
        else:
            ilo = np.array([lo])
            ihi = np.array([hi])
            lr = np.zeros(1)
            lR = np.zeros(1)
            for _ in range(depth):
                nlo, nhi, nr, nR = [], [], [], []
                for m in maps:
                    a = m(ilo)
                    b = m(ihi)
                    dl = np.abs(m.deriv(ilo))
                    dh = np.abs(m.deriv(ihi))
                    if not m.deriv_monotone:
                        dl = np.full_like(dl, m.r_inf)
                        dh = np.full_like(dh, m.R_sup)
                    nlo.append(np.minimum(a, b))
                    nhi.append(np.maximum(a, b))
                    nr.append(lr + np.log(np.minimum(dl, dh)))
                    nR.append(lR + np.log(np.maximum(dl, dh)))
                ilo, ihi = np.concatenate(nlo), np.concatenate(nhi)
                lr, lR = np.concatenate(nr), np.concatenate(nR)
            self.ld_min = lr
            self.ld_max = lR

    def _tail(self, s: float) -> float:
        return self.family.tail_sup(s, self.truncation)

    def bracket(self, s: float) -> Tuple[float, float]:
        """(lower, upper) bounds for the pressure at s, depth-averaged."""
        tau = self._tail(s)
        if not math.isfinite(tau):
            raise SummabilityError(f"cylinder sums diverge at s = {s}")
        if self.constant:
            a = float(np.sum(np.exp(s * self.log_ratios)))
            return math.log(a), math.log(a + tau)
        n = self.depth
        lower = float(logsumexp(s * self.ld_min)) / n
        log_u = float(logsumexp(s * self.ld_max))
        if tau > 0.0:
            u1 = float(np.sum(self.family.R_values(self.n_alpha) ** s))
            corr = (u1 + tau) ** n - u1 ** n
            log_u = float(np.logaddexp(log_u, math.log(corr)))
        return lower, log_u / n


@dataclass
class PressurePoint:
    """One pressure evaluation with its rigorous cylinder bracket."""

    s: float
    lower: float
    upper: float
    depth: int
    truncation: int
    log_rho: Optional[float] = None
    budget_limited: bool = False

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "lower": self.lower,
            "log_rho": self.log_rho,
            "upper": self.upper,
            "depth": self.depth,
            "truncation": self.truncation,
            "budget_limited": self.budget_limited,
        }


def pressure(
    family: IFSFamily,
    s: float,
    depth: int = 8,
    truncation: Optional[int] = None,
    with_rho: bool = True,
    grid: int = 256,
    tol_rho: float = 1e-10,
    max_words: int = 2_000_000,
    domain: Optional[Tuple[float, float]] = None,
) -> PressurePoint:
    """Pressure at s with rigorous cylinder brackets.

    The bracket comes from depth-n cylinder sums over the attractor
    hull (the tightest forward-invariant interval); log_rho is the grid
    power-iteration estimate at matching truncation. If the word budget
    is exceeded the depth is lowered to the feasible maximum and the
    point is flagged.
    """
    theta = finiteness_exponent(family)
    if s <= theta:
        raise SummabilityError(f"s = {s} is at or below the finiteness exponent {theta}")
    if truncation is None:
        truncation = _dim_truncation(family, 1e-10)
    if domain is None:
        domain = attractor_hull(family, truncation)
    n_alpha = family.effective_maps(truncation)
    used_depth = depth
    limited = False
    if not family.constant_derivative:
        while used_depth > 1 and n_alpha ** used_depth > max_words:
            used_depth -= 1
            limited = True
    table = _CylinderTable(family, truncation, used_depth, domain=domain, max_words=max_words)
    lower, upper = table.bracket(s)
    log_rho = None
    if with_rho:
        pd = spectral_radius(family, Potential.geometric(s), truncation=truncation,
                             grid=grid, tol=tol_rho)
        log_rho = math.log(pd.rho)
    return PressurePoint(
        s=s,
        lower=lower,
        upper=upper,
        depth=used_depth if not family.constant_derivative else depth,
        truncation=table.truncation,
        log_rho=log_rho,
        budget_limited=limited,
    )


# -- dimension root -----------------------------------------------------------


@dataclass
class DimensionResult:
    """Certified bracket and point estimate for the pressure root."""

    a: float
    bracket: Tuple[float, float]
    theta: float
    psi_at_theta_diverges: bool
    truncation: int
    depth: int
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "bracket": list(self.bracket),
            "theta": self.theta,
            "psi_at_theta_diverges": self.psi_at_theta_diverges,
            "truncation": self.truncation,
            "depth": self.depth,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _dim_truncation(family: IFSFamily, tol: float) -> int:
    if family.n_maps is not None:
        return family.n_maps
    return family.default_truncation(1.0, tol)


def hausdorff_dimension(
    family: IFSFamily,
    tol: float = 1e-9,
    depth: int = 10,
    truncation: Optional[int] = None,
    depth_max: Optional[int] = None,
    s_hi: float = 64.0,
    theta_margin: float = 1e-3,
    grid: int = 256,
    max_words: int = 2_000_000,
    refine_with_rho: bool = True,
    max_iter: int = 200,
) -> DimensionResult:
    """Root of the pressure by bisection on rigorous sign certificates.

    Maintains a bracket [lo, hi] with pressure certified positive at lo
    and negative at hi. A midpoint whose cylinder bracket straddles zero
    triggers deeper enumeration (up to depth_max); if it stays
    undecidable the certified bracket stops shrinking and the result is
    returned unconverged. The point estimate refines the midpoint by a
    Brent solve on the grid spectral radius inside the bracket.
    """
    theta = finiteness_exponent(family)
    if truncation is None:
        truncation = _dim_truncation(family, tol)
    if depth_max is None:
        depth_max = depth + 4

    psi_low = family.psi(theta + theta_margin, truncation)
    psi_high = family.psi(s_hi, truncation)
    if not psi_low > 1.0:
        raise NoRootInRangeError(
            f"psi({theta + theta_margin:g}) = {psi_low:g} <= 1: no root above theta",
            psi_low=psi_low, psi_high=psi_high,
        )
    if not psi_high < 1.0:
        raise NoRootInRangeError(
            f"psi({s_hi:g}) = {psi_high:g} >= 1: no root below s_hi",
            psi_low=psi_low, psi_high=psi_high,
        )

    hull = attractor_hull(family, truncation)
    tables: dict = {}

    def table(n: int) -> _CylinderTable:
        if n not in tables:
            tables[n] = _CylinderTable(family, truncation, n, domain=hull, max_words=max_words)
        return tables[n]

    def certificate(s: float) -> int:
        """+1 pressure certified positive, -1 negative, 0 undecided."""
        n = depth
        while True:
            lower, upper = table(n).bracket(s)
            if lower > 0.0:
                return 1
            if upper < 0.0:
                return -1
            if family.constant_derivative or n >= depth_max:
                return 0
            n = min(depth_max, n + 2)

    lo = theta + theta_margin
    hi = s_hi
    if certificate(lo) != 1:
        raise NoRootInRangeError(
            f"pressure not certifiably positive at s = {lo:g}",
            psi_low=psi_low, psi_high=psi_high,
        )
    if certificate(hi) != -1:
        raise NoRootInRangeError(
            f"pressure not certifiably negative at s = {hi:g}",
            psi_low=psi_low, psi_high=psi_high,
        )

    iterations = 0
    while hi - lo > tol and iterations < max_iter:
        iterations += 1
        mid = 0.5 * (lo + hi)
        c = certificate(mid)
        if c == 1:
            lo = mid
        elif c == -1:
            hi = mid
        else:
            # undecidable at max depth: the bracket cannot beat the dead
            # zone, but its edges can still be pushed to the zone's
            # frontiers by one-sided bisection
            a, b = lo, mid
            while b - a > tol and iterations < max_iter:
                iterations += 1
                m2 = 0.5 * (a + b)
                if certificate(m2) == 1:
                    a = m2
                else:
                    b = m2
            lo = a
            a, b = mid, hi
            while b - a > tol and iterations < max_iter:
                iterations += 1
                m2 = 0.5 * (a + b)
                if certificate(m2) == -1:
                    b = m2
                else:
                    a = m2
            hi = b
            break

    converged = (hi - lo) <= tol
    a = 0.5 * (lo + hi)
    if refine_with_rho and not family.constant_derivative and hi > lo:
        def logrho(s: float) -> float:
            pd = spectral_radius(family, Potential.geometric(s), truncation=truncation,
                                 grid=grid, tol=1e-11)
            return math.log(pd.rho)

        try:
            fl, fh = logrho(lo), logrho(hi)
            if fl > 0.0 > fh:
                a = float(brentq(logrho, lo, hi, xtol=max(tol, 1e-13)))
        except (ValueError, SummabilityError):
            pass

    return DimensionResult(
        a=a,
        bracket=(lo, hi),
        theta=theta,
        psi_at_theta_diverges=not math.isfinite(psi_low),
        truncation=family.effective_maps(truncation),
        depth=max(tables) if tables else depth,
        iterations=iterations,
        converged=converged,
    )


# -- Moran oracle and convexity ----------------------------------------------


class MoranRoot(NamedTuple):
    value: float
    degenerate: bool


def moran_root(ratios: Sequence[float], tol: float = 1e-14) -> MoranRoot:
    """The unique s >= 0 with sum_j r_j^s = 1 for constant ratios.

    A single ratio gives the degenerate answer s = 0 (one-point
    attractor), flagged. Solved by plain bisection; g(s) = sum r^s is
    strictly decreasing with g(0) = count.
    """
    ratios = [float(r) for r in ratios]
    if not ratios:
        raise ValueError("need at least one ratio")
    if any(not 0.0 < r < 1.0 for r in ratios):
        raise ValueError("ratios must lie in (0, 1)")
    if len(ratios) == 1:
        return MoranRoot(0.0, True)
    arr = np.array(ratios)

    def g(s: float) -> float:
        return float(np.sum(arr ** s)) - 1.0

    lo, hi = 0.0, 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 2 ** 20:
            raise ValueError("Moran root out of range")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return MoranRoot(0.5 * (lo + hi), False)


@dataclass
class ConvexityReport:
    s_grid: Tuple[float, ...]
    values: Tuple[float, ...]
    convexity_violations: Tuple[Tuple[float, float], ...]
    decrease_violations: Tuple[Tuple[float, float], ...]

    @property
    def ok(self) -> bool:
        return not self.convexity_violations and not self.decrease_violations


def convexity_check(
    family: IFSFamily,
    s_grid: Sequence[float],
    depth: int = 6,
    truncation: Optional[int] = None,
    slack: float = 1e-12,
) -> ConvexityReport:
    """Verify convexity and strict decrease of the depth-n log cylinder
    sums on an s grid; violations beyond the slack are numerical defects
    worth reporting, since both properties are exact for the limit."""
    s_grid = sorted(float(s) for s in s_grid)
    if len(s_grid) < 3:
        raise ValueError("need at least three s values")
    if truncation is None:
        truncation = _dim_truncation(family, 1e-10)
    hull = attractor_hull(family, truncation)
    table = _CylinderTable(family, truncation, depth, domain=hull)
    vals = [table.bracket(s)[0] for s in s_grid]
    convexity = []
    for (s1, f1), (s2, f2), (s3, f3) in zip(
        zip(s_grid, vals), zip(s_grid[1:], vals[1:]), zip(s_grid[2:], vals[2:])
    ):
        lam = (s3 - s2) / (s3 - s1)
        bound = lam * f1 + (1.0 - lam) * f3
        if f2 > bound + slack:
            convexity.append((s2, f2 - bound))
    decrease = []
    for (s1, f1), (s2, f2) in zip(zip(s_grid, vals), zip(s_grid[1:], vals[1:])):
        if not f2 < f1 + slack:
            decrease.append((s2, f2 - f1))
    return ConvexityReport(
        s_grid=tuple(s_grid),
        values=tuple(vals),
        convexity_violations=tuple(convexity),
        decrease_violations=tuple(decrease),
    )
