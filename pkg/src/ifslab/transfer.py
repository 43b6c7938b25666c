"""Discretized transfer operator, its dual, and the Perron eigenpair.

The operator T f(x) = sum_j p_j(s_j(x)) f(s_j(x)) acts on continuous
functions over the closure of the limit set. Functions are represented
by piecewise-linear interpolants on a uniform grid over the attractor
hull; measures by weighted atoms. With hat-function collocation the
forward operator becomes a nonnegative matrix A, and binning dual atoms
linearly onto their two neighbouring nodes makes the dual step exactly
A^T, so both iterations share one spectral radius and the pairing
<T* mu, f> = <mu, T f> is a matrix identity.

Infinite families are truncated at N explicit maps. When the family
certifies closed-form tail moments and every tail image lands in the
first grid cell (where the interpolant is linear), the entire infinite
tail is added analytically; otherwise the omitted tail is reported as an
explicit uncertainty bound alongside every result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    IrreducibilityError,
    NonConvergenceError,
    SummabilityError,
)
from .families import IFSFamily, attractor_hull


# -- potentials --------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """Weight family {p_j} of the operator.

    geometric(s): p_j picks up |s_j'(x)|^s at the source point, the
    standard geometric potential whose spectral radius drives pressure
    and dimension. custom(funcs): arbitrary positive functions evaluated
    at the image point s_j(x); sup bounds may be supplied for truncation
    accounting.
    """

    kind: str
    exponent: Optional[float] = None
    funcs: Optional[Tuple[Callable, ...]] = field(default=None, repr=False)
    sup_bounds: Optional[Tuple[float, ...]] = None
    custom_tail: Optional[Callable[[int], float]] = field(default=None, repr=False)

    @classmethod
    def geometric(cls, exponent: float) -> "Potential":
        if exponent <= 0:
            raise ValueError("geometric potential needs a positive exponent")
        return cls(kind="geometric", exponent=float(exponent))

    @classmethod
    def custom(cls, funcs, sup_bounds=None, tail=None) -> "Potential":
        return cls(
            kind="custom",
            funcs=tuple(funcs),
            sup_bounds=None if sup_bounds is None else tuple(sup_bounds),
            custom_tail=tail,
        )

    def weight_values(self, family: IFSFamily, j: int, x) -> np.ndarray:
        """w_j(x): the mass attached to branch j at source points x."""
        x = np.asarray(x, dtype=float)
        if self.kind == "geometric":
            return np.abs(family.map(j).deriv(x)) ** self.exponent
        return np.asarray(self.funcs[j - 1](family.map(j)(x)), dtype=float)

    def tail_bound(self, family: IFSFamily, n: int) -> float:
        """Upper bound on sum_{j>n} sup_x w_j; inf if not summable."""
        if family.n_maps is not None and n >= family.n_maps:
            return 0.0
        if self.kind == "geometric":
            return family.tail_sup(self.exponent, n)
        if self.custom_tail is not None:
            return float(self.custom_tail(n))
        if family.n_maps is not None and self.sup_bounds is not None:
            return float(sum(self.sup_bounds[n:]))
        return math.inf


# -- grid functions and atomic measures --------------------------------------


class GridFunction:
    """Piecewise-linear interpolant on strictly increasing nodes.

    Evaluation clamps to the boundary values outside the node range;
    operator sampling only ever lands inside, so the clamp is a guard.
    """

    def __init__(self, nodes, values):
        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("need at least two nodes")
        if self.values.shape != self.nodes.shape:
            raise ValueError("values must match nodes")
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("nodes must be strictly increasing")

    @classmethod
    def constant(cls, nodes, value: float) -> "GridFunction":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.full(nodes.shape, float(value)))

    @classmethod
    def from_callable(cls, nodes, fn) -> "GridFunction":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.asarray(fn(nodes), dtype=float))

    def __call__(self, x):
        return np.interp(x, self.nodes, self.values)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.nodes, values)

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def __len__(self) -> int:
        return self.nodes.size


def uniform_grid(lo: float, hi: float, m: int) -> np.ndarray:
    if m < 2:
        raise ValueError("grid size must be at least 2")
    return np.linspace(lo, hi, m)


class AtomicMeasure:
    """Finitely many weighted point masses on the attractor hull."""

    def __init__(self, positions, masses):
        self.positions = np.asarray(positions, dtype=float)
        self.masses = np.asarray(masses, dtype=float)
        if self.positions.shape != self.masses.shape or self.positions.ndim != 1:
            raise ValueError("positions and masses must be 1-d arrays of equal length")
        if np.any(self.masses < 0):
            raise ValueError("masses must be nonnegative")

    @classmethod
    def uniform(cls, count: int, lo: float, hi: float) -> "AtomicMeasure":
        return cls(np.linspace(lo, hi, count), np.full(count, 1.0 / count))

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def normalized(self) -> "AtomicMeasure":
        m = self.total_mass
        if m <= 0:
            raise ValueError("cannot normalize a zero measure")
        return AtomicMeasure(self.positions, self.masses / m)

    def pair(self, f) -> float:
        """<mu, f> for a GridFunction or plain callable."""
        return float(np.sum(self.masses * f(self.positions)))

    def bin_to(self, nodes) -> "AtomicMeasure":
        """Mass-preserving aggregation onto grid nodes.

        Each atom's mass splits linearly between its two neighbouring
        nodes, which keeps <mu, f> exact for every piecewise-linear f on
        the same grid and makes repeated dual steps the transpose of the
        forward collocation matrix.
        """
        nodes = np.asarray(nodes, dtype=float)
        pos = np.clip(self.positions, nodes[0], nodes[-1])
        idx = np.clip(np.searchsorted(nodes, pos, side="right"), 1, nodes.size - 1)
        t = (pos - nodes[idx - 1]) / (nodes[idx] - nodes[idx - 1])
        t = np.clip(t, 0.0, 1.0)
        out = np.zeros(nodes.size)
        np.add.at(out, idx - 1, self.masses * (1.0 - t))
        np.add.at(out, idx, self.masses * t)
        return AtomicMeasure(nodes, out)


# -- collocation assembly -----------------------------------------------------


@dataclass
class _Assembled:
    nodes: np.ndarray
    matrix: np.ndarray
    tail_bound: float
    truncation: int
    analytic_tail: bool


def _hat_accumulate(A, rows, nodes, y, w):
    idx = np.clip(np.searchsorted(nodes, y, side="right"), 1, nodes.size - 1)
    t = (y - nodes[idx - 1]) / (nodes[idx] - nodes[idx - 1])
    t = np.clip(t, 0.0, 1.0)
    A[rows, idx - 1] += w * (1.0 - t)
    A[rows, idx] += w * t


def _default_truncation(family: IFSFamily, pot: Potential, tol: float = 1e-8) -> int:
    if family.n_maps is not None:
        return family.n_maps
    if pot.kind == "geometric":
        return family.default_truncation(pot.exponent, tol)
    raise ValueError("infinite family with a custom potential needs an explicit truncation")


def _assemble(family: IFSFamily, pot: Potential, nodes: np.ndarray, truncation: int) -> _Assembled:
    n = family.effective_maps(truncation)
    analytic = (
        family.n_maps is None
        and pot.kind == "geometric"
        and family.tail_moments is not None
        and family.tail_cell_cutoff is not None
    )
    if analytic:
        n = max(n, family.tail_cell_cutoff(nodes[1]))
    m = nodes.size
    A = np.zeros((m, m))
    rows = np.arange(m)
    for j in range(1, n + 1):
        y = family.map(j)(nodes)
        w = pot.weight_values(family, j, nodes)
        _hat_accumulate(A, rows, nodes, y, w)
    if analytic:
        m0, m1 = family.tail_moments(pot.exponent, nodes, n)
        h0 = nodes[1] - nodes[0]
        A[:, 0] += (nodes[1] * m0 - m1) / h0
        A[:, 1] += (m1 - nodes[0] * m0) / h0
        tail = 0.0
    else:
        tail = pot.tail_bound(family, n)
        if not math.isfinite(tail):
            raise SummabilityError(
                f"potential not summable beyond truncation {n} "
                "(geometric exponent at or below the finiteness exponent)"
            )
    return _Assembled(nodes, A, tail, n, analytic)


# -- public operator applications ---------------------------------------------


def apply(
    family: IFSFamily,
    pot: Potential,
    f: GridFunction,
    truncation: Optional[int] = None,
    analytic_tail: bool = False,
) -> Tuple[GridFunction, float]:
    """One application of the truncated operator on the grid.

    Returns (T_N f, tail_bound) where tail_bound = sum_{j>N} sup p_j
    times max|f| bounds the omitted tail; it is exactly 0 for finite
    families covered by the truncation. analytic_tail=True adds the
    certified closed-form tail instead (families that provide it), and
    the returned tail_bound is then 0.
    """
    if truncation is None:
        truncation = _default_truncation(family, pot)
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    n = family.effective_maps(truncation)
    x = f.nodes
    vals = np.zeros_like(x)
    for j in range(1, n + 1):
        vals += pot.weight_values(family, j, x) * f(family.map(j)(x))
    use_analytic = (
        analytic_tail
        and family.n_maps is None
        and pot.kind == "geometric"
        and family.tail_moments is not None
        and family.tail_cell_cutoff is not None
        and n >= family.tail_cell_cutoff(x[1])
    )
    if use_analytic:
        m0, m1 = family.tail_moments(pot.exponent, x, n)
        h0 = x[1] - x[0]
        vals += f.values[0] * (x[1] * m0 - m1) / h0 + f.values[1] * (m1 - x[0] * m0) / h0
        return GridFunction(x, vals), 0.0
    tail = pot.tail_bound(family, n)
    if not math.isfinite(tail):
        raise SummabilityError(f"potential not summable beyond truncation {n}")
    return GridFunction(x, vals), tail * f.sup_norm


def apply_at(
    family: IFSFamily,
    pot: Potential,
    f,
    x,
    truncation: Optional[int] = None,
) -> np.ndarray:
    """Pointwise T_N f at arbitrary points (f any callable or interpolant)."""
    if truncation is None:
        truncation = _default_truncation(family, pot)
    n = family.effective_maps(truncation)
    x = np.asarray(x, dtype=float)
    vals = np.zeros_like(x)
    for j in range(1, n + 1):
        vals += pot.weight_values(family, j, x) * f(family.map(j)(x))
    return vals


# -- Perron data and iterations -----------------------------------------------


@dataclass
class PerronData:
    """Spectral radius bracket and (optionally) the Perron eigenpair.

    rho_bracket is the positive-operator sandwich min/max of (Tg)/g at
    the last iteration, widened above by the reported truncation tail;
    h is normalized so that the eigenmeasure is a probability and
    <mu, h> = 1, matching the limit of rho^-n T^n 1.
    """

    rho: float
    rho_bracket: Tuple[float, float]
    iterations: int
    tail_bound: float
    analytic_tail: bool
    truncation: int
    grid: int
    h: Optional[GridFunction] = None
    mu: Optional[AtomicMeasure] = None
    pairing: Optional[float] = None
    sup_residual: Optional[float] = None
    trace: List[Tuple[int, float, float, float]] = field(default_factory=list, repr=False)


def _collatz_wielandt(op: _Assembled, tol: float, max_iter: int, trace: list):
    """Power iteration with per-step eigenvalue sandwich on the matrix."""
    A = op.matrix
    g = np.ones(op.nodes.size)
    lo = hi = math.nan
    for it in range(1, max_iter + 1):
        Tg = A @ g
        if Tg.min() <= 0.0:
            k = int(np.argmin(Tg))
            raise IrreducibilityError(
                "operator iterate lost positivity", node_index=k, node_position=float(op.nodes[k])
            )
        ratios = Tg / g
        lo, hi = float(ratios.min()), float(ratios.max())
        trace.append((it, lo, hi, math.nan))
        g = Tg / Tg.max()
        if hi - lo < tol:
            return lo, hi, g, it
    raise NonConvergenceError(
        f"eigenvalue bracket stuck at width {hi - lo:.3e} > tol {tol:g} "
        f"after {max_iter} iterations",
        bracket=(lo, hi),
        iterations=max_iter,
    )


def spectral_radius(
    family: IFSFamily,
    pot: Potential,
    truncation: Optional[int] = None,
    grid: int = 512,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> PerronData:
    """Spectral radius of the discretized operator with a rigorous
    matrix-level bracket (and the truncation tail added on top)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if truncation is None:
        truncation = _default_truncation(family, pot)
    hull = attractor_hull(family, truncation)
    nodes = uniform_grid(hull[0], hull[1], grid)
    op = _assemble(family, pot, nodes, truncation)
    trace: List[Tuple[int, float, float, float]] = []
    lo, hi, _, iters = _collatz_wielandt(op, tol, max_iter, trace)
    return PerronData(
        rho=0.5 * (lo + hi),
        rho_bracket=(lo, hi + op.tail_bound),
        iterations=iters,
        tail_bound=op.tail_bound,
        analytic_tail=op.analytic_tail,
        truncation=op.truncation,
        grid=grid,
        trace=trace,
    )


def perron_pair(
    family: IFSFamily,
    pot: Potential,
    truncation: Optional[int] = None,
    grid: int = 512,
    tol: float = 1e-8,
    tol_rho: float = 1e-10,
    tol_mu: Optional[float] = None,
    max_iter: int = 2000,
    start: Optional[Callable] = None,
    start_atoms: int = 64,
) -> PerronData:
    """Perron eigenfunction h and eigenmeasure mu of the operator.

    h is the limit of rho^-n T^n applied to the start function (the
    constant 1 by default), iterated until the successive sup-norm
    change is below tol; mu comes from the transposed iteration on
    binned atoms, stopped when the L1 drift of the normalized mass
    vector falls below tol_mu. Normalization: mu total mass 1 and
    <mu, h> = 1.
    """
    if tol_mu is None:
        tol_mu = tol
    if truncation is None:
        truncation = _default_truncation(family, pot)
    hull = attractor_hull(family, truncation)
    nodes = uniform_grid(hull[0], hull[1], grid)
    op = _assemble(family, pot, nodes, truncation)
    A = op.matrix

    trace: List[Tuple[int, float, float, float]] = []
    lo, hi, g, it_rho = _collatz_wielandt(op, tol_rho, max_iter, trace)
    rho = 0.5 * (lo + hi)

    if start is None:
        f = np.ones(nodes.size)
    else:
        f = np.asarray(start(nodes), dtype=float)
        if f.min() <= 0:
            raise ValueError("start function must be strictly positive")
    it_h = 0
    for it_h in range(1, max_iter + 1):
        f_next = (A @ f) / rho
        if f_next.min() <= 0.0:
            k = int(np.argmin(f_next))
            raise IrreducibilityError(
                f"eigenfunction iterate nonpositive at node {k}",
                node_index=k,
                node_position=float(nodes[k]),
            )
        res = float(np.abs(f_next - f).max())
        trace.append((it_rho + it_h, lo, hi, res))
        f = f_next
        if res < tol:
            break
    else:
        raise NonConvergenceError(
            f"eigenfunction residual {res:.3e} above tol {tol:g} after {max_iter} iterations",
            bracket=(lo, hi),
            iterations=max_iter,
            residual=res,
        )

    m = AtomicMeasure.uniform(start_atoms, nodes[0], nodes[-1]).bin_to(nodes).masses
    it_mu = 0
    for it_mu in range(1, max_iter + 1):
        m_next = (A.T @ m) / rho
        total = m_next.sum()
        if total <= 0:
            raise IrreducibilityError("dual iterate lost all mass")
        drift = float(np.abs(m_next / total - m / m.sum()).sum())
        m = m_next
        if drift < tol_mu:
            break
    else:
        raise NonConvergenceError(
            f"eigenmeasure drift {drift:.3e} above tol {tol_mu:g} after {max_iter} iterations",
            iterations=max_iter,
            residual=drift,
        )

    m = m / m.sum()
    pairing = float(m @ f)
    h_vals = f / pairing
    sup_residual = float(np.abs(A @ h_vals - rho * h_vals).max())
    h = GridFunction(nodes, h_vals)
    mu = AtomicMeasure(nodes, m)
    return PerronData(
        rho=rho,
        rho_bracket=(lo, hi + op.tail_bound),
        iterations=it_rho + it_h + it_mu,
        tail_bound=op.tail_bound,
        analytic_tail=op.analytic_tail,
        truncation=op.truncation,
        grid=grid,
        h=h,
        mu=mu,
        pairing=float(m @ h_vals),
        sup_residual=sup_residual,
        trace=trace,
    )


def dual_apply(
    family: IFSFamily,
    pot: Potential,
    mu: AtomicMeasure,
    truncation: Optional[int] = None,
    bin_nodes: Optional[np.ndarray] = None,
    max_atoms: int = 5_000_000,
) -> AtomicMeasure:
    """One dual step: atom (x, m) spawns (s_j(x), m p_j(s_j(x))), j <= N.

    Without binning the atom count multiplies by N per step, so raw
    expansion is capped; pass bin_nodes to aggregate onto a grid
    (mandatory for iteration).
    """
    if truncation is None:
        truncation = _default_truncation(family, pot)
    n = family.effective_maps(truncation)
    if bin_nodes is not None:
        nodes = np.asarray(bin_nodes, dtype=float)
        out = np.zeros(nodes.size)
        rows = np.arange(nodes.size)
        for j in range(1, n + 1):
            y = family.map(j)(mu.positions)
            w = pot.weight_values(family, j, mu.positions) * mu.masses
            idx = np.clip(np.searchsorted(nodes, np.clip(y, nodes[0], nodes[-1]), "right"), 1, nodes.size - 1)
            t = np.clip((y - nodes[idx - 1]) / (nodes[idx] - nodes[idx - 1]), 0.0, 1.0)
            np.add.at(out, idx - 1, w * (1.0 - t))
            np.add.at(out, idx, w * t)
        return AtomicMeasure(nodes, out)
    if mu.positions.size * n > max_atoms:
        raise ValueError(
            f"dual expansion would create {mu.positions.size * n} atoms; "
            "pass bin_nodes to aggregate onto a grid"
        )
    pos = np.empty(mu.positions.size * n)
    mass = np.empty_like(pos)
    for j in range(1, n + 1):
        sl = slice((j - 1) * mu.positions.size, j * mu.positions.size)
        pos[sl] = family.map(j)(mu.positions)
        mass[sl] = pot.weight_values(family, j, mu.positions) * mu.masses
    return AtomicMeasure(pos, mass)


def normalized_operator(
    pd: PerronData, family: IFSFamily, pot: Potential, f: GridFunction
) -> GridFunction:
    """The Markov-normalized operator P f = T(f h) / (rho h).

    Its weights q_j(x) = p_j(s_j(x)) h(s_j(x)) / (rho h(x)) sum to one,
    so P fixes constants up to interpolation and tail tolerance.
    """
    if pd.h is None:
        raise ValueError("PerronData carries no eigenfunction; run perron_pair first")
    if not np.array_equal(f.nodes, pd.h.nodes):
        raise ValueError("f must live on the eigenfunction's grid")
    h = pd.h.values
    if np.abs(h).min() < 1e-250:
        raise IrreducibilityError("eigenfunction underflows; cannot normalize")
    fh = GridFunction(f.nodes, f.values * h)
    tfh, _ = apply(family, pot, fh, truncation=pd.truncation, analytic_tail=pd.analytic_tail)
    return GridFunction(f.nodes, tfh.values / (pd.rho * h))


# -- Dini diagnostics ---------------------------------------------------------


@dataclass(frozen=True)
class DiniPoint:
    t: float
    alpha: float
    phi: float
    remainder: float
    converged: bool


def _sampled_modulus(pot: Potential, family: IFSFamily, truncation: int, grid: int = 96):
    """Empirical modulus of log p_j from grid samples (diagnostics only)."""
    lo, hi = family.enlarged_domain
    xs = np.linspace(lo, hi, grid)
    n = family.effective_maps(truncation)
    logs = []
    for j in range(1, n + 1):
        w = pot.weight_values(family, j, xs)
        logs.append(np.log(w))
    logs = np.array(logs)

    def alpha(t: float) -> float:
        width = max(1, int(round(t / (xs[1] - xs[0]))))
        best = 0.0
        for k in range(1, width + 1):
            if k >= grid:
                break
            d = np.abs(logs[:, k:] - logs[:, :-k]).max()
            best = max(best, float(d))
        return best

    return alpha


def dini_diagnostics(
    pot: Potential,
    family: IFSFamily,
    t_grid: Sequence[float],
    truncation: int = 32,
    max_terms: int = 20000,
) -> List[DiniPoint]:
    """Samples of the common modulus alpha and partial sums of the
    summed modulus Phi(t) = sum_m alpha(beta_m t). Divergent partial
    sums (no decaying word-contraction bound) are flagged, not hidden.
    """
    if pot.kind == "geometric" and family.dini_modulus is not None:
        base = family.dini_modulus
        scale = pot.exponent

        def alpha(t):
            return scale * base(t)

    elif pot.kind == "geometric" and family.constant_derivative:

        def alpha(t):
            return 0.0

    else:
        alpha = _sampled_modulus(pot, family, truncation)

    sigma = family.contraction if family.contractive else (
        math.sqrt(family.pair_contraction) if family.pair_contraction else 1.0
    )
    out = []
    for t in t_grid:
        t = float(t)
        a0 = alpha(t)
        phi = 0.0
        term = a0
        converged = False
        m = 0
        while m < max_terms:
            term = alpha(family.word_contraction(m) * t)
            phi += term
            if term < 1e-16:
                converged = True
                break
            m += 1
        remainder = term * sigma / (1.0 - sigma) if sigma < 1.0 else math.inf
        if not converged and remainder == math.inf and a0 > 0:
            remainder = math.inf
        out.append(DiniPoint(t=t, alpha=a0, phi=phi, remainder=remainder, converged=converged))
    return out
