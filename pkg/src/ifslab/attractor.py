"""Sampling and covering the limit set; dimension cross-checks.

The chaos game draws an independent random word per point, so every
sample carries the same certified error radius (the word-contraction
bound times the domain diameter) with no mixing assumptions. Cylinder
covers use exact images of the domain interval, over-covering the limit
set; that is the right direction for Hausdorff-measure upper sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .families import IFSFamily, attractor_hull
from .maps import Word


@dataclass
class PointCloud:
    points: np.ndarray
    word_length: int
    seed: int
    weights: Optional[np.ndarray]
    error_bound: float

    def __len__(self) -> int:
        return self.points.size


def chaos_game(
    family: IFSFamily,
    truncation: Optional[int] = None,
    count: int = 10_000,
    word_length: int = 40,
    seed: int = 0,
    weights: Optional[Sequence[float]] = None,
    dim_exponent: Optional[float] = None,
    base: Optional[float] = None,
    accuracy: Optional[float] = None,
) -> PointCloud:
    """Sample the limit set: one independent random word per point.

    Symbols are drawn over j <= N with weights r_j^a (a = dim_exponent,
    emulating the eigenmeasure's cylinder masses) when given, else
    uniformly. Deterministic for fixed (seed, parameters).
    """
    n = family.effective_maps(truncation)
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive sum, one per map")
        w = w / w.sum()
    elif dim_exponent is not None:
        w = family.r_values(n) ** dim_exponent
        w = w / w.sum()
    else:
        w = None

    error_bound = family.word_contraction(word_length) * family.diam
    if accuracy is not None and error_bound > accuracy:
        warnings.warn(
            f"word length {word_length} only certifies radius {error_bound:.3e} "
            f"> requested accuracy {accuracy:.3e}",
            stacklevel=2,
        )

    rng = np.random.default_rng(seed)
    symbols = rng.choice(np.arange(1, n + 1), size=(count, word_length), p=w)
    if base is None:
        base = 0.5 * (family.domain[0] + family.domain[1])
    x = np.full(count, float(base))

    affine = all(family.map(j).affine is not None for j in range(1, n + 1))
    if affine:
        slopes = np.array([family.map(j).affine[0] for j in range(1, n + 1)])
        inters = np.array([family.map(j).affine[1] for j in range(1, n + 1)])
        for k in range(word_length - 1, -1, -1):
            idx = symbols[:, k] - 1
            x = slopes[idx] * x + inters[idx]
    else:
        for k in range(word_length - 1, -1, -1):
            col = symbols[:, k]
            for j in range(1, n + 1):
                mask = col == j
                if mask.any():
                    x[mask] = family.map(j)(x[mask])

    return PointCloud(
        points=x,
        word_length=word_length,
        seed=seed,
        weights=w,
        error_bound=error_bound,
    )


@dataclass
class CoverEntry:
    word: Tuple[int, ...]
    lo: float
    hi: float

    @property
    def diameter(self) -> float:
        return self.hi - self.lo


@dataclass
class CylinderCover:
    entries: List[CoverEntry]
    policy: str  # "depth" or "diameter"
    policy_value: float
    truncation: int
    complete: bool
    uncovered_tail: float

    @property
    def max_diameter(self) -> float:
        return max(e.diameter for e in self.entries) if self.entries else 0.0

    def total_sum(self, a: float) -> float:
        return float(sum(e.diameter ** a for e in self.entries))


def cylinder_cover(
    family: IFSFamily,
    truncation: Optional[int] = None,
    depth: Optional[int] = None,
    max_diameter: Optional[float] = None,
    max_entries: int = 1_000_000,
) -> CylinderCover:
    """Enclosures s_w(X) for all words at fixed depth, or refined until
    every enclosure's diameter drops below a threshold.

    Exceeding the entry budget leaves coarser cylinders in the cover
    and flags it incomplete (the union still covers). uncovered_tail
    bounds the total length of the depth-1 images omitted by the
    truncation.
    """
    if (depth is None) == (max_diameter is None):
        raise ValueError("give exactly one of depth or max_diameter")
    n = family.effective_maps(truncation)
    lo, hi = family.domain
    done: List[CoverEntry] = []
    stack: List[CoverEntry] = [CoverEntry((), lo, hi)]
    complete = True
    while stack:
        cur = stack.pop()
        ready = (
            len(cur.word) >= depth
            if depth is not None
            else cur.diameter <= max_diameter and len(cur.word) >= 1
        )
        if ready:
            done.append(cur)
            continue
        if len(done) + len(stack) + n > max_entries:
            complete = False
            done.append(cur)
            continue
        for j in range(n, 0, -1):
            a, b = family.map(j).image(cur.lo, cur.hi)
            stack.append(CoverEntry((j,) + cur.word, a, b))
    done.sort(key=lambda e: e.word)
    tail = family.tail_sup(1.0, n) * family.diam
    return CylinderCover(
        entries=done,
        policy="depth" if depth is not None else "diameter",
        policy_value=float(depth if depth is not None else max_diameter),
        truncation=n,
        complete=complete,
        uncovered_tail=float(tail),
    )


@dataclass(frozen=True)
class UpperSumRow:
    depth: int
    cover_sum: float
    tail_term: float
    operator_at_z: float


def hausdorff_upper(
    family: IFSFamily,
    a: float,
    depths: Sequence[int],
    truncation: Optional[int] = None,
    z: Optional[float] = None,
    max_words: int = 2_000_000,
) -> List[UpperSumRow]:
    """Cylinder cover sums sum_w |J_w|^a per depth, with tail terms.

    A bounded sequence is consistent with finite a-dimensional measure
    of the closure. The iterated operator value T_a^n 1(z) at a
    reference attractor point is reported alongside for comparison with
    the eigenfunction limit (both sequences, no fitted constant).
    """
    n = family.effective_maps(truncation)
    if z is None:
        z = attractor_hull(family, truncation)[1]
    lo, hi = family.domain
    diam = hi - lo
    tau = family.tail_sup(a, n)
    u1 = float(np.sum(family.R_values(n) ** a))

    rows = []
    for depth in depths:
        tail_term = ((u1 + tau) ** depth - u1 ** depth) * diam ** a if tau > 0 else 0.0
        if family.constant_derivative:
            ra = float(np.sum(family.r_values(n) ** a))
            cover = ra ** depth * diam ** a
            op_z = ra ** depth
        else:
            if n ** depth > max_words:
                raise ValueError(f"{n}^{depth} words exceed the budget {max_words}")
            ilo = np.array([lo])
            ihi = np.array([hi])
            ld = np.zeros(1)
            zs = np.full(1, float(z))
            for _ in range(depth):
                nlo, nhi, nld, nzs = [], [], [], []
                for j in range(1, n + 1):
                    m = family.map(j)
                    A, B = m(ilo), m(ihi)
                    nlo.append(np.minimum(A, B))
                    nhi.append(np.maximum(A, B))
                    nld.append(ld + np.log(np.abs(m.deriv(zs))))
                    nzs.append(m(zs))
                ilo, ihi = np.concatenate(nlo), np.concatenate(nhi)
                ld, zs = np.concatenate(nld), np.concatenate(nzs)
            cover = float(np.sum((ihi - ilo) ** a))
            op_z = float(np.sum(np.exp(a * ld)))
        rows.append(UpperSumRow(depth=depth, cover_sum=cover + tail_term,
                                tail_term=tail_term, operator_at_z=op_z))
    return rows


@dataclass(frozen=True)
class BoxDimension:
    slope: float
    residual: float
    scales: Tuple[float, ...]
    counts: Tuple[int, ...]
    degenerate: bool


def box_dimension(cloud: PointCloud, scales: Sequence[float]) -> BoxDimension:
    """Least-squares box-counting slope of the sampled cloud.

    Requires at least 4 scales spanning two decades. Intended as a
    cross-check against the pressure-root dimension, not a precision
    estimate.
    """
    scales = sorted(float(s) for s in scales)
    if len(scales) < 4:
        raise ValueError("need at least 4 scales")
    if scales[-1] / scales[0] < 100.0:
        raise ValueError("scales must span at least two decades")
    if len(cloud.points) < 10_000:
        warnings.warn("box counting with fewer than 1e4 points is noisy", stacklevel=2)
    pts = cloud.points
    if np.ptp(pts) == 0.0:
        return BoxDimension(0.0, 0.0, tuple(scales), tuple(1 for _ in scales), True)
    # fixed grid anchored at the origin; a data-dependent anchor would
    # split grid-aligned cylinders and bias the slope upward
    counts = []
    for eps in scales:
        counts.append(int(np.unique(np.floor(pts / eps)).size))
    xs = np.log(1.0 / np.asarray(scales))
    ys = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(xs, ys, 1)
    fit = slope * xs + intercept
    residual = float(np.sqrt(np.mean((ys - fit) ** 2)))
    return BoxDimension(float(slope), residual, tuple(scales), tuple(counts), False)
