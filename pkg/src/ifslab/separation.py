"""Finite open set condition checks and the Moran volume test.

All set computations are exact interval arithmetic on endpoints: images
of open intervals under strictly monotone maps are open intervals, open
intervals are disjoint when they merely touch, and containment reduces
to endpoint comparisons. A non-monotone branch falls back on bounded
subdivision and can only return "unknown", never a false pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .families import IFSFamily, coding_map, estimate_distortion
from .maps import ConformalMap, Word


@dataclass(frozen=True)
class OpenSetCandidate:
    """A finite union of disjoint open intervals."""

    intervals: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        for a, b in ivs:
            if not a < b:
                raise ValueError(f"empty or inverted interval ({a}, {b})")
        for (_, b1), (a2, _) in zip(ivs, ivs[1:]):
            if a2 < b1:
                raise ValueError("candidate intervals must be pairwise disjoint")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "OpenSetCandidate":
        return cls(((lo, hi),))

    def contains_interval(self, lo: float, hi: float) -> bool:
        return any(a <= lo and hi <= b for a, b in self.intervals)

    def contains_ball(self, x: float, r: float) -> bool:
        return any(a < x - r and x + r < b for a, b in self.intervals)


@dataclass(frozen=True)
class Violation:
    i: int
    j: Optional[int]  # None for a containment failure of branch i
    interval: Tuple[float, float]
    kind: str  # "containment" or "overlap"


@dataclass
class SeparationReport:
    level: int
    fosc: str  # "pass" | "fail" | "unknown"
    violations: Tuple[Violation, ...] = ()
    strong: str = "not-evaluated"  # "pass" | "unknown" | "not-evaluated"
    witness: Optional[float] = None
    moran_passed: Optional[bool] = None
    moran_sum: Optional[float] = None
    moran_c1: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "fosc": self.fosc,
            "violations": [
                {"i": v.i, "j": v.j, "interval": list(v.interval), "kind": v.kind}
                for v in self.violations
            ],
            "strong": self.strong,
            "witness": self.witness,
            "moran": None
            if self.moran_passed is None
            else {"passed": self.moran_passed, "sum": self.moran_sum, "c1": self.moran_c1},
        }

    def to_text(self) -> str:
        lines = [f"level n = {self.level}: finite open set condition: {self.fosc}"]
        for v in self.violations:
            if v.kind == "overlap":
                lines.append(
                    f"  branches {v.i} and {v.j} overlap on ({v.interval[0]:.17g}, {v.interval[1]:.17g})"
                )
            else:
                lines.append(
                    f"  branch {v.i} image ({v.interval[0]:.17g}, {v.interval[1]:.17g}) escapes the candidate"
                )
        lines.append(f"strong condition: {self.strong}"
                     + (f" (witness {self.witness:.17g})" if self.witness is not None else ""))
        if self.moran_passed is not None:
            lines.append(
                f"Moran necessary condition: {'pass' if self.moran_passed else 'fail'} "
                f"(sum {self.moran_sum:.12g} vs c1^d {self.moran_c1:.12g})"
            )
        return "\n".join(lines)


def _monotone_image(m: ConformalMap, a: float, b: float, budget: int = 1024):
    """Open image of (a, b); None when monotonicity cannot be settled."""
    xs = np.linspace(a, b, 9)
    signs = np.sign(m.deriv(xs))
    if np.all(signs > 0) or np.all(signs < 0):
        lo, hi = m.image(a, b)
        return lo, hi
    # derivative changes sign over (a, b): enclose by subdivision
    pieces = [(a, b)]
    enclosure = None
    for _ in range(budget):
        if not pieces:
            break
        x0, x1 = pieces.pop()
        xs = np.linspace(x0, x1, 5)
        signs = np.sign(m.deriv(xs))
        if np.all(signs > 0) or np.all(signs < 0):
            lo, hi = m.image(x0, x1)
        elif x1 - x0 < 1e-12:
            lo, hi = m.image(x0, x1)  # give up resolving; enclosure stays conservative
        else:
            mid = 0.5 * (x0 + x1)
            pieces.extend([(x0, mid), (mid, x1)])
            continue
        enclosure = (lo, hi) if enclosure is None else (min(enclosure[0], lo), max(enclosure[1], hi))
    if pieces:
        return None
    return enclosure


def check_fosc(family: IFSFamily, n: int, candidate: OpenSetCandidate) -> SeparationReport:
    """Verify s_i(U) in U and pairwise disjointness for i <= n.

    Images touching at endpoints count as disjoint (open sets). Exact
    for monotone branches; an unresolved non-monotone branch downgrades
    the verdict to "unknown" rather than passing.
    """
    if n < 1:
        raise ValueError("level n must be >= 1")
    x0lo, x0hi = family.enlarged_domain
    for a, b in candidate.intervals:
        if a < x0lo - 1e-12 or b > x0hi + 1e-12:
            raise DomainError(f"candidate ({a}, {b}) leaves the conformality domain")

    unknown = False
    images: List[List[Tuple[float, float]]] = []
    violations: List[Violation] = []
    for i in range(1, n + 1):
        m = family.map(i)
        comps = []
        for a, b in candidate.intervals:
            img = _monotone_image(m, a, b)
            if img is None:
                unknown = True
                continue
            comps.append(img)
            if not candidate.contains_interval(*img):
                violations.append(Violation(i=i, j=None, interval=img, kind="containment"))
        images.append(comps)

    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            for lo1, hi1 in images[i - 1]:
                for lo2, hi2 in images[j - 1]:
                    lo, hi = max(lo1, lo2), min(hi1, hi2)
                    if lo < hi:  # open overlap; touching endpoints are disjoint
                        violations.append(Violation(i=i, j=j, interval=(lo, hi), kind="overlap"))

    violations.sort(key=lambda v: (v.i, -1 if v.j is None else v.j, v.interval))
    if violations:
        verdict = "fail"
    elif unknown:
        verdict = "unknown"
    else:
        verdict = "pass"
    return SeparationReport(level=n, fosc=verdict, violations=tuple(violations))


def _default_witness_samples(family: IFSFamily, n: int, word_length: int = 48):
    """Attractor points with certified radii: deep periodic-word images.

    Constant words give the branch fixed points; two-symbol periodic
    words add interior points in case the fixed points sit on the
    candidate's boundary.
    """
    base = 0.5 * (family.domain[0] + family.domain[1])
    n_eff = min(n, family.effective_maps(n))
    patterns = [(i,) for i in range(1, n_eff + 1)]
    patterns += [
        (i, j) for i in range(1, n_eff + 1) for j in range(1, n_eff + 1) if i != j
    ]
    out = []
    for pat in patterns:
        reps = max(1, word_length // len(pat))
        point, radius = coding_map(family, Word(pat * reps), base)
        out.append((point, radius))
    return out


def check_strong(
    family: IFSFamily,
    n: int,
    candidate: OpenSetCandidate,
    samples: Optional[Sequence[Tuple[float, float]]] = None,
) -> SeparationReport:
    """FOSC check plus a positive witness for U meeting the limit set.

    A sample (point, radius) certifies U meeting the limit set when the
    whole error ball sits strictly inside the candidate. Sampling can
    never refute intersection, so the strong verdict is "pass" or
    "unknown", never "fail"; it certifies the strong open set condition
    only together with a passing FOSC verdict.
    """
    report = check_fosc(family, n, candidate)
    if samples is None:
        samples = _default_witness_samples(family, n)
    for point, radius in samples:
        if candidate.contains_ball(point, radius):
            report.strong = "pass"
            report.witness = float(point)
            return report
    report.strong = "unknown"
    return report


@dataclass(frozen=True)
class MoranCheck:
    passed: bool
    total: float
    c1: float
    level: int
    d: float


def moran_necessary(family: IFSFamily, n: int, d: float = 1.0, c1: Optional[float] = None) -> MoranCheck:
    """Necessary volume condition sum_i R_i^d <= c1^d for the FOSC.

    The sum includes the certified tail beyond the level. Failure rules
    out the finite open set condition; passing proves nothing.
    """
    if c1 is None:
        c1 = estimate_distortion(family).c1
    n_eff = family.effective_maps(n)
    total = float(np.sum(family.R_values(n_eff) ** d) + family.tail_sup(d, n_eff))
    return MoranCheck(passed=total <= c1 ** d + 1e-12, total=total, c1=c1, level=n, d=d)


def suggest_open_set(family: IFSFamily, n: int) -> Optional[OpenSetCandidate]:
    """Search a small ladder of candidates for one passing the FOSC.

    Tried in order: the interior of X, the interior of the hull of the
    depth-1 images, then that hull shrunk by a sweep of margins. None
    is a legitimate answer and proves nothing about the system.
    """
    lo, hi = family.domain
    trials = [OpenSetCandidate.interval(lo, hi)]
    n_eff = family.effective_maps(n)
    imgs = [family.map(j).image(lo, hi) for j in range(1, n_eff + 1)]
    hlo = min(i[0] for i in imgs)
    hhi = max(i[1] for i in imgs)
    if hlo < hhi:
        trials.append(OpenSetCandidate.interval(hlo, hhi))
        for frac in (1e-9, 1e-6, 1e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.2):
            eps = frac * (hhi - hlo)
            if hlo + eps < hhi - eps:
                trials.append(OpenSetCandidate.interval(hlo + eps, hhi - eps))
    for cand in trials:
        try:
            if check_fosc(family, n, cand).fosc == "pass":
                return cand
        except DomainError:
            continue
    return None
