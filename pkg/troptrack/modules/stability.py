"""
Mutation loops, sign stability and entropy.

A loop is a flip word with a final relabeling that brings the exchange
matrix back to itself. Its tropical X-action is iterated on sample points;
when the sign words settle on one strict word ε, the action is linear on
the cone C^ε and its presentation matrix E gives the entropy log ρ(E).

The detector is empirical: finitely many samples, finitely many
iterations. A verdict of "stable" also requires C^ε to be full-dimensional.

Usage:
    from troptrack.modules.stability import MutationLoop, detect_sign_stability, entropy

    loop = MutationLoop.create(tri, word)
    report = detect_sign_stability(loop)
    h = entropy(loop, report)
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from troptrack.config import get_settings
from troptrack.errors import LoopInvalid, NotStable, TrackInvalid
from troptrack.modules.polyhedra import PolyCone
from troptrack.modules.surface import (
    ExchangeMatrix,
    FlipWord,
    LabeledTriangulation,
    exchange_matrix,
    is_loop,
    relabel,
    triangulation_isomorphisms,
)
from troptrack.modules.tracks import (
    TrainTrack,
    carrying_matrix,
    chart_map,
    cone,
    enumerate_complete_tracks,
)
from troptrack.modules.tropical import (
    SignSequence,
    TropicalPoint,
    apply_path_x,
    ensemble_map,
    frozen_x_matrix,
    mutate_exchange,
    permutation_matrix,
)
from troptrack.utils.linalg import Mat, identity, matmul, nullspace_basis, solve_left, transpose

logger = logging.getLogger(__name__)

STABLE = "stable"
UNSTABLE = "unstable-evidence"
INCONCLUSIVE = "inconclusive"

EXACT_LIMIT = 12


@dataclass(frozen=True)
class MutationLoop:
    base: LabeledTriangulation
    word: FlipWord
    exponent: int = 1

    @classmethod
    def create(cls, base: LabeledTriangulation, word: FlipWord) -> "MutationLoop":
        if not is_loop(word, base):
            raise LoopInvalid("flips followed by the relabeling do not return the exchange matrix",
                              {"flips": [str(k) for k in word.flips]})
        return cls(base, word, max(1, word.power))

    @property
    def h(self) -> int:
        """Number of mutation steps (horizontal edges)."""
        return len(self.word.flips)

    @cached_property
    def exchange_matrices(self) -> Tuple[ExchangeMatrix, ...]:
        mats = [exchange_matrix(self.base)]
        for k in self.word.flips:
            mats.append(mutate_exchange(mats[-1], k))
        return tuple(mats)

    def power(self, r: int) -> "MutationLoop":
        return MutationLoop(self.base, self.word.powered(r), self.exponent * r)

    def act(self, w: TropicalPoint) -> Tuple[TropicalPoint, SignSequence]:
        x, signs = apply_path_x(self.word, w, self.exchange_matrices[0])
        return x.replace(x.values, self.base.chart_id), signs


@dataclass(frozen=True)
class BoundedStability:
    bounded: Optional[bool]
    cone: PolyCone
    steps: int

    def to_dict(self) -> dict:
        return {"bounded": "unknown" if self.bounded is None else self.bounded, "steps": self.steps,
                "inequalities": [[str(x) for x in r] for r in self.cone.inequalities]}


@dataclass(frozen=True)
class SpectralRadius:
    value: float
    interval: Tuple[Fraction, Fraction]
    charpoly: Optional[str] = None
    exact: Optional[str] = None
    method: str = "exact"

    def to_dict(self) -> dict:
        return {"value": f"{self.value:.10g}", "interval": [str(x) for x in self.interval],
                "charpoly": self.charpoly, "exact": self.exact, "method": self.method}


@dataclass(frozen=True)
class StabilityReport:
    verdict: str
    stable_sign: Optional[SignSequence] = None
    n0: Tuple[Tuple[str, int], ...] = ()
    matrix: Optional[Mat] = None
    spectral_radius: Optional[SpectralRadius] = None
    bounded: Optional[bool] = None
    stable_cone: Optional[PolyCone] = None
    power: int = 1
    reason: str = ""
    offending: Tuple[str, ...] = field(default=())

    @property
    def radius_interval(self) -> Optional[Tuple[Fraction, Fraction]]:
        return self.spectral_radius.interval if self.spectral_radius else None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "stable_sign": str(self.stable_sign) if self.stable_sign else None,
            "n0": dict(self.n0),
            "matrix": [[str(x) for x in r] for r in self.matrix] if self.matrix else None,
            "spectral_radius": self.spectral_radius.to_dict() if self.spectral_radius else None,
            "bounded": "unknown" if self.bounded is None else self.bounded,
            "power": self.power,
            "reason": self.reason,
            "offending": list(self.offending),
        }


# ── Orbits and signs ─────────────────────────────────────────────────────────


def iterate_loop(loop: MutationLoop, w: TropicalPoint, n: int) -> List[TropicalPoint]:
    """w, φ(w), ..., φ^n(w)."""
    orbit = [w]
    for _ in range(n):
        orbit.append(loop.act(orbit[-1])[0])
    return orbit


def _sign_words(loop: MutationLoop, w: TropicalPoint, n: int) -> List[SignSequence]:
    words = []
    x = w
    for _ in range(n):
        x, signs = loop.act(x)
        words.append(signs)
    return words


def default_samples(loop: MutationLoop) -> List[TropicalPoint]:
    arcs = loop.base.arcs
    out = []
    for i in range(len(arcs)):
        for s in (1, -1):
            vals = [Fraction(0)] * len(arcs)
            vals[i] = Fraction(s)
            out.append(TropicalPoint(loop.base.chart_id, "X", arcs, tuple(vals)))
    return out


def _label(w: TropicalPoint) -> str:
    return "(" + ",".join(str(v) for v in w.values) + ")"


def _settled(words: Sequence[SignSequence], window: int) -> Tuple[Optional[SignSequence], Optional[int]]:
    if len(words) < window:
        return None, None
    tail = words[-window:]
    if not tail[0].is_strict or any(t != tail[0] for t in tail):
        return None, None
    n0 = len(words) - 1
    while n0 > 0 and words[n0 - 1] == tail[0]:
        n0 -= 1
    return tail[0], n0


def detect_sign_stability(loop: MutationLoop, samples: Optional[Sequence[TropicalPoint]] = None,
                          max_iter: Optional[int] = None, window: Optional[int] = None,
                          power: Optional[int] = None) -> StabilityReport:
    """Semi-decide sign stability; tries powers 1..R when ``power`` is None."""
    settings = get_settings()
    if power is not None:
        return _detect(loop.power(power) if power > 1 else loop, samples, max_iter, window)
    first = None
    for r in range(1, settings.max_power + 1):
        report = _detect(loop.power(r) if r > 1 else loop, samples, max_iter, window)
        if report.verdict == STABLE:
            return report
        if first is None:
            first = report
        if report.reason == "no horizontal edges":
            break
    return first


def _detect(loop: MutationLoop, samples, max_iter, window) -> StabilityReport:
    settings = get_settings()
    max_iter = max_iter or settings.max_iter
    window = window or settings.stability_window
    if loop.h == 0:
        return StabilityReport(INCONCLUSIVE, power=loop.exponent, reason="no horizontal edges")
    points = [p for p in default_samples(loop)] + list(samples or [])
    points = [p for p in points if any(p.values)]

    def run(p: TropicalPoint):
        return p, _sign_words(loop, p, max_iter)

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            results = list(pool.map(run, points))
    else:
        results = [run(p) for p in points]

    stabilized: Dict[str, SignSequence] = {}
    n0: Dict[str, int] = {}
    zero_late: List[str] = []
    unsettled: List[str] = []
    for p, words in results:
        label = _label(p)
        if any(not w.is_strict for w in words[max_iter // 2:]):
            zero_late.append(label)
        word, start = _settled(words, window)
        if word is None:
            unsettled.append(label)
        else:
            stabilized[label] = word
            n0[label] = start

    distinct = sorted(set(map(str, stabilized.values())))
    if len(distinct) > 1:
        offending = tuple(next(l for l, w in stabilized.items() if str(w) == d) for d in distinct[:2])
        logger.info(f"[Stability] orbits settle on different sign words {distinct}")
        return StabilityReport(UNSTABLE, n0=tuple(sorted(n0.items())), power=loop.exponent,
                               reason="orbits settle on different strict sign words", offending=offending)
    if zero_late:
        logger.info(f"[Stability] zero signs persist for {len(zero_late)} samples")
        return StabilityReport(UNSTABLE, n0=tuple(sorted(n0.items())), power=loop.exponent,
                               reason="zero signs recur past half the iteration budget",
                               offending=tuple(zero_late))
    if unsettled:
        return StabilityReport(INCONCLUSIVE, n0=tuple(sorted(n0.items())), power=loop.exponent,
                               reason=f"orbits did not settle within {max_iter} iterations",
                               offending=tuple(unsettled))

    eps = next(iter(stabilized.values()))
    c_eps = stable_cone(loop, eps)
    if not c_eps.is_full_dimensional():
        return StabilityReport(INCONCLUSIVE, eps, tuple(sorted(n0.items())), power=loop.exponent,
                               reason="the stable-sign cone is not full-dimensional")
    E = presentation_matrix(loop, eps)
    rho = spectral_radius(E)
    logger.info(f"[Stability] stable sign {eps} at power {loop.exponent}, rho ~ {rho.value:.10g}")
    return StabilityReport(STABLE, eps, tuple(sorted(n0.items())), E, rho, None, c_eps, loop.exponent)


# ── Linear pieces ────────────────────────────────────────────────────────────


def _step_matrices(loop: MutationLoop, eps: SignSequence) -> List[Mat]:
    if len(eps) != loop.h:
        raise LoopInvalid(f"sign word has length {len(eps)}, the loop has {loop.h} steps")
    return [frozen_x_matrix(B, k, s) for B, k, s in zip(loop.exchange_matrices, loop.word.flips, eps.signs)]


def presentation_matrix(loop: MutationLoop, eps: SignSequence) -> Mat:
    """E = P_σ · F_h ··· F_1 with every step's sign frozen."""
    n = len(loop.base.arcs)
    total = identity(n)
    for F in _step_matrices(loop, eps):
        total = matmul(F, total)
    return matmul(permutation_matrix(loop.base.arcs, loop.word.sigma_map), total)


def stable_cone(loop: MutationLoop, eps: SignSequence) -> PolyCone:
    """C^ε: points whose sign word is ε (closed version)."""
    n = len(loop.base.arcs)
    idx = loop.base.arc_index
    rows = []
    partial = identity(n)
    for F, k, s in zip(_step_matrices(loop, eps), loop.word.flips, eps.signs):
        rows.append(tuple(s * x for x in partial[idx[k]]))
        partial = matmul(F, partial)
    return PolyCone(n, (), tuple(rows))


def check_bounded_stability(loop: MutationLoop, report: StabilityReport, n_max: int = 10) -> BoundedStability:
    """Intersect E^{-m}(C^ε) for m = 0, 1, ... until the cone stops shrinking."""
    if report.verdict != STABLE:
        raise NotStable("bounded stability needs a stable report", {"verdict": report.verdict})
    c_eps = stable_cone(loop, report.stable_sign)
    E = report.matrix
    current = c_eps
    power = identity(len(E))
    for m in range(1, n_max + 1):
        power = matmul(power, E)
        nxt = current.intersect(c_eps.preimage(power))
        if current.contained_in(nxt):
            logger.info(f"[Stability] bounded: stationary after {m - 1} steps")
            return BoundedStability(True, current, m - 1)
        current = nxt
    return BoundedStability(None, current, n_max)


# ── Spectra ──────────────────────────────────────────────────────────────────


def spectral_radius(matrix: Sequence[Sequence[Fraction]]) -> SpectralRadius:
    """Exact for small matrices (characteristic polynomial plus root isolation)."""
    n = len(matrix)
    if n == 0:
        return SpectralRadius(0.0, (Fraction(0), Fraction(0)), "1", "0")
    if n > EXACT_LIMIT:
        return _power_iteration(matrix)
    lam = sympy.Symbol("x")
    M = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in map(_fractions, matrix)])
    poly = M.charpoly(lam)
    best = None
    for fac, _ in sympy.factor_list(poly.as_expr())[1]:
        p = sympy.Poly(fac, lam)
        if p.degree() < 1:
            continue
        for root in p.all_roots():
            mod = sympy.N(sympy.Abs(root), 50)
            if best is None or mod > best[0]:
                best = (mod, root, p)
    mod, root, p = best
    exact = root
    if p.degree() <= 2:
        exact = min(sympy.roots(p, lam), key=lambda r: abs(sympy.N(r - root, 50)))
    if root.is_real:
        interval = next((a, b) for (a, b), _ in p.intervals(eps=sympy.Rational(1, 10**12))
                        if a <= root <= b)
        if root < 0:
            interval = (-interval[1], -interval[0])
        lo, hi = Fraction(str(interval[0])), Fraction(str(interval[1]))
    else:
        center = Fraction(str(sympy.N(mod, 40)))
        lo, hi = center - Fraction(1, 10**30), center + Fraction(1, 10**30)
    exact_expr = sympy.Abs(exact) if not root.is_real or root < 0 else exact
    return SpectralRadius(float(mod), (lo, hi), str(sympy.factor(poly.as_expr())), str(sympy.nsimplify(exact_expr)))


def _fractions(row) -> List[Fraction]:
    return [Fraction(x) for x in row]


def _power_iteration(matrix, steps: int = 2000) -> SpectralRadius:
    """Power iteration; Collatz-Wielandt bounds when the matrix is nonnegative."""
    A = np.array([[float(x) for x in r] for r in matrix])
    v = np.ones(A.shape[0])
    ratio = 0.0
    for _ in range(steps):
        w = A @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return SpectralRadius(0.0, (Fraction(0), Fraction(0)), method="power")
        ratio = norm / np.linalg.norm(v)
        v = w / norm
    if (A >= 0).all() and (v > 0).all():
        w = A @ v
        lo, hi = float(np.min(w / v)), float(np.max(w / v))
    else:
        lo, hi = ratio * (1 - 1e-9), ratio * (1 + 1e-9)
    return SpectralRadius(float(ratio), (Fraction(lo), Fraction(hi)), method="power")


def orbit_growth_rate(orbit: Sequence[TropicalPoint]) -> float:
    """log of the last norm ratio ‖φ^n w‖ / ‖φ^{n-1} w‖."""
    if len(orbit) < 2:
        raise ValueError("need at least two orbit points")
    a, b = float(orbit[-2].norm()), float(orbit[-1].norm())
    return math.log(b / a)


def _acts_as_identity(loop: MutationLoop) -> bool:
    """E = I on every full-dimensional sign chamber of the loop."""
    n = len(loop.base.arcs)
    idx = loop.base.arc_index
    P = permutation_matrix(loop.base.arcs, loop.word.sigma_map)
    target = identity(n)

    def walk(step: int, rows: Tuple, partial: Mat) -> bool:
        if not PolyCone(n, (), rows).is_full_dimensional():
            return True
        if step == loop.h:
            return matmul(P, partial) == target
        B, k = loop.exchange_matrices[step], loop.word.flips[step]
        for s in (1, -1):
            row = tuple(s * x for x in partial[idx[k]])
            if not walk(step + 1, rows + (row,), matmul(frozen_x_matrix(B, k, s), partial)):
                return False
        return True

    return walk(0, (), target)


def loop_order(loop: MutationLoop, max_order: Optional[int] = None) -> Optional[int]:
    """Smallest m <= R with φ^m the identity on the X-space, or None.

    Sample orbits rule out most m; a remaining candidate is confirmed on
    every sign chamber of φ^m.
    """
    max_order = max_order or get_settings().max_power
    samples = default_samples(loop)
    for m in range(1, max_order + 1):
        if any(iterate_loop(loop, w, m)[-1].values != w.values for w in samples):
            continue
        if _acts_as_identity(loop.power(m) if m > 1 else loop):
            logger.info(f"[Stability] loop has order {m}")
            return m
    return None


def entropy(loop: MutationLoop, report: Optional[StabilityReport] = None) -> float:
    """log ρ(E) divided by the analysed power; 0 for pure relabelings and loops of finite order."""
    if loop.h == 0:
        return 0.0
    if report is None or report.verdict != STABLE:
        if loop_order(loop) is not None:
            return 0.0
        raise NotStable("entropy needs a sign-stable loop",
                        {"verdict": report.verdict if report else None})
    value = math.log(report.spectral_radius.value) / report.power
    logger.info(f"[Stability] entropy {value:.10g}")
    return value


def is_palindromic(poly_text: str) -> bool:
    """(Anti)palindromic after removing the factors x - 1 and x + 1."""
    lam = sympy.Symbol("x")
    p = sympy.Poly(sympy.sympify(poly_text, locals={"x": lam}), lam)
    for linear in (sympy.Poly(lam - 1, lam), sympy.Poly(lam + 1, lam)):
        while p.degree() > 0:
            q, r = sympy.div(p, linear)
            if not r.is_zero:
                break
            p = q
    coeffs = p.all_coeffs()
    rev = list(reversed(coeffs))
    return coeffs == rev or coeffs == [-c for c in rev]


# ── Invariant tracks ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class InvariantTrack:
    track: TrainTrack
    matrix: Mat
    reduced: Mat
    spectral_radius: SpectralRadius
    realized: Tuple[bool, ...]

    def to_dict(self) -> dict:
        return {"track": self.track.key, "branches": list(self.track.branches),
                "matrix": [[str(x) for x in r] for r in self.matrix],
                "spectral_radius": self.spectral_radius.to_dict(), "realized": list(self.realized)}


def _identify(final: TrainTrack, loop: MutationLoop) -> List[Tuple[TrainTrack, Dict[str, str]]]:
    """Images of the final track on the base chart, with their branch maps."""
    sigma = loop.word.sigma_map
    relabeled = relabel(final.base, sigma)
    out = []
    for iso in triangulation_isomorphisms(relabeled, loop.base):
        absent = {}
        names = {}
        for t, corners in final.absent:
            t2, r = iso[t]
            absent[t2] = [(c + r) % 3 for c in corners]
            for c in range(3):
                names[final.short_id(t, c)] = final.short_id(t2, c + r)
        for arc in final.base.arcs:
            names[final.long_id(arc)] = final.long_id(sigma.get(arc, arc))
        try:
            image = TrainTrack.from_absent(loop.base, absent)
        except TrackInvalid:
            continue
        out.append((image, names))
    return out


def find_invariant_track(loop: MutationLoop, largest: bool = False) -> Optional[InvariantTrack]:
    """A complete track carried onto itself by the loop, with its transition matrix.

    The matrix M satisfies ν = M ν' where ν' is the measure after one pass;
    invariance means M maps the measure cone into itself. The first hit in
    enumeration order is returned; with largest=True every complete track is
    searched and the hit with the largest spectral radius wins.
    """
    hits = []
    for tau in enumerate_complete_tracks(loop.base):
        try:
            results = carrying_matrix(tau, loop.word.flips)
        except TrackInvalid:
            continue
        for res in results:
            for image, names in _identify(res.final, loop):
                if image != tau:
                    continue
                cols = {names[b]: j for j, b in enumerate(res.final.branches)}
                M = tuple(tuple(row[cols[b]] for b in tau.branches) for row in res.matrix)
                V = cone(tau).polycone()
                if not V.contained_in(V, M):
                    continue
                K = transpose(nullspace_basis(tau.switch_matrix, len(tau.branches)))
                R = solve_left(K, matmul(M, K))
                hit = InvariantTrack(tau, M, R, spectral_radius(R), res.realized)
                if not largest:
                    logger.info(f"[Stability] invariant track {tau.key}, rho ~ {hit.spectral_radius.value:.10g}")
                    return hit
                hits.append(hit)
    if not hits:
        logger.info("[Stability] no invariant complete track found")
        return None
    best = max(hits, key=lambda h: h.spectral_radius.value)
    logger.info(f"[Stability] invariant track {best.track.key}, rho ~ {best.spectral_radius.value:.10g}")
    return best


def conjecture_probe(loop: MutationLoop, found: InvariantTrack, stable: PolyCone) -> dict:
    """Check that the X-images of the generators of V(τ) on w = 0 lie in the stable cone."""
    tau = found.track
    chart = chart_map(tau)
    spanning = chart.rows[: len(chart.rows) - len(loop.base.surface.punctures)]
    B = exchange_matrix(loop.base)
    rays = cone(tau).polycone().extreme_rays()
    inside = 0
    for ray in rays:
        nu = dict(zip(tau.branches, ray))
        coords = [nu[b] for b in spanning] + [Fraction(0)] * len(loop.base.surface.punctures)
        a = TropicalPoint(loop.base.chart_id, "A", loop.base.arcs, chart.invert(coords))
        if stable.contains(ensemble_map(a, B).values):
            inside += 1
    holds = inside == len(rays)
    logger.info(f"[Stability] conjecture probe: {inside}/{len(rays)} generators inside the stable cone")
    return {"generators": len(rays), "inside": inside, "holds": holds}
