"""
Mutation loops: sign stability, presentation matrices, entropy and
invariant tracks.

Usage:
  python -m pytest tests/test_stability.py -v
"""

import random
from fractions import Fraction

import pytest
import sympy

from troptrack.errors import LoopInvalid, NotStable
from troptrack.modules.stability import (
    STABLE,
    MutationLoop,
    check_bounded_stability,
    conjecture_probe,
    detect_sign_stability,
    entropy,
    find_invariant_track,
    is_palindromic,
    iterate_loop,
    loop_order,
    orbit_growth_rate,
    presentation_matrix,
    spectral_radius,
    stable_cone,
)
from troptrack.modules.surface import FlipWord
from troptrack.modules.tracks import enumerate_complete_tracks
from troptrack.modules.tropical import SignSequence, TropicalPoint
from troptrack.utils.linalg import matvec

X = sympy.Symbol("x")
RHO = (3 + sympy.sqrt(5)) / 2
TORUS_LR_ENTROPY = 0.9624236501
TORUS_LR_E = ((2, 0, 1), (-1, 2, 0), (0, -1, 0))


@pytest.fixture()
def lr(torus_lr):
    return MutationLoop.create(torus_lr.triangulation, torus_lr.loops["LR"])


@pytest.fixture()
def lr_report(lr):
    return detect_sign_stability(lr)


# ─────────────────────────────────────────────────────────────
# Loops
# ─────────────────────────────────────────────────────────────

def test_non_loop_is_rejected(torus_lr):
    with pytest.raises(LoopInvalid):
        MutationLoop.create(torus_lr.triangulation, FlipWord((1,)))


def test_loop_power_multiplies_length(lr):
    squared = lr.power(2)
    assert squared.h == 2 * lr.h
    assert squared.exponent == 2


def test_sign_word_of_the_wrong_length_raises(lr):
    with pytest.raises(LoopInvalid):
        presentation_matrix(lr, SignSequence.parse("+-+"))


# ─────────────────────────────────────────────────────────────
# Torus LR
# ─────────────────────────────────────────────────────────────

def test_torus_lr_is_sign_stable(lr_report):
    assert lr_report.verdict == STABLE
    assert str(lr_report.stable_sign) == "+-"
    assert lr_report.power == 1
    assert lr_report.matrix == TORUS_LR_E


def test_torus_lr_settles_quickly(lr_report):
    """Every unit-vector sample reaches the stable sign within three passes"""
    assert lr_report.n0
    assert all(n <= 3 for _, n in lr_report.n0)


def test_torus_lr_spectral_radius_is_exact(lr_report):
    rho = lr_report.spectral_radius
    poly = sympy.sympify(rho.charpoly, locals={"x": X})
    assert sympy.expand(poly - (X - 1) * (X ** 2 - 3 * X + 1)) == 0
    assert sympy.simplify(sympy.sympify(rho.exact) - RHO) == 0
    lo, hi = rho.interval
    assert lo * lo - 3 * lo + 1 <= 0 <= hi * hi - 3 * hi + 1
    assert hi - lo < Fraction(1, 10 ** 9)


def test_torus_lr_entropy(lr, lr_report):
    assert entropy(lr, lr_report) == pytest.approx(TORUS_LR_ENTROPY, abs=1e-9)


def test_entropy_matches_orbit_growth(lr, torus_lr):
    """log of the norm ratio at n = 40 agrees with log ρ(E)"""
    orbit = iterate_loop(lr, torus_lr.points["e1"], 40)
    assert orbit_growth_rate(orbit) == pytest.approx(TORUS_LR_ENTROPY, abs=1e-4)


def test_orbit_enters_the_stable_cone(lr, lr_report, torus_lr):
    cone = stable_cone(lr, lr_report.stable_sign)
    orbit = iterate_loop(lr, torus_lr.points["generic"], 12)
    assert cone.contains(orbit[-1].values)


def test_bounded_stability_keeps_a_full_cone(lr, lr_report):
    result = check_bounded_stability(lr, lr_report, n_max=10)
    assert result.bounded in (True, None)
    assert result.cone.contained_in(stable_cone(lr, lr_report.stable_sign))
    assert result.steps <= 10


def test_charpoly_is_palindromic(lr_report):
    assert is_palindromic(lr_report.spectral_radius.charpoly)
    assert not is_palindromic("x**2 - 3*x + 2")


def test_invariant_track_has_the_same_spectral_radius(lr, lr_report):
    found = find_invariant_track(lr)
    assert found is not None
    assert found.spectral_radius.value == pytest.approx(lr_report.spectral_radius.value, abs=1e-9)


def test_invariant_track_is_the_first_hit_unless_largest_is_asked(lr):
    first = find_invariant_track(lr)
    best = find_invariant_track(lr, largest=True)
    order = list(enumerate_complete_tracks(lr.base))
    assert order.index(first.track) <= order.index(best.track)
    assert best.spectral_radius.value >= first.spectral_radius.value - 1e-12


def test_conjecture_probe_counts_generators(lr, lr_report):
    found = find_invariant_track(lr)
    probe = conjecture_probe(lr, found, stable_cone(lr, lr_report.stable_sign))
    assert probe["generators"] >= 1
    assert 0 <= probe["inside"] <= probe["generators"]
    assert probe["holds"] == (probe["inside"] == probe["generators"])


# ─────────────────────────────────────────────────────────────
# Other loops
# ─────────────────────────────────────────────────────────────

def test_twist_on_the_four_punctured_sphere_is_not_stable(twist):
    loop = MutationLoop.create(twist.triangulation, twist.loops["twist"])
    report = detect_sign_stability(loop)
    assert report.verdict != STABLE
    assert report.reason
    with pytest.raises(NotStable):
        check_bounded_stability(loop, report)


def test_order_two_loop_with_flips_has_zero_entropy(twist):
    """The S04 twist squares to the identity; its signs never settle"""
    loop = MutationLoop.create(twist.triangulation, twist.loops["twist"])
    report = detect_sign_stability(loop)
    assert loop.h == 2
    assert report.verdict != STABLE
    assert loop_order(loop) == 2
    assert entropy(loop, report) == 0.0


def test_dehn_twist_on_the_torus_is_neither_stable_nor_periodic(torus_lr):
    loop = MutationLoop.create(torus_lr.triangulation, torus_lr.loops["twist"])
    report = detect_sign_stability(loop)
    assert report.verdict != STABLE
    assert loop_order(loop) is None
    with pytest.raises(NotStable):
        entropy(loop, report)


def test_pseudo_anosov_loop_has_no_finite_order(lr):
    assert loop_order(lr) is None


def test_pure_relabeling_has_zero_entropy(torus_lr):
    loop = MutationLoop(torus_lr.triangulation, FlipWord(()))
    assert loop.h == 0
    assert entropy(loop) == 0.0
    assert detect_sign_stability(loop).reason == "no horizontal edges"


# ─────────────────────────────────────────────────────────────
# Linear pieces
# ─────────────────────────────────────────────────────────────

def _random_points(loop, count, seed):
    rng = random.Random(seed)
    arcs = loop.base.arcs
    return [TropicalPoint(loop.base.chart_id, "X", arcs,
                          tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in arcs))
            for _ in range(count)]


def test_presentation_matrix_agrees_with_the_loop_on_its_chamber(lr, twist):
    """E·w = φ(w) whenever the sign word of w is the strict word E was built from"""
    loops = (lr, MutationLoop.create(twist.triangulation, twist.loops["twist"]))
    for seed, loop in enumerate(loops):
        checked = 0
        for w in _random_points(loop, 40, seed):
            image, eps = loop.act(w)
            if not eps.is_strict:
                continue
            assert matvec(presentation_matrix(loop, eps), w.values) == image.values
            checked += 1
        assert checked > 20


def test_sign_words_are_invariant_under_positive_rescaling(lr):
    for w in _random_points(lr, 10, seed=3):
        for factor in (Fraction(1, 3), Fraction(2), Fraction(7, 2)):
            x, y = w, w.scaled(factor)
            for _ in range(6):
                x, sx = lr.act(x)
                y, sy = lr.act(y)
                assert sx == sy
                assert y.values == tuple(factor * v for v in x.values)


def test_empty_word_has_identity_presentation(torus_lr):
    loop = MutationLoop(torus_lr.triangulation, FlipWord(()))
    E = presentation_matrix(loop, SignSequence(()))
    assert E == tuple(tuple(Fraction(int(i == j)) for j in range(3)) for i in range(3))


# ─────────────────────────────────────────────────────────────
# Spectral radius
# ─────────────────────────────────────────────────────────────

def test_spectral_radius_of_the_cat_map():
    rho = spectral_radius([[Fraction(2), Fraction(1)], [Fraction(1), Fraction(1)]])
    assert sympy.simplify(sympy.sympify(rho.exact) - RHO) == 0
    assert rho.method == "exact"


def test_large_matrices_use_power_iteration():
    n = 14
    matrix = [[Fraction(int(i == j) * 3) for j in range(n)] for i in range(n)]
    rho = spectral_radius(matrix)
    assert rho.method == "power"
    assert rho.value == pytest.approx(3.0)
    assert rho.interval[0] <= 3 <= rho.interval[1]
