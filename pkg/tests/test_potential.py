"""
Tropicalized potential on the four-punctured sphere and the other fixtures.

Usage:
  python -m pytest tests/test_potential.py -v
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_workspace
from troptrack.errors import ChartMismatch
from troptrack.modules.potential import (
    domain_cone,
    enumerate_domains,
    find_V_point,
    is_in_V,
    linearity_domain,
    potential_chart_invariance,
    potential_terms,
    tropical_potential,
)
from troptrack.modules.surface import iter_flippable
from troptrack.modules.tracks import is_complete, track_for_domain

_TRIS = {name: load_workspace(name).triangulation for name in ("s04", "s05", "s11", "s12")}


def _term(**coeffs):
    return {int(k[1:]): v for k, v in coeffs.items()}


# ─────────────────────────────────────────────────────────────
# The worked example
# ─────────────────────────────────────────────────────────────

S04_TERMS = {
    "pA": [_term(a3=1, a1=-1, a2=-1), _term(a3=1, a2=-1, a6=-1), _term(a4=1, a1=-1, a5=-1), _term(a4=1, a5=-1, a6=-1)],
    "pB": [_term(a1=1, a2=-1, a3=-1), _term(a6=1, a2=-1, a3=-1)],
    "pC": [_term(a2=1, a1=-1, a3=-1), _term(a2=1, a3=-1, a6=-1), _term(a5=1, a1=-1, a4=-1), _term(a5=1, a4=-1, a6=-1)],
    "pD": [_term(a1=1, a4=-1, a5=-1), _term(a6=1, a4=-1, a5=-1)],
}


def test_s04_potential_terms_match_the_worked_example(s04):
    """Each w_p is the min of exactly the printed linear forms"""
    terms = potential_terms(s04)
    assert set(terms) == set(S04_TERMS)
    for p, expected in S04_TERMS.items():
        got = {frozenset(t.items()) for t in terms[p]}
        assert got == {frozenset(t.items()) for t in expected}, p


def test_potential_vanishes_at_zero(s04):
    value = tropical_potential(s04, [0] * 6)
    assert value.values == {"pA": 0, "pB": 0, "pC": 0, "pD": 0}
    assert is_in_V(s04, [0] * 6)


def test_potential_value_and_argmin(s04):
    """a = e_1: w_pA = min(-1, 0, -1, 0), a tie between two distinct forms"""
    a = [1, 0, 0, 0, 0, 0]
    value = tropical_potential(s04, a)
    assert value.values["pA"] == -1
    assert value.values["pB"] == 0
    assert len(value.argmins["pA"]) == 2
    assert linearity_domain(s04, a).boundary


def test_wrong_length_point_raises(s04):
    with pytest.raises(ChartMismatch):
        tropical_potential(s04, [0, 0, 0])


# ─────────────────────────────────────────────────────────────
# Linearity domains
# ─────────────────────────────────────────────────────────────

def _wall_signs(point):
    a = dict(zip(range(1, 7), point))
    return (a[1] > a[6], a[2] + a[4] > a[3] + a[5])


def test_s04_has_four_domains_split_by_two_walls(s04):
    """The walls a1 = a6 and a2 + a4 = a3 + a5 separate four domains"""
    domains = enumerate_domains(s04)
    assert len(domains) == 4
    signs = {_wall_signs(d.interior_point) for d in domains}
    assert signs == {(True, True), (True, False), (False, True), (False, False)}
    for d in domains:
        a = dict(zip(range(1, 7), d.interior_point))
        assert a[1] != a[6]
        assert a[2] + a[4] != a[3] + a[5]


def test_domain_interiors_are_interior(s04):
    for d in enumerate_domains(s04):
        assert not linearity_domain(s04, d.interior_point).boundary
        assert d.cone.contains_strictly(d.interior_point)


def test_points_on_a_wall_are_boundary(s04):
    """a1 = a6 with every other form distinct"""
    a = [Fraction(2), Fraction(7), Fraction(1), Fraction(5), Fraction(3), Fraction(2)]
    assert linearity_domain(s04, a).boundary


def test_s04_V_domains(s04):
    """Restricted to w = 0 the domains keep the same four choices"""
    assert len(enumerate_domains(s04, restrict_to_V=True)) == 4
    point = find_V_point(s04)
    assert point is not None and any(point)
    assert is_in_V(s04, point)


# one triangle per puncture on the five-punctured sphere with p2..p5 on a line
S05_TUPLE = {"p1": ("t5", 2), "p2": ("t2", 2), "p3": ("t3", 1), "p4": ("t4", 1), "p5": ("t6", 0)}


def test_five_punctured_sphere_tuple_is_an_interior_domain():
    tri = load_workspace("s05_line").triangulation
    a = [Fraction(v) for v in (0, 1, 2, 0, 5, 5, 0, 0, 0)]
    found = linearity_domain(tri, a)
    assert not found.boundary
    assert {p: tuple(c) for p, c in found.choice.items()} == S05_TUPLE
    assert domain_cone(tri, S05_TUPLE).strict_interior_point() is not None

    track = track_for_domain(tri, S05_TUPLE)
    assert is_complete(track)
    assert track.triangle_type("t1") == "III"
    assert all(track.triangle_type(t) == "II" for t in ("t2", "t3", "t4", "t5", "t6"))


# ─────────────────────────────────────────────────────────────
# Chart invariance (>= 100 random points per fixture)
# ─────────────────────────────────────────────────────────────

@pytest.mark.parametrize("name", sorted(_TRIS))
def test_potential_is_invariant_under_flips(name):
    tri = _TRIS[name]
    arcs = list(iter_flippable(tri))
    rationals = st.fractions(min_value=-30, max_value=30, max_denominator=8)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(rationals, min_size=len(tri.arcs), max_size=len(tri.arcs)), st.sampled_from(arcs))
    def check(values, k):
        assert potential_chart_invariance(tri, k, values)

    check()
