"""
Tropical A/X mutations, ensemble map and path actions.

Property tests draw exact rational points with hypothesis.

Usage:
  python -m pytest tests/test_tropical.py -v
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_workspace
from troptrack.errors import ChartMismatch
from troptrack.modules.surface import exchange_matrix, iter_flippable
from troptrack.modules.tropical import (
    SignSequence,
    TropicalPoint,
    a_mutation_pieces,
    apply_path_a,
    apply_path_x,
    ensemble_map,
    frozen_x_matrix,
    mutate_exchange,
    sign_of_path,
    tropical_a_mutate,
    tropical_x_mutate,
    tropical_x_mutate_min_form,
)
from troptrack.utils.linalg import matvec

_TRIS = {name: load_workspace(name).triangulation for name in ("s04", "s05", "s11", "s12")}

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=12)


def _points(n):
    return st.lists(rationals, min_size=n, max_size=n)


def _point(tri, kind, values):
    return TropicalPoint(tri.chart_id, kind, tri.arcs, tuple(values))


# ─────────────────────────────────────────────────────────────
# Matrix mutation
# ─────────────────────────────────────────────────────────────

@pytest.mark.parametrize("name", sorted(_TRIS))
def test_matrix_mutation_is_an_involution(name):
    B = exchange_matrix(_TRIS[name])
    for k in B.arcs:
        assert mutate_exchange(mutate_exchange(B, k), k) == B


@pytest.mark.parametrize("name", sorted(_TRIS))
def test_matrix_mutation_keeps_skew_symmetry(name):
    B = exchange_matrix(_TRIS[name])
    for k in B.arcs:
        assert mutate_exchange(B, k).is_skew_symmetric()


# ─────────────────────────────────────────────────────────────
# Point mutations (each property on >= 100 random points per fixture)
# ─────────────────────────────────────────────────────────────

@pytest.mark.parametrize("name", sorted(_TRIS))
def test_a_mutation_is_an_involution(name):
    tri = _TRIS[name]
    B = exchange_matrix(tri)

    @settings(max_examples=100, deadline=None)
    @given(_points(len(tri.arcs)), st.sampled_from(list(tri.arcs)))
    def check(values, k):
        a = _point(tri, "A", values)
        back = tropical_a_mutate(tropical_a_mutate(a, B, k), mutate_exchange(B, k), k)
        assert back.values == a.values

    check()


@pytest.mark.parametrize("name", sorted(_TRIS))
def test_x_mutation_is_an_involution(name):
    tri = _TRIS[name]
    B = exchange_matrix(tri)

    @settings(max_examples=100, deadline=None)
    @given(_points(len(tri.arcs)), st.sampled_from(list(tri.arcs)))
    def check(values, k):
        x = _point(tri, "X", values)
        back = tropical_x_mutate(tropical_x_mutate(x, B, k), mutate_exchange(B, k), k)
        assert back.values == x.values

    check()


@pytest.mark.parametrize("name", sorted(_TRIS))
def test_two_x_mutation_formulas_agree(name):
    tri = _TRIS[name]
    B = exchange_matrix(tri)

    @settings(max_examples=100, deadline=None)
    @given(_points(len(tri.arcs)), st.sampled_from(list(tri.arcs)))
    def check(values, k):
        x = _point(tri, "X", values)
        assert tropical_x_mutate(x, B, k).values == tropical_x_mutate_min_form(x, B, k).values

    check()


@pytest.mark.parametrize("name", sorted(_TRIS))
def test_ensemble_map_commutes_with_mutation(name):
    """p(mu_k a) = mu_k p(a)"""
    tri = _TRIS[name]
    B = exchange_matrix(tri)

    @settings(max_examples=100, deadline=None)
    @given(_points(len(tri.arcs)), st.sampled_from(list(tri.arcs)))
    def check(values, k):
        a = _point(tri, "A", values)
        left = ensemble_map(tropical_a_mutate(a, B, k), mutate_exchange(B, k))
        right = tropical_x_mutate(ensemble_map(a, B), B, k)
        assert left.values == right.values

    check()


def test_frozen_matrix_agrees_with_the_mutation_on_its_sign():
    """On points with sgn(x_k) = s the X-mutation is the frozen linear map"""
    tri = _TRIS["s04"]
    B = exchange_matrix(tri)
    x = _point(tri, "X", [Fraction(3), Fraction(-1, 2), Fraction(2), Fraction(0), Fraction(5, 3), Fraction(-4)])
    for k in tri.arcs:
        s = 1 if x[k] > 0 else -1 if x[k] < 0 else 1
        assert matvec(frozen_x_matrix(B, k, s), x.values) == tropical_x_mutate(x, B, k).values


def test_a_mutation_pieces_cover_the_min():
    """Each linear piece of the A-mutation matches it on its side of the wall"""
    tri = _TRIS["s04"]
    B = exchange_matrix(tri)
    a = _point(tri, "A", [Fraction(v) for v in (1, -2, 3, 0, 4, -1)])
    for k in iter_flippable(tri):
        pieces = a_mutation_pieces(B, k)
        wall = sum(w * v for w, v in zip(pieces["wall"], a.values))
        piece = pieces["+"] if wall <= 0 else pieces["-"]
        assert matvec(piece, a.values) == tropical_a_mutate(a, B, k).values


# ─────────────────────────────────────────────────────────────
# Charts and paths
# ─────────────────────────────────────────────────────────────

def test_kind_mismatch_raises():
    tri = _TRIS["s11"]
    B = exchange_matrix(tri)
    with pytest.raises(ChartMismatch):
        tropical_x_mutate(_point(tri, "A", [0, 0, 0]), B, 1)


def test_from_mapping_requires_every_arc():
    tri = _TRIS["s11"]
    with pytest.raises(ChartMismatch):
        TropicalPoint.from_mapping(tri.chart_id, "X", tri.arcs, {"1": 1, "2": 0})


def test_torus_lr_sign_of_unit_vector(torus_lr):
    """x = (1, 0, 0) starts with sign + at the first flip"""
    tri = torus_lr.triangulation
    word = torus_lr.loops["LR"]
    x = torus_lr.points["e1"]
    signs = sign_of_path(word, x, exchange_matrix(tri))
    assert len(signs) == 2 and signs.signs[0] == 1


def test_path_actions_return_to_the_same_arcs(torus_lr):
    tri = torus_lr.triangulation
    word = torus_lr.loops["LR"]
    B = exchange_matrix(tri)
    x, _ = apply_path_x(word, torus_lr.points["generic"], B)
    a = apply_path_a(word, _point(tri, "A", [1, 2, 3]), B)
    assert x.arcs == tri.arcs and a.arcs == tri.arcs


def test_sign_sequence_parse_and_print():
    assert str(SignSequence.parse("+-0")) == "+-0"
    assert SignSequence.parse("+-").is_strict
    assert not SignSequence.parse("+0").is_strict


def test_geometric_presentation_negates_a_coordinates():
    s11 = _TRIS["s11"]
    p = TropicalPoint.from_geometric(s11.chart_id, s11.arcs, [1, Fraction(-1, 2), 0])
    assert p.kind == "A"
    assert p.values == (-1, Fraction(1, 2), 0)
    assert p.geometric() == (1, Fraction(-1, 2), 0)
    with pytest.raises(ChartMismatch):
        TropicalPoint(s11.chart_id, "X", s11.arcs, p.values).geometric()
