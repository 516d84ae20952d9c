"""
Surfaces, triangulations, flips and exchange matrices.

Usage:
  python -m pytest tests/test_surface.py -v
"""

import pytest

from conftest import load_workspace
from troptrack.errors import ArcCountMismatch, FlipBlocked, GluingInvalid, SelfFolded, SurfaceExcluded
from troptrack.modules.surface import (
    FlipWord,
    PuncturedSurface,
    build_triangulation,
    euler_characteristic,
    exchange_matrix,
    flip,
    is_loop,
    iter_flippable,
    quadrilateral,
    relabel,
    triangulation_isomorphisms,
)
from troptrack.modules.tropical import mutate_exchange


# ─────────────────────────────────────────────────────────────
# Surfaces
# ─────────────────────────────────────────────────────────────

def test_excluded_surfaces_raise():
    """Spheres with at most three punctures and non-hyperbolic surfaces are rejected"""
    for genus, h in ((0, 3), (0, 2), (1, 0)):
        with pytest.raises(SurfaceExcluded):
            PuncturedSurface(genus, tuple(f"p{i}" for i in range(h)))


def test_arc_counts():
    """6g - 6 + 3h arcs and 6g - 6 + 2h measure dimension"""
    assert PuncturedSurface(0, ("a", "b", "c", "d")).arc_count == 6
    assert PuncturedSurface(1, ("p",)).arc_count == 3
    assert PuncturedSurface(1, ("p", "q")).measure_dimension == 4


# ─────────────────────────────────────────────────────────────
# Triangulations
# ─────────────────────────────────────────────────────────────

def test_fixtures_glue_to_their_surfaces(surface_tri):
    """Every bundled triangulation has the Euler characteristic of its surface"""
    assert euler_characteristic(surface_tri) == surface_tri.surface.euler_characteristic
    assert len(surface_tri.triangles) == 2 * len(surface_tri.arcs) // 3


def test_s04_corners_match_declared_punctures(s04):
    """Arc 6 joins pA and pC, arc 2 joins pA and pB"""
    assert sorted(s04.endpoints(6)) == ["pA", "pC"]
    assert sorted(s04.endpoints(2)) == ["pA", "pB"]
    assert len(s04.corners_at("pB")) == 2


def test_wrong_arc_count_raises():
    """Five arcs on a four-punctured sphere"""
    doc = {"surface": {"genus": 0, "punctures": ["a", "b", "c", "d"]},
           "triangulation": {"arcs": [1, 2, 3, 4, 5], "triangles": []}}
    with pytest.raises(ArcCountMismatch):
        build_triangulation(doc)


def test_self_folded_triangle_raises():
    """A triangle that uses one arc twice"""
    doc = {"surface": {"genus": 1, "punctures": ["p"]},
           "triangulation": {"arcs": [1, 2, 3], "triangles": [[1, 1, 2], [2, 3, 3]]}}
    with pytest.raises(SelfFolded):
        build_triangulation(doc)


def test_arc_used_once_raises():
    doc = {"surface": {"genus": 1, "punctures": ["p"]},
           "triangulation": {"arcs": [1, 2, 3], "triangles": [[1, 2, 3], [1, 2, 2]]}}
    with pytest.raises((GluingInvalid, SelfFolded)):
        build_triangulation(doc)


# ─────────────────────────────────────────────────────────────
# Flips and exchange matrices
# ─────────────────────────────────────────────────────────────

def test_exchange_matrix_is_skew_symmetric(surface_tri):
    assert exchange_matrix(surface_tri).is_skew_symmetric()


def test_torus_exchange_matrix():
    """The once-punctured torus quiver is the Markov quiver"""
    tri = load_workspace("s11").triangulation
    assert exchange_matrix(tri).to_lists() == [[0, 2, -2], [-2, 0, 2], [2, -2, 0]]


def test_flip_is_compatible_with_matrix_mutation(surface_tri):
    """B(flip(T, k)) = mu_k(B(T)) for every flippable arc"""
    B = exchange_matrix(surface_tri)
    for k in iter_flippable(surface_tri):
        assert exchange_matrix(flip(surface_tri, k)) == mutate_exchange(B, k)


def test_flip_twice_returns_the_exchange_matrix(surface_tri):
    B = exchange_matrix(surface_tri)
    for k in iter_flippable(surface_tri):
        assert exchange_matrix(flip(flip(surface_tri, k), k)) == B


def test_quadrilateral_punctures(s04):
    """The quadrilateral around arc 1 has corners pA, pB, pC, pD in some rotation"""
    quad = quadrilateral(s04, 1)
    assert sorted(quad.punctures) == ["pA", "pB", "pC", "pD"]
    assert {quad.a, quad.b, quad.c, quad.d} == {2, 3, 4, 5}


def test_torus_arcs_are_flippable_and_unknown_arcs_raise():
    """Every torus arc sits between two distinct triangles"""
    doc = {"surface": {"genus": 1, "punctures": ["p"]},
           "triangulation": {"arcs": [1, 2, 3], "triangles": [[1, 2, 3], [1, 2, 3]]}}
    tri = build_triangulation(doc)
    assert sorted(iter_flippable(tri)) == [1, 2, 3]
    with pytest.raises((FlipBlocked, GluingInvalid)):
        flip(tri, 7)


# ─────────────────────────────────────────────────────────────
# Loops
# ─────────────────────────────────────────────────────────────

def test_torus_lr_is_a_loop(torus_lr):
    word = torus_lr.loops["LR"]
    assert word.flips == (1, 2)
    assert word.sigma_map == {1: 2, 2: 3, 3: 1}
    assert is_loop(word, torus_lr.triangulation)


def test_word_without_relabeling_is_not_a_loop(torus_lr):
    tri = torus_lr.triangulation
    assert not is_loop(FlipWord((1,)), tri)


def test_powered_word_is_a_loop(torus_lr):
    word = torus_lr.loops["LR"]
    squared = word.powered(2)
    assert squared.length == 4
    assert is_loop(squared, torus_lr.triangulation)


def test_relabeled_final_chart_is_isomorphic_to_the_base(torus_lr):
    """After the flips and the relabeling the triangulation matches the start"""
    tri = torus_lr.triangulation
    word = torus_lr.loops["LR"]
    final = tri
    for k in word.flips:
        final = flip(final, k)
    assert triangulation_isomorphisms(relabel(final, word.sigma_map), tri)
