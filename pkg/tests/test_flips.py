import itertools
from collections import Counter

import numpy as np
import pytest

from pentamesh.flips import (
    FLIP_KINDS_FORWARD,
    apply_flip,
    find_candidates,
    flip_kinds,
    flip_table,
    flip_vertex_count,
    improve_quality,
    validate_flip,
)
from pentamesh.geometry import hypervolume, regular_pentatope
from pentamesh.insertion import triangulate
from pentamesh.mesh import Mesh4


def boundary_multiset(tuples):
    cnt = Counter()
    for tup in tuples:
        for f in itertools.combinations(sorted(tup), 4):
            cnt[f] += 1
    return Counter({f: 1 for f, c in cnt.items() if c == 1})


def add_positive(mesh, vids):
    pts = [mesh.vertices[v] for v in vids]
    v = hypervolume(*pts)
    assert v != 0.0
    if v < 0.0:
        vids = (vids[1], vids[0]) + tuple(vids[2:])
    return mesh.add_element(vids)


# ---------------------------------------------------------------------------
# canonical instances of every kind, for randomized round-trip tests
# ---------------------------------------------------------------------------

def edge_star_mesh(rng, ring_kind):
    """An edge star through the t-axis with a tet/bipyramid/octahedron ring."""
    mesh = Mesh4()
    u = mesh.add_vertex((0.0, 0.0, 0.0, -1.0 - rng.random()))
    w = mesh.add_vertex((0.0, 0.0, 0.0, 1.0 + rng.random()))
    jitter = lambda: rng.uniform(-0.15, 0.15, size=3)
    if ring_kind == 4:
        base = np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], float)
        ring = [mesh.add_vertex((*(p + jitter()), rng.uniform(-0.1, 0.1)))
                for p in base]
        tris = list(itertools.combinations(ring, 3))
    elif ring_kind == 6:
        base = np.array([(1.2, 0, 0), (-0.6, 1.0, 0), (-0.6, -1.0, 0)], float)
        apex = np.array([(0, 0, 1.1), (0, 0, -1.3)], float)
        bi = [mesh.add_vertex((*(p + jitter()), rng.uniform(-0.1, 0.1))) for p in base]
        ai = [mesh.add_vertex((*(p + jitter()), rng.uniform(-0.1, 0.1))) for p in apex]
        tris = [be + (a,) for be in itertools.combinations(bi, 2) for a in ai]
    else:  # octahedron
        sq = np.array([(1.0, 0, 0), (0, 1.0, 0), (-1.0, 0, 0), (0, -1.0, 0)], float)
        ap = np.array([(0, 0, 1.0), (0, 0, -1.0)], float)
        si = [mesh.add_vertex((*(p + jitter() * 0.4), rng.uniform(-0.05, 0.05)))
              for p in sq]
        ai = [mesh.add_vertex((*(p + jitter() * 0.4), rng.uniform(-0.05, 0.05)))
              for p in ap]
        tris = [(si[i], si[(i + 1) % 4], a) for i in range(4) for a in ai]
    for tri in tris:
        add_positive(mesh, tuple(tri) + (u, w))
    assert mesh.validate() == []
    return mesh


def facet_pair_mesh(rng):
    mesh = Mesh4()
    base = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], float)
    ids = [mesh.add_vertex((*(p + rng.uniform(-0.1, 0.1, 3)), rng.uniform(-0.1, 0.1)))
           for p in base]
    up = mesh.add_vertex((0.3, 0.3, 0.3, 1.0 + rng.random()))
    dn = mesh.add_vertex((0.3, 0.3, 0.3, -1.0 - rng.random()))
    add_positive(mesh, tuple(ids) + (up,))
    add_positive(mesh, tuple(ids) + (dn,))
    assert mesh.validate() == []
    return mesh


def triangle_star_mesh(rng, ring_size):
    mesh = Mesh4()
    tri = np.array([(1.0, 0), (-0.5, 0.9), (-0.5, -0.9)], float)
    ti = [mesh.add_vertex((*(p + rng.uniform(-0.1, 0.1, 2)), 0.0, 0.0)) for p in tri]
    if ring_size == 3:
        ring = [(0, 0, 1.3, 0.1), (0, 0, -1.0, 1.0), (0, 0, -0.2, -1.2)]
    else:
        ring = [(0, 0, 1.3, 0.0), (0, 0, 0.0, 1.2), (0, 0, -1.3, 0.0), (0, 0, 0.0, -1.2)]
    ri = [mesh.add_vertex(tuple(np.array(p) + np.array([0, 0, *rng.uniform(-0.1, 0.1, 2)])))
          for p in ring]
    pairs = (itertools.combinations(ri, 2) if ring_size == 3
             else [(ri[i], ri[(i + 1) % 4]) for i in range(4)])
    for pair in pairs:
        add_positive(mesh, tuple(ti) + tuple(pair))
    assert mesh.validate() == []
    return mesh


def single_element_mesh(rng):
    mesh = Mesh4()
    pts = regular_pentatope(1.0) + rng.normal(size=(5, 4)) * 0.1
    for p in pts:
        mesh.add_vertex(tuple(p))
    add_positive(mesh, (0, 1, 2, 3, 4))
    return mesh


class TestStaticTables:
    def test_seventeen_kinds(self):
        assert len(FLIP_KINDS_FORWARD) == 17
        assert len(flip_kinds()) == 30  # including reverse tags

    @pytest.mark.parametrize("kind", sorted(set(flip_kinds())))
    def test_boundary_multiset_preserved(self, kind):
        t = flip_table(kind)
        assert boundary_multiset(t.stage1) == boundary_multiset(t.stage2)

    @pytest.mark.parametrize("kind,rkind,with_point", [
        ("1_5", "5_1", True), ("2_4", "4_2", False), ("4_8", "8_4", True),
        ("3_9", "9_3", True), ("6_12a", "12_6a", True), ("2_8", "8_2", True),
        ("4_6", "6_4", False), ("4_12", "12_4", True), ("6_12b", "12_6b", True),
        ("8_16", "16_8", True),
    ])
    def test_reverse_pairs_swap_stages(self, kind, rkind, with_point):
        fwd, rev = flip_table(kind), flip_table(rkind)
        assert fwd.stage1 == rev.stage2 and fwd.stage2 == rev.stage1
        assert fwd.inserts_point == with_point
        assert rev.removes_point == with_point

    def test_published_examples(self):
        t = flip_table("1_5")
        assert t.stage1 == ((1, 2, 3, 4, 5),)
        assert set(t.stage2) == {(1, 2, 3, 4, 6), (2, 3, 4, 5, 6), (1, 3, 4, 5, 6),
                                 (1, 2, 4, 5, 6), (1, 2, 3, 5, 6)}
        t = flip_table("3_3")
        assert set(t.stage1) == {(1, 2, 3, 4, 5), (1, 2, 4, 5, 6), (1, 3, 4, 5, 6)}
        assert set(t.stage2) == {(1, 2, 3, 4, 6), (2, 3, 4, 5, 6), (1, 2, 3, 5, 6)}
        t = flip_table("8_16")
        assert len(t.stage1) == 8 and len(t.stage2) == 16

    def test_vertex_count_rule(self):
        assert flip_vertex_count(4, 1) == 5
        assert flip_vertex_count(4, 2) == 6
        assert flip_vertex_count(3, 4) == 5
        with pytest.raises(ValueError):
            flip_vertex_count(0, 1)


class TestCandidates:
    def test_isolated_element_only_1_5(self, rng):
        mesh = single_element_mesh(rng)
        kinds = {c.kind for c in find_candidates(mesh, 0)}
        assert kinds == {"1_5"}
        kinds = {c.kind for c in find_candidates(mesh, 0, include_point_inserting=False)}
        assert kinds == set()

    def test_facet_pair_has_2_4(self, rng):
        mesh = facet_pair_mesh(rng)
        kinds = {c.kind for c in find_candidates(mesh, 0)}
        assert "2_4" in kinds and "2_8" in kinds

    def test_triangle_star_has_3_3(self, rng):
        mesh = triangle_star_mesh(rng, 3)
        kinds = {c.kind for c in find_candidates(mesh, 0)}
        assert "3_3" in kinds and "3_9" in kinds

    def test_point_inserting_filtered(self, rng):
        mesh = facet_pair_mesh(rng)
        kinds = {c.kind for c in find_candidates(mesh, 0, include_point_inserting=False)}
        assert "2_8" not in kinds and "1_5" not in kinds


class TestValidity:
    def test_reflex_pair_rejected(self, rng):
        # both apexes on the same side: stage-2 simplices overlap
        mesh = Mesh4()
        base = [(0.0, 0, 0, 0), (1.0, 0, 0, 0), (0, 1.0, 0, 0), (0, 0, 1.0, 0)]
        ids = [mesh.add_vertex(p) for p in base]
        a = mesh.add_vertex((0.3, 0.3, 0.3, 1.0))
        b = mesh.add_vertex((0.31, 0.29, 0.3, 2.0))  # beyond a, same side
        add_positive(mesh, tuple(ids) + (a,))
        # (base, b) overlaps (base, a); use a detached configuration to probe
        # validate_flip directly with a constructed candidate
        from pentamesh.flips import FlipCandidate
        cand = FlipCandidate(
            kind="2_4", stage1=(0, 1),
            stage2=tuple(tri + (a, b) for tri in itertools.combinations(ids, 3)),
            label_map={})
        add_positive(mesh, tuple(ids) + (b,))
        # stage1 elements share only the base facet; apexes are not separated
        ok, reason = validate_flip(mesh, cand)
        assert not ok and "volume" in reason

    def test_valid_instances_conserve_volume_exactly(self, rng):
        mesh = facet_pair_mesh(rng)
        cand = next(c for c in find_candidates(mesh, 0) if c.kind == "2_4")
        ok, reason = validate_flip(mesh, cand, exact=True)
        assert ok, reason


KIND_BUILDERS = {
    "1_5": lambda rng: (single_element_mesh(rng), "1_5"),
    "2_4": lambda rng: (facet_pair_mesh(rng), "2_4"),
    "2_8": lambda rng: (facet_pair_mesh(rng), "2_8"),
    "3_3": lambda rng: (triangle_star_mesh(rng, 3), "3_3"),
    "3_9": lambda rng: (triangle_star_mesh(rng, 3), "3_9"),
    "4_6": lambda rng: (triangle_star_mesh(rng, 4), "4_6"),
    "4_12": lambda rng: (triangle_star_mesh(rng, 4), "4_12"),
    "4_2": lambda rng: (edge_star_mesh(rng, 4), "4_2"),
    "4_8": lambda rng: (edge_star_mesh(rng, 4), "4_8"),
    "6_6": lambda rng: (edge_star_mesh(rng, 6), "6_6"),
    "6_4": lambda rng: (edge_star_mesh(rng, 6), "6_4"),
    "6_12a": lambda rng: (edge_star_mesh(rng, 6), "6_12a"),
    "8_8v1": lambda rng: (edge_star_mesh(rng, 8), "8_8v1"),
    "8_8v2": lambda rng: (edge_star_mesh(rng, 8), "8_8v2"),
    "8_8v3": lambda rng: (edge_star_mesh(rng, 8), "8_8v3"),
    "8_16": lambda rng: (edge_star_mesh(rng, 8), "8_16"),
}

REVERSE_AFTER = {
    "1_5": "5_1", "4_8": "8_4", "3_9": "9_3", "6_12a": "12_6a",
    "2_8": "8_2", "4_12": "12_4", "8_16": "16_8",
}


class TestApplication:
    @pytest.mark.parametrize("kind", sorted(KIND_BUILDERS))
    def test_randomized_roundtrip_conserves_exactly(self, kind):
        executed = 0
        for seed in range(6):
            rng = np.random.default_rng(1000 + seed)
            mesh, _ = KIND_BUILDERS[kind](rng)
            starter = next(mesh.alive_elements())
            cands = [c for c in find_candidates(mesh, starter) if c.kind == kind]
            if not cands:
                continue
            cand = cands[0]
            ok, reason = validate_flip(mesh, cand, exact=True)
            if not ok:
                continue
            hv0 = mesh.total_hypervolume(exact=True)
            rep = apply_flip(mesh, cand)
            executed += 1
            assert mesh.validate() == []
            assert mesh.total_hypervolume(exact=True) == hv0
            for eid in rep.new_elements:
                assert hypervolume(*mesh.element_points(eid)) > 0.0
            # reverse kind restores the stage-1 configuration
            rkind = REVERSE_AFTER.get(kind)
            if rkind:
                rc = next(c for c in find_candidates(mesh, rep.new_elements[0])
                          if c.kind == rkind)
                ok, reason = validate_flip(mesh, rc, exact=True)
                assert ok, reason
                apply_flip(mesh, rc)
                assert mesh.validate() == []
                assert mesh.total_hypervolume(exact=True) == hv0
        assert executed >= 4, f"too few valid instances for {kind}"

    def test_1_5_then_5_1_restores_connectivity(self, rng):
        mesh = single_element_mesh(rng)
        before = {frozenset(mesh.elements[e]) for e in mesh.alive_elements()}
        c15 = next(c for c in find_candidates(mesh, 0) if c.kind == "1_5")
        rep = apply_flip(mesh, c15)
        assert mesh.n_alive == 5
        c51 = next(c for c in find_candidates(mesh, rep.new_elements[0])
                   if c.kind == "5_1")
        rep2 = apply_flip(mesh, c51)
        assert mesh.n_alive == 1
        after = {frozenset(mesh.elements[e]) for e in mesh.alive_elements()}
        assert before == after
        assert not mesh.vertex_alive[rep2.removed_vertex]

    def test_3_3_keeps_counts(self, rng):
        mesh = triangle_star_mesh(rng, 3)
        n_elems = mesh.n_alive
        n_facets = len(mesh.adjacency)
        cand = next(c for c in find_candidates(mesh, 0) if c.kind == "3_3")
        apply_flip(mesh, cand)
        assert mesh.n_alive == n_elems
        assert len(mesh.adjacency) == n_facets

    def test_4_8_counts(self, rng):
        mesh = edge_star_mesh(rng, 4)
        nv = mesh.n_vertices
        cand = next(c for c in find_candidates(mesh, 0) if c.kind == "4_8")
        apply_flip(mesh, cand)
        assert mesh.n_vertices == nv + 1
        assert mesh.n_alive == 8


class TestImproveQuality:
    def test_regular_pentatope_no_flips(self, rng):
        mesh = single_element_mesh(rng)
        rep = improve_quality(mesh, heuristic=1)
        assert sum(rep.flips_by_kind.values()) == 0

    def test_small_cloud_improves(self, rng):
        pts = rng.random((40, 4))
        mesh = triangulate(pts)
        rep = improve_quality(mesh, heuristic=1)
        assert rep.hv_conserved_exactly
        assert mesh.validate() == []
        for frac in (0.01, 0.05, 0.10, 0.20):
            assert rep.amq_after[frac] >= rep.amq_before[frac] - 1e-12

    def test_monotone_gain_per_flip(self, rng):
        # re-run candidate scoring: every executed flip strictly raised the
        # minimum quality of its affected group (checked inside the driver
        # via the gain gate; here we assert the outcome is consistent)
        pts = rng.random((30, 4))
        mesh = triangulate(pts)
        rep = improve_quality(mesh, heuristic=2)
        assert rep.hv_conserved_exactly
        assert all(k in flip_kinds() for k in rep.flips_by_kind)

    def test_eta1_avoids_point_insertion(self, rng):
        pts = rng.random((60, 4))
        mesh = triangulate(pts)
        rep = improve_quality(mesh, heuristic=1, include_point_inserting=True)
        inserting = {"1_5", "4_8", "3_9", "6_12a", "2_8", "4_12", "6_12b", "8_16"}
        assert sum(rep.flips_by_kind[k] for k in inserting) == 0
