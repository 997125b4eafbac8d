import math
from fractions import Fraction

import numpy as np
import pytest

from pentamesh.predicates import (
    decompose_metric,
    exact_rational_cholesky,
    inhypersphere4,
    inhypersphere_m,
    inhypersphere_m_d,
    orientation4,
    orientation_m,
    orientation_m_d,
    scale_points_standard,
)
from conftest import circumsphere, insphere_sign_fraction, random_pentatope, spd_metric

E = np.eye(4)
O4 = np.zeros(4)


class TestOrientation:
    def test_identity_determinant(self):
        r = orientation4(E[0], E[1], E[2], E[3], O4)
        assert (r.sign, r.value) == (1, 1.0)

    def test_row_swap(self):
        r = orientation4(E[1], E[0], E[2], E[3], O4)
        assert r.sign == -1

    def test_coplanar_exact_zero(self):
        r = orientation4((0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0),
                         (0, 0, 1, 0), (1, 1, 1, 0))
        assert r.sign == 0 and r.exactness == "exact"

    def test_metric_prefactor(self):
        m = np.diag([1.0, 1.0, 1.0, 4.0])
        r = orientation_m(m, E[0], E[1], E[2], E[3], O4)
        assert r.sign == 1
        assert r.value == pytest.approx(2.0)

    def test_metric_never_flips_sign(self, rng):
        for _ in range(1000):
            pts = rng.normal(size=(5, 4))
            m = spd_metric(rng)
            plain = orientation4(*pts)
            weighted = orientation_m(m, *pts)
            assert plain.sign == weighted.sign

    def test_requires_spd(self):
        with pytest.raises(ValueError):
            orientation_m(np.diag([1.0, 1.0, 1.0, -1.0]), *np.random.rand(5, 4))


class TestInHypersphere:
    def test_inside_origin(self):
        # five points on the unit hypersphere, query at the center
        pts = [E[0], -E[0], E[1], E[2], E[3]]
        r = inhypersphere4(*pts, O4)
        o = orientation4(*pts)
        assert r.sign == o.sign  # inside <=> sign matches orientation
        # positively oriented arrangement reports inside as positive
        pts_pos = [-E[0], E[0], E[1], E[2], E[3]] if o.sign < 0 else pts
        assert inhypersphere4(*pts_pos, O4).sign == orientation4(*pts_pos).sign == 1

    def test_on_sphere_zero(self):
        pts = [E[0], -E[0], E[1], E[2], E[3]]
        r = inhypersphere4(*pts, E[0])
        assert r.sign == 0 and r.exactness == "exact"

    def test_far_outside(self):
        pts = [E[0], -E[0], E[1], E[2], E[3]]
        far = inhypersphere4(*pts, (50.0, 1.0, 2.0, 3.0))
        inside = inhypersphere4(*pts, O4)
        assert far.sign == -inside.sign != 0

    def test_circumcenter_distance_oracle(self, rng):
        for _ in range(300):
            pts = random_pentatope(rng, min_vol=1e-4)
            c, r2 = circumsphere(pts)
            o = orientation4(*pts).sign
            step = rng.normal(size=4)
            step /= np.linalg.norm(step)
            inside_pt = c + step * 0.5 * math.sqrt(r2)
            outside_pt = c + step * 2.0 * math.sqrt(r2)
            assert inhypersphere4(*pts, inside_pt).sign == o
            assert inhypersphere4(*pts, outside_pt).sign == -o

    def test_antisymmetry_exact(self, rng):
        for _ in range(100):
            pts = [tuple(p) for p in rng.normal(size=(6, 4))]
            r = inhypersphere4(*pts, mode="exact")
            i, j = rng.choice(5, size=2, replace=False)
            swapped = list(pts)
            swapped[i], swapped[j] = swapped[j], swapped[i]
            assert inhypersphere4(*swapped, mode="exact").sign == -r.sign


class TestMetricInHypersphere:
    def test_identity_matches_plain(self, rng):
        for _ in range(100):
            pts = [tuple(p) for p in rng.normal(size=(6, 4))]
            a = inhypersphere4(*pts)
            b = inhypersphere_m(np.eye(4), *pts)
            assert a.sign == b.sign
            assert a.value == pytest.approx(b.value, rel=1e-12, abs=1e-300)

    def test_metric_unit_sphere(self):
        # under diag(1,1,1,4) the point (0,0,0,1/2) has metric norm 1
        m = np.diag([1.0, 1.0, 1.0, 4.0])
        pts = [E[0], -E[0], E[1], E[2], (0.0, 0.0, 0.0, 0.5)]
        inside = inhypersphere_m(m, *pts, O4)
        o = orientation4(*pts)
        assert inside.sign == o.sign

    def test_matches_exact_scaled_route(self, rng):
        # alternative vs standard formulation, both in exact arithmetic
        for _ in range(200):
            pts = [tuple(p) for p in rng.normal(size=(6, 4))]
            m = spd_metric(rng)
            got = inhypersphere_m(m, *pts, mode="exact")
            assert got.sign == insphere_sign_fraction(pts, m)

    def test_sign_escalation_soundness(self, rng):
        # perturbed cospherical queries: certified float signs equal exact
        mismatches = 0
        for _ in range(1500):
            pts = random_pentatope(rng, min_vol=1e-4)
            c, r2 = circumsphere(pts)
            step = rng.normal(size=4)
            step /= np.linalg.norm(step)
            f = c + step * math.sqrt(r2) * (1.0 + rng.uniform(-1e-13, 1e-13))
            res = inhypersphere4(*pts, f)
            if res.sign != insphere_sign_fraction(list(pts) + [f]):
                mismatches += 1
        assert mismatches == 0


class TestGeneralDimension:
    def test_d2_circumcircle(self):
        tri = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
        inside = inhypersphere_m_d(np.eye(2), tri + [(1.0 / 3.0, 1.0 / 3.0)])
        o = orientation_m_d(np.eye(2), tri)
        assert inside.sign == o.sign == 1

    def test_d3_insphere(self):
        tet = [(0.0, 0, 0), (1.0, 0, 0), (0, 1.0, 0), (0, 0, 1.0)]
        o = orientation_m_d(np.eye(3), tet)
        centroid = tuple(np.mean(tet, axis=0))
        inside = inhypersphere_m_d(np.eye(3), tet + [centroid])
        assert inside.sign == o.sign

    def test_d4_bit_identical(self, rng):
        for _ in range(50):
            pts = [tuple(p) for p in rng.normal(size=(6, 4))]
            m = spd_metric(rng)
            a = inhypersphere_m(m, *pts)
            b = inhypersphere_m_d(m, pts)
            assert (a.sign, a.value, a.exactness) == (b.sign, b.value, b.exactness)
            ra = orientation_m(m, *pts[:5])
            rb = orientation_m_d(m, pts[:5])
            assert (ra.sign, ra.value, ra.exactness) == (rb.sign, rb.value, rb.exactness)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            orientation_m_d(np.eye(3), [(0, 0, 0)] * 3)
        with pytest.raises(ValueError):
            inhypersphere_m_d(np.eye(2), [(0, 0)] * 3)


class TestStandardRoute:
    def test_scale_identity(self, rng):
        pts = [tuple(p) for p in rng.normal(size=(3, 4))]
        assert scale_points_standard(np.eye(4), pts) == pytest.approx(pts)

    def test_scale_diagonal(self):
        out = scale_points_standard(np.diag([1.0, 1.0, 1.0, 2.0]), [(0, 0, 0, 1)])
        assert out[0] == pytest.approx((0, 0, 0, 2))

    def test_decompose_identity(self):
        dec = decompose_metric(np.eye(4), "cholesky")
        assert np.allclose(dec.G, np.eye(4)) and dec.error == 0.0

    def test_decompose_diag(self):
        dec = decompose_metric(np.diag([4.0, 1.0, 1.0, 1.0]), "cholesky")
        assert np.allclose(dec.G, np.diag([2.0, 1.0, 1.0, 1.0]))

    def test_decompose_properties(self, rng):
        for kind in ("cholesky", "sqrt"):
            m = spd_metric(rng)
            dec = decompose_metric(m, kind)
            assert np.allclose(dec.G.T @ dec.G, m, rtol=1e-10)
            assert np.linalg.det(dec.G) > 0.0
            if kind == "sqrt":
                assert np.allclose(dec.G, dec.G.T)

    def test_decomposition_error_grows_with_dimension(self, rng):
        errors = {}
        for d in (2, 10):
            total = 0.0
            for _ in range(50):
                S = rng.uniform(0.0, 10.0, size=(d, d))
                total += decompose_metric(S.T @ S, "cholesky").error
            errors[d] = total / 50
        assert errors[10] > errors[2]

    def test_scaled_route_equals_metric_sign(self, rng):
        for _ in range(200):
            pts = rng.normal(size=(5, 4))
            m = spd_metric(rng)
            dec = decompose_metric(m, "cholesky")
            scaled = scale_points_standard(dec, pts)
            assert orientation4(*scaled).sign == orientation_m(m, *pts).sign

    def test_exact_rational_cholesky(self):
        # assembled from a rational triangular factor: recovered exactly
        C = [[Fraction(2), Fraction(1, 3), Fraction(0), Fraction(1)],
             [Fraction(0), Fraction(3, 2), Fraction(1, 5), Fraction(0)],
             [Fraction(0), Fraction(0), Fraction(1), Fraction(2, 7)],
             [Fraction(0), Fraction(0), Fraction(0), Fraction(5, 4)]]
        n = 4
        M = [[sum(C[k][i] * C[k][j] for k in range(n)) for j in range(n)]
             for i in range(n)]
        G = exact_rational_cholesky(M)
        assert G == C
        back = [[sum(G[k][i] * G[k][j] for k in range(n)) for j in range(n)]
                for i in range(n)]
        assert back == M

    def test_exact_cholesky_rejects_irrational(self):
        with pytest.raises(ValueError):
            exact_rational_cholesky([[2, 0], [0, 3]])
