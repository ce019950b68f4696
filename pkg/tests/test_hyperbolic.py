import math

import numpy as np
import pytest
from scipy import integrate

from wavesieve.hyperbolic import (I, AnnulusSpec, DiskSpec, RectSpec, UHPoint, cayley, cayley_inv,
                                  change_of_variable_weight, disk_euclidean, disk_measure_h, group_inv, group_mul,
                                  load_mask, make_grid, mask_from_primitives, mask_measure, primitive_from_json,
                                  pseudo_dist, save_mask)


def random_points(rng, k):
    return rng.uniform(-3, 3, k) + 1j * np.exp(rng.uniform(-2, 2, k))


class TestPoints:
    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            UHPoint(0.0, 0.0)
        with pytest.raises(ValueError):
            UHPoint(1.0, -2.0)

    def test_group_product_worked_value(self):
        assert group_mul(UHPoint(1, 2), UHPoint(3, 4)) == UHPoint(7, 8)

    def test_neutral_and_inverse(self, rng):
        z = random_points(rng, 50)
        np.testing.assert_allclose(group_mul(z, 1j), z, rtol=1e-15)
        np.testing.assert_allclose(group_mul(group_inv(z), z), 1j, atol=1e-14)
        np.testing.assert_allclose(group_inv(group_inv(z)), z, rtol=1e-14)

    def test_inverse_worked_value(self):
        assert group_inv(UHPoint(2, 4)) == UHPoint(-0.5, 0.25)
        assert group_inv(I) == I


class TestPseudoDistance:
    def test_worked_values(self):
        assert pseudo_dist(1 + 2j, 1 + 2j) == 0
        assert pseudo_dist(1j, 2j) == pytest.approx(1 / 3, rel=1e-15)

    def test_symmetry_and_bounds(self, rng):
        z, w = random_points(rng, 1000), random_points(rng, 1000)
        d = pseudo_dist(z, w)
        np.testing.assert_allclose(d, pseudo_dist(w, z), atol=1e-12)
        assert np.all((d >= 0) & (d < 1))

    def test_group_invariance(self, rng):
        z, w, a = random_points(rng, 1000), random_points(rng, 1000), random_points(rng, 1000)
        np.testing.assert_allclose(pseudo_dist(group_mul(a, z), group_mul(a, w)), pseudo_dist(z, w), atol=1e-12)

    def test_stated_identities(self, rng):
        z, w, u = random_points(rng, 500), random_points(rng, 500), random_points(rng, 500)
        np.testing.assert_allclose(pseudo_dist(z, w), pseudo_dist(group_mul(group_inv(z), w), 1j), atol=1e-12)
        np.testing.assert_allclose(pseudo_dist(u, group_mul(z, w)), pseudo_dist(group_mul(group_inv(z), u), w),
                                   atol=1e-12)


class TestCayley:
    def test_origin_and_round_trip(self):
        assert cayley(0) == I
        assert complex(cayley_inv(cayley(0.3 + 0.2j))) == pytest.approx(0.3 + 0.2j, abs=1e-14)

    def test_distance_preservation(self, rng):
        r = np.sqrt(rng.uniform(0, 0.95, (2, 100)))
        u, v = r * np.exp(2j * np.pi * rng.uniform(size=(2, 100)))
        expected = np.abs(u - v) / np.abs(1 - np.conj(u) * v)
        np.testing.assert_allclose(pseudo_dist(cayley(u), cayley(v)), expected, atol=1e-12)

    def test_change_of_variable_weight(self):
        assert change_of_variable_weight(0, 1.7) == pytest.approx(4.0)
        u = 0.3 - 0.5j
        assert change_of_variable_weight(u, 0) == pytest.approx(4 / abs(1 - u) ** 4)

    def test_change_of_variable_integrates_power_of_scale(self):
        # int over the image of |u| < 0.6 of s^beta dmu_euclid, both in the half-plane and pulled back
        beta, R = -2.0, 0.6
        centre, radius = disk_euclidean(1j, R)

        def upper(x, s):
            return s ** beta

        plane, _ = integrate.dblquad(lambda s, x: upper(x, s), centre.real - radius, centre.real + radius,
                                     lambda x: centre.imag - math.sqrt(max(radius ** 2 - (x - centre.real) ** 2, 0)),
                                     lambda x: centre.imag + math.sqrt(max(radius ** 2 - (x - centre.real) ** 2, 0)),
                                     epsabs=1e-11, epsrel=1e-11)
        disk, _ = integrate.dblquad(lambda r, phi: change_of_variable_weight(r * np.exp(1j * phi), beta) * r,
                                    0, 2 * math.pi, 0, R, epsabs=1e-11, epsrel=1e-11)
        assert disk == pytest.approx(plane, rel=1e-6)


class TestDiskMeasure:
    def test_worked_values(self):
        assert disk_measure_h(0) == 0
        assert disk_measure_h(0.5) == pytest.approx(4 * math.pi / 3, rel=1e-15)

    @pytest.mark.parametrize("R", [0.2, 0.5, 0.8])
    def test_quadrature_oracle(self, R):
        val, _ = integrate.dblquad(lambda r, phi: change_of_variable_weight(r * np.exp(1j * phi), -2.0) * r,
                                   0, 2 * math.pi, 0, R, epsabs=1e-12, epsrel=1e-12)
        assert val == pytest.approx(disk_measure_h(R), rel=1e-9)

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            disk_measure_h(1.0)


class TestGrid:
    def test_weights_sum_to_exact_measure(self):
        g = make_grid(dict(x_min=-3, x_max=5, nx=37, s_min=0.2, s_max=7, ns=53))
        assert g.weights.sum() == pytest.approx(8 * (1 / 0.2 - 1 / 7), rel=1e-12)
        assert g.exact_measure == pytest.approx(8 * (1 / 0.2 - 1 / 7), rel=1e-15)

    def test_scales_are_geometric(self, default_grid):
        ratios = default_grid.s_edges[1:] / default_grid.s_edges[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)

    @pytest.mark.parametrize("bad", [dict(nx=1), dict(ns=1), dict(s_min=0.0), dict(s_min=-1.0), dict(x_min=9.0)])
    def test_rejects_bad_specs(self, bad):
        with pytest.raises(ValueError):
            make_grid(bad)

    def test_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            make_grid(dict(nz=4))

    def test_left_invariance_of_cell_quadrature(self):
        g = make_grid(dict(x_min=-12, x_max=12, nx=1200, s_min=1 / 12, s_max=12, ns=900))
        z0 = 0.4 + 1.3j

        def bump(z):
            d = pseudo_dist(z, 1j)
            return np.where(d < 0.7, np.exp(-1 / np.maximum(1 - (d / 0.7) ** 2, 1e-300)), 0.0)

        base = np.sum(bump(g.centers) * g.weights)
        moved = np.sum(bump(group_mul(group_inv(z0), g.centers)) * g.weights)
        assert moved == pytest.approx(base, rel=1e-4)


class TestMasks:
    def test_rectangle_mask_is_exact(self):
        g = make_grid(dict(x_min=-2, x_max=2, nx=40, s_min=0.5, s_max=2, ns=30))
        m = mask_from_primitives(g, [RectSpec(-3, 3, 0.1, 3)])
        assert mask_measure(m) == pytest.approx(4 * (1 / 0.5 - 1 / 2), rel=1e-12)

    def test_empty(self, default_grid):
        m = mask_from_primitives(default_grid, [])
        assert m.measure_h == 0 and m.is_empty

    def test_disk_measure_at_400x400(self):
        g = make_grid(dict(x_min=-2, x_max=2, nx=400, s_min=0.25, s_max=4, ns=400))
        m = mask_from_primitives(g, [DiskSpec(I, 0.5)])
        assert mask_measure(m) == pytest.approx(disk_measure_h(0.5), rel=0.02)

    def test_refinement_order(self):
        # cell counting oscillates with resolution, so fit over many grids
        ks = np.unique(np.geomspace(50, 1600, 16).astype(int))
        errs = []
        for k in ks:
            g = make_grid(dict(x_min=-2, x_max=2, nx=k, s_min=0.25, s_max=4, ns=k))
            errs.append(abs(mask_measure(mask_from_primitives(g, [DiskSpec(I, 0.5)])) - disk_measure_h(0.5)))
        order = np.polyfit(np.log(1.0 / ks), np.log(errs), 1)[0]
        assert order >= 1

    def test_dilated_and_interior_bracket_indicator(self, default_grid):
        m = mask_from_primitives(default_grid, [DiskSpec(UHPoint(1, 2), 0.4), AnnulusSpec(I, 0.3, 0.5)])
        assert np.all(m.interior <= m.indicator) and np.all(m.indicator <= m.dilated)
        assert m.interior.sum() < m.indicator.sum() < m.dilated.sum()

    def test_dilated_mask_holds_every_point_of_the_region(self, default_grid, rng):
        prim = AnnulusSpec(UHPoint(-1, 1.5), 0.35, 0.6)
        m = mask_from_primitives(default_grid, [prim])
        pts = random_points(rng, 20000)
        pts = pts[prim.contains(pts) & (np.abs(pts.real) < 8) & (pts.imag > 1 / 16) & (pts.imag < 16)]
        i = np.searchsorted(default_grid.x_edges, pts.real) - 1
        j = np.searchsorted(default_grid.s_edges, pts.imag) - 1
        assert pts.size > 100 and m.dilated[j, i].all()

    def test_annulus_measure(self):
        a = AnnulusSpec(I, 0.3, 0.5)
        assert a.measure_h == pytest.approx(disk_measure_h(0.5) - disk_measure_h(0.3))
        with pytest.raises(ValueError):
            AnnulusSpec(I, 0.5, 0.3)

    def test_primitive_json_round_trip(self):
        for p in (DiskSpec(UHPoint(1, 2), 0.3), RectSpec(-1, 1, 0.5, 2), AnnulusSpec(UHPoint(0, 3), 0.1, 0.2)):
            assert primitive_from_json(p.to_json()) == p

    def test_save_and_load(self, tmp_path, default_grid):
        m = mask_from_primitives(default_grid, [DiskSpec(UHPoint(1, 2), 0.4), RectSpec(-5, -4, 0.1, 0.3)])
        save_mask(tmp_path / "mask", m)
        back = load_mask(tmp_path / "mask")
        assert np.array_equal(back.indicator, m.indicator)
        assert np.array_equal(back.dilated, m.dilated)
        assert back.measure_h == m.measure_h
        raw = (tmp_path / "mask.bin").read_bytes()
        assert raw == m.indicator.astype(np.uint8).tobytes(order="C")

    def test_complement(self, default_grid):
        m = mask_from_primitives(default_grid, [DiskSpec(UHPoint(1, 2), 0.4)])
        c = m.complement()
        assert m.measure_h + c.measure_h == pytest.approx(default_grid.exact_measure, rel=1e-12)
