import json

import numpy as np
import pytest
from scipy.optimize import linprog

from wavesieve.hyperbolic import DiskSpec, UHPoint, make_grid, mask_from_primitives
from wavesieve.recovery import (AtomDictionary, RecoveryError, RecoveryProblem, _chambolle_pock, concentration_of,
                                field_error, l1_recover, load_problem, problem_from_json, synthesize)
from wavesieve.wavelets import WaveletIndex, translated_coeff

GRID = dict(x_min=-6.0, x_max=6.0, nx=192, s_min=1 / 16, s_max=16.0, ns=128)
W = WaveletIndex(0, 2.0)


@pytest.fixture(scope="module")
def grid():
    return make_grid(GRID)


@pytest.fixture(scope="module")
def lattice(grid):
    return AtomDictionary.lattice(grid, W)


def random_truth(rng, K, size):
    c = np.zeros(K, dtype=complex)
    idx = rng.choice(K, size=size, replace=False)
    c[idx] = rng.normal(size=size) + 1j * rng.normal(size=size)
    return c


class TestDictionary:
    def test_lattice_stays_inside_window(self, grid, lattice):
        assert len(lattice) > 10 and len({w.s for w in lattice.locations}) == 3
        for w in lattice.locations:
            assert grid.x_edges[0] < w.x < grid.x_edges[-1] and grid.s_edges[0] < w.s < grid.s_edges[-1]

    def test_lattice_contains_base_point(self, lattice):
        assert UHPoint(0.0, 1.0) in lattice.locations

    def test_columns(self, lattice):
        z = np.array([1j, 0.5 + 2j])
        cols = lattice.columns(z)
        k = 3
        np.testing.assert_allclose(cols[:, k], translated_coeff(0, lattice.indices[k], 2.0, z, lattice.locations[k]))

    def test_json_round_trip(self, lattice):
        assert AtomDictionary.from_json(json.loads(json.dumps(lattice.to_json()))) == lattice

    @pytest.mark.parametrize("locs,idx", [((), ()), ((1j,), (0, 1)), ((1j,), (-1,))])
    def test_rejects(self, locs, idx):
        with pytest.raises(ValueError):
            AtomDictionary(locs, idx, W)


class TestSynthesis:
    def test_unit_zero_and_pairs(self, grid, lattice):
        mask = mask_from_primitives(grid, [])
        K = len(lattice)
        prob = RecoveryProblem.from_truth(lattice, mask, np.eye(K)[0])
        e0 = synthesize(np.eye(K)[0], prob).values
        np.testing.assert_allclose(e0, lattice.columns(grid.centers)[..., 0])
        assert np.all(synthesize(np.zeros(K), prob).values == 0)
        two = synthesize(2 * np.eye(K)[0] - 1j * np.eye(K)[1], prob).values
        np.testing.assert_allclose(two, 2 * e0 - 1j * lattice.columns(grid.centers)[..., 1], atol=1e-14)

    def test_concentration(self, grid, lattice):
        K = len(lattice)
        prob = RecoveryProblem.from_truth(lattice, mask_from_primitives(grid, []), np.eye(K)[0])
        F = synthesize(np.eye(K)[0], prob)
        empty = mask_from_primitives(grid, [])
        assert concentration_of(F, empty) == 0
        assert concentration_of(F, empty.complement()) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            concentration_of(0 * F, empty)

    def test_observation_count_checked(self, grid, lattice):
        mask = mask_from_primitives(grid, [DiskSpec(UHPoint(0, 1), 0.3)])
        with pytest.raises(ValueError):
            RecoveryProblem(lattice, mask, np.zeros(5))


class TestRecovery:
    def test_empty_region_gives_generating_vector(self, grid, lattice, rng):
        truth = random_truth(rng, len(lattice), 3)
        prob = RecoveryProblem.from_truth(lattice, mask_from_primitives(grid, []), truth)
        res = l1_recover(prob)
        assert np.max(np.abs(res.coeffs - truth)) < 1e-8
        assert res.converged and res.null_dim == 0

    def test_certified_region(self, grid, lattice, rng):
        mask = mask_from_primitives(grid, [DiskSpec(UHPoint(-2, 1), 0.25), DiskSpec(UHPoint(1, 3), 0.2)])
        for _ in range(3):
            truth = random_truth(rng, len(lattice), 2)
            prob = RecoveryProblem.from_truth(lattice, mask, truth)
            res = l1_recover(prob)
            assert field_error(res.coeffs, truth, prob) <= 1e-4
            assert res.constraint_residual <= prob.tolerance

    def test_large_region_objective_not_above_truth(self, grid, lattice, rng):
        mask = mask_from_primitives(grid, [DiskSpec(UHPoint(0, 1), 0.9)])
        truth = np.zeros(len(lattice), dtype=complex)
        truth[lattice.locations.index(UHPoint(0.0, 1.0))] = 1.0
        prob = RecoveryProblem.from_truth(lattice, mask, truth)
        res = l1_recover(prob)
        truth_obj = float(np.sum(np.abs(synthesize(truth, prob).values) * grid.weights))
        assert res.objective <= truth_obj * (1 + 1e-8)

    def test_permutation_invariance(self, grid, lattice, rng):
        mask = mask_from_primitives(grid, [DiskSpec(UHPoint(0.5, 2), 0.3)])
        truth = random_truth(rng, len(lattice), 3)
        perm = rng.permutation(len(lattice))
        shuffled = AtomDictionary(tuple(lattice.locations[k] for k in perm), tuple(lattice.indices[k] for k in perm), W)
        a = l1_recover(RecoveryProblem.from_truth(lattice, mask, truth))
        b = l1_recover(RecoveryProblem.from_truth(shuffled, mask, truth[perm]))
        np.testing.assert_allclose(b.coeffs, a.coeffs[perm], atol=1e-8)

    def test_duplicate_atoms_use_the_null_space(self, grid):
        mask = mask_from_primitives(grid, [DiskSpec(UHPoint(0, 1), 0.4)])
        d = AtomDictionary((1j, 1j, 1 + 2j), (0, 0, 0), W)
        truth = np.array([1.0, 0.0, 0.5j])
        prob = RecoveryProblem.from_truth(d, mask, truth)
        res = l1_recover(prob)
        assert res.null_dim == 1 and res.converged
        assert res.coeffs[0] + res.coeffs[1] == pytest.approx(1.0, abs=1e-8)
        assert field_error(res.coeffs, truth, prob) < 1e-8

    def test_inconsistent_observations_raise(self, grid, lattice):
        mask = mask_from_primitives(grid, [DiskSpec(UHPoint(0, 1), 0.4)])
        obs = np.ones(int(np.count_nonzero(~mask.indicator)))
        with pytest.raises(RecoveryError):
            l1_recover(RecoveryProblem(lattice, mask, obs))


class TestPrimalDual:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_against_linear_programme(self, seed):
        # real data: the complex optimum is real, so an LP with |r| <= t is an exact oracle
        rng = np.random.default_rng(seed)
        m, k = 30, 4
        M, d = rng.normal(size=(m, k)), rng.normal(size=m)
        wts = rng.uniform(0.5, 2.0, m)
        c = np.concatenate([np.zeros(k), wts])
        A_ub = np.block([[M, -np.eye(m)], [-M, -np.eye(m)]])
        b_ub = np.concatenate([-d, d])
        lp = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * k + [(0, None)] * m, method="highs")
        y, _, ok = _chambolle_pock(M.astype(complex), d.astype(complex), wts, 1e-10, 200000)
        assert ok
        assert np.sum(wts * np.abs(M @ y + d)) == pytest.approx(lp.fun, rel=1e-6)


class TestProblemFiles:
    def test_from_json_with_truth(self, tmp_path):
        obj = {"grid": GRID, "wavelet": {"n": 0, "alpha": 2.0}, "dictionary": {"spacing": 0.5},
               "mask": [DiskSpec(UHPoint(0, 1), 0.3).to_json()], "truth": {"0": [1.0, 0.5]}}
        path = tmp_path / "problem.json"
        path.write_text(json.dumps(obj))
        prob, truth = load_problem(path)
        assert truth[0] == 1 + 0.5j and np.count_nonzero(truth) == 1
        assert field_error(l1_recover(prob).coeffs, truth, prob) < 1e-6

    @pytest.mark.parametrize("bad", [{"colour": 1}, {"dictionary": {"spacing": 0.5, "shape": 2}}, {"truth": None}])
    def test_rejects(self, bad):
        obj = {"grid": GRID, "wavelet": {"n": 0, "alpha": 2.0}, "truth": [[1.0, 0.0]]}
        obj.update(bad)
        if obj.get("truth") is None:
            del obj["truth"]
        with pytest.raises(ValueError):
            problem_from_json(obj)
