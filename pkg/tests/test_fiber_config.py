import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from arakzar import fiber_config as fc


def lp_greatest(cfg, data):
    """Coordinatewise max of {q <= v : e + M q >= 0}, one LP per coordinate."""
    r = cfg.r
    out = np.empty(r)
    bounds = [(None, vi) for vi in data.v]
    for i in range(r):
        c = np.zeros(r)
        c[i] = -1.0
        res = linprog(c, A_ub=-cfg.M, b_ub=data.e, bounds=bounds, method="highs")
        assert res.status == 0
        out[i] = res.x[i]
    return out


def grid_greatest(cfg, data, step=1e-2, depth=1.5):
    """Brute force: componentwise max of pi-nef q on a lattice below v."""
    axes = [np.arange(vi - depth, vi + 1e-12, step) for vi in data.v]
    grids = np.meshgrid(*axes, indexing="ij")
    Q = np.stack([g.ravel() for g in grids], axis=1)
    ok = np.all(data.e[None, :] + Q @ cfg.M.T >= -1e-12, axis=1)
    return Q[ok].max(axis=0)


class TestValidate:
    def test_i2(self):
        assert fc.validate(fc.I2)
        assert np.allclose(np.linalg.eigvalsh(fc.I2.M), [-4, 0])

    def test_cycle(self):
        assert fc.validate(fc.CYCLE3)
        assert np.allclose(np.linalg.eigvalsh(fc.CYCLE3.M), [-3, -3, 0])

    def test_single_component_nonzero(self):
        cfg = fc.FiberConfiguration(np.array([[-1.0]]), np.array([1.0]))
        assert not fc.validate(cfg)
        assert any("mult" in d for d in fc.diagnose(cfg))

    def test_diagnostics(self):
        cfg = fc.FiberConfiguration(np.array([[-2.0, 1.0], [2.0, -2.0]]), np.array([1.0, 1.0]))
        assert "M is not symmetric" in fc.diagnose(cfg)
        cfg = fc.FiberConfiguration(np.array([[1.0, -1.0], [-1.0, 1.0]]), np.array([1.0, 1.0]))
        d = fc.diagnose(cfg)
        assert any("positive eigenvalue" in x for x in d)
        assert any("off-diagonal" in x for x in d)
        cfg = fc.FiberConfiguration(np.array([[-2.0, 2.0], [2.0, -2.0]]), np.array([1.0, 1.5]))
        assert not fc.validate(cfg)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fc.FiberConfiguration(np.eye(2), np.ones(3))

    def test_from_json(self):
        cfg = fc.FiberConfiguration.from_json({"M": [[-2, 2], [2, -2]], "mult": [1, 1], "p": 3})
        assert cfg.logp == pytest.approx(np.log(3))
        with pytest.raises(ValueError):
            fc.FiberConfiguration.from_json({"M": [[0]], "mult": [1], "p": 1})


class TestGreatestPiNef:
    def test_example_one(self):
        r = fc.greatest_pi_nef(fc.I2, fc.VerticalDivisorData([1.0, 0.0], [0.0, 3.0]))
        assert np.allclose(r.q, [0, 0]) and np.allclose(r.n, [1, 0])
        assert np.allclose(r.slack, [0, 3])

    def test_example_two(self):
        r = fc.greatest_pi_nef(fc.I2, fc.VerticalDivisorData([1.0, 0.5], [0.0, 3.0]))
        assert np.allclose(r.q, [0.5, 0.5]) and np.allclose(r.n, [0.5, 0])
        # e + M q = (0 - 1 + 1, 3 + 1 - 1)
        assert np.allclose(r.slack, [0, 3])

    def test_already_nef(self):
        d = fc.VerticalDivisorData([0.3, -0.2, 0.1], [5.0, 5.0, 5.0])
        r = fc.greatest_pi_nef(fc.CYCLE3, d)
        assert np.array_equal(r.q, d.v) and not r.n.any() and r.iterations == 0

    def test_preconditions(self):
        with pytest.raises(ValueError):
            fc.greatest_pi_nef(fc.I2, fc.VerticalDivisorData([0, 0], [-1.0, 0.0]))
        bad = fc.FiberConfiguration(np.array([[-1.0]]), np.array([1.0]))
        with pytest.raises(ValueError):
            fc.greatest_pi_nef(bad, fc.VerticalDivisorData([0.0], [0.0]))
        with pytest.raises(ValueError):
            fc.greatest_pi_nef(fc.I2, fc.VerticalDivisorData([0.0], [0.0]))

    @pytest.mark.parametrize("seed", range(60))
    def test_random_against_lp(self, seed):
        rng = np.random.default_rng(seed)
        cfg = fc.random_configuration(rng, int(rng.integers(2, 7)))
        assert fc.validate(cfg)
        v = rng.normal(size=cfg.r)
        e = rng.uniform(-1, 2, size=cfg.r)
        e += max(0.0, -(e @ cfg.mult)) / cfg.mult.sum() + 0.01
        d = fc.VerticalDivisorData(v, e)
        r = fc.greatest_pi_nef(cfg, d)
        assert np.all(r.slack >= -1e-12)
        assert abs(r.n @ r.slack) <= 1e-10
        assert np.min(r.n / cfg.mult) <= 1e-12
        assert r.iterations <= cfg.r
        assert np.allclose(r.q, lp_greatest(cfg, d), atol=1e-7)

    @pytest.mark.parametrize("cfg", [fc.I2, fc.CYCLE3], ids=["I2", "cycle3"])
    def test_grid_oracle(self, cfg):
        rng = np.random.default_rng(3)
        for _ in range(5):
            d = fc.VerticalDivisorData(rng.normal(size=cfg.r) * 0.5, rng.uniform(0, 1.5, size=cfg.r))
            r = fc.greatest_pi_nef(cfg, d)
            # the box only needs to reach below q; its extent does not bias the max
            top = grid_greatest(cfg, d, depth=float(r.n.max()) + 0.1)
            assert np.all(r.q >= top - 1e-12)
            assert np.max(np.abs(r.q - top)) <= 2e-2 + 1e-12

    @given(st.integers(0, 10_000), st.floats(0.1, 10.0))
    def test_scale_equivariance(self, seed, c):
        rng = np.random.default_rng(seed)
        cfg = fc.random_configuration(rng, 4)
        d = fc.VerticalDivisorData(rng.normal(size=4), rng.uniform(0, 2, size=4))
        r1 = fc.greatest_pi_nef(cfg, d)
        r2 = fc.greatest_pi_nef(cfg, fc.VerticalDivisorData(c * d.v, c * d.e))
        assert np.allclose(r2.q, c * r1.q, atol=1e-12 * max(1.0, c) * 10)

    def test_negativity_of_sub_pieces(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(200):
            cfg = fc.random_configuration(rng, int(rng.integers(2, 6)))
            d = fc.VerticalDivisorData(rng.normal(size=cfg.r) * 2, rng.uniform(0, 1, size=cfg.r))
            n = fc.greatest_pi_nef(cfg, d).n
            if not n.any():
                continue
            sub = n * rng.uniform(0, 1, size=cfg.r)
            if sub.any():
                assert sub @ cfg.M @ sub < 0
                checked += 1
        assert checked > 20


class TestNefPerp:
    def test_i2(self):
        E = fc.nef_perp(fc.I2, [0], [0.7])
        assert np.allclose(E, [0.35, 0])
        ME = fc.I2.M @ E
        assert ME[0] == pytest.approx(-0.7) and ME[1] >= 0

    def test_empty_and_full(self):
        assert not fc.nef_perp(fc.I2, [], []).any()
        with pytest.raises(ValueError):
            fc.nef_perp(fc.I2, [0, 1], [1.0, 1.0])

    @pytest.mark.parametrize("seed", range(20))
    def test_random(self, seed):
        rng = np.random.default_rng(100 + seed)
        cfg = fc.random_configuration(rng, int(rng.integers(2, 7)))
        k = int(rng.integers(1, cfg.r))
        S = sorted(rng.choice(cfg.r, size=k, replace=False))
        t = rng.uniform(0, 2, size=k)
        E = fc.nef_perp(cfg, S, t)
        ME = cfg.M @ E
        assert np.all(E >= 0)
        assert np.allclose(ME[S], -t, atol=1e-10)
        rest = [j for j in range(cfg.r) if j not in S]
        assert np.all(ME[rest] >= -1e-10)
