import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import zonesim as z
from strategies import CELL_WALL, CONCRETE_WALL, random_wall, walls

FC = z.material("fibre_cement")
FIBREBOARD = z.Layer.solid(z.material("wood_fibreboard"), 0.012)


def _identity_errors(c: z.CtfCoefficients, u: float) -> np.ndarray:
    return np.abs(np.array(c.steady_conductances()) / u - 1)


def _sinusoid_response(step, n_steps, period_steps=24, amplitude=10.0):
    q = np.array([step(amplitude * math.sin(2 * math.pi * k / period_steps)) for k in range(n_steps)])
    k = np.arange(n_steps)[-10 * period_steps:]
    basis = np.exp(-2j * np.pi * k / period_steps)
    return np.mean(q[-10 * period_steps:] * basis) / np.mean(amplitude * np.sin(2 * np.pi * k / period_steps) * basis)


class TestCompute:
    def test_heavy_wall_steady_identity(self):
        c = z.compute_ctf(CONCRETE_WALL, 3600.0)
        assert isinstance(c, z.CtfCoefficients)
        assert 1 <= c.order <= 5
        assert np.all(_identity_errors(c, z.u_value(CONCRETE_WALL)) < 1e-4)

    def test_pure_resistance_wall(self):
        f = z.compute_ctf(z.WallAssembly("r", (z.Layer.resistance_only(0.3),)))
        assert isinstance(f, z.LowMassFailure)
        assert f.time_constant == 0.0 and "mass" in f.reason

    def test_thin_fibre_cement(self):
        a = z.WallAssembly("fc7", (z.Layer.solid(FC, 0.007),))
        f = z.compute_ctf(a, 3600.0)
        assert isinstance(f, z.LowMassFailure)
        # slowest mode of a slab held at both faces: rho c L^2 / (pi^2 lambda)
        hand = FC.volumetric_heat_capacity * 0.007 ** 2 / (math.pi ** 2 * FC.conductivity)
        assert f.time_constant == pytest.approx(hand, rel=0.05)
        assert f.time_constant < f.threshold == 360.0
        assert "fc7" in str(f)

    def test_threshold_is_configurable(self):
        a = z.WallAssembly("fc7", (z.Layer.solid(FC, 0.007),))
        assert isinstance(z.compute_ctf(a, 3600.0, low_mass_fraction=0.001), z.CtfCoefficients)

    def test_cell_wall_is_accepted(self):
        assert isinstance(z.compute_ctf(CELL_WALL, 3600.0, 8.0), z.CtfCoefficients)

    def test_films_enter_the_identity(self):
        c = z.compute_ctf(CONCRETE_WALL, 3600.0, 8.0, 18.0)
        assert np.all(_identity_errors(c, z.u_value(CONCRETE_WALL, 8.0, 18.0)) < 1e-4)

    def test_max_order(self):
        c = z.compute_ctf(CELL_WALL, 3600.0, max_order=2)
        assert c.order <= 2
        with pytest.raises(ValueError):
            z.compute_ctf(CELL_WALL, max_order=0)
        with pytest.raises(ValueError):
            z.compute_ctf(CELL_WALL, 0.0)

    def test_random_corpus(self):
        rng = np.random.default_rng(11)
        accepted = 0
        for i in range(40):
            a = random_wall(rng, f"w{i}", heavy=i % 2 == 0)
            c = z.compute_ctf(a, 3600.0)
            if isinstance(c, z.LowMassFailure):
                assert c.time_constant < c.threshold or "identity" in c.reason
                continue
            accepted += 1
            assert np.all(_identity_errors(c, z.u_value(a)) < 1e-4)
            assert np.all(np.abs(c.flux_roots()) < 1)
        assert accepted >= 20

    @settings(max_examples=40, deadline=None)
    @given(walls(massless=True), st.sampled_from([900.0, 3600.0]))
    def test_steady_identity_property(self, a, base):
        c = z.compute_ctf(a, base)
        if isinstance(c, z.CtfCoefficients):
            assert np.all(_identity_errors(c, z.u_value(a)) < 1e-4)
            assert np.all(np.abs(c.flux_roots()) < 1)


class TestFallback:
    def test_total_resistance(self):
        a = z.WallAssembly("r", (z.Layer.resistance_only(0.5),))
        c = z.massless_fallback(a)
        assert c.order == 0 and c.cross == (2.0,)

    def test_fibreboard_partition(self):
        a = z.WallAssembly("p", (FIBREBOARD, z.air_gap_layer(0.05), FIBREBOARD))
        r = 2 * 0.012 / 0.06 + 0.05 / 0.10 / 9.26
        c = z.massless_fallback(a)
        assert c.exterior == c.cross == c.interior == pytest.approx((1 / r,))

    def test_steel_roof(self):
        a = z.WallAssembly("roof", (z.Layer.solid(z.material("steel"), 0.0005), z.air_gap_layer(0.10), FIBREBOARD))
        r = 0.0005 / 50 + 1 / 9.26 + 0.012 / 0.06
        c = z.massless_fallback(a, 8.0, 18.0)
        assert c.cross[0] == pytest.approx(1 / (1 / 18 + r + 1 / 8))
        assert isinstance(z.compute_ctf(a, 3600.0, 8.0), z.LowMassFailure)

    @given(walls(), st.floats(-30, 30), st.floats(-30, 30))
    def test_steady_flux_exact(self, a, t_out, t_in):
        c = z.massless_fallback(a)
        state = z.CtfState(c, t_out, t_in)
        r = z.ctf_step(c, state, t_out, t_in)
        u = z.u_value(a)
        assert r.q_in == c.cross[0] * (t_out - t_in)
        assert r.q_in == pytest.approx(u * (t_out - t_in), rel=1e-12, abs=1e-12)

    def test_ctf_or_fallback(self):
        a = z.WallAssembly("fc7", (z.Layer.solid(FC, 0.007),))
        c, failure = z.ctf_or_fallback(a)
        assert c.order == 0 and failure is not None
        c, failure = z.ctf_or_fallback(CONCRETE_WALL)
        assert c.order > 0 and failure is None


class TestStep:
    def test_equilibrium(self):
        c = z.compute_ctf(CONCRETE_WALL)
        state = z.CtfState(c, 22.0, 22.0)
        for _ in range(10):
            r = z.ctf_step(c, state, 22.0, 22.0)
        assert r.q_in == pytest.approx(0.0, abs=1e-10) and r.q_out == pytest.approx(0.0, abs=1e-10)

    def test_history_lengths(self):
        c = z.compute_ctf(CELL_WALL)
        s = z.CtfState(c)
        assert s.t_out.size == s.t_in.size == len(c.exterior)
        assert s.q_out.size == s.q_in.size == len(c.flux)

    @pytest.mark.parametrize("a", [CONCRETE_WALL, CELL_WALL], ids=["concrete", "cell"])
    def test_step_change_converges(self, a):
        c = z.compute_ctf(a, 3600.0, 8.0, 18.0)
        state = z.CtfState(c, 0.0, 0.0)
        for _ in range(3000):
            r = z.ctf_step(c, state, 10.0, 0.0)
        u = z.u_value(a, 8.0, 18.0)
        assert r.q_in == pytest.approx(10 * u, rel=1e-4)
        assert r.q_out == pytest.approx(10 * u, rel=1e-4)

    def test_sinusoid_matches_fine_fd(self):
        c = z.compute_ctf(CONCRETE_WALL, 3600.0)
        state = z.CtfState(c)
        ctf = _sinusoid_response(lambda t_o: z.ctf_step(c, state, t_o, 0.0).q_in, 24 * 20)

        net = z.discretize(CONCRETE_WALL, nodes_per_layer=[64])
        sub = 60
        clock = iter(range(10 ** 9))

        def fd(_):
            k = next(clock)
            for s in range(1, sub + 1):
                r = net.step(10 * math.sin(2 * math.pi * (k - 1 + s / sub) / 24), 0.0, 3600.0 / sub)
            return r.q_in

        ref = _sinusoid_response(fd, 24 * 20)
        assert abs(abs(ctf) / abs(ref) - 1) < 0.03
        phase_minutes = abs(np.angle(ctf / ref)) / (2 * math.pi) * 24 * 60
        assert phase_minutes < 10

    def test_bounded_under_noise(self):
        rng = np.random.default_rng(5)
        c = z.compute_ctf(CELL_WALL, 3600.0, 8.0)
        state = z.CtfState(c, 20.0, 20.0)
        bound = 60 * (sum(map(abs, c.exterior)) + sum(map(abs, c.cross))) / (1 - sum(map(abs, c.flux)))
        peak = 0.0
        for t_out, t_in in rng.uniform(-30, 30, size=(100_000, 2)):
            r = z.ctf_step(c, state, t_out, t_in)
            peak = max(peak, abs(r.q_in), abs(r.q_out))
        assert np.isfinite(peak) and peak < bound


def test_csv_export(tmp_path):
    c = z.compute_ctf(CONCRETE_WALL)
    z.write_ctf_csv(c, tmp_path / "c.csv", wall="slab")
    with open(tmp_path / "c.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 * (c.order + 1) + c.order
    assert {r["kind"] for r in rows} == {"exterior", "cross", "interior", "flux"}
    cross = [float(r["value"]) for r in rows if r["kind"] == "cross"]
    assert cross == list(c.cross)
    assert all(r["wall"] == "slab" and float(r["time_base_s"]) == 3600.0 for r in rows)


def test_coefficient_shape_checked():
    with pytest.raises(ValueError):
        z.CtfCoefficients((1.0,), (1.0,), (1.0,), (0.5,), 3600.0)
