import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import zonesim as z
from zonesim.conduction_fd import dominant_time_constant, state_space
from strategies import CELL_WALL, CONCRETE_WALL, periodic_response, walls


def _periodic_amplitude_phase(a, nodes, period=86400.0, dt=300.0, days=6):
    """Inner-face flux response of the FD wall to a unit outer sinusoid."""
    net = z.discretize(a, nodes_per_layer=[nodes] * sum(not l.is_massless for l in a.layers))
    steps = int(days * period / dt)
    t = np.arange(1, steps + 1) * dt
    q = np.array([net.step(math.sin(2 * math.pi * ti / period), 0.0, dt).q_in for ti in t])
    last = slice(steps - int(period / dt), steps)
    basis = np.exp(-2j * np.pi * t[last] / period)
    ratio = np.mean(q[last] * basis) / np.mean(np.sin(2 * np.pi * t[last] / period) * basis)
    return np.abs(ratio), np.angle(ratio)


class TestDiscretize:
    def test_single_node_slab(self):
        layer = CONCRETE_WALL.layers[0]
        net = z.discretize(CONCRETE_WALL, cfg=z.FdConfig(nodes_per_solid_layer=1))
        m = layer.material
        np.testing.assert_allclose(net.capacitances, [m.density * m.specific_heat * 0.2])
        np.testing.assert_allclose(net.conductances, [2 * m.conductivity / 0.2] * 2)

    def test_pure_resistance_wall(self):
        a = z.WallAssembly("r", (z.Layer.resistance_only(0.5), z.Layer.resistance_only(0.25)))
        net = z.discretize(a, 8.0, 18.0)
        assert net.n_nodes == 0
        assert net.conductances[0] == pytest.approx(1 / (1 / 18 + 0.75 + 1 / 8))
        q_in, q_out = net.fluxes(30.0, 20.0)
        assert q_in == q_out == pytest.approx(10 * z.u_value(a, 8.0, 18.0))

    def test_cell_wall_nine_nodes(self):
        net = z.discretize(CELL_WALL)
        assert net.n_nodes == 9
        assert net.total_capacitance == pytest.approx(CELL_WALL.heat_capacity, rel=1e-14)

    def test_massless_layers_merge_into_conductances(self):
        a = z.WallAssembly("m", (CONCRETE_WALL.layers[0], z.air_gap_layer(0.1), CONCRETE_WALL.layers[0]))
        net = z.discretize(a)
        assert net.n_nodes == 6 and np.all(net.capacitances > 0)
        assert net.steady_conductance == pytest.approx(z.u_value(a))

    def test_network_invariants(self):
        with pytest.raises(ValueError):
            z.WallNodeNetwork([1.0], [1.0], [0.0])
        with pytest.raises(ValueError):
            z.WallNodeNetwork([1.0], [1.0, 0.0], [0.0])
        with pytest.raises(ValueError):
            z.FdConfig(time_step=0)

    @given(walls(), st.integers(1, 8), st.floats(1.0, 50.0), st.floats(1.0, 50.0))
    def test_steady_conductance_independent_of_nodes(self, a, n, h_in, h_out):
        net = z.discretize(a, h_in, h_out, z.FdConfig(nodes_per_solid_layer=n))
        assert net.steady_conductance == pytest.approx(z.u_value(a, h_in, h_out), rel=1e-12)
        assert net.total_capacitance == pytest.approx(a.heat_capacity, rel=1e-12)


class TestStep:
    def test_equilibrium_fixed_point(self):
        net = z.discretize(CELL_WALL, 8.0, 18.0, initial_temperature=20.0)
        r = z.step_implicit(net, 20.0, 20.0, 3600.0)
        np.testing.assert_array_equal(r.temperatures, 20.0)
        assert r.q_in == 0.0 and r.q_out == 0.0

    @pytest.mark.parametrize("a", [CELL_WALL, CONCRETE_WALL], ids=["cell", "concrete"])
    def test_steady_state_flux(self, a):
        net = z.discretize(a, 8.0, 18.0)
        for _ in range(2000):
            r = net.step(10.0, 0.0, 3600.0)
        u = z.u_value(a, 8.0, 18.0)
        assert r.q_in == pytest.approx(10 * u, rel=1e-6)
        assert r.q_out == pytest.approx(10 * u, rel=1e-6)

    def test_rejects_non_positive_dt(self):
        with pytest.raises(ValueError):
            z.discretize(CELL_WALL).step(1, 0, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(walls(), st.lists(st.tuples(st.floats(-20, 60), st.floats(-20, 60)), min_size=1, max_size=20),
           st.sampled_from([60.0, 900.0, 3600.0, 86400.0]))
    def test_energy_balance_every_step(self, a, bounds, dt):
        net = z.discretize(a, 8.0, 18.0, initial_temperature=20.0)
        for t_out, t_in in bounds:
            before = net.stored_energy()
            r = net.step(t_out, t_in, dt)
            rate = (net.stored_energy() - before) / dt
            scale = max(abs(r.q_out), abs(r.q_in), 1e-12)
            assert abs(rate - (r.q_out - r.q_in)) <= 1e-9 * scale + 1e-9 * abs(before) / dt

    @settings(max_examples=30, deadline=None)
    @given(walls(), st.integers(0, 2**32 - 1))
    def test_unconditionally_stable_at_one_day(self, a, seed):
        rng = np.random.default_rng(seed)
        net = z.discretize(a, 8.0, 18.0, initial_temperature=20.0)
        for t_out, t_in in rng.uniform(-10, 50, size=(200, 2)):
            net.step(t_out, t_in, 86400.0)
            # backward Euler on an RC chain obeys a discrete maximum principle
            assert np.all(net.temperatures >= -10 - 1e-9) and np.all(net.temperatures <= 50 + 1e-9)


class TestTransient:
    def test_periodic_against_analytic_slab(self):
        exact = periodic_response(CONCRETE_WALL)
        errors = []
        for n in (3, 6, 12, 24):
            amp, phase = _periodic_amplitude_phase(CONCRETE_WALL, n)
            errors.append(abs(amp / abs(exact) - 1))
            if n == 3:
                assert errors[-1] < 0.05
                assert abs(phase - np.angle(exact)) < 2 * math.pi * 600 / 86400
        assert all(b < a for a, b in zip(errors, errors[1:]))

    def test_converges_towards_fine_reference(self):
        ref, _ = _periodic_amplitude_phase(CELL_WALL, 64)
        errs = [abs(_periodic_amplitude_phase(CELL_WALL, n)[0] - ref) for n in (1, 2, 4, 8)]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_time_constant_single_slab(self):
        m = CONCRETE_WALL.layers[0].material
        one = z.discretize(CONCRETE_WALL, cfg=z.FdConfig(1))
        assert dominant_time_constant(one) == pytest.approx(m.volumetric_heat_capacity * 0.04 / (4 * m.conductivity))
        fine = z.discretize(CONCRETE_WALL, nodes_per_layer=[64])
        assert dominant_time_constant(fine) == pytest.approx(0.04 / (math.pi ** 2 * m.diffusivity), rel=1e-3)

    def test_state_space_steady_gain(self):
        net = z.discretize(CELL_WALL, 8.0, 18.0)
        a, b, c, d = state_space(net)
        gain = d - c @ np.linalg.solve(a, b)
        u = z.u_value(CELL_WALL, 8.0, 18.0)
        np.testing.assert_allclose(gain, [[u, -u], [u, -u]], rtol=1e-10)
