from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdft.cavity import (CavityParams, ReducedState, atomic_effective_hamiltonian,
                         contour_velocity, coupling, effective_coupling, effective_detuning,
                         entanglement_final, entanglement_of_theta, evolve_reduced, solve_x,
                         tdft_problem, theta, theta_infinity, time_window, velocity_unit)
from tdft.engine import effective_hamiltonian, solve_generator
from tdft.quantum import basis_state, partial_trace_first, projector, von_neumann_entropy

REF = CavityParams.reference_point()
GE = ReducedState(0, 1, 0, 0)


def at_position(params, z, atom=1):
    """Time at which ``atom`` sits at ``z``."""
    z0 = params.z1_0 if atom == 1 else params.z2_0
    return (z - z0) / params.v


class TestParams:
    def test_large_detuning_enforced(self):
        with pytest.raises(ValueError, match="large-detuning"):
            CavityParams.reference_point(g0=2000.0)
        CavityParams.reference_point(g0=2000.0, unsafe=True)

    @pytest.mark.parametrize("field,value", [("delta", 0.0), ("d", 0.0), ("v", -1.0),
                                             ("n_p", -0.1), ("z1_0", -100.0)])
    def test_invalid(self, field, value):
        with pytest.raises(ValueError):
            CavityParams.reference_point(**{field: value})

    def test_reduced_units(self):
        p = CavityParams.from_reduced(1 / 3, 1.5)
        assert velocity_unit(100.0, 1e4, 30.0) == pytest.approx(30.0)
        assert p.v == pytest.approx(10.0)
        assert p.z0_reduced == pytest.approx(1.5)
        assert min(abs(p.z1_0), abs(p.z2_0)) >= 5 * p.d


class TestCoupling:
    def test_peak(self):
        assert coupling(REF, at_position(REF, 0.0), 1) == pytest.approx(100.0, rel=1e-15)

    def test_one_width(self):
        assert coupling(REF, at_position(REF, 30.0), 1) == pytest.approx(100.0 / math.e, rel=1e-14)

    def test_five_widths(self):
        g = coupling(REF, at_position(REF, 150.0), 1)
        assert g == pytest.approx(100.0 * math.exp(-25.0), rel=1e-12)
        assert g / 100.0 == pytest.approx(1.4e-11, rel=0.02)

    def test_bad_atom(self):
        with pytest.raises(ValueError):
            coupling(REF, 0.0, 3)

    def test_window_edges_negligible(self):
        t0, t1 = time_window(REF)
        for t in (t0, t1):
            for atom in (1, 2):
                assert coupling(REF, t, atom) <= 100.0 * math.exp(-36.0) * 1.0001


@pytest.fixture(scope="module")
def solved_x():
    # reference regime from 5 widths out until both atoms are past the centre
    p = CavityParams.reference_point(z1_0=-150.0, z2_0=-160.0)
    t = np.arange(0.0, 16.0, 0.02 / 1e4)
    x = solve_x(p, t)
    sl = slice(None, None, 97)
    return p, t[sl], x.x1[sl], x.x2[sl], x


class TestSolveX:
    def test_zero_coupling(self):
        p = CavityParams.reference_point(g0=0.0)
        x = solve_x(p, np.arange(0, 1.0, 1e-6))
        assert not np.any(x.x1) and not np.any(x.x2)

    def test_adiabatic_following(self, solved_x):
        x = solved_x[-1]
        for got, ref in ((x.x1, x.x1_adiabatic), (x.x2, x.x2_adiabatic)):
            assert np.abs(got - ref).max() <= 1e-3 * 100.0 / 1e4

    def test_non_adiabatic_breakdown(self):
        p = CavityParams(g0=10.0, delta=100.0, d=1.0, v=100.0, z1_0=-6.0, z2_0=-6.0)
        t = np.arange(0.0, 0.12, 0.02 / 100.0)
        x = solve_x(p, t)
        assert np.abs(x.x1 - x.x1_adiabatic).max() >= 0.1 * 10.0 / 100.0

    def test_step_bound(self):
        with pytest.raises(ValueError, match="0.02"):
            solve_x(REF, np.arange(0.0, 1.0, 3e-6))

    def test_start_must_be_outside(self):
        with pytest.raises(ValueError, match="1e-10"):
            solve_x(REF, np.arange(10.0, 11.0, 1e-6))


class TestEffectiveTerms:
    def test_detuning_without_coupling(self):
        p = CavityParams.reference_point(g0=0.0)
        assert effective_detuning(p, 3.0, 1) == 1e4
        assert effective_detuning(p, 3.0, 1, "full", x=0.0) == 1e4

    def test_detuning_peak(self):
        t = at_position(REF, 0.0)
        assert effective_detuning(REF, t, 1) == pytest.approx(1e4 + 2 * 100.0**2 / 1e4, rel=1e-15)

    def test_detuning_photon_number(self):
        p = CavityParams.reference_point(n_p=0.5)
        t = at_position(p, 0.0)
        assert effective_detuning(p, t, 1) == pytest.approx(1e4 + 4 * 100.0**2 / 1e4)

    def test_detuning_full_vs_simplified(self, solved_x):
        p, t, x1, x2, _ = solved_x
        for atom, x in ((1, x1), (2, x2)):
            full = effective_detuning(p, t, atom, "full", x)
            simple = effective_detuning(p, t, atom)
            assert np.abs(full / simple - 1).max() <= 1e-3

    def test_coupling_outside(self):
        t = at_position(REF, -150.0)
        assert abs(effective_coupling(REF, t)) < 1e-10 * 100.0**2 / 1e4

    def test_coupling_peak(self):
        assert effective_coupling(REF, at_position(REF, 0.0)) == pytest.approx(1.0, rel=1e-15)

    def test_coupling_full_vs_simplified(self, solved_x):
        p, t, x1, x2, _ = solved_x
        full = effective_coupling(p, t, "full", (x1, x2))
        simple = effective_coupling(p, t)
        # relative deviation where the coupling is above numerical noise
        mask = simple > 1e-6 * simple.max()
        assert np.abs(full[mask] / simple[mask] - 1).max() <= 2e-3

    def test_modes(self):
        with pytest.raises(ValueError):
            effective_coupling(REF, 0.0, "other")
        with pytest.raises(ValueError):
            effective_detuning(REF, 0.0, 1, "full")


class TestTheta:
    def test_unit_velocity(self):
        p = CavityParams.from_reduced(1.0, 0.0)
        expected = math.sqrt(math.pi / 2)
        assert theta_infinity(p).theta == pytest.approx(expected, rel=1e-14)
        assert theta_infinity(p, "quadrature").theta == pytest.approx(expected, rel=1e-9)
        assert expected == pytest.approx(1.2533, abs=1e-4)

    def test_reference_point(self):
        th = theta_infinity(REF).theta
        assert th == pytest.approx(3 * math.sqrt(math.pi / 2), rel=1e-14)
        assert th == pytest.approx(3.7600, abs=1e-3)
        assert theta_infinity(REF, "quadrature").theta == pytest.approx(th, rel=1e-9)

    def test_far_separation(self):
        vals = [theta_infinity(CavityParams.from_reduced(1.0, z)).theta for z in (0, 4, 8, 16)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-50

    def test_cumulative_limit(self):
        p = CavityParams.from_reduced(0.5, 1.0)
        t = np.linspace(*time_window(p), 20001)
        closed = theta(p, t)
        quad = theta(p, t, "quadrature")
        assert closed[0] < 1e-15
        assert closed[-1] == pytest.approx(theta_infinity(p).theta, rel=1e-12)
        np.testing.assert_allclose(quad, closed, atol=1e-9 * closed[-1])
        assert np.all(np.diff(closed) >= 0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.05, 2.0), st.floats(-4.0, 4.0))
    def test_quadrature_matches_closed_form(self, v, z0):
        p = CavityParams.from_reduced(v, z0)
        closed = theta_infinity(p).theta
        quad = theta_infinity(p, "quadrature").theta
        assert abs(quad - closed) <= 1e-3 * closed

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.05, 2.0), st.floats(0.0, 4.0))
    def test_symmetric_in_separation(self, v, z0):
        a, b = CavityParams.from_reduced(v, z0), CavityParams.from_reduced(v, -z0)
        assert theta_infinity(a).theta == theta_infinity(b).theta
        assert abs(theta_infinity(a, "quadrature").theta
                   - theta_infinity(b, "quadrature").theta) <= 1e-9
        assert entanglement_final(a) == entanglement_final(b)


class TestEvolveReduced:
    def test_identity(self):
        s = ReducedState.from_amplitudes(np.array([0.5, 0.5j, -0.5, 0.5]))
        np.testing.assert_array_equal(evolve_reduced(s, 0.0).amplitudes, s.amplitudes)

    def test_quarter_turn(self):
        out = evolve_reduced(GE, math.pi / 4).amplitudes
        np.testing.assert_allclose(out, [0, 1 / math.sqrt(2), -1j / math.sqrt(2), 0], atol=1e-15)

    def test_full_swap(self):
        out = evolve_reduced(GE, math.pi / 2).amplitudes
        np.testing.assert_allclose(out, [0, 0, -1j, 0], atol=1e-15)

    def test_unnormalized(self):
        with pytest.raises(ValueError, match="normalized"):
            evolve_reduced(ReducedState(0, 1, 1, 0), 0.3)

    @given(st.integers(0, 2**32 - 1), st.floats(-20, 20))
    def test_norm_and_spectators(self, seed, th):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        s = ReducedState.from_amplitudes(a / np.linalg.norm(a))
        out = evolve_reduced(s, th)
        assert out.norm == pytest.approx(1.0, abs=1e-15)
        assert out.c_gg == s.c_gg and out.c_ee == s.c_ee

    def test_atom_exchange(self):
        # swapping the atoms swaps the roles of |ge> and |eg>
        th = 0.83
        a = evolve_reduced(GE, th)
        b = evolve_reduced(ReducedState(0, 0, 1, 0), th)
        assert a.c_ge == b.c_eg and a.c_eg == b.c_ge


class TestEntanglement:
    @pytest.mark.parametrize("n", range(7))
    def test_maximal(self, n):
        assert entanglement_of_theta((2 * n + 1) * math.pi / 4) == pytest.approx(1.0, abs=1e-12)

    def test_zero(self):
        assert entanglement_of_theta(0.0) == 0.0

    def test_reference_value(self):
        e = entanglement_final(REF)
        assert e == pytest.approx(0.9214, abs=1e-3)
        assert entanglement_of_theta(3.7600) == pytest.approx(0.9214, abs=1e-3)

    @given(st.floats(-10, 10))
    def test_matches_reduced_state_entropy(self, th):
        amps = evolve_reduced(GE, th).amplitudes
        rho1 = partial_trace_first(projector(amps), 2, 2)
        assert von_neumann_entropy(rho1) == pytest.approx(float(entanglement_of_theta(th)), abs=1e-12)

    def test_monotone_on_first_quarter(self):
        e = entanglement_of_theta(np.linspace(0, math.pi / 4, 2001))
        assert np.all(np.diff(e) > 0)

    def test_atom_exchange(self):
        p = CavityParams.reference_point(z1_0=-200.0, z2_0=-170.0)
        q = CavityParams.reference_point(z1_0=-170.0, z2_0=-200.0)
        assert entanglement_final(p) == entanglement_final(q)
        assert entanglement_final(p, "quadrature") == pytest.approx(entanglement_final(q, "quadrature"),
                                                                    abs=1e-12)


class TestContours:
    def test_centre(self):
        v = contour_velocity(0, 0.0)
        assert v == pytest.approx(4 / math.sqrt(2 * math.pi), rel=1e-15)
        assert v == pytest.approx(1.5958, abs=1e-4)

    def test_two_widths(self):
        assert contour_velocity(0, 2.0) == pytest.approx(0.2160, abs=1e-4)

    def test_nested_and_vanishing(self):
        z = np.linspace(-4, 4, 41)
        vs = np.array([contour_velocity(n, z, allow_large=True) for n in range(40)])
        assert np.all(np.diff(vs, axis=0) < 0)
        assert vs[-1].max() < 0.05 * vs[0].max()

    def test_large_n_needs_flag(self):
        with pytest.raises(ValueError, match="allow_large"):
            contour_velocity(7, 0.0)
        contour_velocity(7, 0.0, allow_large=True)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 6), st.floats(0.0, 4.0))
    def test_inverts_theta(self, n, z0):
        v = contour_velocity(n, z0)
        p = CavityParams.from_reduced(v, z0)
        assert entanglement_final(p) == pytest.approx(1.0, abs=1e-9)


class TestCrossModule:
    def test_effective_hamiltonian_matches_atomic_model(self):
        # g0/delta = 1e-2 as in the reference point, shorter transit for speed
        p = CavityParams(g0=10.0, delta=1e3, d=30.0, v=30.0, z1_0=-180.0, z2_0=-180.0)
        prob = tdft_problem(p)
        t_c = 6.0
        traj = solve_generator(prob, 0.0, t_c + 0.01, stride=64)
        heff = effective_hamiltonian(prob, traj, t_c)
        vacuum = [4 * a1 + 2 * a2 for a1 in (0, 1) for a2 in (0, 1)]
        block = heff[np.ix_(vacuum, vacuum)]
        atomic = atomic_effective_hamiltonian(p, t_c)
        nz = np.abs(atomic) > 0
        assert np.all(np.abs(block[~nz]) <= 1e-12 * np.abs(atomic).max())
        assert np.abs(block[nz] / atomic[nz] - 1).max() <= 1e-3
        assert np.abs(heff - heff.conj().T).max() <= 1e-9

    def test_problem_layout(self):
        prob = tdft_problem(REF)
        assert prob.dim == 8
        h = prob.h1_at(at_position(REF, 0.0))
        gg1, ge0, eg0 = 1, 2, 4
        assert h[ge0, gg1] == pytest.approx(100.0) and h[eg0, gg1] == pytest.approx(100.0)
        np.testing.assert_array_equal(prob.energies, [0, 0, 1e4, 1e4, 1e4, 1e4, 2e4, 2e4])

    def test_atomic_hamiltonian_structure(self):
        h = atomic_effective_hamiltonian(REF, at_position(REF, 0.0))
        ge, eg = 1, 2
        assert h[ge, eg] == pytest.approx(1.0) and h[eg, ge] == pytest.approx(1.0)
        np.testing.assert_allclose(np.diag(h).real, [0, 1e4 + 2, 1e4 + 2, 2e4 + 4])
        assert basis_state(4, 0) @ h @ basis_state(4, 0) == 0
