"""Slowness measures and the purity floor, checked against hand arithmetic."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adfs.adiabatic_monitor import (
    AdiabaticReport,
    adiabatic_report,
    prefactor_from_f_max,
    purity_lower_bound,
    spectral_quantities,
    xi_lindblad,
    xi_state,
)
from adfs.dfs_analysis import DfsDecomposition, common_degenerate_eigenspace
from adfs.lindblad_integrator import PropagateOptions, propagate
from adfs.operator_model import OperatorSet, evaluate, evaluate_derivative
from adfs.squeezed_qubit_example import (
    AnalyticQubitPath,
    SqueezeSchedule,
    build_model,
    lindblad_L,
    phi1,
    xi_closed_form,
)


def _hand_decomposition(dfs_cols, comp_cols, eigenvalues):
    v = np.column_stack(dfs_cols).astype(complex)
    q = np.column_stack(comp_cols).astype(complex)
    return DfsDecomposition(
        dfs_basis=v,
        comp_basis=q,
        eigenvalues=np.asarray(eigenvalues, dtype=complex),
        proj_dfs=v @ v.conj().T,
        proj_comp=q @ q.conj().T,
    )


def _qubit_model(r0=1.0, mu=0.1, nu=0.0, theta0=0.0, gamma=1.0, control="engineered", t_final=10.0):
    sch = SqueezeSchedule(r0=r0, theta0=theta0, mu=mu, nu=nu, gamma=gamma, offset_o=0.0)
    return build_model(sch, control, t_final), AnalyticQubitPath(sch), sch


class TestSpectralQuantities:
    def test_engineered_drive_degenerate_spectrum(self):
        model, path, _ = _qubit_model(r0=0.7, mu=0.2, nu=0.1)
        for t in (0.0, 1.3, 4.0):
            omega, gamma = spectral_quantities(evaluate(model, t), path.frame(t))
            assert np.max(np.abs(omega)) < 1e-12
            assert gamma.shape == (1,)

    def test_identity_like_jump_gives_zero_decay(self):
        e = np.eye(3, dtype=complex)
        dfs = _hand_decomposition([e[:, 0], e[:, 1]], [e[:, 2]], [0.4])
        ops = OperatorSet(hamiltonian=np.zeros((3, 3)), lindblads=(0.4 * np.eye(3),))
        omega, gamma = spectral_quantities(ops, dfs)
        assert np.allclose(gamma, 0.0)
        assert np.allclose(omega, 0.0)

    def test_squeezed_qubit_decay_matches_hand_quadratic_form(self):
        r, th, g = 1.0, 0.4, 1.0
        model, path, _ = _qubit_model(r0=r, theta0=th, mu=0.0, nu=0.0, gamma=g)
        frame = path.frame(0.0)
        _, gamma = spectral_quantities(evaluate(model, 0.0), frame)

        L = lindblad_L(r, th)
        lam = np.sqrt(np.sinh(r) * np.cosh(r))
        vp = frame.comp[:, 0]
        shifted = (L - lam * np.eye(2)) @ vp
        hand = 0.5 * g * float(np.real(shifted.conj() @ shifted))
        assert gamma[0] == pytest.approx(hand, rel=1e-12)
        assert gamma[0] == pytest.approx(g * np.exp(2 * r) / 2, rel=1e-12)


class TestXiState:
    def test_static_schedule_gives_zero(self):
        model, path, _ = _qubit_model(mu=0.0, nu=0.0)
        assert xi_state(model, 2.0, path) == 0.0

    def test_matches_closed_form_with_analytic_derivatives(self):
        for r0 in (0.05, 0.3, 1.0, 3.0):
            model, path, sch = _qubit_model(r0=r0, mu=0.1, nu=0.0, t_final=1.0)
            got = xi_state(model, 0.0, path)
            want = xi_closed_form(r0, sch.mu, sch.nu, sch.gamma)
            assert got == pytest.approx(want, rel=1e-10)

    def test_matches_closed_form_with_numeric_tracking(self):
        from adfs.dfs_analysis import NumericDfsPath

        model, _, sch = _qubit_model(r0=0.8, mu=0.1, nu=0.05, t_final=2.0)
        path = NumericDfsPath(model, n_grid=33)
        t = 1.0
        want = xi_closed_form(float(sch.r(t)), sch.mu, sch.nu, sch.gamma)
        assert xi_state(model, t, path) == pytest.approx(want, rel=1e-4)

    def test_vanishing_denominator_is_flagged_divergent(self):
        e = np.eye(2, dtype=complex)
        dfs = _hand_decomposition([e[:, 0]], [e[:, 1]], [0.5])
        ops = OperatorSet(hamiltonian=np.zeros((2, 2)), lindblads=(0.5 * np.eye(2),))

        class FrozenProvider:
            def frame(self, t):
                return dfs.frame()

            def basis_derivative(self, t):
                return np.array([[0.0], [0.3j]]), np.zeros((2, 1), dtype=complex)

        class FakeModel:
            pass

        from adfs.adiabatic_monitor import _denominators, _max_ratio, _rate_scale

        omega, gamma = spectral_quantities(ops, dfs)
        den = _denominators(omega, gamma)
        val, div, pair = _max_ratio(
            dfs.comp_basis.conj().T @ np.array([[0.0], [0.3j]]),
            den,
            _rate_scale(ops, den, gamma),
        )
        assert div and val == math.inf and pair == (0, 0)

    def test_gauge_phase_invariance(self):
        model, path, _ = _qubit_model(r0=0.9, mu=0.15, nu=0.08)

        class Rephased:
            def __init__(self, base, rate):
                self.base, self.rate = base, rate

            def frame(self, t):
                f = self.base.frame(t)
                ph = np.exp(1j * self.rate * t)
                return type(f)(f.dfs * ph, f.comp * np.conj(ph), f.eigenvalues)

            def basis_derivative(self, t):
                d1, dp = self.base.basis_derivative(t)
                f = self.base.frame(t)
                ph = np.exp(1j * self.rate * t)
                return (
                    ph * (d1 + 1j * self.rate * f.dfs),
                    np.conj(ph) * (dp - 1j * self.rate * f.comp),
                )

        t = 2.1
        base_val = xi_state(model, t, path)
        assert xi_state(model, t, Rephased(path, 1.7)) == pytest.approx(base_val, rel=1e-10)


class TestXiLindblad:
    def test_static_jump_operators_give_zero(self):
        model, path, _ = _qubit_model(mu=0.0, nu=0.0)
        ops = evaluate(model, 1.0)
        vals = xi_lindblad(ops, evaluate_derivative(model, 1.0), path.frame(1.0))
        assert vals == (0.0,)

    def test_single_complement_collapses_to_state_form(self):
        model, path, _ = _qubit_model(r0=0.6, mu=0.12, nu=0.07)
        for t in (0.0, 1.0, 3.5):
            rep = adiabatic_report(model, t, path)
            assert rep.f_max == 0.0
            assert rep.prefactor == 1.0
            assert rep.xi_lindblad[0] == pytest.approx(rep.xi_state, rel=1e-8)

    def test_planted_complement_transition_prefactor(self):
        e = np.eye(3, dtype=complex)
        c = 1.0
        b = np.array([[0.2, 0.5], [0.1, -0.3]], dtype=complex)
        f = np.zeros((3, 3), dtype=complex)
        f[0, 0] = c
        f[1:, 1:] = b
        df = np.array(
            [[0.0, 0.02, 0.05], [0.03, 0.0, 0.0], [-0.04, 0.0, 0.01]], dtype=complex
        )
        ops = OperatorSet(hamiltonian=np.diag([0.3, -0.1, 0.4]).astype(complex), lindblads=(f,))
        dfs = _hand_decomposition([e[:, 0]], [e[:, 1], e[:, 2]], [c])

        vals = xi_lindblad(ops, (np.zeros((3, 3)), (df,)), dfs)

        f_max_hand = max(abs(0.5 / (c - 0.2)), abs(0.1 / (c + 0.3)))
        pref_hand = (2.0 + 2.0 * f_max_hand) / 2.0
        assert pref_hand == 1.0 + f_max_hand

        omega, gamma = spectral_quantities(ops, dfs)
        best = 0.0
        for n in range(2):
            shift = c - b[n, n]
            den = (omega[n, 0] + 1j * gamma[n]) * shift
            best = max(best, abs(4.0 * df[n + 1, 0] / den))
        assert vals[0] == pytest.approx(pref_hand * best, rel=1e-12)

        rep_like = prefactor_from_f_max(f_max_hand, 2)
        assert rep_like == pytest.approx(pref_hand, rel=1e-15)

    def test_expectation_collision_is_flagged(self):
        f = np.array([[0.5, 0.2], [0.0, 0.5]], dtype=complex)
        ops = OperatorSet(hamiltonian=np.zeros((2, 2)), lindblads=(f,))
        cands = common_degenerate_eigenspace(ops)
        assert cands and cands[0].m == 1
        dfs = cands[0]
        vals = xi_lindblad(ops, (np.zeros((2, 2)), (0.1 * np.eye(2),)), dfs)
        assert vals == (math.inf,)

    def test_state_form_never_exceeds_lindblad_form_on_schedule(self):
        sch = SqueezeSchedule(r0=0.0, theta0=0.0, mu=0.1, nu=0.0, gamma=1.0, offset_o=1e-6)
        model = build_model(sch, "engineered", 31.4)
        path = AnalyticQubitPath(sch)
        for t in np.linspace(0.5, 31.0, 12):
            rep = adiabatic_report(model, float(t), path)
            assert rep.xi_state <= max(rep.xi_lindblad) * (1 + 1e-6) + 1e-12


class TestPrefactorProperties:
    @given(
        st.integers(min_value=1, max_value=6),
        st.floats(min_value=0.0, max_value=50.0, allow_nan=False),
    )
    @settings(deadline=None, max_examples=60)
    def test_at_least_one_and_monotone(self, k, f):
        base = prefactor_from_f_max(f, k)
        assert base >= 1.0
        assert prefactor_from_f_max(f + 0.5, k) >= base

    @given(st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
    @settings(deadline=None, max_examples=40)
    def test_two_dim_complement_expansion(self, f):
        assert prefactor_from_f_max(f, 2) == pytest.approx(1.0 + f, rel=1e-14)


class TestPurityLowerBound:
    def test_static_path_gives_unit_bound(self):
        model, path, _ = _qubit_model(r0=1.2, mu=0.0, nu=0.0, t_final=4.0)
        terms = purity_lower_bound(model, path, 4.0, n_grid=33, refine_tol=None)
        assert terms.bound == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(terms.bound_path, 1.0, atol=1e-12)
        assert terms.finite

    def test_bound_stays_below_simulated_purity(self):
        model, path, sch = _qubit_model(r0=1.0, mu=0.1, nu=0.0, t_final=10.0)
        terms = purity_lower_bound(model, path, 10.0, n_grid=201, refine_tol=None)
        assert terms.finite
        assert terms.bound <= 1.0
        assert 0.0 < terms.bound < 1.0

        rho0 = np.outer(phi1(1.0, 0.0), phi1(1.0, 0.0).conj())
        rec = propagate(model, rho0, np.linspace(0.0, 10.0, 401), PropagateOptions())
        sim = np.interp(terms.times, rec.times, rec.purity)
        assert np.all(terms.bound_path <= sim + 1e-9)

    def test_components_nonnegative(self):
        model, path, _ = _qubit_model(r0=0.8, mu=0.15, nu=0.1, t_final=6.0)
        terms = purity_lower_bound(model, path, 6.0, n_grid=101, refine_tol=None)
        assert np.all(terms.a_j >= 0.0)
        assert np.all(terms.b_m >= 0.0)
        assert terms.c_term >= 0.0
        assert terms.boundary_term >= 0.0
        assert terms.integral_terms >= 0.0
        assert all(s >= 0.0 for s in terms.strong_conditions)

    def test_grid_refinement_converges(self):
        model, path, _ = _qubit_model(r0=1.0, mu=0.1, nu=0.0, t_final=5.0)
        terms = purity_lower_bound(
            model, path, 5.0, n_grid=129, refine_tol=1e-8, max_refinements=12
        )
        assert terms.converged
        assert terms.n_grid > 129

    def test_doubling_horizon_halves_sup_deficit(self):
        t1 = 20.0
        sch1 = SqueezeSchedule(r0=1.0, theta0=0.3, mu=0.1, nu=0.05, gamma=1.0, offset_o=0.0)
        sch2 = SqueezeSchedule(r0=1.0, theta0=0.3, mu=0.05, nu=0.025, gamma=1.0, offset_o=0.0)
        m1 = build_model(sch1, "engineered", t1)
        m2 = build_model(sch2, "engineered", 2 * t1)
        b1 = purity_lower_bound(m1, AnalyticQubitPath(sch1), t1, n_grid=201, refine_tol=None)
        b2 = purity_lower_bound(m2, AnalyticQubitPath(sch2), 2 * t1, n_grid=201, refine_tol=None)
        assert b2.deficit_sup == pytest.approx(0.5 * b1.deficit_sup, rel=1e-6)


class TestReportInvariants:
    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError):
            AdiabaticReport(
                xi_state=0.0,
                xi_lindblad=(0.0,),
                omega=np.zeros((1, 1)),
                gamma_comp=np.array([-1.0]),
                f_max=0.0,
                prefactor=1.0,
            )

    def test_report_fields_on_schedule(self):
        model, path, _ = _qubit_model(r0=0.5, mu=0.1, nu=0.2)
        rep = adiabatic_report(model, 1.0, path)
        assert rep.xi_state > 0.0
        assert len(rep.xi_lindblad) == 1
        assert rep.omega.shape == (1, 1)
        assert rep.gamma_comp.shape == (1,)
        assert not rep.divergent and not rep.assumption_violated
