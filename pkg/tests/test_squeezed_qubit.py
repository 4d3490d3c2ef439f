"""Closed-form identities of the squeezed-qubit example.

The oracles here are hand expansions: the 2x2 characteristic polynomial
for the eigenpair, the jump-by-jump dissipator expansion, and the
orthogonal-state coupling element assembled term by term.  Library
functions are checked against those, never against themselves.
"""

import numpy as np
import pytest

from adfs import squeezed_qubit_example as sq
from adfs.dfs_analysis import effective_hamiltonian
from adfs.operator_model import (
    OperatorSet,
    SqueezeSchedule,
    evaluate,
    evaluate_batch,
    evaluate_derivative,
)

RNG = np.random.default_rng(20260814)


def random_density(n=2):
    a = RNG.normal(size=(n, n)) + 1j * RNG.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def lindblad_rhs(rho, h, fs):
    out = -1j * (h @ rho - rho @ h)
    for f in fs:
        fd = f.conj().T
        out += f @ rho @ fd - 0.5 * (fd @ f @ rho + rho @ fd @ f)
    return out


class TestJumpOperator:
    def test_eigenvalues_match_characteristic_polynomial(self):
        # det(L - x) = x^2 - sinh(r)cosh(r), so x = +/- sqrt(SC)
        for r in (0.3, 1.0, 2.5):
            for th in (0.0, 0.7, 4.1):
                lam = np.sqrt(np.sinh(r) * np.cosh(r))
                w = np.linalg.eigvals(sq.lindblad_L(r, th))
                assert sorted(np.round(w.real, 12)) == pytest.approx(
                    sorted([-lam, lam]), abs=1e-12
                )
                assert np.max(np.abs(w.imag)) < 1e-12

    def test_phi1_is_decaying_eigenvector(self):
        for r in (0.05, 0.3, 1.0, 2.5):
            for th in (0.0, 1.3, 5.9):
                lam = np.sqrt(np.sinh(r) * np.cosh(r))
                v = sq.phi1(r, th)
                assert np.linalg.norm(sq.lindblad_L(r, th) @ v - lam * v) < 1e-13
                assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-13)

    def test_phi_perp_orthonormal_not_eigenvector(self):
        r, th = 0.8, 2.1
        v1, vp = sq.phi1(r, th), sq.phi_perp(r, th)
        assert abs(v1.conj() @ vp) < 1e-14
        assert np.linalg.norm(vp) == pytest.approx(1.0, abs=1e-13)
        l_vp = sq.lindblad_L(r, th) @ vp
        # orthogonal state maps outside its own ray: <perp|L|perp> = -lambda
        lam = np.sqrt(np.sinh(r) * np.cosh(r))
        assert vp.conj() @ l_vp == pytest.approx(-lam, abs=1e-13)
        assert v1.conj() @ l_vp == pytest.approx(-np.exp(-r), abs=1e-13)

    def test_r_zero_rejected(self):
        with pytest.raises(ValueError):
            sq.phi1(0.0, 0.0)


class TestDissipator:
    def test_four_term_equals_single_jump_form(self):
        gamma = 1.7
        for _ in range(100):
            r = RNG.uniform(0.0, 3.0)
            th = RNG.uniform(0.0, 2.0 * np.pi)
            rho = random_density()
            f = np.sqrt(gamma) * sq.lindblad_L(r, th)
            direct = lindblad_rhs(rho, np.zeros((2, 2)), [f])
            assert np.max(np.abs(sq.dissipator_four_term(rho, r, th, gamma) - direct)) < 1e-12

    def test_trace_free(self):
        rho = random_density()
        d = sq.dissipator_four_term(rho, 1.2, 0.9, 0.8)
        assert abs(np.trace(d)) < 1e-14


class TestBasisDerivatives:
    @pytest.mark.parametrize("r0,mu,nu", [(0.3, 0.2, 0.0), (1.1, 0.0, 0.45), (2.0, 0.13, 0.31)])
    def test_dphi_matches_finite_difference(self, r0, mu, nu):
        th0, h = 0.6, 1e-6
        for fn, dfn in ((sq.phi1, sq.dphi1), (sq.phi_perp, sq.dphi_perp)):
            plus = fn(r0 + mu * h, th0 + nu * h)
            minus = fn(r0 - mu * h, th0 - nu * h)
            fd = (plus - minus) / (2.0 * h)
            assert np.max(np.abs(dfn(r0, th0, mu, nu) - fd)) < 1e-8

    def test_coupling_element_hand_assembled(self):
        # <perp|d/dt phi1> = -(e^-r / 2 sqrt(SC)) (mu + i nu SC)
        r, th, mu, nu = 0.9, 1.4, 0.21, 0.37
        sc = np.sinh(r) * np.cosh(r)
        expected = -np.exp(-r) / (2.0 * np.sqrt(sc)) * (mu + 1j * nu * sc)
        g = sq.phi_perp(r, th).conj() @ sq.dphi1(r, th, mu, nu)
        assert g == pytest.approx(expected, abs=1e-14)


class TestEngineeredDrive:
    @pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
    def test_effective_hamiltonian_vanishes(self, r):
        gamma = 1.0
        for th in (0.0, 1.1, 3.9):
            om = sq.control_omega(r, th, gamma)
            h0 = np.array([[0.0, om], [np.conj(om), 0.0]], dtype=complex)
            f = np.sqrt(gamma) * sq.lindblad_L(r, th)
            c = np.sqrt(gamma * np.sinh(r) * np.cosh(r))
            heff = effective_hamiltonian(
                OperatorSet(hamiltonian=h0, lindblads=(f,)), [c]
            )
            assert np.max(np.abs(heff)) < 1e-14

    def test_zero_field_at_r_zero_warns(self):
        with pytest.warns(UserWarning):
            om = sq.control_omega(0.0, 0.0, 1.0)
        assert om == 0.0


class TestTransportDrive:
    @pytest.mark.parametrize("mu,nu", [(0.3, 0.0), (0.0, 0.4), (0.17, 0.29)])
    def test_offdiagonal_transport_condition(self, mu, nu):
        # effective Hamiltonian of H0 + H1 must couple the frame pair by
        # exactly i <perp|d/dt phi1>
        gamma = 1.0
        for r in (0.2, 0.9, 2.2):
            th = 0.8
            om = sq.control_omega(r, th, gamma)
            omp = sq.sta_omega_prime(r, th, mu, nu)
            h = np.array(
                [[0.0, om + omp], [np.conj(om + omp), 0.0]], dtype=complex
            )
            f = np.sqrt(gamma) * sq.lindblad_L(r, th)
            c = np.sqrt(gamma * np.sinh(r) * np.cosh(r))
            heff = effective_hamiltonian(
                OperatorSet(hamiltonian=h, lindblads=(f,)), [c]
            )
            lhs = sq.phi_perp(r, th).conj() @ heff @ sq.phi1(r, th)
            rhs = 1j * (sq.phi_perp(r, th).conj() @ sq.dphi1(r, th, mu, nu))
            assert lhs == pytest.approx(rhs, abs=1e-13)
            # the transport drive alone supplies that element
            h1 = np.array([[0.0, omp], [np.conj(omp), 0.0]], dtype=complex)
            alone = sq.phi_perp(r, th).conj() @ h1 @ sq.phi1(r, th)
            assert alone == pytest.approx(rhs, abs=1e-13)

    def test_r_zero_rejected(self):
        with pytest.raises(ValueError):
            sq.sta_omega_prime(0.0, 0.0, 0.1, 0.1)


class TestXiClosedForm:
    def test_matches_hand_assembly(self):
        # xi = 4 |<perp|dt phi1>| / Gamma with Gamma = gamma e^{2r} / 2
        gamma = 1.0
        for r in (0.1, 0.7, 1.8):
            for mu, nu in ((0.2, 0.0), (0.0, 0.3), (0.11, 0.23)):
                sc = np.sinh(r) * np.cosh(r)
                g_el = np.exp(-r) / (2.0 * np.sqrt(sc)) * abs(mu + 1j * nu * sc)
                big_gamma = gamma * np.exp(2.0 * r) / 2.0
                assert sq.xi_closed_form(r, mu, nu, gamma) == pytest.approx(
                    4.0 * g_el / big_gamma, rel=1e-13
                )

    def test_complement_damping_rate(self):
        # Gamma = |(L - lambda) phi_perp|^2 gamma / 2 = gamma e^{2r} / 2
        for r in (0.2, 1.1, 2.7):
            th = 0.5
            lam = np.sqrt(np.sinh(r) * np.cosh(r))
            resid = (sq.lindblad_L(r, th) - lam * np.eye(2)) @ sq.phi_perp(r, th)
            assert np.linalg.norm(resid) ** 2 / 2.0 == pytest.approx(
                np.exp(2.0 * r) / 2.0, rel=1e-13
            )


class TestModelEvaluation:
    def test_analytic_derivative_matches_finite_difference(self):
        sch = SqueezeSchedule(r0=0.5, theta0=0.2, mu=0.3, nu=0.4, gamma=1.0)
        for control in ("none", "engineered", "sta"):
            model = sq.build_model(sch, control=control, t_final=1.0)
            t = 0.4
            dh, dfs = evaluate_derivative(model, t)
            h = model.fd_h()
            plus, minus = evaluate(model, t + h), evaluate(model, t - h)
            dh_fd = (plus.hamiltonian - minus.hamiltonian) / (2.0 * h)
            df_fd = (plus.lindblads[0] - minus.lindblads[0]) / (2.0 * h)
            scale = max(np.max(np.abs(dh_fd)), np.max(np.abs(df_fd)), 1e-12)
            assert np.max(np.abs(dh - dh_fd)) < 1e-8 * scale
            assert np.max(np.abs(dfs[0] - df_fd)) < 1e-8 * scale

    def test_batch_matches_scalar_evaluation(self):
        sch = SqueezeSchedule(r0=0.1, theta0=0.0, mu=0.25, nu=0.15, gamma=2.0)
        model = sq.build_model(sch, control="engineered", t_final=2.0)
        ts = np.linspace(0.0, 2.0, 7)
        h_stack, f_stacks = evaluate_batch(model, ts)
        for k, t in enumerate(ts):
            ops = evaluate(model, float(t))
            assert np.max(np.abs(h_stack[k] - ops.hamiltonian)) < 1e-14
            assert np.max(np.abs(f_stacks[0][k] - ops.lindblads[0])) < 1e-14
