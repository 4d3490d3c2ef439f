"""Slowness diagnostics and a purity floor for steered dissipative subspaces.

Two equivalent-in-spirit measures of how fast the protected subspace moves:
one built from basis velocities against the spectral gap, one built from
jump-operator velocities with a combinatorial prefactor.  Both divide by
``omega_ni + i*Gamma_n``; a vanishing denominator is reported, never patched.

The purity floor integrates basis-velocity magnitudes along the whole path
and is assembled in three escalating simplifications: a time-resolved
running bound, its final-time value, and a sup-weighted scalar whose
deficit scales as ``1/T`` when the same path is traversed more slowly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .dfs_analysis import DfsDecomposition, DfsFrame, effective_hamiltonian
from .operator_model import OperatorSet, SystemModel, evaluate, evaluate_derivative

DENOM_TOL = 1e-14
ASSUMPTION_TOL = 1e-12


def _as_frame(dfs) -> DfsFrame:
    if isinstance(dfs, DfsDecomposition):
        return dfs.frame()
    if isinstance(dfs, DfsFrame):
        return dfs
    return dfs.frame()


def spectral_quantities(ops: OperatorSet, dfs) -> Tuple[np.ndarray, np.ndarray]:
    """Gap matrix ``omega[n, i]`` and complement decay vector ``Gamma[n]``.

    ``omega`` subtracts diagonal effective-Hamiltonian expectations
    (complement minus subspace); ``Gamma`` is half the squared norm of the
    shifted jump operators applied to each complement vector, so it is
    nonnegative by construction.
    """
    frame = _as_frame(dfs)
    v, q, cs = frame.dfs, frame.comp, frame.eigenvalues
    heff = effective_hamiltonian(ops, cs)
    e_dfs = np.real(np.einsum("ij,ik,kj->j", v.conj(), heff, v))
    e_comp = np.real(np.einsum("ij,ik,kj->j", q.conj(), heff, q))
    omega = e_comp[:, None] - e_dfs[None, :]
    gamma = np.zeros(q.shape[1])
    for c, f in zip(cs, ops.lindblads):
        shifted = f @ q - c * q
        gamma += 0.5 * np.sum(np.abs(shifted) ** 2, axis=0)
    return omega, gamma


@dataclass(frozen=True)
class AdiabaticReport:
    """One-time-sample summary of both slowness measures."""

    xi_state: float
    xi_lindblad: Tuple[float, ...]
    omega: np.ndarray
    gamma_comp: np.ndarray
    f_max: float
    prefactor: float
    divergent: bool = False
    divergent_pair: Optional[Tuple[int, int]] = None
    assumption_violated: bool = False

    def __post_init__(self):
        if np.any(self.gamma_comp < -1e-12):
            raise ValueError("negative complement decay rate")
        if self.prefactor < 1.0 - 1e-12:
            raise ValueError("prefactor below 1")


def _denominators(omega: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    return omega + 1j * gamma[:, None]


def _rate_scale(ops: OperatorSet, den: np.ndarray, gamma: np.ndarray) -> float:
    scale = float(np.max(np.abs(den))) if den.size else 0.0
    if gamma.size:
        scale = max(scale, float(np.max(gamma)))
    return scale if scale > 0.0 else 1.0


def _max_ratio(num: np.ndarray, den: np.ndarray, scale: float):
    """Max of ``4|num|/|den|`` with vanishing denominators flagged.

    A pair whose denominator underflows but whose numerator is negligible
    contributes nothing; a live numerator there means the measure is
    genuinely undefined and the offending index pair is returned.
    """
    if num.size == 0:
        return 0.0, False, None
    mag = np.abs(num)
    dmag = np.abs(den)
    small = dmag < DENOM_TOL * scale
    live = mag > 1e-15 * max(1.0, float(mag.max()))
    bad = small & live
    if np.any(bad):
        n, i = np.unravel_index(int(np.argmax(np.where(bad, mag, -1.0))), mag.shape)
        return math.inf, True, (int(n), int(i))
    ratio = np.where(small, 0.0, 4.0 * mag / np.where(small, 1.0, dmag))
    return float(ratio.max()), False, None


def prefactor_from_f_max(f_max: float, comp_dim: int) -> float:
    """Permutation-weighted series ``sum_a P(K, a+1) f^a / K`` over the complement size K."""
    k = comp_dim
    if k <= 0:
        return 1.0
    total = sum(math.perm(k, a + 1) * f_max**a for a in range(k))
    return total / k


def _lindblad_parts(ops, d_lindblads, frame, den, scale):
    v, q, cs = frame.dfs, frame.comp, frame.eigenvalues
    k = q.shape[1]
    xis = []
    f_max_all = 0.0
    prefactor_all = 1.0
    violated = False
    divergent = False
    pair = None
    for c, f, df in zip(cs, ops.lindblads, d_lindblads):
        fq = q.conj().T @ f @ q
        shift = c - np.diag(fq)
        fscale = max(abs(c), float(np.linalg.norm(f, 2)), 1e-300)
        if np.any(np.abs(shift) < ASSUMPTION_TOL * fscale):
            violated = True
            xis.append(math.inf)
            continue
        if k > 1:
            off = np.abs(fq / shift[:, None])
            np.fill_diagonal(off, 0.0)
            f_max = float(off.max())
        else:
            f_max = 0.0
        pref = prefactor_from_f_max(f_max, k)
        num = q.conj().T @ df @ v
        shift_floor = float(np.min(np.abs(shift))) if shift.size else 1.0
        ratio, div, p = _max_ratio(num, den * shift[:, None], scale * shift_floor)
        if div:
            divergent = True
            pair = pair or p
            xis.append(math.inf)
            continue
        xis.append(pref * ratio)
        if f_max >= f_max_all:
            f_max_all = f_max
            prefactor_all = pref
    return tuple(xis), f_max_all, prefactor_all, violated, divergent, pair


def adiabatic_report(model: SystemModel, t: float, dfs_provider) -> AdiabaticReport:
    """Evaluate both slowness measures at ``t`` along a gauge-continuous path."""
    ops = evaluate(model, t)
    frame = dfs_provider.frame(t)
    d_dfs, _ = dfs_provider.basis_derivative(t)
    _, d_lindblads = evaluate_derivative(model, t)

    omega, gamma = spectral_quantities(ops, frame)
    den = _denominators(omega, gamma)
    scale = _rate_scale(ops, den, gamma)

    g = frame.comp.conj().T @ d_dfs
    xi_s, div_s, pair_s = _max_ratio(g, den, scale)
    xis, f_max, pref, violated, div_l, pair_l = _lindblad_parts(
        ops, d_lindblads, frame, den, scale
    )
    return AdiabaticReport(
        xi_state=xi_s,
        xi_lindblad=xis,
        omega=omega,
        gamma_comp=gamma,
        f_max=f_max,
        prefactor=pref,
        divergent=div_s or div_l,
        divergent_pair=pair_s or pair_l,
        assumption_violated=violated,
    )


def xi_state(model: SystemModel, t: float, dfs_provider) -> float:
    """Basis-velocity slowness measure; ``inf`` when a denominator vanishes."""
    ops = evaluate(model, t)
    frame = dfs_provider.frame(t)
    d_dfs, _ = dfs_provider.basis_derivative(t)
    omega, gamma = spectral_quantities(ops, frame)
    den = _denominators(omega, gamma)
    val, _, _ = _max_ratio(frame.comp.conj().T @ d_dfs, den, _rate_scale(ops, den, gamma))
    return val


def xi_lindblad(ops: OperatorSet, d_ops, dfs) -> Tuple[float, ...]:
    """Jump-operator-velocity slowness measure, one value per operator.

    ``d_ops`` is the ``(dH, (dF, ...))`` pair produced by
    :func:`~adfs.operator_model.evaluate_derivative`; only the jump parts
    are used.  An operator whose complement expectation collides with its
    subspace eigenvalue gets ``inf`` (the standing assumption fails there).
    """
    frame = _as_frame(dfs)
    omega, gamma = spectral_quantities(ops, frame)
    den = _denominators(omega, gamma)
    scale = _rate_scale(ops, den, gamma)
    _, d_lindblads = d_ops
    xis, _, _, _, _, _ = _lindblad_parts(ops, d_lindblads, frame, den, scale)
    return xis


@dataclass(frozen=True)
class PurityBoundTerms:
    """Assembled purity floor over a finite path.

    ``bound_path`` carries the running bound on the sampling grid;
    ``bound`` is its final value.  ``deficit_sup`` is the sup-weighted
    scalar form whose value halves exactly when the same path shape is
    traversed over twice the time.  ``strong_conditions`` reports the
    three per-term smallness diagnostics (max boundary ratio, max weighted
    integral, max derivative integral) without gating on them.
    """

    a_j: np.ndarray
    b_m: np.ndarray
    c_term: float
    boundary_term: float
    integral_terms: float
    bound: float
    bound_sup: float
    deficit_sup: float
    strong_conditions: Tuple[float, float, float]
    times: np.ndarray
    bound_path: np.ndarray
    converged: bool
    finite: bool
    n_grid: int


def _bound_samples(model, dfs_path, times):
    """Per-sample ingredients: W, |dW| weights A/B/C, as stacked arrays."""
    n = times.size
    w = None
    a_all = b_all = None
    c_all = np.zeros(n)
    for k, t in enumerate(times):
        ops = evaluate(model, float(t))
        frame = dfs_path.frame(float(t))
        d_dfs, d_comp = dfs_path.basis_derivative(float(t))
        v, q = frame.dfs, frame.comp
        m_dim, k_dim = v.shape[1], q.shape[1]
        omega, gamma = spectral_quantities(ops, frame)
        den = _denominators(omega, gamma)
        if w is None:
            w = np.zeros((n, k_dim, m_dim), dtype=complex)
            a_all = np.zeros((n, m_dim))
            b_all = np.zeros((n, k_dim))
        w[k] = (q.conj().T @ d_dfs) / den

        dv_v = np.abs(d_dfs.conj().T @ v)
        dv_q = np.abs(d_dfs.conj().T @ q)
        dq_q = np.abs(d_comp.conj().T @ q)
        dq_v = np.abs(d_comp.conj().T @ v)
        a_all[k] = dv_v.sum(axis=1) + dv_q.sum(axis=1)

        gam_op = np.zeros((model.dim, model.dim), dtype=complex)
        for c, f in zip(frame.eigenvalues, ops.lindblads):
            ft = f - c * np.eye(model.dim)
            gam_op += 0.5 * (ft.conj().T @ ft)
        gam_off = np.abs(q.conj().T @ gam_op @ q)
        np.fill_diagonal(gam_off, 0.0)
        b_all[k] = dv_q.sum(axis=0) + dq_q.sum(axis=0) + gam_off.sum(axis=0)

        c_all[k] = (dq_v.sum() + dv_q.sum()) / m_dim
    return w, a_all, b_all, c_all


def _assemble(times, w, a_all, b_all, c_all, m_dim):
    weight = a_all[:, None, :] + b_all[:, :, None] + c_all[:, None, None]
    wmag = np.abs(w)
    dw = np.gradient(w, times, axis=0, edge_order=2)
    dwmag = np.abs(dw)

    wb = weight * wmag
    seg = 0.5 * np.diff(times)[:, None, None]
    cum1 = np.concatenate(
        [np.zeros((1,) + w.shape[1:]), np.cumsum(seg * (wb[1:] + wb[:-1]), axis=0)]
    )
    cum2 = np.concatenate(
        [np.zeros((1,) + w.shape[1:]), np.cumsum(seg * (dwmag[1:] + dwmag[:-1]), axis=0)]
    )
    boundary_path = wmag.sum(axis=(1, 2))
    deficit_path = 4.0 * m_dim * (boundary_path + cum1.sum(axis=(1, 2)) + cum2.sum(axis=(1, 2)))
    return wmag, dwmag, wb, cum1, cum2, deficit_path


def purity_lower_bound(
    model: SystemModel,
    dfs_path,
    total_time: Optional[float] = None,
    *,
    n_grid: int = 129,
    refine_tol: Optional[float] = 1e-6,
    max_refinements: int = 6,
) -> PurityBoundTerms:
    """Purity floor over ``[t0, t0 + total_time]`` from a basis path.

    Integrals use the composite trapezoid rule; when ``refine_tol`` is set
    the grid is doubled until the two integral groups agree to that
    relative tolerance between refinements (``converged`` records whether
    that happened within ``max_refinements`` doublings).  Suprema are taken
    over the final grid.  Steep paths (a decay gap closing like sqrt(r)
    near r = 0 makes the integrand ~ 1/sqrt(r)) may exhaust the refinement
    budget; the result is then quoted on the last grid with
    ``converged=False``.  Raise ``max_refinements`` for a sharper
    estimate, at a cost that doubles per step.
    """
    t0 = model.t0
    horizon = (model.t1 - t0) if total_time is None else float(total_time)
    if horizon <= 0.0:
        raise ValueError("total_time must be positive")
    n = max(int(n_grid), 5)
    prev = None
    converged = refine_tol is None
    times = np.linspace(t0, t0 + horizon, n)
    samples = _bound_samples(model, dfs_path, times)
    n_max = max(0, max_refinements)
    for it in range(n_max + 1):
        w, a_all, b_all, c_all = samples
        m_dim = w.shape[2]
        wmag, dwmag, wb, cum1, cum2, deficit_path = _assemble(
            times, w, a_all, b_all, c_all, m_dim
        )
        totals = (float(cum1[-1].sum()), float(cum2[-1].sum()))
        if refine_tol is None:
            break
        if prev is not None:
            ok = all(
                abs(a - b) <= refine_tol * max(abs(a), 1e-300)
                for a, b in zip(totals, prev)
            )
            if ok:
                converged = True
                break
        if it == n_max:
            break
        prev = totals
        # doubling keeps every old node at an even index, so only the
        # odd-index midpoints need fresh samples
        n = 2 * n - 1
        times = np.linspace(t0, t0 + horizon, n)
        fresh = _bound_samples(model, dfs_path, times[1::2])
        merged = []
        for old, new in zip(samples, fresh):
            out = np.empty((n,) + old.shape[1:], dtype=old.dtype)
            out[::2] = old
            out[1::2] = new
            merged.append(out)
        samples = tuple(merged)

    boundary = 4.0 * m_dim * float(wmag[-1].sum())
    integrals = 4.0 * m_dim * (totals[0] + totals[1])
    span = times[-1] - times[0]
    sup1 = wb.max(axis=0)
    sup2 = dwmag.max(axis=0)
    deficit_sup = 4.0 * m_dim * float(
        wmag[-1].sum() + span * sup1.sum() + span * sup2.sum()
    )
    strong = (
        float(wmag.max()),
        float(cum1[-1].max()),
        float(cum2[-1].max()),
    )
    finite = bool(
        np.isfinite(wmag).all() and np.isfinite(dwmag).all() and np.isfinite(deficit_path).all()
    )
    return PurityBoundTerms(
        a_j=a_all.max(axis=0),
        b_m=b_all.max(axis=0),
        c_term=float(c_all.max()),
        boundary_term=boundary,
        integral_terms=integrals,
        bound=1.0 - (boundary + integrals),
        bound_sup=1.0 - deficit_sup,
        deficit_sup=deficit_sup,
        strong_conditions=strong,
        times=times,
        bound_path=1.0 - deficit_path,
        converged=converged,
        finite=finite,
        n_grid=int(times.size),
    )
