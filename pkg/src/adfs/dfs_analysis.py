"""Detection and tracking of common degenerate eigenspaces of jump operators.

A subspace spanned by states that every jump operator maps to the same
multiple of themselves, and that the effective Hamiltonian keeps
invariant, evolves without decoherence.  This module finds candidate
subspaces at a time slice, verifies the invariance conditions, and
tracks a smooth, gauge-fixed basis along a time-dependent model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .operator_model import OperatorSet, SystemModel, evaluate

__all__ = [
    "DfsFrame",
    "DfsDecomposition",
    "DfsConditionReport",
    "common_degenerate_eigenspace",
    "effective_hamiltonian",
    "check_conditions",
    "block_decompose",
    "required_control_offdiag",
    "NumericDfsPath",
]

ORTHO_TOL = 1e-10
COMPLETENESS_TOL = 1e-12


class DfsFrame(NamedTuple):
    """Instantaneous orthonormal frame: protected columns, complement, eigenvalues."""

    dfs: np.ndarray
    comp: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class DfsDecomposition:
    """One candidate subspace with its orthonormal complement.

    Attributes
    ----------
    dfs_basis : ndarray
        ``(N, M)`` orthonormal columns spanning the candidate.
    comp_basis : ndarray
        ``(N, N-M)`` orthonormal columns spanning the complement.
    eigenvalues : ndarray
        One common eigenvalue per jump operator, shape ``(n_ops,)``.
    proj_dfs, proj_comp : ndarray
        The two orthogonal projectors; they sum to the identity.
    defective : bool
        True when some jump operator had fewer independent eigenvectors
        than its algebraic multiplicity suggested; the candidate is then
        restricted to the genuine eigenvectors found.
    """

    dfs_basis: np.ndarray
    comp_basis: np.ndarray
    eigenvalues: np.ndarray
    proj_dfs: np.ndarray
    proj_comp: np.ndarray
    defective: bool = False

    @property
    def m(self) -> int:
        return self.dfs_basis.shape[1]

    def frame(self) -> DfsFrame:
        return DfsFrame(self.dfs_basis, self.comp_basis, self.eigenvalues)


@dataclass(frozen=True)
class DfsConditionReport:
    """Residuals of the subspace conditions at one time slice.

    ``eigen_residual`` is the largest ``|(F_a - c_a) phi|`` over basis
    columns and operators; ``invariance_residual`` the largest coupling
    matrix element of the effective Hamiltonian between complement and
    subspace; ``coupling_residuals`` the entrywise defect of the static
    Hamiltonian condition, shape ``(M, N-M)``.
    """

    invariance_residual: float
    eigen_residual: float
    coupling_residuals: np.ndarray

    def max_residual(self) -> float:
        worst = max(self.invariance_residual, self.eigen_residual)
        if self.coupling_residuals.size:
            worst = max(worst, float(np.max(self.coupling_residuals)))
        return worst


def _op_scale(f: np.ndarray) -> float:
    return max(float(np.linalg.norm(f, 2)), 1e-300)


def _cluster_indices(values: np.ndarray, tol: float) -> List[np.ndarray]:
    """Group indices of complex values into chains closer than tol."""
    n = values.size
    order = np.lexsort((values.imag, values.real))
    groups: List[list] = []
    for idx in order:
        placed = False
        for g in groups:
            if any(abs(values[idx] - values[j]) <= tol for j in g):
                g.append(idx)
                placed = True
                break
        if not placed:
            groups.append([idx])
    # merge transitively overlapping groups
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if any(
                    abs(values[a] - values[b]) <= tol
                    for a in groups[i]
                    for b in groups[j]
                ):
                    groups[i].extend(groups[j])
                    del groups[j]
                    merged = True
                    break
            if merged:
                break
    return [np.array(sorted(g), dtype=int) for g in groups]


def _orth(columns: np.ndarray, rank_tol: float = 1e-7):
    """Orthonormal basis of the column span; returns (basis, rank_deficient)."""
    if columns.size == 0:
        return columns.reshape(columns.shape[0], 0), False
    u, s, _ = np.linalg.svd(columns, full_matrices=False)
    keep = s > rank_tol * max(s[0], 1e-300)
    return np.ascontiguousarray(u[:, keep]), bool(np.count_nonzero(keep) < columns.shape[1])


def _fix_column_phases(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real positive."""
    out = v.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))
        piv = col[k]
        if abs(piv) > 0:
            out[:, j] = col * (abs(piv) / piv)
    return out


def _complement_basis(dfs: np.ndarray, spare_vectors: Optional[np.ndarray] = None) -> np.ndarray:
    """Orthonormal complement, preferring directions of the spare vectors."""
    n, m = dfs.shape
    want = n - m
    if want == 0:
        return np.zeros((n, 0), dtype=complex)
    proj_out = np.eye(n, dtype=complex) - dfs @ dfs.conj().T
    cols: List[np.ndarray] = []

    def _push(vec):
        v = proj_out @ vec
        for c in cols:
            v = v - c * (c.conj() @ v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-7:
            cols.append(v / nrm)

    if spare_vectors is not None:
        for j in range(spare_vectors.shape[1]):
            if len(cols) == want:
                break
            _push(spare_vectors[:, j])
    if len(cols) < want:
        # complete from the projector's range
        u, s, _ = np.linalg.svd(proj_out)
        for j in range(n):
            if len(cols) == want:
                break
            if s[j] > 0.5:
                _push(u[:, j])
    comp = np.stack(cols, axis=1)
    return _fix_column_phases(comp)


def _verify_frame(dfs: np.ndarray, comp: np.ndarray):
    n = dfs.shape[0]
    basis = np.concatenate([dfs, comp], axis=1)
    gram = basis.conj().T @ basis
    if float(np.max(np.abs(gram - np.eye(basis.shape[1])))) > ORTHO_TOL:
        raise ValueError("subspace basis failed orthonormality tolerance")
    psum = dfs @ dfs.conj().T + comp @ comp.conj().T
    if float(np.max(np.abs(psum - np.eye(n)))) > COMPLETENESS_TOL:
        raise ValueError("projectors do not resolve the identity")


def common_degenerate_eigenspace(
    ops: OperatorSet, cluster_tol: float = 1e-8
) -> List[DfsDecomposition]:
    """Find all maximal common degenerate right-eigenspaces of the jump set.

    Eigenvalues of the first operator are clustered with a relative
    tolerance, each cluster's eigenvector span is intersected with the
    eigenspaces of the remaining operators, and every surviving subspace
    is returned with its complement.  Candidates are sorted by their
    eigenvalue tuple (descending real part, then imaginary).  An empty
    list means no common eigenspace exists.  Operators with fewer
    independent eigenvectors than repeated eigenvalues are flagged
    ``defective`` and contribute only their genuine eigenvectors.
    """
    n = ops.dim
    fs = ops.lindblads
    if not fs:
        eye = np.eye(n, dtype=complex)
        return [
            DfsDecomposition(
                dfs_basis=eye,
                comp_basis=np.zeros((n, 0), dtype=complex),
                eigenvalues=np.zeros((0,), dtype=complex),
                proj_dfs=eye.copy(),
                proj_comp=np.zeros((n, n), dtype=complex),
            )
        ]

    f0 = np.asarray(fs[0], dtype=complex)
    scale0 = _op_scale(f0)
    w, vecs = np.linalg.eig(f0)
    candidates: List[tuple] = []  # (basis, eigenvalue tuple, defective, spare)
    for idx in _cluster_indices(w, cluster_tol * scale0):
        span, deficient = _orth(vecs[:, idx])
        if span.shape[1] == 0:
            continue
        c0 = complex(np.mean(w[idx]))
        resid = np.linalg.norm(f0 @ span - c0 * span, axis=0)
        keep = resid <= 10.0 * cluster_tol * scale0 + 1e-12
        if not np.all(keep):
            span = span[:, keep]
            deficient = True
        if span.shape[1] == 0:
            continue
        spare = vecs[:, [j for j in range(n) if j not in set(idx.tolist())]]
        candidates.append((span, (c0,), deficient, spare))

    for f in fs[1:]:
        f = np.asarray(f, dtype=complex)
        scale = _op_scale(f)
        refined: List[tuple] = []
        for span, cs, defect, spare in candidates:
            compressed = span.conj().T @ f @ span
            wk, uk = np.linalg.eig(compressed)
            for idx in _cluster_indices(wk, cluster_tol * scale):
                sub, deficient = _orth(span @ uk[:, idx])
                if sub.shape[1] == 0:
                    continue
                ck = complex(np.mean(wk[idx]))
                resid = np.linalg.norm(f @ sub - ck * sub, axis=0)
                keep = resid <= 10.0 * cluster_tol * scale + 1e-12
                deficient = deficient or not np.all(keep)
                sub = sub[:, keep]
                if sub.shape[1] == 0:
                    continue
                refined.append((sub, cs + (ck,), defect or deficient, spare))
        candidates = refined

    results = []
    for span, cs, defect, spare in candidates:
        dfs = _fix_column_phases(span)
        comp = _complement_basis(dfs, spare)
        _verify_frame(dfs, comp)
        results.append(
            DfsDecomposition(
                dfs_basis=dfs,
                comp_basis=comp,
                eigenvalues=np.array(cs, dtype=complex),
                proj_dfs=dfs @ dfs.conj().T,
                proj_comp=comp @ comp.conj().T,
                defective=defect,
            )
        )
    results.sort(
        key=lambda d: tuple(
            (-round(float(c.real), 10), -round(float(c.imag), 10)) for c in d.eigenvalues
        )
    )
    return results


def effective_hamiltonian(ops: OperatorSet, eigenvalues: Sequence[complex]) -> np.ndarray:
    """H + (i/2) sum_a (c_a^* F_a - c_a F_a^dag); Hermitian by construction."""
    cs = np.asarray(eigenvalues, dtype=complex)
    if cs.shape[0] != len(ops.lindblads):
        raise ValueError(
            f"{cs.shape[0]} eigenvalues for {len(ops.lindblads)} jump operators"
        )
    h = np.array(ops.hamiltonian, dtype=complex)
    for c, f in zip(cs, ops.lindblads):
        h = h + 0.5j * (np.conj(c) * f - c * f.conj().T)
    asym = float(np.max(np.abs(h - h.conj().T)))
    scale = max(float(np.max(np.abs(h))), 1.0)
    if asym > 1e-12 * scale:
        raise ValueError(f"effective Hamiltonian asymmetry {asym:.3e} beyond tolerance")
    return 0.5 * (h + h.conj().T)


def check_conditions(ops: OperatorSet, dfs: DfsDecomposition) -> DfsConditionReport:
    """Residuals of the protection conditions for a candidate subspace.

    Checks that every jump operator acts as its scalar on the subspace,
    that the effective Hamiltonian does not couple subspace to
    complement, and that the bare Hamiltonian satisfies the equivalent
    static coupling condition entrywise.
    """
    v, q = dfs.dfs_basis, dfs.comp_basis
    eigen_res = 0.0
    for c, f in zip(dfs.eigenvalues, ops.lindblads):
        eigen_res = max(eigen_res, float(np.max(np.linalg.norm(f @ v - c * v, axis=0))))
    heff = effective_hamiltonian(ops, dfs.eigenvalues)
    cross = q.conj().T @ heff @ v
    inv_res = float(np.max(np.abs(cross))) if cross.size else 0.0
    lhs = v.conj().T @ ops.hamiltonian @ q
    rhs = np.zeros_like(lhs)
    for c, f in zip(dfs.eigenvalues, ops.lindblads):
        rhs = rhs - 0.5j * np.conj(c) * (v.conj().T @ f @ q)
    return DfsConditionReport(
        invariance_residual=inv_res,
        eigen_residual=eigen_res,
        coupling_residuals=np.abs(lhs - rhs),
    )


def block_decompose(k: np.ndarray, dfs: DfsDecomposition):
    """Split an operator into subspace, complement, and cross blocks.

    Returns ``(K_D, K_C, K_N)`` with ``K_D = P K P``, ``K_C = Q K Q``,
    ``K_N = P K Q + Q K P``; the three sum to ``K``.
    """
    p, q = dfs.proj_dfs, dfs.proj_comp
    k = np.asarray(k, dtype=complex)
    kd = p @ k @ p
    kc = q @ k @ q
    kn = p @ k @ q + q @ k @ p
    return kd, kc, kn


def required_control_offdiag(
    ops: OperatorSet, dfs: DfsDecomposition, d_dfs: Optional[np.ndarray] = None
) -> np.ndarray:
    """Cross matrix elements a Hamiltonian must supply for transport.

    Returns the ``(M, N-M)`` array of ``<phi_j|H|phi_n_perp>`` values
    required so that the subspace follows its moving frame.  With
    ``d_dfs`` absent the subspace is treated as static and only the
    dissipative compensation term remains.  ``dfs`` may be a full
    decomposition or a bare frame.
    """
    frame = dfs if isinstance(dfs, DfsFrame) else dfs.frame()
    v, q = frame.dfs, frame.comp
    out = np.zeros((v.shape[1], q.shape[1]), dtype=complex)
    for c, f in zip(frame.eigenvalues, ops.lindblads):
        out = out - 0.5j * np.conj(c) * (v.conj().T @ f @ q)
    if d_dfs is not None:
        t = q.conj().T @ np.asarray(d_dfs, dtype=complex)  # <phi_n_perp | d/dt phi_j>
        out = out - 1j * t.conj().T
    return out


def _procrustes_align(basis: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rotate basis columns by the unitary best aligning them to reference."""
    if basis.shape[1] == 0:
        return basis
    overlap = basis.conj().T @ reference
    u, _, vh = np.linalg.svd(overlap)
    return basis @ (u @ vh)


class NumericDfsPath:
    """Gauge-continuous subspace frame along a time-dependent model.

    A dense reference grid is decomposed once, sequentially, with each
    frame gauge-aligned to its predecessor; off-grid queries decompose
    locally and align to the nearest reference frame.  Derivatives are
    central finite differences of gauge-aligned frames.

    Parameters
    ----------
    model : SystemModel
    n_grid : int
        Reference grid resolution over ``[t0, t1]``.
    candidate_index : int
        Which candidate (in deterministic sort order at ``t0``) to track.
    cluster_tol : float
        Eigenvalue clustering tolerance passed through to detection.
    """

    def __init__(
        self,
        model: SystemModel,
        n_grid: int = 257,
        candidate_index: int = 0,
        cluster_tol: float = 1e-8,
    ):
        self.model = model
        self.cluster_tol = cluster_tol
        self.times = np.linspace(model.t0, model.t1, n_grid)
        self._frames: List[DfsFrame] = []
        prev: Optional[DfsFrame] = None
        for t in self.times:
            cands = common_degenerate_eigenspace(evaluate(model, float(t)), cluster_tol)
            if not cands:
                raise ValueError(f"no common eigenspace at t={t}")
            if prev is None:
                d = cands[min(candidate_index, len(cands) - 1)]
                frame = d.frame()
            else:
                frame = self._align(cands, prev)
            self._frames.append(frame)
            prev = frame
        self.m = self._frames[0].dfs.shape[1]

    @staticmethod
    def _overlap_score(cand: DfsDecomposition, ref: DfsFrame) -> float:
        if cand.m != ref.dfs.shape[1]:
            return -1.0
        return float(np.linalg.norm(cand.dfs_basis.conj().T @ ref.dfs) ** 2)

    def _align(self, cands: List[DfsDecomposition], ref: DfsFrame) -> DfsFrame:
        best = max(cands, key=lambda c: self._overlap_score(c, ref))
        if self._overlap_score(best, ref) < 0.0:
            raise ValueError("candidate subspace dimension changed along the path")
        dfs = _procrustes_align(best.dfs_basis, ref.dfs)
        comp = _procrustes_align(best.comp_basis, ref.comp)
        return DfsFrame(dfs, comp, best.eigenvalues)

    def _nearest_ref(self, t: float) -> DfsFrame:
        j = int(np.argmin(np.abs(self.times - t)))
        return self._frames[j]

    def frame(self, t: float) -> DfsFrame:
        return self.frame_relative(t, self._nearest_ref(t))

    def frame_relative(self, t: float, ref: DfsFrame) -> DfsFrame:
        cands = common_degenerate_eigenspace(
            evaluate(self.model, float(t)), self.cluster_tol
        )
        if not cands:
            raise ValueError(f"no common eigenspace at t={t}")
        return self._align(cands, ref)

    def basis_derivative(self, t: float, h: Optional[float] = None):
        if h is None:
            h = self.model.fd_h()
        ref = self.frame(t)
        plus = self.frame_relative(t + h, ref)
        minus = self.frame_relative(t - h, ref)
        d_dfs = (plus.dfs - minus.dfs) / (2.0 * h)
        d_comp = (plus.comp - minus.comp) / (2.0 * h)
        return d_dfs, d_comp

    def decomposition(self, t: float) -> DfsDecomposition:
        f = self.frame(t)
        return DfsDecomposition(
            dfs_basis=f.dfs,
            comp_basis=f.comp,
            eigenvalues=f.eigenvalues,
            proj_dfs=f.dfs @ f.dfs.conj().T,
            proj_comp=f.comp @ f.comp.conj().T,
        )
