"""Pure-numpy twin of the compiled propagation kernel.

Same half-grid contract as adfs._core.rk4_advance, implemented with
matmuls.  Kept importable on its own so the two paths can be compared
directly in tests and benchmarks.
"""

import numpy as np


def _rhs(a, fs, x):
    out = a @ x + x @ a.conj().T
    for f in fs:
        out += f @ x @ f.conj().T
    return out


def rk4_advance(a_half, f_half, rho, dt):
    """Return rho advanced by (len(a_half)-1)//2 RK4 steps of size dt."""
    n_steps = (a_half.shape[0] - 1) // 2
    if a_half.shape[0] != 2 * n_steps + 1:
        raise ValueError("a_half must hold an odd number of half-grid samples")
    half, sixth = 0.5 * dt, dt / 6.0
    rho = np.array(rho, dtype=complex)
    for s in range(n_steps):
        i0 = 2 * s
        i1, i2 = i0 + 1, i0 + 2
        k1 = _rhs(a_half[i0], f_half[:, i0], rho)
        k2 = _rhs(a_half[i1], f_half[:, i1], rho + half * k1)
        k3 = _rhs(a_half[i1], f_half[:, i1], rho + half * k2)
        k4 = _rhs(a_half[i2], f_half[:, i2], rho + dt * k3)
        rho += sixth * (k1 + 2.0 * (k2 + k3) + k4)
    return rho
