"""Two-level system coupled to a swept squeezed reservoir.

Closed forms for the jump operator, its eigenbasis, the engineered drive
that freezes the effective Hamiltonian, the transport (counterdiabatic)
drive, and the adiabaticity measure.  Also defines the named experiment
scenarios consumed by the CLI.

Conventions: basis {|0>, |1>} with sigma_- |1> = |0>; the jump operator
is L = cosh(r) e^{-i theta/2} sigma_- + sinh(r) e^{+i theta/2} sigma_+,
entering the master equation as F = sqrt(gamma) L.  Drive fields are
quoted as the |0><1| coefficient: H = Omega |0><1| + Omega^* |1><0|.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .operator_model import OperatorSet, SqueezeSchedule, SystemModel

__all__ = [
    "lindblad_L",
    "dissipator_four_term",
    "phi1",
    "phi_perp",
    "dphi1",
    "dphi_perp",
    "control_omega",
    "sta_omega_prime",
    "xi_closed_form",
    "AnalyticQubitPath",
    "build_model",
    "scenario",
    "Scenario",
    "ScenarioVariant",
    "SCENARIO_NAMES",
]

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.conj()


def _sc(r):
    r = np.asarray(r, dtype=float)
    return np.cosh(r), np.sinh(r)


def lindblad_L(r, theta):
    """Jump operator L(r, theta), without the sqrt(gamma) prefactor."""
    c, s = _sc(r)
    em = np.exp(-0.5j * np.asarray(theta))
    out = np.zeros(np.broadcast(r, theta).shape + (2, 2), dtype=complex)
    out[..., 0, 1] = c * em
    out[..., 1, 0] = s / em
    return out


def dissipator_four_term(rho: np.ndarray, r: float, theta: float, gamma: float) -> np.ndarray:
    """Dissipator written out jump-by-jump.

    gamma [ cosh^2 r (s- rho s+ - {s+ s-, rho}/2)
          + sinh^2 r (s+ rho s- - {s- s+, rho}/2)
          + sinh r cosh r (e^{-i theta} s- rho s- + e^{+i theta} s+ rho s+) ]

    Equal to D[sqrt(gamma) L] rho by expansion; the cross terms carry no
    anticommutator because sigma_pm^2 = 0.
    """
    c, s = np.cosh(r), np.sinh(r)
    sm, sp = SIGMA_MINUS, SIGMA_PLUS
    n1 = sp @ sm  # |1><1|
    n0 = sm @ sp  # |0><0|
    out = c * c * (sm @ rho @ sp - 0.5 * (n1 @ rho + rho @ n1))
    out += s * s * (sp @ rho @ sm - 0.5 * (n0 @ rho + rho @ n0))
    out += s * c * (np.exp(-1j * theta) * (sm @ rho @ sm) + np.exp(1j * theta) * (sp @ rho @ sp))
    return gamma * out


def _basis_pair(r, theta):
    # Columns of the decaying-eigenvector pair; r must be positive, the
    # r = 0 basis is rank-deficient (sinh r -> 0).
    c, s = _sc(r)
    if np.any(s <= 0.0):
        raise ValueError("r must be > 0; add a positive offset to the ramp")
    e = np.exp(0.25j * np.asarray(theta))
    w = np.exp(-np.asarray(r, dtype=float) / 2.0)
    v1 = np.stack([w * np.sqrt(c) / e, w * np.sqrt(s) * e], axis=-1)
    vp = np.stack([w * np.sqrt(s) / e, -w * np.sqrt(c) * e], axis=-1)
    return v1, vp


def phi1(r, theta):
    """Decaying eigenvector of L with eigenvalue +sqrt(sinh r cosh r)."""
    return _basis_pair(r, theta)[0]


def phi_perp(r, theta):
    """Unit vector orthogonal to phi1 (not an eigenvector of L)."""
    return _basis_pair(r, theta)[1]


def dphi1(r, theta, mu, nu):
    """d/dt phi1 along r(t) = .. + mu t, theta(t) = .. + nu t."""
    c, s = _sc(r)
    e = np.exp(0.25j * np.asarray(theta))
    w32 = np.exp(-1.5 * np.asarray(r, dtype=float))
    w12 = np.exp(-0.5 * np.asarray(r, dtype=float))
    comp0 = (-0.5 * mu * w32 / np.sqrt(c) - 0.25j * nu * w12 * np.sqrt(c)) / e
    comp1 = (0.5 * mu * w32 / np.sqrt(s) + 0.25j * nu * w12 * np.sqrt(s)) * e
    return np.stack([comp0, comp1], axis=-1)


def dphi_perp(r, theta, mu, nu):
    """d/dt phi_perp along the same schedule."""
    c, s = _sc(r)
    e = np.exp(0.25j * np.asarray(theta))
    w32 = np.exp(-1.5 * np.asarray(r, dtype=float))
    w12 = np.exp(-0.5 * np.asarray(r, dtype=float))
    comp0 = (0.5 * mu * w32 / np.sqrt(s) - 0.25j * nu * w12 * np.sqrt(s)) / e
    comp1 = (0.5 * mu * w32 / np.sqrt(c) - 0.25j * nu * w12 * np.sqrt(c)) * e
    return np.stack([comp0, comp1], axis=-1)


def control_omega(r, theta, gamma):
    """Drive amplitude that makes the effective Hamiltonian vanish.

    H0 = Omega |0><1| + h.c. with
    Omega = -(i gamma / 2) sqrt(sinh r cosh r) e^{-r} e^{-i theta/2}.
    At r = 0 the field is zero and the eigenbasis degenerate.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r == 0.0):
        warnings.warn("control_omega at r = 0: degenerate eigenbasis, field is zero")
    c, s = _sc(r)
    return -0.5j * gamma * np.sqrt(s * c) * np.exp(-r) * np.exp(-0.5j * np.asarray(theta))


def sta_omega_prime(r, theta, mu, nu):
    """Transport drive amplitude, H1 = Omega' |0><1| + h.c.

    Omega' = -(i/2) e^{-i theta/2} (mu e^{-r} - i nu SC e^{+r}) / sqrt(SC)
    with SC = sinh r cosh r.  The theta-sweep part grows like e^{+r}: the
    sigma_+/sigma_- couplings into the orthogonal state nearly cancel at
    large r, so a pure drive must compensate.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("r must be > 0; add a positive offset to the ramp")
    c, s = _sc(r)
    sc = s * c
    return (
        -0.5j
        * np.exp(-0.5j * np.asarray(theta))
        * (mu * np.exp(-r) - 1j * nu * sc * np.exp(r))
        / np.sqrt(sc)
    )


def xi_closed_form(r, mu, nu, gamma):
    """Adiabaticity measure for the driven sweep: 4|mu + i nu SC| / (gamma sqrt(SC) e^{3r}).

    Diverges as r -> 0+ (the eigenbasis reorganizes infinitely fast on
    the dissipative scale); callers should keep r away from zero.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("r must be > 0")
    c, s = _sc(r)
    sc = s * c
    return 4.0 * np.abs(mu + 1j * nu * sc) / (gamma * np.sqrt(sc) * np.exp(3.0 * r))


class AnalyticQubitPath:
    """Closed-form eigenframe along a squeeze schedule.

    Provides the same frame/derivative interface as the numerical
    tracker, with exact derivatives instead of finite differences.
    """

    def __init__(self, schedule: SqueezeSchedule):
        self.schedule = schedule

    def frame(self, t: float):
        from .dfs_analysis import DfsFrame

        sch = self.schedule
        r, th = float(sch.r(t)), float(sch.theta(t))
        v1, vp = _basis_pair(r, th)
        c, s = np.cosh(r), np.sinh(r)
        lam = np.sqrt(s * c) * np.sqrt(sch.gamma)
        return DfsFrame(
            dfs=v1.reshape(2, 1),
            comp=vp.reshape(2, 1),
            eigenvalues=np.array([lam], dtype=complex),
        )

    def basis_derivative(self, t: float):
        sch = self.schedule
        r, th = float(sch.r(t)), float(sch.theta(t))
        d1 = dphi1(r, th, sch.mu, sch.nu).reshape(2, 1)
        dp = dphi_perp(r, th, sch.mu, sch.nu).reshape(2, 1)
        return d1, dp

    def eigenvalues_batch(self, ts) -> np.ndarray:
        sch = self.schedule
        r = np.asarray(sch.r(np.asarray(ts, dtype=float)))
        lam = np.sqrt(np.sinh(r) * np.cosh(r)) * np.sqrt(sch.gamma)
        return lam.astype(complex).reshape(-1, 1)


def _omega_matrix(omega):
    out = np.zeros(np.shape(omega) + (2, 2), dtype=complex)
    out[..., 0, 1] = omega
    out[..., 1, 0] = np.conj(omega)
    return out


def build_model(
    schedule: SqueezeSchedule,
    control: str = "engineered",
    t_final: Optional[float] = None,
) -> SystemModel:
    """Assemble a SystemModel for the squeezed-qubit family.

    control: "none" (bare dissipator), "engineered" (H0 freezes the
    effective Hamiltonian), or "sta" (engineered plus transport drive).
    """
    if control not in ("none", "engineered", "sta"):
        raise ValueError(f"unknown control mode {control!r}")
    sch = schedule
    if t_final is None:
        rate = max(abs(sch.mu), abs(sch.nu))
        t_final = np.pi / rate if rate > 0 else 1.0 / sch.gamma
    # r must stay positive over the horizon for eigenframe-based control
    if control != "none":
        ends = (float(sch.r(0.0)), float(sch.r(t_final)))
        if min(ends) <= 0.0:
            raise ValueError(
                f"r(t) reaches {min(ends)} on [0, {t_final}]; controlled sweeps need r > 0"
            )

    def _ham(ts):
        if control == "none":
            return np.zeros(np.shape(ts) + (2, 2), dtype=complex)
        r, th = sch.r(ts), sch.theta(ts)
        om = control_omega(r, th, sch.gamma)
        if control == "sta":
            om = om + sta_omega_prime(r, th, sch.mu, sch.nu)
        return _omega_matrix(om)

    def _evaluate(t):
        r, th = float(sch.r(t)), float(sch.theta(t))
        f = np.sqrt(sch.gamma) * lindblad_L(r, th)
        return OperatorSet(hamiltonian=_ham(t), lindblads=(f,))

    def _batch(ts):
        ts = np.asarray(ts, dtype=float)
        r, th = sch.r(ts), sch.theta(ts)
        f = np.sqrt(sch.gamma) * lindblad_L(r, th)
        return _ham(ts), [f]

    def _derivative(t):
        r, th = float(sch.r(t)), float(sch.theta(t))
        mu, nu = sch.mu, sch.nu
        c, s = np.cosh(r), np.sinh(r)
        em = np.exp(-0.5j * th)
        df = np.zeros((2, 2), dtype=complex)
        df[0, 1] = (mu * s - 0.5j * nu * c) * em
        df[1, 0] = (mu * c + 0.5j * nu * s) / em
        df *= np.sqrt(sch.gamma)
        if control == "none":
            return np.zeros((2, 2), dtype=complex), (df,)
        sc = s * c
        om = control_omega(r, th, sch.gamma)
        dom = om * (mu * np.cosh(2.0 * r) / (2.0 * sc) - mu - 0.5j * nu)
        if control == "sta":
            omp = sta_omega_prime(r, th, mu, nu)
            rsc = np.sqrt(sc)
            dP = -mu * mu * np.exp(-r) / rsc * (1.0 + np.cosh(2.0 * r) / (2.0 * sc))
            dQ = nu * mu * np.exp(r) * (np.cosh(2.0 * r) / (2.0 * rsc) + rsc)
            dom = dom + (-0.5j * nu) * omp + (-0.5j) * em * (dP - 1j * dQ)
        return _omega_matrix(dom), (df,)

    return SystemModel(
        dim=2,
        evaluator=_evaluate,
        t0=0.0,
        t1=float(t_final),
        derivative_evaluator=_derivative,
        batch_evaluator=_batch,
        fd_step=1e-5 / sch.rate_scale,
        metadata={
            "kind": "squeezed_qubit",
            "control": control,
            "rate_scale": sch.rate_scale,
            "schedule": {
                "r0": sch.r0,
                "theta0": sch.theta0,
                "mu": sch.mu,
                "nu": sch.nu,
                "gamma": sch.gamma,
                "o": sch.offset_o,
            },
        },
    )


@dataclass(frozen=True)
class ScenarioVariant:
    name: str
    schedule: SqueezeSchedule
    control: str
    initial: tuple
    t_final: float
    dt_max: float
    n_record: int = 1001


@dataclass(frozen=True)
class Scenario:
    name: str
    variants: tuple
    kind: str = "trajectory"  # "surface" for initial-state sweeps


SCENARIO_NAMES = ("fig1a", "fig1b", "fig2", "fig3", "fig4", "fig5")

_EPS_OFFSET = 1e-6  # keeps r(0) off the degenerate point for r0 = 0 ramps


def _variant(name, *, r0=0.0, theta0=0.0, mu=0.0, nu=0.0, gamma=1.0, o=_EPS_OFFSET,
             control="engineered", initial=("dfs",), t_final=None, n_record=1001):
    sch = SqueezeSchedule(r0=r0, theta0=theta0, mu=mu, nu=nu, gamma=gamma, offset_o=o)
    if t_final is None:
        rate = max(abs(mu), abs(nu))
        t_final = np.pi / rate
    return ScenarioVariant(
        name=name,
        schedule=sch,
        control=control,
        initial=initial,
        t_final=float(t_final),
        dt_max=1e-3 / gamma,
        n_record=n_record,
    )


def _base_scenario(name: str) -> Scenario:
    g = 1.0
    if name == "fig1a":
        mus = (0.01, 0.1, 1.0)
        variants = [_variant(f"mu_{m:g}", mu=m * g) for m in mus]
        variants.append(_variant("nocontrol", mu=0.1 * g, control="none"))
        return Scenario(name, tuple(variants))
    if name == "fig1b":
        nus = (0.01, 0.1, 1.0)
        variants = [_variant(f"nu_{n:g}", nu=n * g, r0=2.0 * np.pi, o=0.0) for n in nus]
        return Scenario(name, tuple(variants))
    if name == "fig2":
        return Scenario(name, (_variant("main", mu=0.1 * g),))
    if name == "fig3":
        phis = np.linspace(0.0, 2.0 * np.pi, 101)
        variants = tuple(
            _variant(f"phi0_{k:03d}", mu=0.1 * g, nu=0.1 * g,
                     initial=("pure", float(p)), n_record=101)
            for k, p in enumerate(phis)
        )
        return Scenario(name, variants, kind="surface")
    if name == "fig4":
        mus = (0.01, 0.1, 1.0)
        variants = tuple(
            _variant(f"mu_{m:g}", mu=m * g, nu=m * g, initial=("mixed",)) for m in mus
        )
        return Scenario(name, variants)
    if name == "fig5":
        kw = dict(mu=g, nu=g, o=0.01)
        return Scenario(
            name,
            (_variant("h0_only", control="engineered", **kw),
             _variant("h0_h1", control="sta", **kw)),
        )
    raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")


OVERRIDE_KEYS = ("r0", "theta0", "mu", "nu", "gamma", "o", "t_final", "control",
                  "n_record", "phi0", "dt_max")


def scenario(name: str, overrides: Optional[dict] = None) -> Scenario:
    """Named experiment bundle, optionally with parameter overrides.

    Overrides apply to every variant; schedule keys rebuild the schedule
    while keeping the variant's horizon unless t_final is itself given.
    """
    base = _base_scenario(name)
    if not overrides:
        return base
    bad = sorted(set(overrides) - set(OVERRIDE_KEYS))
    if bad:
        raise ValueError(f"unknown override keys {bad}; allowed: {OVERRIDE_KEYS}")
    new_variants = []
    for v in base.variants:
        sch = v.schedule
        sch_kw = {
            "r0": overrides.get("r0", sch.r0),
            "theta0": overrides.get("theta0", sch.theta0),
            "mu": overrides.get("mu", sch.mu),
            "nu": overrides.get("nu", sch.nu),
            "gamma": overrides.get("gamma", sch.gamma),
            "offset_o": overrides.get("o", sch.offset_o),
        }
        initial = v.initial
        if "phi0" in overrides:
            initial = ("pure", float(overrides["phi0"]))
        new_variants.append(
            replace(
                v,
                schedule=SqueezeSchedule(**sch_kw),
                control=str(overrides.get("control", v.control)),
                initial=initial,
                t_final=float(overrides.get("t_final", v.t_final)),
                dt_max=float(overrides.get("dt_max", v.dt_max)),
                n_record=int(overrides.get("n_record", v.n_record)),
            )
        )
    return Scenario(base.name, tuple(new_variants), kind=base.kind)


def initial_state(variant: ScenarioVariant) -> np.ndarray:
    """Density matrix for a variant's initial condition."""
    kind = variant.initial[0]
    if kind == "dfs":
        v = phi1(float(variant.schedule.r(0.0)), float(variant.schedule.theta(0.0)))
        return np.outer(v, v.conj())
    if kind == "pure":
        p = float(variant.initial[1])
        v = np.array([np.sin(p), np.cos(p)], dtype=complex)
        return np.outer(v, v.conj())
    if kind == "mixed":
        return 0.5 * np.eye(2, dtype=complex)
    raise ValueError(f"unknown initial state {variant.initial!r}")
