"""Time-dependent open-system models: operator containers and evaluation.

A model couples a Hamiltonian ``H(t)`` with a set of jump operators
``F_alpha(t)`` on a fixed-dimension Hilbert space.  Everything downstream
(integration, subspace tracking, adiabaticity monitors) consumes models
through :func:`evaluate` / :func:`evaluate_derivative`, so analytic and
grid-interpolated models are interchangeable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "OperatorSet",
    "SqueezeSchedule",
    "SystemModel",
    "SchemaError",
    "evaluate",
    "evaluate_batch",
    "evaluate_derivative",
    "model_from_grid",
    "model_from_json",
]

# Relative Hermiticity drift above which evaluate() refuses to symmetrize.
HERM_FAIL_TOL = 1e-6


class SchemaError(ValueError):
    """Raised when a JSON model document violates the schema.

    Attributes
    ----------
    path : str
        Dotted location of the offending entry, e.g. ``"schedule.gamma"``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class OperatorSet:
    """Instantaneous operator content of a model.

    Parameters
    ----------
    hamiltonian : ndarray
        Hermitian ``(dim, dim)`` complex matrix.
    lindblads : tuple of ndarray
        Jump operators, each ``(dim, dim)`` complex.  May be empty.
    herm_drift : float
        Largest entrywise asymmetry ``|H - H^dag|`` found before
        symmetrization.  Zero for exactly Hermitian input.
    """

    hamiltonian: np.ndarray
    lindblads: tuple
    herm_drift: float = 0.0

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


@dataclass(frozen=True)
class SqueezeSchedule:
    """Linear ramp of squeezing magnitude and angle.

    ``r(t) = r0 + mu*t + offset_o`` and ``theta(t) = theta0 + nu*t``.
    The offset keeps ``r`` strictly positive when a ramp starts at zero;
    the degenerate point ``r = 0`` has a rank-deficient eigenbasis.
    """

    r0: float
    theta0: float
    mu: float
    nu: float
    gamma: float
    offset_o: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def r(self, t):
        return self.r0 + self.offset_o + self.mu * np.asarray(t, dtype=float)

    def theta(self, t):
        return self.theta0 + self.nu * np.asarray(t, dtype=float)

    @property
    def rate_scale(self) -> float:
        """Fastest schedule rate, used to size finite-difference steps."""
        return max(self.gamma, abs(self.mu), abs(self.nu))


@dataclass(frozen=True)
class SystemModel:
    """A time-dependent model over a finite interval.

    Parameters
    ----------
    dim : int
        Hilbert-space dimension.
    evaluator : callable
        ``t -> OperatorSet``.  Must be defined on ``[t0, t1]`` plus a
        few finite-difference steps of slack on either side.
    t0, t1 : float
        Evaluation interval.
    derivative_evaluator : callable, optional
        ``t -> (dH, (dF_1, ...))``.  When absent, derivatives fall back
        to a central finite difference of ``evaluator``.
    batch_evaluator : callable, optional
        Vectorized ``ts -> (H_stack, F_stacks)`` with shapes
        ``(n, dim, dim)`` and ``(n_ops, n, dim, dim)``.  Used by the
        integrator's hot path; the default loops over ``evaluator``.
    fd_step : float, optional
        Central-difference step.  Defaults to ``1e-5 / rate`` where the
        rate is taken from ``metadata['rate_scale']`` if present, else 1.
    metadata : dict
        Free-form extras (schedule parameters, control mode, ...).
    """

    dim: int
    evaluator: Callable[[float], OperatorSet]
    t0: float = 0.0
    t1: float = 1.0
    derivative_evaluator: Optional[Callable] = None
    batch_evaluator: Optional[Callable] = None
    fd_step: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def fd_h(self) -> float:
        if self.fd_step is not None:
            return self.fd_step
        rate = float(self.metadata.get("rate_scale", 1.0))
        return 1e-5 / max(rate, 1e-300)

    def _check_t(self, t: float):
        slack = 4.0 * self.fd_h() + 1e-9 * (self.t1 - self.t0)
        if t < self.t0 - slack or t > self.t1 + slack:
            raise ValueError(
                f"t={t} outside model interval [{self.t0}, {self.t1}]"
            )


def _conform(ops: OperatorSet, dim: int) -> OperatorSet:
    h = np.asarray(ops.hamiltonian, dtype=complex)
    if h.shape != (dim, dim):
        raise ValueError(f"hamiltonian shape {h.shape}, expected ({dim}, {dim})")
    drift = float(np.max(np.abs(h - h.conj().T))) if dim else 0.0
    scale = max(float(np.max(np.abs(h))), 1.0)
    if drift > HERM_FAIL_TOL * scale:
        raise ValueError(
            f"hamiltonian asymmetry {drift:.3e} exceeds {HERM_FAIL_TOL:.0e} of scale"
        )
    if drift != 0.0:
        h = 0.5 * (h + h.conj().T)
    fs = []
    for k, f in enumerate(ops.lindblads):
        f = np.asarray(f, dtype=complex)
        if f.shape != (dim, dim):
            raise ValueError(f"lindblads[{k}] shape {f.shape}, expected ({dim}, {dim})")
        fs.append(f)
    return OperatorSet(hamiltonian=h, lindblads=tuple(fs), herm_drift=drift)


def evaluate(model: SystemModel, t: float) -> OperatorSet:
    """Evaluate the model at time ``t``.

    The Hamiltonian is symmetrized to ``(H + H^dag)/2``; the asymmetry
    found is recorded in ``OperatorSet.herm_drift``.  Raises
    ``ValueError`` for shape mismatches, asymmetry beyond tolerance, or
    ``t`` outside the model interval.
    """
    model._check_t(t)
    return _conform(model.evaluator(t), model.dim)


def evaluate_batch(model: SystemModel, ts: np.ndarray):
    """Evaluate at many times; returns ``(H_stack, F_stacks)``.

    Shapes are ``(n, dim, dim)`` and ``(n_ops, n, dim, dim)``.  Uses the
    model's vectorized path when available.
    """
    ts = np.asarray(ts, dtype=float)
    if ts.size:
        model._check_t(float(ts.min()))
        model._check_t(float(ts.max()))
    if model.batch_evaluator is not None:
        h, fs = model.batch_evaluator(ts)
        return np.asarray(h, dtype=complex), [np.asarray(f, dtype=complex) for f in fs]
    sets = [_conform(model.evaluator(float(t)), model.dim) for t in ts]
    n_ops = len(sets[0].lindblads) if sets else 0
    h = np.stack([s.hamiltonian for s in sets]) if sets else np.zeros((0, model.dim, model.dim), complex)
    fs = [np.stack([s.lindblads[a] for s in sets]) for a in range(n_ops)]
    return h, fs


def evaluate_derivative(model: SystemModel, t: float, h: Optional[float] = None):
    """Time derivatives ``(dH/dt, (dF_alpha/dt, ...))`` at ``t``.

    Uses the model's analytic derivative when present, otherwise a
    central difference of step ``h`` (default :meth:`SystemModel.fd_h`).
    """
    model._check_t(t)
    if model.derivative_evaluator is not None:
        dh, dfs = model.derivative_evaluator(t)
        return np.asarray(dh, dtype=complex), tuple(np.asarray(f, dtype=complex) for f in dfs)
    if h is None:
        h = model.fd_h()
    plus = _conform(model.evaluator(t + h), model.dim)
    minus = _conform(model.evaluator(t - h), model.dim)
    dh = (plus.hamiltonian - minus.hamiltonian) / (2.0 * h)
    dfs = tuple(
        (fp - fm) / (2.0 * h) for fp, fm in zip(plus.lindblads, minus.lindblads)
    )
    return dh, dfs


def model_from_grid(times: Sequence[float], op_sets: Sequence[OperatorSet]) -> SystemModel:
    """Build a model by linear interpolation over a sample grid.

    ``times`` must be strictly increasing and match ``op_sets`` in
    length; all sets must share dimension and operator count.
    """
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size < 2:
        raise ValueError("need at least two grid times")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("grid times must be strictly increasing")
    if len(op_sets) != ts.size:
        raise ValueError("times and op_sets length mismatch")
    dim = np.asarray(op_sets[0].hamiltonian).shape[0]
    sets = [_conform(s, dim) for s in op_sets]
    n_ops = len(sets[0].lindblads)
    if any(len(s.lindblads) != n_ops for s in sets):
        raise ValueError("inconsistent jump-operator count across grid")
    h_grid = np.stack([s.hamiltonian for s in sets])
    f_grids = [np.stack([s.lindblads[a] for s in sets]) for a in range(n_ops)]

    def _interp(t: float) -> OperatorSet:
        x = np.clip(t, ts[0], ts[-1])
        j = int(np.searchsorted(ts, x, side="right") - 1)
        j = min(max(j, 0), ts.size - 2)
        w = (x - ts[j]) / (ts[j + 1] - ts[j])
        ham = (1.0 - w) * h_grid[j] + w * h_grid[j + 1]
        fs = tuple((1.0 - w) * g[j] + w * g[j + 1] for g in f_grids)
        return OperatorSet(hamiltonian=ham, lindblads=fs)

    span = float(ts[-1] - ts[0])
    return SystemModel(
        dim=dim,
        evaluator=_interp,
        t0=float(ts[0]),
        t1=float(ts[-1]),
        fd_step=min(1e-5 * span, float(np.min(np.diff(ts))) / 4.0),
        metadata={"kind": "grid", "n_samples": int(ts.size)},
    )


_CONTROL_MODES = ("none", "engineered", "sta")


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise SchemaError(f"{path}.{key}" if path else key, "missing required entry")
    return doc[key]


def _number(doc: dict, key: str, path: str) -> float:
    v = _require(doc, key, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{path}.{key}" if path else key, f"expected a number, got {v!r}")
    return float(v)


def model_from_json(source) -> SystemModel:
    """Build a model from a JSON document, path, or parsed dict.

    Schema::

        {"dim": 2,
         "schedule": {"r0": .., "theta0": .., "mu": .., "nu": ..,
                      "gamma": .., "o": ..},
         "control": "none" | "engineered" | "sta"}

    Only ``dim == 2`` (the squeezed two-level family) is registered.
    Violations raise :class:`SchemaError` with the offending path.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = None
        s = str(source)
        if s.lstrip()[:1] in ("{", "["):
            text = s
        else:
            with open(s, "r", encoding="utf-8") as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError("<document>", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("<document>", "top level must be an object")
    dim = _require(doc, "dim", "")
    if dim != 2:
        raise SchemaError("dim", f"only dim=2 models are registered, got {dim!r}")
    control = _require(doc, "control", "")
    if control not in _CONTROL_MODES:
        raise SchemaError("control", f"expected one of {_CONTROL_MODES}, got {control!r}")
    sched_doc = _require(doc, "schedule", "")
    if not isinstance(sched_doc, dict):
        raise SchemaError("schedule", "must be an object")
    kwargs = {
        "r0": _number(sched_doc, "r0", "schedule"),
        "theta0": _number(sched_doc, "theta0", "schedule"),
        "mu": _number(sched_doc, "mu", "schedule"),
        "nu": _number(sched_doc, "nu", "schedule"),
        "gamma": _number(sched_doc, "gamma", "schedule"),
        "offset_o": _number(sched_doc, "o", "schedule") if "o" in sched_doc else 0.0,
    }
    if kwargs["gamma"] <= 0.0:
        raise SchemaError("schedule.gamma", f"must be > 0, got {kwargs['gamma']}")
    schedule = SqueezeSchedule(**kwargs)
    t_final = doc.get("t_final")
    if t_final is not None and (isinstance(t_final, bool) or not isinstance(t_final, (int, float))):
        raise SchemaError("t_final", f"expected a number, got {t_final!r}")

    from . import squeezed_qubit_example as sq

    return sq.build_model(schedule, control=control, t_final=t_final)
