"""Model containers: schema validation, grids, symmetrization, derivatives."""

import json

import numpy as np
import pytest

from adfs.operator_model import (
    OperatorSet,
    SchemaError,
    SqueezeSchedule,
    SystemModel,
    evaluate,
    evaluate_batch,
    evaluate_derivative,
    model_from_grid,
    model_from_json,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SM = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)


def _smooth_model(t1=3.0):
    def ev(t):
        return OperatorSet(
            hamiltonian=np.sin(t) * SX + np.cos(2.0 * t) * SZ,
            lindblads=(np.exp(0.3 * t) * SM,),
        )

    return SystemModel(dim=2, evaluator=ev, t0=0.0, t1=t1)


def _doc(**over):
    doc = {
        "dim": 2,
        "schedule": {"r0": 0.5, "theta0": 0.1, "mu": 0.2, "nu": 0.0, "gamma": 1.0},
        "control": "none",
    }
    doc.update(over)
    return doc


class TestSchema:
    def test_missing_dim(self):
        doc = _doc()
        del doc["dim"]
        with pytest.raises(SchemaError) as exc:
            model_from_json(doc)
        assert exc.value.path == "dim"

    def test_unsupported_dim(self):
        with pytest.raises(SchemaError) as exc:
            model_from_json(_doc(dim=3))
        assert exc.value.path == "dim"

    def test_bad_control(self):
        with pytest.raises(SchemaError) as exc:
            model_from_json(_doc(control="open-loop"))
        assert exc.value.path == "control"

    def test_missing_schedule_entry(self):
        doc = _doc()
        del doc["schedule"]["gamma"]
        with pytest.raises(SchemaError) as exc:
            model_from_json(doc)
        assert exc.value.path == "schedule.gamma"

    def test_nonnumeric_schedule_entry(self):
        doc = _doc()
        doc["schedule"]["mu"] = "fast"
        with pytest.raises(SchemaError) as exc:
            model_from_json(doc)
        assert exc.value.path == "schedule.mu"

    def test_boolean_is_not_a_number(self):
        doc = _doc()
        doc["schedule"]["nu"] = True
        with pytest.raises(SchemaError) as exc:
            model_from_json(doc)
        assert exc.value.path == "schedule.nu"

    def test_nonpositive_gamma(self):
        doc = _doc()
        doc["schedule"]["gamma"] = 0.0
        with pytest.raises(SchemaError) as exc:
            model_from_json(doc)
        assert exc.value.path == "schedule.gamma"

    def test_schedule_must_be_object(self):
        with pytest.raises(SchemaError) as exc:
            model_from_json(_doc(schedule=[1, 2, 3]))
        assert exc.value.path == "schedule"

    def test_invalid_json_text(self):
        with pytest.raises(SchemaError):
            model_from_json("{not json")

    def test_top_level_must_be_object(self):
        with pytest.raises(SchemaError):
            model_from_json("[1, 2]")

    def test_bad_t_final(self):
        with pytest.raises(SchemaError) as exc:
            model_from_json(_doc(t_final="long"))
        assert exc.value.path == "t_final"

    @pytest.mark.parametrize("control", ["none", "engineered", "sta"])
    def test_round_trip_all_control_modes(self, control, tmp_path):
        doc = _doc(control=control, t_final=2.5)
        p = tmp_path / "model.json"
        p.write_text(json.dumps(doc))
        for source in (doc, json.dumps(doc), str(p)):
            model = model_from_json(source)
            assert model.dim == 2
            assert model.t1 == pytest.approx(2.5)
            ops = evaluate(model, 1.0)
            assert ops.dim == 2 and len(ops.lindblads) == 1

    def test_optional_offset_entry(self):
        doc = _doc()
        doc["schedule"]["r0"] = 0.0
        doc["schedule"]["o"] = 1e-3
        model = model_from_json(doc)
        assert model.metadata["schedule"]["o"] == pytest.approx(1e-3)


class TestEvaluate:
    def test_exact_hermitian_passes_through(self):
        model = _smooth_model()
        ops = evaluate(model, 0.8)
        assert ops.herm_drift == 0.0
        assert np.allclose(ops.hamiltonian, ops.hamiltonian.conj().T)

    def test_small_asymmetry_is_symmetrized_and_recorded(self):
        eps = 1e-8

        def ev(t):
            h = 0.5 * SX + eps * np.array([[0, 1j], [0, 0]])
            return OperatorSet(hamiltonian=h, lindblads=())

        model = SystemModel(dim=2, evaluator=ev)
        ops = evaluate(model, 0.5)
        assert ops.herm_drift == pytest.approx(eps, rel=1e-6)
        assert np.max(np.abs(ops.hamiltonian - ops.hamiltonian.conj().T)) == 0.0

    def test_large_asymmetry_rejected(self):
        def ev(t):
            return OperatorSet(hamiltonian=np.array([[0, 1], [0, 0]], complex), lindblads=())

        with pytest.raises(ValueError):
            evaluate(SystemModel(dim=2, evaluator=ev), 0.5)

    def test_shape_mismatch_rejected(self):
        def ev(t):
            return OperatorSet(hamiltonian=np.zeros((3, 3)), lindblads=())

        with pytest.raises(ValueError):
            evaluate(SystemModel(dim=2, evaluator=ev), 0.5)

    def test_time_outside_interval_rejected(self):
        model = _smooth_model(t1=1.0)
        with pytest.raises(ValueError):
            evaluate(model, 5.0)
        with pytest.raises(ValueError):
            evaluate(model, -5.0)

    def test_batch_matches_scalar_loop(self):
        model = _smooth_model()
        ts = np.linspace(0.0, 3.0, 17)
        h, fs = evaluate_batch(model, ts)
        assert h.shape == (17, 2, 2) and len(fs) == 1
        for k, t in enumerate(ts):
            ops = evaluate(model, float(t))
            assert np.allclose(h[k], ops.hamiltonian, atol=1e-15)
            assert np.allclose(fs[0][k], ops.lindblads[0], atol=1e-15)


class TestDerivative:
    def test_analytic_derivative_preferred(self):
        def ev(t):
            return OperatorSet(hamiltonian=t * SX, lindblads=(t * t * SM,))

        def dev(t):
            return 7.0 * SX, (7.0 * SM,)  # deliberately wrong slope, must be used

        model = SystemModel(dim=2, evaluator=ev, derivative_evaluator=dev)
        dh, dfs = evaluate_derivative(model, 0.5)
        assert np.allclose(dh, 7.0 * SX)
        assert np.allclose(dfs[0], 7.0 * SM)

    def test_finite_difference_matches_known_slope(self):
        model = _smooth_model()
        t = 1.2
        dh, dfs = evaluate_derivative(model, t)
        dh_true = np.cos(t) * SX - 2.0 * np.sin(2.0 * t) * SZ
        df_true = 0.3 * np.exp(0.3 * t) * SM
        assert np.max(np.abs(dh - dh_true)) < 1e-8
        assert np.max(np.abs(dfs[0] - df_true)) < 1e-8

    def test_halving_h_quarters_the_error(self):
        model = _smooth_model()
        t = 1.2
        dh_true = np.cos(t) * SX - 2.0 * np.sin(2.0 * t) * SZ

        def err(h):
            dh, _ = evaluate_derivative(model, t, h=h)
            return np.max(np.abs(dh - dh_true))

        e1, e2 = err(1e-3), err(5e-4)
        assert e1 / e2 == pytest.approx(4.0, rel=0.05)

    def test_fd_step_scales_with_metadata_rate(self):
        model = SystemModel(
            dim=2,
            evaluator=lambda t: OperatorSet(hamiltonian=0 * SX, lindblads=()),
            metadata={"rate_scale": 100.0},
        )
        assert model.fd_h() == pytest.approx(1e-7)


class TestGridModel:
    def test_nodes_reproduced_exactly_and_midpoints_average(self):
        base = _smooth_model()
        ts = np.linspace(0.0, 3.0, 31)
        sets = [evaluate(base, float(t)) for t in ts]
        grid = model_from_grid(ts, sets)
        for k in (0, 7, 30):
            ops = evaluate(grid, float(ts[k]))
            assert np.allclose(ops.hamiltonian, sets[k].hamiltonian, atol=1e-14)
            assert np.allclose(ops.lindblads[0], sets[k].lindblads[0], atol=1e-14)
        mid = 0.5 * (ts[3] + ts[4])
        ops = evaluate(grid, float(mid))
        want = 0.5 * (sets[3].hamiltonian + sets[4].hamiltonian)
        assert np.allclose(ops.hamiltonian, want, atol=1e-14)

    def test_dense_grid_approximates_smooth_model(self):
        base = _smooth_model()
        ts = np.linspace(0.0, 3.0, 601)
        grid = model_from_grid(ts, [evaluate(base, float(t)) for t in ts])
        probe = np.linspace(0.0, 3.0, 50)
        worst = max(
            float(np.max(np.abs(evaluate(grid, float(t)).hamiltonian
                                - evaluate(base, float(t)).hamiltonian)))
            for t in probe
        )
        assert worst < 2e-5  # O(dt^2) interpolation error

    def test_grid_validation(self):
        base = _smooth_model()
        s = evaluate(base, 0.0)
        with pytest.raises(ValueError):
            model_from_grid([0.0], [s])
        with pytest.raises(ValueError):
            model_from_grid([0.0, 0.0], [s, s])
        with pytest.raises(ValueError):
            model_from_grid([0.0, 1.0], [s])
        s2 = OperatorSet(hamiltonian=s.hamiltonian, lindblads=())
        with pytest.raises(ValueError):
            model_from_grid([0.0, 1.0], [s, s2])

    def test_grid_round_trip_of_squeezed_model(self):
        sch = SqueezeSchedule(r0=0.4, theta0=0.2, mu=0.1, nu=0.3, gamma=1.0)
        from adfs.squeezed_qubit_example import build_model

        base = build_model(sch, control="engineered", t_final=2.0)
        ts = np.linspace(0.0, 2.0, 801)
        grid = model_from_grid(ts, [evaluate(base, float(t)) for t in ts])
        t = 1.37
        a, b = evaluate(base, t), evaluate(grid, t)
        assert np.max(np.abs(a.hamiltonian - b.hamiltonian)) < 1e-5
        assert np.max(np.abs(a.lindblads[0] - b.lindblads[0])) < 1e-5
