import json

import numpy as np
import pytest

from streampls import diffusion
from streampls.core import StreamExhausted, Trajectory
from streampls.datagen import draw_pairs, save_two_view_csv
from streampls.experiment import (
    ConfigError,
    ExperimentConfig,
    _on_stride_grid,
    build_config_model,
    detect_phases,
    iterations_to_alignment,
    ou_distribution_report,
    phase_prediction,
    run_experiment,
)


def small_config(out_dir, **overrides) -> ExperimentConfig:
    base = dict(n_iters=2000, n_seeds=3, log_stride=500, out_dir=str(out_dir))
    base.update(overrides)
    return ExperimentConfig(**base)


def test_config_validation_messages():
    bad = [
        (dict(algorithm="sgd"), "algorithm"),
        (dict(eta=-1.0), "eta"),
        (dict(eta_schedule="linear"), "eta_schedule"),
        (dict(n_iters=0), "n_iters"),
        (dict(n_seeds=0), "n_seeds"),
        (dict(observe_prob=0.0), "observe_prob"),
        (dict(observe_prob=1.5), "observe_prob"),
        (dict(nu=1.0), "nu"),
        (dict(mu_exponent=1.0), "mu_exponent"),
        (dict(detect_epsilon=0.0), "epsilon"),
        (dict(log_stride=-1), "log_stride"),
        (dict(csv_x="only_x.csv"), "both paths"),
        (dict(init="saddle:x"), "integer"),
        (dict(init="saddle:0"), "counts from 1"),
        (dict(init="warm"), "unknown value"),
        (dict(init={"u": [1.0]}), "init"),
        (dict(log_coords=("bogus",)), "unknown coordinate"),
    ]
    for overrides, fragment in bad:
        with pytest.raises(ConfigError, match=fragment):
            ExperimentConfig(**overrides)


def test_config_from_dict_and_json(tmp_path):
    cfg = ExperimentConfig.from_dict({"eta": 1e-4, "n_seeds": 7})
    assert cfg.eta == 1e-4 and cfg.n_seeds == 7
    with pytest.raises(ConfigError, match="unknown config field"):
        ExperimentConfig.from_dict({"bogus": 1})

    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n_iters": 50, "log_at": [5, 25]}))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.n_iters == 50 and cfg.log_at == (5, 25)

    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        ExperimentConfig.from_json(path)
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="object"):
        ExperimentConfig.from_json(path)

    round_tripped = ExperimentConfig.from_dict(ExperimentConfig().to_dict())
    assert round_tripped == ExperimentConfig()


def test_detect_phases_hand_example():
    traj = Trajectory(
        iters=np.array([0, 10, 20, 30]),
        coords={
            "spectral_1": np.array([0.1, 0.5, 0.91, 0.95]),
            "spectral_2": np.array([1.0, 0.95, 0.8, 0.5]),
            "tail_sq": np.array([0.5, 0.2, 0.05, 0.001]),
        },
        seed=1,
    )
    events = detect_phases(traj, 0.5, 0.01)
    assert (events.escape, events.arrival, events.convergence) == (20, 20, 30)

    pinned = Trajectory(
        iters=np.array([0, 10, 20]),
        coords={
            "spectral_1": np.zeros(3),
            "spectral_2": np.ones(3),
            "tail_sq": np.full(3, 0.5),
        },
        seed=2,
    )
    events = detect_phases(pinned, 0.5, 0.01)
    assert events.escape is None and events.arrival is None
    assert events.convergence is None

    with pytest.raises(ValueError, match="tail_sq"):
        detect_phases(
            Trajectory(np.array([0]), {"spectral_1": np.zeros(1), "spectral_2": np.zeros(1)}, 3),
            0.5,
            0.01,
        )


def test_phase_events_use_the_stride_grid_only():
    # a transient dip recorded by an off-grid checkpoint must not count
    traj = Trajectory(
        iters=np.array([0, 10, 100, 200]),
        coords={
            "spectral_1": np.full(4, 0.1),
            "spectral_2": np.array([1.0, 0.8, 0.99, 0.5]),
            "tail_sq": np.ones(4),
        },
        seed=4,
    )
    raw = detect_phases(traj, 0.5, 1e-4)
    assert raw.escape == 10
    gridded = _on_stride_grid(traj, 100)
    np.testing.assert_array_equal(gridded.iters, [0, 100, 200])
    assert gridded.seed == 4
    filtered = detect_phases(gridded, 0.5, 1e-4)
    assert filtered.escape == 200
    # stride 0 means no regular grid; nothing to filter
    assert _on_stride_grid(traj, 0) is traj


def test_run_experiment_smoke_and_artifacts(tmp_path):
    cfg = small_config(tmp_path / "run")
    result = run_experiment(cfg)
    assert (result.out_dir / "trajectories.csv").is_file()
    assert (result.out_dir / "summary.json").is_file()
    assert (result.out_dir / "phase_report.json").is_file()
    assert len(result.trajectories) == 3
    for traj in result.trajectories:
        assert traj.iters[0] == 0 and traj.iters[-1] == 2000
    for entry in result.summary["per_seed"]:
        assert {"seed", "final_alignment", "final_objective", "final_h1_sq"} <= set(entry)
    assert "n_final_h1_sq_ge_0.99" in result.summary
    assert result.phase_report["escape"]["n"] <= 3
    assert "predicted" in result.phase_report
    assert result.phase_report["predicted"]["n1"] == 2622


def test_run_experiment_is_deterministic(tmp_path):
    first = run_experiment(small_config(tmp_path / "a"))
    second = run_experiment(small_config(tmp_path / "b"))
    bytes_a = (first.out_dir / "trajectories.csv").read_bytes()
    bytes_b = (second.out_dir / "trajectories.csv").read_bytes()
    assert bytes_a == bytes_b

    sum_a = json.loads((first.out_dir / "summary.json").read_text())
    sum_b = json.loads((second.out_dir / "summary.json").read_text())
    sum_a["config"].pop("out_dir")
    sum_b["config"].pop("out_dir")
    assert sum_a == sum_b
    report_a = (first.out_dir / "phase_report.json").read_bytes()
    report_b = (second.out_dir / "phase_report.json").read_bytes()
    assert report_a == report_b


def test_run_experiment_spectral_index_bound(tmp_path):
    cfg = small_config(tmp_path, log_coords=("spectral_7",), n_iters=10, n_seeds=1)
    with pytest.raises(ConfigError, match="exceeds dimension"):
        run_experiment(cfg)


def test_run_experiment_saddle_index_bound(tmp_path, reference_model):
    cfg = small_config(tmp_path, init="saddle:4", n_iters=10, n_seeds=1)
    with pytest.raises(ConfigError, match="exceeds min"):
        run_experiment(cfg)


def test_run_experiment_from_csv_files(tmp_path, reference_model):
    xs, ys = draw_pairs(reference_model, 500, seed=3)
    px, py = tmp_path / "x.csv", tmp_path / "y.csv"
    save_two_view_csv(px, py, xs, ys)

    cfg = small_config(
        tmp_path / "csv_run",
        csv_x=str(px),
        csv_y=str(py),
        n_iters=400,
        n_seeds=2,
        log_stride=100,
        eta=1e-3,
    )
    result = run_experiment(cfg)
    assert len(result.trajectories) == 2
    # both seeds replay the same finite sample list
    np.testing.assert_array_equal(
        result.trajectories[0].coords["objective"],
        result.trajectories[1].coords["objective"],
    )
    # file-driven runs carry no generative model, hence no prediction
    assert "predicted" not in result.phase_report

    with pytest.raises(StreamExhausted) as exc_info:
        run_experiment(small_config(
            tmp_path / "csv_long",
            csv_x=str(px),
            csv_y=str(py),
            n_iters=600,
            n_seeds=1,
        ))
    assert exc_info.value.completed == 500
    assert exc_info.value.requested == 600


def test_ou_distribution_report_structure(six_run, reference_model):
    report = ou_distribution_report(
        six_run.trajectories,
        eta=5e-5,
        moments=reference_model.moments,
        gap=2.0,
    )
    assert report["n_seeds"] == 100
    assert [e["iteration"] for e in report["escape"]] == [10, 100, 1000]
    assert [e["iteration"] for e in report["converge"]] == [100000, 150000, 200000]
    for entry in report["escape"] + report["converge"]:
        assert len(entry["values"]) == 100
        assert np.isfinite(entry["sample_var"])
        assert entry["theory_var"] > 0
        assert entry["var_z_score"] is not None
    late = report["escape"][-1]
    assert 0.5 <= late["sample_var"] / late["theory_var"] <= 2.0

    with pytest.raises(ValueError, match="at least 30 seeds"):
        ou_distribution_report(
            six_run.trajectories[:10],
            eta=5e-5,
            moments=reference_model.moments,
            gap=2.0,
        )
    with pytest.raises(ValueError, match="not logged"):
        ou_distribution_report(
            six_run.trajectories,
            eta=5e-5,
            moments=reference_model.moments,
            gap=2.0,
            escape_checkpoints=(7,),
        )


def test_iterations_to_alignment(reference_model):
    k = iterations_to_alignment(
        reference_model, eta=1e-3, threshold=0.05, seed=5, max_iters=100_000
    )
    assert isinstance(k, int) and 0 < k < 100_000
    again = iterations_to_alignment(
        reference_model, eta=1e-3, threshold=0.05, seed=5, max_iters=100_000
    )
    assert again == k
    assert (
        iterations_to_alignment(
            reference_model, eta=1e-3, threshold=1e-9, seed=5, max_iters=50
        )
        is None
    )


def test_phase_prediction_wraps_the_predictor(reference_model):
    pred = phase_prediction(reference_model, 5e-5)
    exact = diffusion.phase_times(
        (4.0, 2.0, 0.5), reference_model.moments, 5e-5, epsilon=0.04
    )
    assert (pred.n1, pred.n2, pred.n3) == (exact.n1, exact.n2, exact.n3)
    assert pred.t1 == pytest.approx(exact.t1, rel=1e-6)
    assert pred.t2 == pytest.approx(exact.t2, rel=1e-6)


def test_build_config_model_respects_dimensions():
    cfg = ExperimentConfig(
        latent_cov_x=((2.0, 0.5), (0.5, 2.0)),
        latent_cross_diag=(1.5, 0.5),
        latent_cov_y=((2.0, 0.5), (0.5, 2.0)),
        m=4,
        d=2,
    )
    model = build_config_model(cfg)
    assert model.sigma_xy.shape == (4, 2)
    assert model.sigma_x.shape == (4, 4)
    np.testing.assert_allclose(
        np.linalg.svd(model.sigma_xy, compute_uv=False), [1.5, 0.5], atol=1e-10
    )
