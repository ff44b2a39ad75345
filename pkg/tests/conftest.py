import pytest

from streampls.experiment import ExperimentConfig, build_config_model, run_experiment


@pytest.fixture(scope="session")
def reference_model():
    """Generative model of the reference synthetic experiment."""
    return build_config_model(ExperimentConfig())


@pytest.fixture(scope="session")
def six_run(tmp_path_factory):
    """The full reference experiment: 100 seeds, 2e5 iterations each.

    Takes about two minutes; shared by every test that reads phase events
    or cross-seed variances off the same trajectories.
    """
    out = tmp_path_factory.mktemp("six_run")
    cfg = ExperimentConfig(out_dir=str(out))
    return run_experiment(cfg)
