import pytest

from profet.exceptions import ValidationError
from profet.experiment import (
    DEFAULT_BATCH_SIZES,
    DEFAULT_INSTANCES,
    DEFAULT_PIXEL_SIZES,
    ScenarioGrid,
    _prepare_cells,
    cell_seed,
    cross_instance_eval,
    enumerate_scenarios,
    leave_model_out_split,
)
from profet.features import Measurement, WorkloadScenario

from .helpers import FAST_CONFIG


def test_enumerate_small_grid():
    grid = ScenarioGrid(("p2", "g3s"), ("B", "A"), (32, 16), (64,))
    out = enumerate_scenarios(grid)
    assert len(out) == 8
    keys = [(s.model_id, s.instance, s.batch_size, s.pixel_size) for s in out]
    assert keys == sorted(keys)


def test_enumerate_full_grid_unfiltered():
    grid = ScenarioGrid(DEFAULT_INSTANCES, tuple(f"m{i}" for i in range(15)),
                        DEFAULT_BATCH_SIZES, DEFAULT_PIXEL_SIZES)
    assert len(enumerate_scenarios(grid)) == 4 * 15 * 5 * 5 == 1500


def test_enumerate_all_filtered():
    grid = ScenarioGrid(("g3s",), ("A",), (256,), (256,), feasibility="synthetic-memory")
    with pytest.raises(ValidationError):
        enumerate_scenarios(grid)


@pytest.mark.parametrize(
    "kw",
    [dict(instances=()), dict(models=("A", "A")), dict(feasibility="nope")],
)
def test_grid_invariants(kw):
    base = dict(instances=("g",), models=("A",), batch_sizes=(1,), pixel_sizes=(1,))
    with pytest.raises(ValidationError):
        ScenarioGrid(**{**base, **kw})


def _ms(models, instances=("g3s", "p2")):
    return [
        Measurement(WorkloadScenario(m, g, 16, 32), {"Conv2D": 1.0}, 1.0)
        for m in models for g in instances
    ]


def test_leave_model_out():
    plan = leave_model_out_split(_ms(["A", "B"]), "A")
    assert all(k[0] == "B" for k in plan.train_keys)
    assert all(k[0] == "A" for k in plan.test_keys)
    assert not plan.train_keys & plan.test_keys


def test_leave_model_out_errors():
    with pytest.raises(ValidationError):
        leave_model_out_split(_ms(["A", "B"]), "C")
    with pytest.raises(ValidationError):
        leave_model_out_split(_ms(["A"]), "A")


def test_cell_seed_stable():
    assert cell_seed(42, "a", "b", "m") == cell_seed(42, "a", "b", "m")
    assert cell_seed(42, "a", "b", "m") != cell_seed(42, "b", "a", "m")


def test_vocabulary_never_sees_test_scenarios(noisy_corpus):
    cells, _ = _prepare_cells(noisy_corpus, {})
    assert cells
    for cell, train_ds, test_ds in cells:
        prov = set(train_ds.vocabulary.provenance)
        assert not prov & set(test_ds.keys)
        assert not set(train_ds.keys) & set(test_ds.keys)
        assert all(k[0] == cell["holdout"] for k in test_ds.keys)


def test_eval_preconditions(noisy_corpus):
    one_inst = [m for m in noisy_corpus if m.scenario.instance == "p2"]
    with pytest.raises(ValidationError):
        cross_instance_eval(one_inst)
    one_model = [m for m in noisy_corpus if m.scenario.model_id == "fam00"]
    with pytest.raises(ValidationError):
        cross_instance_eval(one_model)


@pytest.fixture(scope="module")
def small_corpus(noisy_corpus):
    keep = {"g3s", "p3"}
    return [m for m in noisy_corpus if m.scenario.instance in keep]


def test_eval_deterministic_and_bounded(small_corpus):
    a = cross_instance_eval(small_corpus, config=FAST_CONFIG, seed=3)
    b = cross_instance_eval(small_corpus, config=FAST_CONFIG, seed=3)
    assert a.to_json() == b.to_json()
    assert len(a.rows) <= 2 * 1 * 6
    assert set(a.models) == {"ensemble", "linear", "forest", "mlp", "baseline"}
    assert a.models["ensemble"] == a.aggregate


def test_eval_parallel_matches_serial(small_corpus):
    serial = cross_instance_eval(small_corpus, config=FAST_CONFIG, seed=3)
    parallel = cross_instance_eval(small_corpus, config={**FAST_CONFIG, "n_jobs": 2},
                                   seed=3)
    assert serial.to_json() == parallel.to_json()


def test_eval_skips_thin_cells(small_corpus):
    with pytest.raises(ValidationError):
        cross_instance_eval(small_corpus, config={**FAST_CONFIG, "min_rows": 10_000})
    extra = [
        Measurement(WorkloadScenario("fam00", "p2", 16, 32), {"Conv2D": 1.0}, 1.0),
        Measurement(WorkloadScenario("fam01", "p2", 16, 32), {"Conv2D": 1.0}, 1.0),
    ]
    rep = cross_instance_eval(small_corpus + extra, config=FAST_CONFIG, seed=1)
    assert rep.skipped
    assert all("p2" in (s["anchor"], s["target"]) for s in rep.skipped)
    assert all("p2" not in (r.anchor, r.target) for r in rep.rows)


def test_eval_noise_free_linear_is_exact(clean_corpus):
    # noise-free labels are a linear function of the op features, so the
    # linear member recovers held-out families up to rounding
    two = [m for m in clean_corpus if m.scenario.instance in ("g4dn", "p3")]
    rep = cross_instance_eval(two, config=FAST_CONFIG, seed=42)
    assert rep.models["linear"].mape_pct < 1e-8
    assert rep.models["linear"].rmse_ms < 1e-9
