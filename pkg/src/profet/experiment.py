"""Scenario grids, leave-model-out splits and the cross-instance evaluation loop."""

import itertools
import zlib
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .ensemble import BASE_MODELS, PredictorRegistry, train_pair
from .exceptions import ValidationError
from .features import (
    WorkloadScenario,
    assemble_pairs,
    build_vocabulary,
    instances,
    models,
)
from .metrics import build_report
from .regressors import ScalarBaseline

DEFAULT_INSTANCES = ("g3s", "g4dn", "p2", "p3")
DEFAULT_BATCH_SIZES = (16, 32, 64, 128, 256)
DEFAULT_PIXEL_SIZES = (32, 64, 128, 224, 256)
DEFAULT_MODEL_COUNT = 15

# batch * pixels**2 ceiling per instance for the synthetic memory rule
SYNTHETIC_MEMORY_BUDGET = {
    "g3s": 3_000_000,
    "p2": 5_000_000,
    "g4dn": 7_000_000,
    "p3": 10_000_000,
}


def _feasible_always(scenario):
    return True


def _feasible_synthetic_memory(scenario):
    budget = SYNTHETIC_MEMORY_BUDGET.get(scenario.instance, float("inf"))
    return scenario.batch_size * scenario.pixel_size**2 <= budget


FEASIBILITY_RULES = {
    "none": _feasible_always,
    "synthetic-memory": _feasible_synthetic_memory,
}


def register_feasibility(name, rule):
    """Make ``rule(scenario) -> bool`` available to grids under ``name``."""
    FEASIBILITY_RULES[name] = rule


@dataclass(frozen=True)
class ScenarioGrid:
    instances: tuple
    models: tuple
    batch_sizes: tuple
    pixel_sizes: tuple
    feasibility: str = "none"

    def __post_init__(self):
        for name in ("instances", "models", "batch_sizes", "pixel_sizes"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValidationError(f"grid {name} must be non-empty")
            if len(set(values)) != len(values):
                raise ValidationError(f"grid {name} contains duplicates")
            object.__setattr__(self, name, values)
        if self.feasibility not in FEASIBILITY_RULES:
            raise ValidationError(f"unknown feasibility rule {self.feasibility!r}")

    @classmethod
    def from_dict(cls, obj):
        return cls(
            instances=tuple(obj["instances"]),
            models=tuple(obj["models"]),
            batch_sizes=tuple(obj["batch_sizes"]),
            pixel_sizes=tuple(obj["pixel_sizes"]),
            feasibility=obj.get("feasibility", "none"),
        )


def enumerate_scenarios(grid):
    """Cartesian product of the grid minus infeasible cells, sorted by (m, g, b, p)."""
    rule = FEASIBILITY_RULES[grid.feasibility]
    out = []
    for m, g, b, p in itertools.product(
        sorted(grid.models), sorted(grid.instances),
        sorted(grid.batch_sizes), sorted(grid.pixel_sizes),
    ):
        s = WorkloadScenario(model_id=m, instance=g, batch_size=b, pixel_size=p)
        if rule(s):
            out.append(s)
    if not out:
        raise ValidationError("every scenario was rejected by the feasibility rule")
    return out


@dataclass(frozen=True)
class SplitPlan:
    holdout_model: str
    train_keys: frozenset
    test_keys: frozenset

    def __post_init__(self):
        if self.train_keys & self.test_keys:
            raise ValidationError("train and test keys overlap")
        if any(k[0] != self.holdout_model for k in self.test_keys):
            raise ValidationError("test keys must all belong to the holdout model")
        if any(k[0] == self.holdout_model for k in self.train_keys):
            raise ValidationError("train keys must exclude the holdout model")


def leave_model_out_split(measurements, holdout_model):
    keys = {m.scenario.key for m in measurements}
    test = frozenset(k for k in keys if k[0] == holdout_model)
    if not test:
        raise ValidationError(f"holdout model {holdout_model!r} has no measurements")
    train = frozenset(keys - test)
    if not train:
        raise ValidationError("holding out the only model leaves no training data")
    return SplitPlan(holdout_model, train, test)


def cell_seed(seed, anchor, target, holdout):
    """Per-cell seed derived only from the cell key, independent of run order."""
    tag = zlib.crc32(f"{anchor}|{target}|{holdout}".encode("utf-8"))
    return int(np.random.SeedSequence([int(seed), tag]).generate_state(1)[0])


def _prepare_cells(measurements, config):
    by_model = sorted(models(measurements))
    insts = sorted(instances(measurements))
    min_rows = config.get("min_rows", 10)
    cells, skipped = [], []
    for holdout in by_model:
        plan = leave_model_out_split(measurements, holdout)
        train_ms = [m for m in measurements if m.scenario.key in plan.train_keys]
        test_ms = [m for m in measurements if m.scenario.key in plan.test_keys]
        vocab = build_vocabulary(
            [m.op_map for m in train_ms],
            min_count=config.get("min_count", 1),
            provenance=sorted(plan.train_keys),
        )
        for anchor, target in itertools.permutations(insts, 2):
            cell = {"anchor": anchor, "target": target, "holdout": holdout}
            try:
                train_ds = assemble_pairs(train_ms, anchor, target, vocab)
                test_ds = assemble_pairs(test_ms, anchor, target, vocab)
            except ValidationError as exc:
                skipped.append({**cell, "reason": str(exc)})
                continue
            if len(train_ds) < min_rows:
                skipped.append({**cell, "reason": f"only {len(train_ds)} training rows"})
                continue
            if set(test_ds.keys) & set(vocab.provenance):
                raise AssertionError("vocabulary saw test scenarios")
            cells.append((cell, train_ds, test_ds))
    return cells, skipped


def _run_cell(cell, train_ds, test_ds, config, seed):
    s = cell_seed(seed, cell["anchor"], cell["target"], cell["holdout"])
    predictor = train_pair(train_ds, config, s)
    base = predictor.model.predict_base(test_ds.X)
    out = {name: base[:, k] for k, name in enumerate(BASE_MODELS)}
    out["ensemble"] = predictor.model.predict(test_ds.X)
    baseline = ScalarBaseline().fit(train_ds.anchor_latency_ms, train_ds.y)
    out["baseline"] = baseline.predict(test_ds.anchor_latency_ms)
    return out


def cross_instance_eval(measurements, grid=None, config=None, seed=42):
    """Leave-model-out evaluation over every ordered (anchor, target) pair.

    For each held-out model the vocabulary is rebuilt from the remaining
    models only, each pair's ensemble is trained on those rows and scored on
    the held-out model's scenarios. Returns a :class:`MetricsReport` whose
    ``models`` section also scores each base learner and the order-1
    latency baseline on the same test rows.

    ``config`` keys: ``forest``, ``mlp``, ``min_rows``, ``min_count``,
    ``n_jobs``.
    """
    config = dict(config or {})
    measurements = list(measurements)
    if grid is not None:
        measurements = [
            m for m in measurements
            if m.scenario.instance in grid.instances and m.scenario.model_id in grid.models
        ]
    if len(instances(measurements)) < 2:
        raise ValidationError("cross-instance evaluation needs >= 2 instances")
    if len(models(measurements)) < 2:
        raise ValidationError("leave-model-out evaluation needs >= 2 models")

    cells, skipped = _prepare_cells(measurements, config)
    if not cells:
        raise ValidationError("no evaluation cell had enough data")
    n_jobs = config.get("n_jobs", 1)
    if n_jobs == 1:
        results = [_run_cell(c, tr, te, config, seed) for c, tr, te in cells]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_run_cell)(c, tr, te, config, seed) for c, tr, te in cells
        )

    names = ("ensemble", *BASE_MODELS, "baseline")
    per_model = {name: [] for name in names}
    for (cell, _, test_ds), preds in zip(cells, results):
        pair = (cell["anchor"], cell["target"])
        for name in names:
            per_model[name].append((pair, test_ds.y, preds[name]))
    return build_report(per_model["ensemble"], models=per_model, skipped=skipped)


def train_registry(measurements, config=None, seed=42, pairs=None):
    """Fit one ensemble per ordered instance pair on the full corpus.

    The vocabulary is shared by all pairs and built from every measurement.
    ``pairs`` restricts training to the given (anchor, target) tuples;
    otherwise every ordered pair of distinct instances is trained. Each pair
    gets its own seed derived from ``seed`` and the pair names.
    """
    config = dict(config or {})
    measurements = list(measurements)
    keys = sorted({m.scenario.key for m in measurements})
    vocab = build_vocabulary(
        [m.op_map for m in measurements],
        min_count=config.get("min_count", 1),
        provenance=keys,
    )
    if pairs is None:
        pairs = itertools.permutations(sorted(instances(measurements)), 2)
    predictors = []
    for anchor, target in pairs:
        dataset = assemble_pairs(measurements, anchor, target, vocab)
        predictors.append(
            train_pair(dataset, config, cell_seed(seed, anchor, target, ""))
        )
    if not predictors:
        raise ValidationError("no instance pair to train")
    return PredictorRegistry(predictors)
