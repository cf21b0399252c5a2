"""Operation vocabulary, feature vectors and anchor->target paired datasets."""

import json
import math
from pathlib import Path
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ValidationError
from .trace import check_op_map, load_op_map

OTHER = "OTHER"


@dataclass(frozen=True)
class OpVocabulary:
    """Sorted op names plus a terminal ``OTHER`` slot for everything else.

    ``provenance`` lists the scenario keys whose op maps built the vocabulary;
    evaluation code uses it to prove that no test scenario leaked in.
    """

    names: tuple
    version: int = 1
    provenance: tuple = ()

    def __post_init__(self):
        names = tuple(self.names)
        if not names or names[-1] != OTHER:
            raise ValidationError("vocabulary must end with the OTHER slot")
        body = names[:-1]
        if OTHER in body:
            raise ValidationError("OTHER may only appear as the last slot")
        if len(set(body)) != len(body):
            raise ValidationError("vocabulary names must be unique")
        if list(body) != sorted(body):
            raise ValidationError("vocabulary names must be sorted")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self):
        return len(self.names)

    @property
    def index(self):
        return {name: k for k, name in enumerate(self.names[:-1])}

    @classmethod
    def from_ops(cls, ops, **kwargs):
        ops = sorted(set(ops) - {OTHER})
        return cls(names=tuple(ops) + (OTHER,), **kwargs)


@dataclass(frozen=True, order=True)
class WorkloadScenario:
    model_id: str
    instance: str
    batch_size: int
    pixel_size: int

    def __post_init__(self):
        for name in ("batch_size", "pixel_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not self.model_id or not self.instance:
            raise ValidationError("model_id and instance must be non-empty")

    @property
    def key(self):
        """The instance-free (model, batch, pixel) coordinate used for pairing."""
        return (self.model_id, self.batch_size, self.pixel_size)


@dataclass(frozen=True)
class Measurement:
    scenario: WorkloadScenario
    op_map: dict
    batch_latency_ms: float

    def __post_init__(self):
        y = self.batch_latency_ms
        if not isinstance(y, (int, float)) or not math.isfinite(y) or y <= 0:
            raise ValidationError(f"batch_latency_ms must be finite and > 0, got {y!r}")
        object.__setattr__(self, "batch_latency_ms", float(y))
        object.__setattr__(self, "op_map", check_op_map(self.op_map))


@dataclass(frozen=True)
class PairedDataset:
    anchor: str
    target: str
    X: np.ndarray
    y: np.ndarray
    keys: tuple
    vocabulary: OpVocabulary
    anchor_latency_ms: np.ndarray = None
    skipped: tuple = field(default=())

    def __post_init__(self):
        if self.anchor == self.target:
            raise ValidationError("anchor and target must differ")
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] != len(self.keys):
            raise ValidationError("rows, labels and keys must align")
        if X.shape[1] != len(self.vocabulary):
            raise ValidationError("feature length does not match the vocabulary")
        if not np.all(np.isfinite(X)) or np.any(X < 0):
            raise ValidationError("features must be finite and >= 0")
        if not np.all(np.isfinite(y)) or np.any(y <= 0):
            raise ValidationError("labels must be finite and > 0")
        if len(set(self.keys)) != len(self.keys):
            raise ValidationError("scenario keys must be unique")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "keys", tuple(self.keys))
        object.__setattr__(self, "skipped", tuple(self.skipped))
        if self.anchor_latency_ms is not None:
            object.__setattr__(
                self, "anchor_latency_ms", np.asarray(self.anchor_latency_ms, float)
            )

    def __len__(self):
        return len(self.keys)


def build_vocabulary(corpus, min_count=1, provenance=(), version=1):
    """Collect op names seen in at least ``min_count`` of the op maps."""
    corpus = list(corpus)
    if not corpus:
        raise ValidationError("cannot build a vocabulary from an empty corpus")
    if min_count < 1:
        raise ValidationError("min_count must be >= 1")
    counts = Counter(name for m in corpus for name in set(m) if name != OTHER)
    kept = [name for name, c in counts.items() if c >= min_count]
    if not kept:
        raise ValidationError(f"no op appears in >= {min_count} maps")
    return OpVocabulary.from_ops(kept, version=version, provenance=provenance)


def vectorize(op_map, vocabulary):
    """Map an op-latency dict onto the vocabulary's slots.

    Ops unknown to the vocabulary are summed into the trailing ``OTHER`` slot.
    """
    index = vocabulary.index
    slots = [[] for _ in range(len(vocabulary))]
    other = len(vocabulary) - 1
    for name in sorted(op_map):
        slots[index.get(name, other)].append(float(op_map[name]))
    return np.array([math.fsum(s) for s in slots], dtype=np.float64)


def vectorize_many(op_maps, vocabulary):
    return np.vstack([vectorize(m, vocabulary) for m in op_maps]) if op_maps else (
        np.zeros((0, len(vocabulary)))
    )


def assemble_pairs(measurements, anchor, target, vocabulary):
    """Match anchor profiles with target batch latencies by (model, batch, pixel).

    Keys measured on only one of the two instances are skipped and reported in
    ``PairedDataset.skipped``.
    """
    if anchor == target:
        raise ValidationError(f"anchor and target must differ (both {anchor!r})")
    side = {anchor: {}, target: {}}
    for m in measurements:
        inst = m.scenario.instance
        if inst in side:
            if m.scenario.key in side[inst]:
                raise ValidationError(f"duplicate measurement for {m.scenario}")
            side[inst][m.scenario.key] = m
    a, t = side[anchor], side[target]
    both = sorted(a.keys() & t.keys())
    skipped = sorted(a.keys() ^ t.keys())
    if not both:
        raise ValidationError(f"no scenarios measured on both {anchor} and {target}")
    X = vectorize_many([a[k].op_map for k in both], vocabulary)
    return PairedDataset(
        anchor=anchor,
        target=target,
        X=X,
        y=np.array([t[k].batch_latency_ms for k in both]),
        keys=tuple(both),
        vocabulary=vocabulary,
        anchor_latency_ms=np.array([a[k].batch_latency_ms for k in both]),
        skipped=tuple(skipped),
    )


class OpVectorizer(TransformerMixin, BaseEstimator):
    """Learn an op vocabulary from op maps and turn maps into feature rows.

    The dict-in, matrix-out counterpart of :func:`build_vocabulary` and
    :func:`vectorize` for use inside pipelines.
    """

    def __init__(self, min_count=1):
        self.min_count = min_count

    def fit(self, X, y=None):
        self.vocabulary_ = build_vocabulary(X, self.min_count)
        self.n_features_out_ = len(self.vocabulary_)
        return self

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        return vectorize_many(list(X), self.vocabulary_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.array(self.vocabulary_.names, dtype=object)


# Corpus manifest ------------------------------------------------------------


def measurement_to_dict(m):
    s = m.scenario
    return {
        "scenario": {
            "model": s.model_id,
            "instance": s.instance,
            "batch": s.batch_size,
            "pixels": s.pixel_size,
        },
        "ops": {k: m.op_map[k] for k in sorted(m.op_map)},
        "batch_latency_ms": m.batch_latency_ms,
    }


def measurement_from_dict(obj):
    try:
        s = obj["scenario"]
        scenario = WorkloadScenario(
            model_id=s["model"],
            instance=s["instance"],
            batch_size=s["batch"],
            pixel_size=s["pixels"],
        )
        return Measurement(scenario, obj["ops"], obj["batch_latency_ms"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed measurement: {exc!r}") from None


def dumps_corpus(measurements, vocabulary=None):
    """Serialize measurements to the corpus manifest JSON (deterministic)."""
    measurements = list(measurements)
    if vocabulary is None:
        vocabulary = build_vocabulary([m.op_map for m in measurements])
    doc = {
        "vocabulary": list(vocabulary.names),
        "measurements": [measurement_to_dict(m) for m in measurements],
    }
    return json.dumps(doc, indent=1) + "\n"


def loads_corpus(text):
    """Parse a corpus manifest; returns ``(measurements, vocabulary or None)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"corpus is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("measurements"), list):
        raise ValidationError("corpus manifest needs a 'measurements' list")
    measurements = [measurement_from_dict(m) for m in doc["measurements"]]
    vocab = doc.get("vocabulary")
    vocabulary = OpVocabulary(names=tuple(vocab)) if vocab else None
    return measurements, vocabulary


def instances(measurements):
    return sorted({m.scenario.instance for m in measurements})


def models(measurements):
    return sorted({m.scenario.model_id for m in measurements})


def ingest_runs(runs, base_dir):
    """Turn a run manifest into measurements; traces are scrubbed on the way in.

    Each run is a dict with ``model``, ``instance``, ``batch``, ``pixels``,
    ``trace`` (path relative to ``base_dir``), ``batch_latency_ms`` and an
    optional trace ``format``. The batch latency is measured separately from
    the profiled run, so it is taken as given.
    """
    if not isinstance(runs, list) or not runs:
        raise ValidationError("runs manifest must be a non-empty JSON list")
    out = []
    for k, run in enumerate(runs):
        try:
            scenario = WorkloadScenario(run["model"], run["instance"], int(run["batch"]),
                                        int(run["pixels"]))
            trace_path = Path(base_dir) / run["trace"]
            fmt = run.get("format", "jsonl")
            latency = float(run["batch_latency_ms"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"run {k}: malformed entry ({exc!r})") from None
        if not trace_path.is_file():
            raise ValidationError(f"run {k}: trace not found: {trace_path}")
        op_map = load_op_map(trace_path.read_text(encoding="utf-8"), fmt)
        out.append(Measurement(scenario, op_map, latency))
    return out
