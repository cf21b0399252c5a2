"""MAPE / RMSE / R² and the per-pair evaluation report."""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import ValidationError


def _pair_arrays(y_true, y_pred, min_len=1):
    y_true = np.asarray(y_true, dtype=np.float64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.float64).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise ValidationError(
            f"length mismatch: {y_true.shape[0]} labels vs {y_pred.shape[0]} predictions"
        )
    if y_true.size < min_len:
        raise ValidationError(f"need at least {min_len} samples")
    return y_true, y_pred


def mape(y_true, y_pred):
    """Mean absolute percentage error, in percent."""
    y_true, y_pred = _pair_arrays(y_true, y_pred)
    if np.any(y_true <= 0):
        raise ValidationError("MAPE is undefined for non-positive labels")
    return float(100.0 * np.mean(np.abs(y_pred - y_true) / y_true))


def rmse(y_true, y_pred):
    y_true, y_pred = _pair_arrays(y_true, y_pred)
    return float(np.sqrt(np.mean((y_pred - y_true) ** 2)))


def r2(y_true, y_pred):
    y_true, y_pred = _pair_arrays(y_true, y_pred, min_len=2)
    ss_tot = np.sum((y_true - y_true.mean()) ** 2)
    if ss_tot == 0:
        raise ValidationError("R² is undefined for constant labels")
    return float(1.0 - np.sum((y_true - y_pred) ** 2) / ss_tot)


def _r2_or_none(y_true, y_pred):
    try:
        return r2(y_true, y_pred)
    except ValidationError:
        return None


@dataclass(frozen=True)
class MetricsRow:
    anchor: str
    target: str
    n: int
    mape_pct: float
    rmse_ms: float
    r2: float = None

    @classmethod
    def compute(cls, anchor, target, y_true, y_pred):
        return cls(anchor, target, int(len(y_true)), mape(y_true, y_pred),
                   rmse(y_true, y_pred), _r2_or_none(y_true, y_pred))


@dataclass(frozen=True)
class MetricsReport:
    """Per-pair rows plus two summaries.

    ``aggregate`` pools every sample before computing metrics, so pairs with
    more scenarios weigh more. ``pair_mean`` is the unweighted mean of the
    per-pair metrics. ``models`` holds pooled metrics per predictor name
    (``ensemble``, ``linear``, ``forest``, ``mlp``, ``baseline``) when the
    caller supplies them, and ``skipped`` lists evaluation cells that could not
    be run.
    """

    rows: tuple
    aggregate: MetricsRow
    pair_mean: dict
    models: dict = field(default_factory=dict)
    skipped: tuple = ()

    def to_dict(self):
        return {
            "rows": [asdict(r) for r in self.rows],
            "aggregate": asdict(self.aggregate),
            "pair_mean": dict(self.pair_mean),
            "models": {k: asdict(v) for k, v in self.models.items()},
            "skipped": [dict(s) for s in self.skipped],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self):
        header = ("anchor", "target", "n", "MAPE %", "RMSE ms", "R2")
        lines = [self._format_row(r) for r in self.rows]
        lines.append(self._format_row(self.aggregate))
        for name, r in self.models.items():
            lines.append(self._format_row(r, label=f"[{name}]"))
        table = [header, *lines]
        widths = [max(len(row[i]) for row in table) for i in range(len(header))]
        out = ["  ".join(c.rjust(w) if i >= 2 else c.ljust(w)
                         for i, (c, w) in enumerate(zip(row, widths)))
               for row in table]
        out.insert(1, "  ".join("-" * w for w in widths))
        pm = self.pair_mean
        out.append(f"pair-mean: MAPE {pm['mape_pct']:.3f} %  RMSE {pm['rmse_ms']:.4f} ms")
        if self.skipped:
            out.append(f"skipped cells: {len(self.skipped)}")
        return "\n".join(out) + "\n"

    @staticmethod
    def _format_row(r, label=None):
        r2_text = "n/a" if r.r2 is None else f"{r.r2:.4f}"
        anchor = label if label is not None else r.anchor
        return (anchor, r.target, str(r.n), f"{r.mape_pct:.3f}", f"{r.rmse_ms:.4f}",
                r2_text)


def build_report(evaluations, models=None, skipped=()):
    """Summarize ``(pair, y_true, y_pred)`` evaluations.

    Repeated pairs are concatenated in input order. ``models`` optionally maps
    a predictor name to its own list of evaluations, summarized as pooled rows.
    """
    evaluations = list(evaluations)
    if not evaluations:
        raise ValidationError("no evaluations to report")
    grouped = {}
    for pair, y_true, y_pred in evaluations:
        y_true, y_pred = _pair_arrays(y_true, y_pred)
        t, p = grouped.setdefault(tuple(pair), ([], []))
        t.append(y_true)
        p.append(y_pred)
    rows = tuple(
        MetricsRow.compute(a, b, np.concatenate(t), np.concatenate(p))
        for (a, b), (t, p) in sorted(grouped.items())
    )
    aggregate = _pooled("*", "*", grouped.values())
    pair_mean = {
        "mape_pct": float(np.mean([r.mape_pct for r in rows])),
        "rmse_ms": float(np.mean([r.rmse_ms for r in rows])),
    }
    model_rows = {}
    for name, evs in (models or {}).items():
        model_rows[name] = _pooled(
            "*", "*", [([np.asarray(t)], [np.asarray(p)]) for _, t, p in evs]
        )
    return MetricsReport(rows, aggregate, pair_mean, model_rows, tuple(skipped))


def _pooled(anchor, target, parts):
    parts = list(parts)
    y_true = np.concatenate([np.concatenate(t) for t, _ in parts])
    y_pred = np.concatenate([np.concatenate(p) for _, p in parts])
    return MetricsRow.compute(anchor, target, y_true, y_pred)
