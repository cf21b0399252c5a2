"""Save and load predictor registries as ``*.profet.json`` bundles.

A bundle is two parts separated by the first newline: a one-line JSON header
``{"format": "profet-bundle", "version": 1, "sha256": ...}`` and a canonical
JSON body (sorted keys, compact separators, shortest round-trip floats). The
checksum covers the body bytes exactly as written.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from .ensemble import EnsemblePredictor, MedianEnsembleRegressor, PredictorRegistry
from .exceptions import BundleChecksumError, BundleError, BundleVersionError
from .features import OpVocabulary
from .regressors import ForestRegressor, MLPRegressor, OLSRegressor, Tree

FORMAT = "profet-bundle"
VERSION = 1
SUFFIX = ".profet.json"


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _vocab_to_dict(v):
    return {
        "names": list(v.names),
        "version": v.version,
        "provenance": [list(k) if isinstance(k, tuple) else k for k in v.provenance],
    }


def _vocab_from_dict(obj):
    return OpVocabulary(
        names=tuple(obj["names"]),
        version=obj["version"],
        provenance=tuple(tuple(k) if isinstance(k, list) else k
                         for k in obj["provenance"]),
    )


def _ensemble_to_dict(model):
    lin = model.estimators_["linear"]
    forest = model.estimators_["forest"]
    mlp = model.estimators_["mlp"]
    mlp_params = mlp.get_params()
    mlp_params["hidden_layer_sizes"] = list(mlp_params["hidden_layer_sizes"])
    return {
        "params": {
            "forest_params": model.forest_params,
            "mlp_params": model.mlp_params,
            "random_state": model.random_state,
            "min_rows": model.min_rows,
        },
        "n_features": model.n_features_in_,
        "linear": {
            "coef": lin.coef_.tolist(),
            "intercept": lin.intercept_,
            "rank_deficient": bool(lin.rank_deficient_),
        },
        "forest": {
            "params": forest.get_params(),
            "trees": [t.to_dict() for t in forest.estimators_],
        },
        "mlp": {
            "params": mlp_params,
            "x_mean": mlp.x_mean_.tolist(),
            "x_scale": mlp.x_scale_.tolist(),
            "y_scale": mlp.y_scale_,
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in mlp.params_],
        },
    }


def _ensemble_from_dict(obj):
    d = obj["n_features"]
    lin = OLSRegressor()
    lin.coef_ = np.asarray(obj["linear"]["coef"], dtype=np.float64)
    lin.intercept_ = float(obj["linear"]["intercept"])
    lin.rank_deficient_ = obj["linear"]["rank_deficient"]
    lin.n_features_in_ = d

    forest = ForestRegressor(**obj["forest"]["params"])
    forest.estimators_ = [Tree.from_dict(t) for t in obj["forest"]["trees"]]
    forest.n_features_in_ = d

    m = obj["mlp"]
    params = dict(m["params"])
    params["hidden_layer_sizes"] = tuple(params["hidden_layer_sizes"])
    mlp = MLPRegressor(**params)
    mlp.x_mean_ = np.asarray(m["x_mean"], dtype=np.float64)
    mlp.x_scale_ = np.asarray(m["x_scale"], dtype=np.float64)
    mlp.y_scale_ = float(m["y_scale"])
    mlp.params_ = [
        [np.asarray(layer["W"], dtype=np.float64).reshape(-1, len(layer["b"])),
         np.asarray(layer["b"], dtype=np.float64)]
        for layer in m["layers"]
    ]
    mlp.n_features_in_ = d
    mlp.loss_curve_ = []

    model = MedianEnsembleRegressor(**obj["params"])
    model.estimators_ = {"linear": lin, "forest": forest, "mlp": mlp}
    model.n_features_in_ = d
    return model


def dumps_bundle(registry):
    """Serialize a registry; returns the full file text."""
    if not len(registry):
        raise BundleError("refusing to save an empty registry")
    vocabs, vocab_index, pairs = [], {}, []
    for p in registry:
        key = _canonical(_vocab_to_dict(p.vocabulary))
        if key not in vocab_index:
            vocab_index[key] = len(vocabs)
            vocabs.append(_vocab_to_dict(p.vocabulary))
        pairs.append({
            "anchor": p.anchor,
            "target": p.target,
            "vocabulary": vocab_index[key],
            "train_meta": p.train_meta,
            "model": _ensemble_to_dict(p.model),
        })
    body = _canonical({"vocabularies": vocabs, "pairs": pairs})
    header = {
        "format": FORMAT,
        "version": VERSION,
        "sha256": hashlib.sha256(body.encode("utf-8")).hexdigest(),
    }
    return _canonical(header) + "\n" + body + "\n"


def read_header(text):
    head, sep, body = text.partition("\n")
    try:
        header = json.loads(head)
    except json.JSONDecodeError:
        raise BundleChecksumError("bundle header is unreadable") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise BundleError("not a profet bundle")
    if header.get("version") != VERSION:
        raise BundleVersionError(
            f"unsupported bundle version {header.get('version')!r} (expected {VERSION})"
        )
    return header, body


def loads_bundle(text):
    header, body = read_header(text)
    body = body[:-1] if body.endswith("\n") else body
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if digest != header.get("sha256"):
        raise BundleChecksumError("bundle checksum mismatch (corrupted or truncated)")
    doc = json.loads(body)
    vocabs = [_vocab_from_dict(v) for v in doc["vocabularies"]]
    predictors = [
        EnsemblePredictor(
            anchor=p["anchor"],
            target=p["target"],
            model=_ensemble_from_dict(p["model"]),
            vocabulary=vocabs[p["vocabulary"]],
            train_meta=p["train_meta"],
        )
        for p in doc["pairs"]
    ]
    return PredictorRegistry(predictors)


def save_bundle(registry, path):
    text = dumps_bundle(registry)
    Path(path).write_text(text, encoding="utf-8")
    return json.loads(text.partition("\n")[0])["sha256"]


def load_bundle(path):
    path = Path(path)
    if not path.is_file():
        raise BundleError(f"bundle not found: {path}")
    return loads_bundle(path.read_text(encoding="utf-8"))


def bundle_checksum(path):
    header, _ = read_header(Path(path).read_text(encoding="utf-8"))
    return header["sha256"]
