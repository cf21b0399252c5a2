import json

import numpy as np
import pytest

from profet.bundle import (
    bundle_checksum,
    dumps_bundle,
    load_bundle,
    loads_bundle,
    save_bundle,
)
from profet.ensemble import PredictorRegistry, train_pair
from profet.exceptions import BundleChecksumError, BundleError, BundleVersionError
from profet.features import assemble_pairs, build_vocabulary

from .helpers import FAST_CONFIG


@pytest.fixture(scope="module")
def registry(clean_corpus):
    vocab = build_vocabulary([m.op_map for m in clean_corpus], provenance=[("m", 1, 2)])
    preds = [
        train_pair(assemble_pairs(clean_corpus, a, t, vocab), FAST_CONFIG, seed=3)
        for a, t in (("g3s", "p2"), ("p2", "g3s"))
    ]
    return PredictorRegistry(preds)


def test_round_trip_bit_identical(registry, tmp_path):
    path = tmp_path / "r.profet.json"
    digest = save_bundle(registry, path)
    loaded = load_bundle(path)
    assert loaded.pairs() == registry.pairs()
    assert bundle_checksum(path) == digest
    rng = np.random.default_rng(0)
    n = len(registry[("g3s", "p2")].vocabulary)
    probes = rng.uniform(0, 5e5, size=(100, n))
    for pair in registry.pairs():
        a = registry[pair].model.predict(probes)
        b = loaded[pair].model.predict(probes)
        assert a.tobytes() == b.tobytes()
        assert loaded[pair].vocabulary == registry[pair].vocabulary
        assert loaded[pair].train_meta == registry[pair].train_meta


def test_serialization_is_stable(registry):
    text = dumps_bundle(registry)
    assert dumps_bundle(loads_bundle(text)) == text


def test_version_rejected(registry, tmp_path):
    head, body = dumps_bundle(registry).split("\n", 1)
    header = json.loads(head)
    header["version"] = 999
    path = tmp_path / "v.profet.json"
    path.write_text(json.dumps(header) + "\n" + body)
    with pytest.raises(BundleVersionError):
        load_bundle(path)


def test_truncated_rejected(registry, tmp_path):
    text = dumps_bundle(registry)
    path = tmp_path / "t.profet.json"
    path.write_text(text[: len(text) // 2])
    with pytest.raises(BundleChecksumError):
        load_bundle(path)


def test_bit_flip_rejected(registry):
    text = dumps_bundle(registry)
    i = text.index('"intercept":') + len('"intercept":') + 2
    corrupted = text[:i] + ("1" if text[i] != "1" else "2") + text[i + 1:]
    with pytest.raises(BundleChecksumError):
        loads_bundle(corrupted)


def test_missing_file(tmp_path):
    with pytest.raises(BundleError):
        load_bundle(tmp_path / "nope.profet.json")


def test_empty_registry_not_saved(tmp_path):
    with pytest.raises(BundleError):
        save_bundle(PredictorRegistry(), tmp_path / "e.profet.json")
