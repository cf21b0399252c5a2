import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from profet.exceptions import ValidationError
from profet.features import (
    OTHER,
    Measurement,
    OpVectorizer,
    OpVocabulary,
    PairedDataset,
    WorkloadScenario,
    assemble_pairs,
    build_vocabulary,
    dumps_corpus,
    loads_corpus,
    vectorize,
)


def meas(model, inst, b, p, ops, y):
    return Measurement(WorkloadScenario(model, inst, b, p), ops, y)


@pytest.fixture
def vocab3():
    return OpVocabulary(("Conv2D", "MatMul", OTHER))


class TestVocabulary:
    def test_union_sorted(self):
        v = build_vocabulary([{"a": 1, "b": 1}, {"b": 1, "c": 1}], 1)
        assert v.names == ("a", "b", "c", OTHER)

    def test_frequency_floor(self):
        v = build_vocabulary([{"a": 1, "b": 1}, {"b": 1, "c": 1}], 2)
        assert v.names == ("b", OTHER)

    def test_empty_corpus(self):
        with pytest.raises(ValidationError):
            build_vocabulary([], 1)

    def test_everything_filtered(self):
        with pytest.raises(ValidationError):
            build_vocabulary([{"a": 1}, {"b": 1}], 2)

    @pytest.mark.parametrize(
        "names", [("b", "a", OTHER), ("a", "a", OTHER), ("a",), (OTHER, "a", OTHER)]
    )
    def test_invariants_enforced(self, names):
        with pytest.raises(ValidationError):
            OpVocabulary(names)


class TestVectorize:
    def test_unknown_goes_to_other(self, vocab3):
        np.testing.assert_array_equal(
            vectorize({"Conv2D": 12, "Relu": 3}, vocab3), [12, 0, 3]
        )

    def test_empty_map(self, vocab3):
        np.testing.assert_array_equal(vectorize({}, vocab3), [0, 0, 0])

    def test_known_ops(self, vocab3):
        np.testing.assert_array_equal(
            vectorize({"Conv2D": 12, "MatMul": 4}, vocab3), [12, 4, 0]
        )

    @given(
        st.dictionaries(
            st.sampled_from(["Conv2D", "MatMul", "Relu", "Mul", "Add"]),
            st.floats(min_value=0, max_value=1e7),
        )
    )
    def test_mass_and_order_independence(self, m):
        v = OpVocabulary(("Conv2D", "MatMul", OTHER))
        x = vectorize(m, v)
        assert x.sum() == pytest.approx(math.fsum(m.values()), rel=1e-9, abs=1e-12)
        reversed_map = dict(reversed(list(m.items())))
        np.testing.assert_array_equal(vectorize(reversed_map, v), x)


def _measurements():
    return [
        meas("A", "g3s", 16, 32, {"Conv2D": 5}, 2.0),
        meas("A", "p2", 16, 32, {"Conv2D": 9}, 4.0),
        meas("B", "g3s", 16, 32, {"MatMul": 3}, 1.0),
        meas("B", "p2", 16, 32, {"MatMul": 6}, 3.0),
        meas("C", "g3s", 32, 64, {"Relu": 1}, 0.5),
    ]


class TestAssemblePairs:
    def test_full_overlap_and_skip(self, vocab3):
        ds = assemble_pairs(_measurements(), "g3s", "p2", vocab3)
        assert len(ds) == 2
        assert ds.keys == (("A", 16, 32), ("B", 16, 32))
        np.testing.assert_array_equal(ds.y, [4.0, 3.0])
        np.testing.assert_array_equal(ds.X, [[5, 0, 0], [0, 3, 0]])
        np.testing.assert_array_equal(ds.anchor_latency_ms, [2.0, 1.0])
        assert ds.skipped == (("C", 32, 64),)

    def test_self_pair_rejected(self, vocab3):
        with pytest.raises(ValidationError):
            assemble_pairs(_measurements(), "p2", "p2", vocab3)

    def test_no_overlap(self, vocab3):
        with pytest.raises(ValidationError):
            assemble_pairs(_measurements(), "g3s", "p3", vocab3)

    def test_symmetry(self, vocab3):
        ab = assemble_pairs(_measurements(), "g3s", "p2", vocab3)
        ba = assemble_pairs(_measurements(), "p2", "g3s", vocab3)
        assert set(ab.keys) == set(ba.keys)

    def test_dataset_invariants(self, vocab3):
        with pytest.raises(ValidationError):
            PairedDataset("a", "b", np.ones((1, 2)), [1.0], [("m", 1, 1)], vocab3)
        with pytest.raises(ValidationError):
            PairedDataset("a", "b", np.ones((1, 3)), [0.0], [("m", 1, 1)], vocab3)
        with pytest.raises(ValidationError):
            PairedDataset("a", "b", np.ones((2, 3)), [1.0, 1.0],
                          [("m", 1, 1), ("m", 1, 1)], vocab3)


def test_scenario_validation():
    with pytest.raises(ValidationError):
        WorkloadScenario("m", "g", 0, 32)
    with pytest.raises(ValidationError):
        Measurement(WorkloadScenario("m", "g", 1, 32), {}, 0.0)


def test_corpus_manifest_round_trip():
    ms = _measurements()
    text = dumps_corpus(ms)
    back, vocab = loads_corpus(text)
    assert back == ms
    assert vocab.names == ("Conv2D", "MatMul", "Relu", OTHER)
    assert dumps_corpus(back) == text


def test_op_vectorizer_estimator():
    maps = [{"a": 1.0, "b": 2.0}, {"b": 1.0, "z": 5.0}]
    vec = OpVectorizer(min_count=2).fit(maps)
    assert list(vec.get_feature_names_out()) == ["b", OTHER]
    np.testing.assert_array_equal(vec.transform(maps), [[2, 1], [1, 5]])
    assert clone(vec).get_params() == {"min_count": 2}
