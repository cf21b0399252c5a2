import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from profet.exceptions import TraceParseError
from profet.trace import (
    RawTraceRecord,
    TraceDocument,
    aggregate,
    load_op_map,
    parse_trace,
    scrub,
    serialize_trace,
)


def test_parse_single_jsonl_record():
    doc = parse_trace(b'{"op":"Conv2D","latency_us":512.0}')
    assert len(doc) == 1
    assert doc.records[0].op_name == "Conv2D"
    assert doc.records[0].latency == 512.0
    assert doc.records[0].op_detail is None


def test_parse_empty_input():
    assert len(parse_trace(b"")) == 0
    assert len(parse_trace(b"", "csv")) == 0


def test_negative_latency_rejected_with_line():
    with pytest.raises(TraceParseError) as info:
        parse_trace(b'{"op":"Conv2D","latency_us":-3}')
    assert info.value.line == 1


@pytest.mark.parametrize(
    "body, line",
    [
        (b'{"op":"A","latency_us":1}\n{"op":"B",', 2),
        (b'{"op":"A","latency_us":1}\n\n[1, 2]', 3),
        (b'{"op":"A"}', 1),
        (b'{"op":"","latency_us":1}', 1),
        (b'{"op":"A","latency_us":NaN}', 1),
        (b'{"op":"A","latency_us":"fast"}', 1),
    ],
)
def test_malformed_jsonl_names_line(body, line):
    with pytest.raises(TraceParseError) as info:
        parse_trace(body)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_jsonl_ignores_unknown_keys_and_keeps_order():
    body = (
        b'{"op":"MatMul","latency_us":4,"stream":7}\n'
        b'{"op":"Relu","latency_us":1,"detail":"dense_1/Relu"}\n'
    )
    doc = parse_trace(body)
    assert [r.op_name for r in doc.records] == ["MatMul", "Relu"]
    assert doc.records[1].op_detail == "dense_1/Relu"


def test_csv_parsing_and_quoting():
    body = (
        b"op,latency_us,detail\r\n"
        b'Conv2D,5,"conv1/Conv2D, shape=[3,3,64]"\r\n'
        b"Conv2D,7,\r\n"
    )
    doc = parse_trace(body, "csv")
    assert [r.latency for r in doc.records] == [5.0, 7.0]
    assert doc.records[0].op_detail == "conv1/Conv2D, shape=[3,3,64]"
    assert doc.records[1].op_detail is None


def test_csv_wrong_column_count():
    with pytest.raises(TraceParseError) as info:
        parse_trace(b"op,latency_us,detail\nConv2D,5\n", "csv")
    assert info.value.line == 2


def test_csv_requires_header():
    with pytest.raises(TraceParseError):
        parse_trace(b"Conv2D,5,x\n", "csv")


def test_scrub_removes_detail():
    doc = TraceDocument([RawTraceRecord("Conv2D", 3.0, "conv5/weights shape=[3,3,256]")])
    out = scrub(doc)
    assert out.records[0] == RawTraceRecord("Conv2D", 3.0)
    assert scrub(out) == out
    assert len(scrub(TraceDocument())) == 0


def test_aggregate_sums_duplicates():
    doc = TraceDocument([RawTraceRecord("Conv2D", 5), RawTraceRecord("Conv2D", 7)])
    assert aggregate(doc) == {"Conv2D": 12.0}
    doc = TraceDocument([RawTraceRecord("MatMul", 4), RawTraceRecord("Relu", 1)])
    assert aggregate(doc) == {"MatMul": 4.0, "Relu": 1.0}
    assert aggregate(TraceDocument()) == {}


def test_load_op_map_drops_detail():
    body = b'{"op":"A","latency_us":2,"detail":"secret"}\n{"op":"A","latency_us":3}\n'
    assert load_op_map(body) == {"A": 5.0}


op_names = st.text(alphabet="ABCDEFGHIJ_/xyz", min_size=1, max_size=8)
records = st.builds(
    RawTraceRecord,
    op_name=op_names,
    latency=st.floats(min_value=0, max_value=1e9, allow_nan=False),
    op_detail=st.one_of(st.none(), st.text(max_size=20)),
)
documents = st.builds(TraceDocument, records=st.lists(records, max_size=30))
printable = st.text(
    alphabet=st.characters(blacklist_categories=("Cc", "Cs")), max_size=20
)
csv_documents = st.builds(
    TraceDocument,
    records=st.lists(
        st.builds(
            RawTraceRecord,
            op_name=op_names,
            latency=st.floats(min_value=0, max_value=1e9, allow_nan=False),
            op_detail=st.one_of(st.none(), printable),
        ),
        max_size=30,
    ),
)


@given(documents)
def test_aggregate_conserves_mass(doc):
    total = math.fsum(r.latency for r in doc.records)
    agg = sum(aggregate(doc).values())
    assert agg == pytest.approx(total, rel=1e-9, abs=1e-12)


@given(documents)
def test_scrub_idempotent(doc):
    once = scrub(doc)
    assert scrub(once) == once
    assert all(r.op_detail is None for r in once.records)


@given(documents)
def test_jsonl_round_trip(doc):
    assert parse_trace(serialize_trace(doc)).records == doc.records


@given(csv_documents)
def test_csv_round_trip(doc):
    back = parse_trace(serialize_trace(doc, "csv"), "csv")
    expected = [
        RawTraceRecord(r.op_name, r.latency, r.op_detail or None) for r in doc.records
    ]
    assert list(back.records) == expected
