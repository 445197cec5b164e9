"""Text document formats: parsing, rendering, round trips, error reporting."""

from __future__ import annotations

import pytest

from fixtures import *

from mvsched import (
    INIT,
    LevelAllocation,
    ParseError,
    Polygraph,
    parse_polygraph,
    parse_schedule,
    parse_workload,
    reduce_to_schedule,
    render_polygraph,
    render_schedule,
    render_workload,
    validate_schedule,
)

S1_DOC = """
# the four-transaction tangle on objects t and v
txn T1: R(t) C
txn T2: W(t) R(v) C
txn T3: W(v) C
txn T4: R(t) W(t) R(v) C
order: W2(t) R4(t) W3(v) C3 R1(t) C1 R2(v) C2 W4(t) R4(v) C4
reads: R1(t)<-init R4(t)<-init R2(v)<-init R4(v)<-W3(v)
vorder t: init<W2(t)<W4(t)
vorder v: init<W3(v)
"""


# --- workloads -----------------------------------------------------------------


def test_workload_round_trip():
    w = workload(SI, *W_LU)
    assert parse_workload(render_workload(w)) == w


def test_lost_update_document_literal():
    text = "txn T1: R(t) W(t) C\ntxn T2: R(t) W(t) C\nalloc T1=SI T2=SI"
    assert parse_workload(text) == workload(SI, *W_LU)


def test_predicate_allocation_document():
    w = s2_predicate_workload()
    doc = render_workload(w)
    assert "predicate=view-serializable-only" in doc
    assert parse_workload(doc) == w


def test_workload_canonical_fixpoint():
    w = s2_workload(RC)
    doc = render_workload(w)
    assert render_workload(parse_workload(doc)) == doc


def test_workload_errors():
    with pytest.raises(ParseError, match="missing-commit"):
        parse_workload("txn T1: R(t)\nalloc T1=RC")
    with pytest.raises(ParseError, match="duplicate transaction"):
        parse_workload("txn T1: C\ntxn T1: C\nalloc T1=RC")
    with pytest.raises(ParseError, match="isolation level"):
        parse_workload("txn T1: C\nalloc T1=XX")
    with pytest.raises(ParseError, match="no allocation"):
        parse_workload("txn T1: C")
    with pytest.raises(ParseError, match="misses"):
        parse_workload("txn T1: C\ntxn T2: C\nalloc T1=RC")
    with pytest.raises(ParseError, match="unknown transactions"):
        parse_workload("txn T1: C\nalloc T1=RC T9=RC")
    with pytest.raises(ParseError, match="no transactions"):
        parse_workload("alloc T1=RC")
    with pytest.raises(ParseError, match="bad operation token"):
        parse_workload("txn T1: X(t) C\nalloc T1=RC")


# --- schedules ------------------------------------------------------------------


def test_spec_style_s1_document_parses_to_s1():
    assert parse_schedule(S1_DOC) == S1


def test_schedule_round_trip_and_fixpoint():
    for s in (S1, S2, S3, S4, SD, lost_update_schedule()):
        doc = render_schedule(s)
        assert parse_schedule(doc) == s
        assert render_schedule(parse_schedule(doc)) == doc


def test_schedule_with_external_workload():
    doc = render_schedule(S2)
    w = s2_workload(RC)
    assert parse_schedule(doc, w) == S2
    # order/reads/vorder only, transactions supplied externally
    lines = [l for l in doc.splitlines() if not l.startswith("txn")]
    assert parse_schedule("\n".join(lines), w) == S2


def test_schedule_workload_disagreement():
    doc = render_schedule(S2)
    other = workload(RC, *W_LU)
    with pytest.raises(ParseError, match="disagree"):
        parse_schedule(doc, other)


def test_shorthand_resolution():
    # R4(t) resolves uniquely inside T4
    assert "R4(t)" in render_schedule(S1)
    s = parse_schedule(S1_DOC)
    assert s.vf[opid("T4", 1)] == INIT


def test_ambiguous_shorthand_rejected_and_positional_accepted():
    doc = "txn T9: R(t) R(t) C\norder: R9(t) T9#2 C9\nreads: R9(t)<-init T9#2<-init\n"
    with pytest.raises(ParseError, match="ambiguous"):
        parse_schedule(doc)
    doc = "txn T9: R(t) R(t) C\norder: T9#1 T9#2 C9\nreads: T9#1<-init T9#2<-init\n"
    s = parse_schedule(doc)
    assert validate_schedule(s) == []
    # the canonical renderer falls back to positional references
    assert "T9#1" in render_schedule(s)


def test_unmapped_read_rejected():
    with pytest.raises(ParseError, match="unmapped-read"):
        parse_schedule("txn T1: R(t) C\norder: R1(t) C1\n")


def test_read_mapped_to_non_write_rejected():
    doc = "txn T1: R(t) R(t) C\norder: T1#1 T1#2 C1\nreads: T1#1<-init T1#2<-T1#1\n"
    with pytest.raises(ParseError, match="vf-target-not-write"):
        parse_schedule(doc)


def test_vorder_not_total_rejected():
    doc = (
        "txn T1: W(t) C\ntxn T2: W(t) C\n"
        "order: W1(t) C1 W2(t) C2\n"
        "vorder t: init<W1(t)\n"
    )
    with pytest.raises(ParseError, match="vorder-not-total"):
        parse_schedule(doc)


def test_parse_schedule_without_validation():
    doc = "txn T1: R(t) C\norder: R1(t) C1\n"
    s = parse_schedule(doc, validate=False)
    assert validate_schedule(s) != []


def test_unknown_reference_errors():
    with pytest.raises(ParseError, match="unknown transaction"):
        parse_schedule("txn T1: C\norder: C1 C7\n")
    with pytest.raises(ParseError, match="out of range"):
        parse_schedule("txn T1: C\norder: T1#2\n")
    with pytest.raises(ParseError, match="unrecognized"):
        parse_schedule("txn T1: C\norder: ???\n")


def test_comments_do_not_break_positional_tokens():
    doc = "txn T1: R(t) C  # trailing comment\norder: T1#1 C1 # tail\nreads: T1#1<-init\n"
    s = parse_schedule(doc)
    assert validate_schedule(s) == []


def test_reduction_schedule_survives_round_trip():
    p = Polygraph.of("uvw", [("w", "u")], [("u", "v", "w")])
    txns, s = reduce_to_schedule(p)
    alloc = LevelAllocation.uniform(RC, (t.id for t in txns))
    doc = render_schedule(s, alloc)
    assert parse_schedule(doc) == s
    assert render_schedule(parse_schedule(doc), alloc) == doc


# --- polygraphs --------------------------------------------------------------------


def test_polygraph_round_trip():
    p = Polygraph.of("uvw", [("w", "u")], [("u", "v", "w")])
    doc = render_polygraph(p)
    assert parse_polygraph(doc) == p
    assert render_polygraph(parse_polygraph(doc)) == doc


def test_polygraph_multi_node_lines_and_comments():
    p = parse_polygraph("# header\nnode u v w\narc w u\nchoice u v w\n")
    assert p == Polygraph.of("uvw", [("w", "u")], [("u", "v", "w")])


def test_polygraph_parse_errors():
    with pytest.raises(ParseError, match="two nodes"):
        parse_polygraph("node a b\narc a\n")
    with pytest.raises(ParseError, match="three nodes"):
        parse_polygraph("node a b c\nchoice a b\n")
    with pytest.raises(ParseError, match="invalid polygraph"):
        parse_polygraph("node a b c\narc c a\nchoice a a c\n")
    with pytest.raises(ParseError, match="unexpected line"):
        parse_polygraph("vertex a\n")
