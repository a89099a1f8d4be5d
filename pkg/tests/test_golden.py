"""Slot assignment and value encoding against frozen solc 0.8.26 output."""

import pytest

from golden_cases import ENCODINGS, LAYOUTS, encoding_mismatches, layout_mismatches


def test_corpus_shape():
    assert len(LAYOUTS["cases"]) == 20
    assert len(ENCODINGS["cases"]) == 20
    assert LAYOUTS["compiler"].startswith("0.8.26")


@pytest.mark.parametrize("case", LAYOUTS["cases"], ids=lambda c: c["name"])
def test_layout_matches_compiler(case):
    assert layout_mismatches(case) == []


@pytest.mark.parametrize("case", ENCODINGS["cases"], ids=lambda c: c["name"])
def test_encoding_matches_compiler(case):
    assert encoding_mismatches(case) == []


def test_corpus_covers_short_long_string_boundary():
    lengths = set()
    for case in ENCODINGS["cases"]:
        for decl in case["description"]:
            if decl["type"]["kind"] in ("bytes", "string"):
                lengths.add(len(case["values"][decl["name"]].encode()))
    assert {0, 31, 32, 33} <= lengths
