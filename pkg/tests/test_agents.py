from __future__ import annotations

import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from basehep.agents import (
    AGENT_ORDER,
    AGENT_PROMPT_TAGS,
    AGENT_SECTIONS,
    AgentKind,
    AgentStageError,
    CaseInput,
    EmptySection,
    InvalidCase,
    MissingSection,
    build_agent_prompt,
    parse_agent_report,
    run_decomposition,
)
from basehep.idtable import TableId
from basehep.llm import MockProvider

from support import agent_text, case_fixtures

SF = TableId.SCENARIO_FAMILIARITY
PILOT_CASE = CaseInput(
    data_source_text=(
        "A pilot acknowledges an altitude clearance during final approach but "
        "reads back the wrong flight level; the controller does not catch the "
        "error before handoff."
    ),
    table=SF,
)

_HEADER_LINE_RE = re.compile(r"^[A-Z][A-Z_]*:$", re.MULTILINE)


class TestCaseInput:
    def test_empty_text_rejected(self):
        with pytest.raises(InvalidCase):
            CaseInput(data_source_text="   \n\t ", table=SF)

    def test_fingerprint_stable(self):
        assert PILOT_CASE.fingerprint() == PILOT_CASE.fingerprint()


class TestPrompts:
    def test_task_prompt_lists_complexity_header(self):
        prompt = build_agent_prompt(AgentKind.TASK_ANALYSIS, PILOT_CASE)
        assert "COMPLEXITY_LEVEL:" in prompt

    def test_case_text_verbatim(self):
        prompt = build_agent_prompt(AgentKind.CONTEXT_ANALYSIS, PILOT_CASE)
        assert PILOT_CASE.data_source_text in prompt

    def test_deterministic(self):
        a = build_agent_prompt(AgentKind.TASK_ANALYSIS, PILOT_CASE)
        b = build_agent_prompt(AgentKind.TASK_ANALYSIS, PILOT_CASE)
        assert a == b

    def test_time_prompt_lists_exactly_three_headers(self):
        prompt = build_agent_prompt(AgentKind.TIME_CONSTRAINTS, PILOT_CASE)
        headers = set(_HEADER_LINE_RE.findall(prompt))
        expected = {f"{n.upper()}:" for n in AGENT_SECTIONS[AgentKind.TIME_CONSTRAINTS]}
        assert headers == expected
        assert len(expected) == 3

    @pytest.mark.parametrize("kind", list(AgentKind))
    def test_every_prompt_lists_all_required_headers(self, kind):
        prompt = build_agent_prompt(kind, PILOT_CASE)
        for name in AGENT_SECTIONS[kind]:
            assert f"{name.upper()}:" in prompt


class TestParse:
    def test_happy_path_five_sections(self):
        report = parse_agent_report(AgentKind.TASK_ANALYSIS, agent_text(AgentKind.TASK_ANALYSIS))
        assert list(report.sections) == list(AGENT_SECTIONS[AgentKind.TASK_ANALYSIS])
        assert len(report.sections) == 5
        assert report.raw_text == agent_text(AgentKind.TASK_ANALYSIS)

    def test_missing_section_named(self):
        text = "\n".join(
            line
            for line in agent_text(AgentKind.TASK_ANALYSIS).splitlines()
            if not line.lower().startswith("objectives")
        )
        with pytest.raises(MissingSection) as excinfo:
            parse_agent_report(AgentKind.TASK_ANALYSIS, text)
        assert excinfo.value.section == "objectives"

    def test_empty_section(self):
        text = "OVERVIEW:\ncontent\nCLASSIFICATION:\nOBJECTIVES:\nc\nERROR_TYPES_AND_IMPACTS:\nc\nCOMPLEXITY_LEVEL:\nc"
        with pytest.raises(EmptySection) as excinfo:
            parse_agent_report(AgentKind.TASK_ANALYSIS, text)
        assert excinfo.value.section == "classification"

    def test_inline_content_after_header(self):
        text = (
            "OVERVIEW: inline overview\nCLASSIFICATION: c\nOBJECTIVES: o\n"
            "ERROR_TYPES_AND_IMPACTS: e\nCOMPLEXITY_LEVEL: high"
        )
        report = parse_agent_report(AgentKind.TASK_ANALYSIS, text)
        assert report.sections["overview"] == "inline overview"
        assert report.sections["complexity_level"] == "high"

    def test_unknown_uppercase_lines_are_content(self):
        text = (
            "OVERVIEW:\nfirst\nNOT_A_SECTION: still overview content\n"
            "CLASSIFICATION: c\nOBJECTIVES: o\nERROR_TYPES_AND_IMPACTS: e\nCOMPLEXITY_LEVEL: x"
        )
        report = parse_agent_report(AgentKind.TASK_ANALYSIS, text)
        assert "NOT_A_SECTION: still overview content" in report.sections["overview"]

    def test_shuffled_headers_reordered_to_canonical(self):
        # Oracle: generate shuffles, parse, compare against the canonical parse.
        rng = random.Random(13)
        kind = AgentKind.CONTEXT_ANALYSIS
        blocks = [
            (name, f"{name.upper()}:\ncontent for {name}")
            for name in AGENT_SECTIONS[kind]
        ]
        canonical = parse_agent_report(kind, "\n".join(text for _, text in blocks))
        for _ in range(10):
            shuffled = blocks[:]
            rng.shuffle(shuffled)
            report = parse_agent_report(kind, "\n".join(text for _, text in shuffled))
            assert list(report.sections) == list(AGENT_SECTIONS[kind])
            assert report.sections == canonical.sections

    @given(
        kind=st.sampled_from(list(AgentKind)),
        contents=st.lists(
            st.text(
                alphabet="abcdefghijklmnopqrstuvwxyz 0123456789.,-",
                min_size=1,
                max_size=30,
            ).filter(lambda s: s.strip()),
            min_size=5,
            max_size=5,
        ),
    )
    @settings(max_examples=50)
    def test_parse_of_conforming_text_never_errors(self, kind, contents):
        names = AGENT_SECTIONS[kind]
        text = "\n".join(
            f"{name.upper()}:\n{content}" for name, content in zip(names, contents)
        )
        report = parse_agent_report(kind, text)
        assert list(report.sections) == list(names)


class TestRunDecomposition:
    def test_four_reports_in_canonical_order(self):
        provider = MockProvider(case_fixtures(PILOT_CASE.data_source_text))
        result = run_decomposition(PILOT_CASE, provider)
        assert [r.kind for r in result.reports] == list(AGENT_ORDER)
        assert len({r.kind for r in result.reports}) == 4
        assert set(result.agent_latencies) == set(AGENT_ORDER)
        assert all(v >= 0 for v in result.agent_latencies.values())

    def test_missing_context_fixture_tagged(self):
        fixtures = case_fixtures(PILOT_CASE.data_source_text)
        del fixtures[(AGENT_PROMPT_TAGS[AgentKind.CONTEXT_ANALYSIS], PILOT_CASE.fingerprint())]
        with pytest.raises(AgentStageError) as excinfo:
            run_decomposition(PILOT_CASE, MockProvider(fixtures))
        assert excinfo.value.kind is AgentKind.CONTEXT_ANALYSIS

    def test_parse_failure_preserves_raw_text(self):
        fixtures = case_fixtures(PILOT_CASE.data_source_text)
        fixtures[(AGENT_PROMPT_TAGS[AgentKind.TASK_ANALYSIS], PILOT_CASE.fingerprint())] = "garbage"
        with pytest.raises(AgentStageError) as excinfo:
            run_decomposition(PILOT_CASE, MockProvider(fixtures))
        assert excinfo.value.kind is AgentKind.TASK_ANALYSIS
        assert excinfo.value.raw_text == "garbage"

    def test_pure_function_of_fixtures_and_case(self):
        provider = MockProvider(case_fixtures(PILOT_CASE.data_source_text))
        first = run_decomposition(PILOT_CASE, provider)
        second = run_decomposition(PILOT_CASE, provider)
        assert [r.sections for r in first.reports] == [r.sections for r in second.reports]
        assert [r.raw_text for r in first.reports] == [r.raw_text for r in second.reports]
