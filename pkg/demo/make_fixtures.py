#!/usr/bin/env python3
"""Regenerate demo/fixtures.jsonl for the pilot-communication demo case.

The mock provider resolves responses by (stage tag, case fingerprint), so the
fixture file must be rebuilt whenever demo/case_pilot.txt changes:

    python3 demo/make_fixtures.py
"""
from __future__ import annotations

from pathlib import Path

from basehep.llm import dump_fixture_file, fingerprint_case

HERE = Path(__file__).parent

TASK_ANALYSIS = """\
OVERVIEW:
The crew receives and executes an amended altitude clearance during final
approach. The task chain is: receive clearance, read it back, cross-check it
against the flight management computer, then fly the new level.
CLASSIFICATION:
Communication and verification task within normal flight operations, performed
under radio congestion.
OBJECTIVES:
Capture the amended clearance exactly, confirm it with the controller, and
descend to the cleared flight level only after both pilots verify it.
ERROR_TYPES_AND_IMPACTS:
Readback/hearback errors such as transposed flight levels. The impact is a
level bust and loss of separation, here surfacing as a traffic advisory.
COMPLEXITY_LEVEL:
Moderate: a routine task made harder by frequency congestion, similar call
signs and an incomplete mental picture after the rotation change.
"""

CONTEXT_ANALYSIS = """\
BACKGROUND_CONDITIONS:
Busy terminal airspace, congested frequency, two aircraft with similar call
signs, crew freshly rotated onto the aircraft.
EXECUTION_SUPPORT:
Flight management computer for cross-checking, company verification
procedure, controller hearback as an external barrier.
INITIAL_CONDITIONS:
Amended clearance issued mid-approach before the crew completed their
situation picture; verification step not itemized on the checklist.
ERROR_MEASUREMENT:
One readback error not caught by either pilot or the controller; detected
only via the traffic advisory, then corrected.
"""

COGNITIVE_ANALYSIS = """\
COGNITIVE_ACTIVITIES:
Listening on a congested frequency, encoding the clearance, producing the
readback, comparing cleared level against the programmed level.
COGNITIVE_DEMANDS:
Selective attention against similar call signs, working-memory retention of
the amended level, prospective memory for the verification step.
MENTAL_PROCESSES:
Expectation-driven hearing: with no established mental model for the arrival,
the crew assimilated the clearance to an expected value instead of the
transmitted one.
"""

TIME_ANALYSIS = """\
TEMPORAL_LIMITATIONS:
Final approach compresses all verification into a short window; the amended
clearance arrives late in the descent.
DEADLINES:
The new level must be captured before the descent profile reaches it;
correction had to happen before separation was lost.
TIME_SENSITIVE_CONDITIONS:
Stepped-on transmissions shorten the usable hearback window, and the traffic
advisory demands immediate response.
"""

EXTRACTION = """\
PIF:
RANK 1: SF4
RANK 2: SF0
RANK 3: SF3.3
CFM:
RANK 1: D
RANK 2: D|U
RANK 3: U
TASK_AND_ERROR_MEASURE:
RANK 1: Crew takes over after rotation change without a complete mental picture (readback error not caught)
RANK 2: Railroad operators start new workshift (fail to check hardware unless specified)
PIF_MEASURE:
RANK 1: New workshift, task not specified so no mental model for checking
RANK 2: Inappropriate Bias formed, No Confirmatory Information
OTHER_PIFS_AND_UNCERTAINTY:
RANK 1: Other PIF may exist
RANK 2: Expert judgment
"""


def main() -> None:
    case_text = (HERE / "case_pilot.txt").read_text(encoding="utf-8")
    fingerprint = fingerprint_case(case_text)
    fixtures = {
        ("agent.task", fingerprint): TASK_ANALYSIS,
        ("agent.context", fingerprint): CONTEXT_ANALYSIS,
        ("agent.cognitive", fingerprint): COGNITIVE_ANALYSIS,
        ("agent.time", fingerprint): TIME_ANALYSIS,
        ("attribute.extract", fingerprint): EXTRACTION,
    }
    out = HERE / "fixtures.jsonl"
    out.write_text(dump_fixture_file(fixtures), encoding="utf-8")
    print(f"wrote {out} for case fingerprint {fingerprint}")


if __name__ == "__main__":
    main()
