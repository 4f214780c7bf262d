"""End-to-end pipeline: stage cascade, reports, serialization."""

from __future__ import annotations

import json

from raceprune.ir import AccessId
from raceprune.pipeline import (
    STAGES,
    AnalysisConfig,
    emit_report,
    facts_payload,
    report_payload,
    run_pipeline,
)


def _aid(text: str) -> AccessId:
    func, block, index, mode = text.rsplit(":", 3)
    return AccessId(func, block, int(index), mode)


SHOWCASE_VERDICTS = {
    "setup:b0:2:w": ("eliminated", "stc", None),
    "bump_request:b0:0:r": ("eliminated", "ea", None),
    "bump_request:b0:2:w": ("eliminated", "ea", None),
    "worker:b0:2:r": ("eliminated", "lo", None),
    "worker:b0:4:w": ("eliminated", "lo", None),
    "worker:b0:7:r": ("eliminated", "swmr", None),
    "worker:b0:12:w": ("instrumented", None, None),
    "worker:b0:14:w": ("instrumented", None, None),
    "worker:b0:17:w": ("instrumented", None, None),
    "worker:b1:0:r": ("eliminated", "de_dom", "worker:b0:17:w"),
}


def test_showcase_goldens(showcase):
    report = run_pipeline(showcase)
    got = {
        v.access.text: (
            v.verdict,
            v.by,
            v.witness.text if v.witness is not None else None,
        )
        for v in report.verdicts
    }
    assert got == SHOWCASE_VERDICTS
    assert report.q_orig == 10
    assert report.q_opt == 3
    assert report.sir == 0.7


def test_stage_order_is_fixed():
    assert STAGES == ("stc", "swmr", "lo", "ea", "de_dom", "de_postdom")


def test_earlier_stage_wins_attribution(showcase):
    # worker's first read is lock-protected and also repeats before its
    # block ends; the attribution names the first stage that fires
    report = run_pipeline(showcase)
    assert report.verdict_of(_aid("worker:b0:2:r")).by == "lo"

    without_lo = run_pipeline(showcase, AnalysisConfig(enable_lo=False))
    v = without_lo.verdict_of(_aid("worker:b0:2:r"))
    assert v.verdict == "eliminated"
    assert v.by == "de_postdom"


def test_disabling_everything_keeps_everything(showcase):
    config = AnalysisConfig(
        enable_stc=False,
        enable_swmr=False,
        enable_lo=False,
        enable_ea=False,
        enable_de=False,
    )
    report = run_pipeline(showcase, config)
    assert report.q_opt == report.q_orig == 10
    assert report.sir == 0.0
    assert all(v.verdict == "instrumented" for v in report.verdicts)


def test_disabling_postdom_only(diamond):
    report = run_pipeline(diamond, AnalysisConfig(de_postdom=False))
    assert report.verdict_of(_aid("probe:b3:0:r")).by == "de_dom"
    assert report.verdict_of(_aid("probe:b4:0:r")).verdict == "instrumented"


def test_instrumented_set_matches_verdicts(showcase, diamond):
    for program in (showcase, diamond):
        report = run_pipeline(program)
        from_verdicts = {
            v.access for v in report.verdicts if v.verdict == "instrumented"
        }
        assert report.instrumented == frozenset(from_verdicts)
        assert report.q_opt == len(report.instrumented)


def test_eliminated_by_filters(showcase):
    report = run_pipeline(showcase)
    de_only = report.eliminated_by("de_dom", "de_postdom")
    assert {a.text for a in de_only} == {"worker:b1:0:r"}
    everything = report.eliminated_by(*STAGES)
    assert len(everything) == report.q_orig - report.q_opt


def test_report_payload_round_trips_through_json(showcase):
    report = run_pipeline(showcase)
    payload = json.loads(json.dumps(report_payload(report)))
    assert payload["metrics"] == {"q_orig": 10, "q_opt": 3, "sir": 0.7}
    rows = {row["id"]: row for row in payload["accesses"]}
    assert rows["worker:b1:0:r"]["by"] == "de_dom"
    assert rows["worker:b1:0:r"]["witness"] == "worker:b0:17:w"
    assert rows["worker:b0:12:w"]["verdict"] == "instrumented"
    assert "by" not in rows["worker:b0:12:w"]


def test_text_report_shape(showcase):
    report = run_pipeline(showcase)
    lines = emit_report(report, fmt="text").splitlines()
    assert lines[-3:] == ["q_orig\t10", "q_opt\t3", "sir\t0.7"]
    verdict_lines = lines[:-3]
    assert len(verdict_lines) == 10
    for line in verdict_lines:
        parts = line.split("\t")
        assert len(parts) == 4
        assert parts[1] in ("eliminated", "instrumented")


def test_json_report_is_the_payload(showcase):
    report = run_pipeline(showcase)
    assert json.loads(emit_report(report, fmt="json")) == report_payload(report)


def test_facts_payload_shape(showcase):
    report = run_pipeline(showcase)
    facts = json.loads(json.dumps(facts_payload(report)))
    for key in (
        "access_cells",
        "address_taken",
        "cell_owner",
        "escaped_cells",
        "extern_exposed",
        "lock_entry",
        "may_call",
        "mt_functions",
        "mt_main_blocks",
    ):
        assert key in facts
    assert facts["mt_functions"] == ["bump_request", "worker"]


def test_config_echo_mentions_faults(showcase):
    config = AnalysisConfig(faults=frozenset({"lo.ignore_unlock"}))
    assert config.echo()["faults"] == ["lo.ignore_unlock"]
    report = run_pipeline(showcase, config)
    payload = report_payload(report)
    assert payload["config"]["faults"] == ["lo.ignore_unlock"]


def test_fault_changes_the_verdict_table(showcase):
    clean = run_pipeline(showcase)
    broken = run_pipeline(
        showcase, AnalysisConfig(faults=frozenset({"swmr.ignore_mt_writers"}))
    )
    assert broken.q_opt != clean.q_opt or any(
        b.by != c.by for b, c in zip(broken.verdicts, clean.verdicts)
    )
