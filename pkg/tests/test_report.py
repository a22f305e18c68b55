import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from korm import report as rep
from korm.core import KormConfig
from korm.engine import KormRun, korm_run
from korm.errors import KormError


@pytest.fixture(scope="module")
def abalone_report(abalone):
    return rep.korm_report(korm_run(abalone, KormConfig(seed=1)), {"dataset": {"file": "abalone.csv"}})


def test_round_trip_is_byte_identical(abalone_report):
    text = rep.dumps(abalone_report)
    assert rep.dumps(rep.loads(text)) == text
    assert json.loads(text) == rep.loads(text)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(rep.fmt_float(x)) == x
    assert json.loads(rep.fmt_float(x)) == x


def test_integer_valued_floats_stay_floats():
    assert rep.fmt_float(3.0) == "3.0"
    assert isinstance(rep.loads(rep.dumps({"kind": "x", "schema_version": 1, "v": 3.0}))["v"], float)


def test_non_finite_rejected():
    with pytest.raises(rep.ReportError):
        rep.fmt_float(float("nan"))


def test_aggregates_consistent(abalone_report):
    rep.check_consistency(abalone_report)
    agg = abalone_report["aggregates"]
    assert agg["points_read"] == 4174
    assert agg["real_outliers"] == len(abalone_report["real_outliers"])


def test_tampered_report_detected(abalone_report):
    bad = rep.loads(rep.dumps(abalone_report))
    bad["aggregates"]["points_read"] += 1
    with pytest.raises(KormError):
        rep.check_consistency(bad)


def test_phase_csv(abalone_report):
    lines = rep.phases_csv(abalone_report).splitlines()
    assert lines[0].split(",") == list(rep.PHASE_CSV_FIELDS)
    assert len(lines) == 1 + len(abalone_report["phases"])
    assert "\r" not in rep.phases_csv(abalone_report)


def test_empty_report_gives_header_only_csv():
    run = KormRun(KormConfig(), 0, 1.0, [], [], [], [], {}, 0, 0.0)
    report = rep.korm_report(run)
    assert rep.phases_csv(report) == ",".join(rep.PHASE_CSV_FIELDS) + "\n"
    assert rep.plot_csv(rep.plot_rows(report, (0, 1))) == ",".join(rep.PLOT_FIELDS) + "\n"


def test_plot_rows_roles(abalone_report):
    rows = rep.plot_rows(abalone_report, (1, 2))
    roles = {r["role"] for r in rows}
    assert roles <= {"median", "inlier-cleared", "real_outlier"}
    assert sum(r["role"] == "real_outlier" for r in rows) == len(abalone_report["real_outliers"])
    with pytest.raises(rep.ReportError):
        rep.plot_rows(abalone_report, (0, 99))


def test_tae_report_has_no_outlier_rows(tae):
    report = rep.korm_report(korm_run(tae, KormConfig(k=3, score_threshold_O=3, seed=0)))
    assert not any(r["role"] == "real_outlier" for r in rep.plot_rows(report, (0, 1)))


def test_timing_only_when_asked(abalone_report):
    assert "timing" not in abalone_report


def test_loads_rejects_garbage():
    with pytest.raises(rep.ReportError):
        rep.loads("not json")
    with pytest.raises(rep.ReportError):
        rep.loads("[1, 2]")


def test_baseline_report_shape():
    r = rep.baseline_report("dk", {"K": 2}, [(4, 8.0), (0, 2.0)])
    assert r["ranking"][0] == {"index": 4, "score": 8.0}
    assert rep.dumps(rep.loads(rep.dumps(r))) == rep.dumps(r)
