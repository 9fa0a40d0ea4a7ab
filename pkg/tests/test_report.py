import dataclasses

import pytest

from oppnet.report import emit_report, parse_json, render_csv, render_table
from oppnet.stats import StatsCollector, TABLE_ROWS


def sample(delivery=0.23341):
    rep = StatsCollector().finalize(43200.0)
    return dataclasses.replace(rep, created=1461, delivered=341, delivery_prob=delivery)


def test_csv_four_decimals():
    text = render_csv([("Epidemic", sample())])
    header, row = text.strip().splitlines()
    assert header.split(",") == ["run", *TABLE_ROWS]
    cells = dict(zip(header.split(","), row.split(",")))
    assert cells["delivery_prob"] == "0.2334"
    assert cells["created"] == "1461"
    assert cells["sim_time"] == "43200.0000"


def test_empty_csv_is_header_only():
    assert render_csv([]) == ",".join(["run", *TABLE_ROWS]) + "\n"


def test_json_round_trip(tmp_path):
    reports = [("A", sample()), ("B", sample(0.5))]
    path = tmp_path / "r.json"
    emit_report(reports, "json", path)
    assert parse_json(path.read_text()) == reports


def test_table_has_every_row_label():
    text = render_table([("Epidemic", sample()), ("PROPHET", sample(0.3))])
    lines = text.splitlines()
    assert lines[0] == "MESSAGE STATS REPORT"
    assert [l.split(":")[0] for l in lines[2:]] == list(TABLE_ROWS)
    assert "0.2334" in lines[2 + TABLE_ROWS.index("delivery_prob")]


def test_unknown_format():
    with pytest.raises(ValueError):
        emit_report([("a", sample())], "xml")


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_report([("a", sample())], "csv", tmp_path / "missing" / "x.csv")
