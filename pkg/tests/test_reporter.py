"""Tests de l'écriture des rapports"""

import json

from src.reporter import ReportWriter, format_value


def test_format_value():
    assert format_value(None) == ""
    assert format_value(3) == "3"
    assert format_value(1 / 3) == "0.333333"


def test_writer_creates_directory_and_tracks_files(tmp_path):
    writer = ReportWriter(str(tmp_path / "a" / "b"))
    csv_path = writer.write_csv("x.csv", ("k", "v"), [("a", "1"), ("b", "2")])
    json_path = writer.write_json("x.json", {"qoe": "élevée"})
    assert writer.written == [csv_path, json_path]
    assert csv_path.read_text(encoding="utf-8") == "k,v\na,1\nb,2\n"
    text = json_path.read_text(encoding="utf-8")
    assert text.endswith("}\n") and "élevée" in text
    assert json.loads(text) == {"qoe": "élevée"}


def test_jsonl(tmp_path):
    path = ReportWriter(str(tmp_path)).write_jsonl("d.jsonl", [{"n": 0}, {"n": 1}])
    assert path.read_text(encoding="utf-8") == '{"n": 0}\n{"n": 1}\n'
