import pytest

from treespike import GeneratorConfig, generate
from treespike.detect import make_event
from treespike.streamio import (
    StreamFormatError,
    format_ts,
    parse_ts,
    read_config_mapping,
    read_kv_file,
    read_labels,
    read_report,
    read_stream,
    write_labels,
    write_report,
    write_stream,
)


class TestTimestamps:
    def test_round_trip(self):
        ts = 1588291200
        assert parse_ts(format_ts(ts)) == ts
        assert format_ts(ts) == "2020-05-01T00:00:00Z"

    def test_explicit_offset_accepted(self):
        assert parse_ts("2020-05-01T02:00:00+02:00") == 1588291200

    def test_garbage_rejected(self):
        with pytest.raises(StreamFormatError):
            parse_ts("yesterday")


class TestStreamFiles:
    def test_round_trip_preserves_schema_and_counts(self, tmp_path):
        stream = generate(GeneratorConfig(fanouts=(3, 2), n_units=30, seed=2))
        path = tmp_path / "s.tsv"
        write_stream(path, stream.leaf_paths, stream.records)
        schema, records = read_stream(path)
        assert [schema.path_str(l) for l in schema.leaf_ids] == stream.leaf_paths
        assert len(records) == len(stream.records)
        assert records[0].timestamp == stream.records[0][0]

    def test_missing_header_rejected(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("2020-05-01T00:00:00Z\tall/x\n")
        with pytest.raises(StreamFormatError, match="header"):
            read_stream(p)

    def test_undeclared_category_rejected(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("#path\tall/x\n2020-05-01T00:00:00Z\tall/zzz\n")
        with pytest.raises(StreamFormatError, match="zzz"):
            read_stream(p)

    def test_interior_category_rejected(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("#path\tall/x/y\n2020-05-01T00:00:00Z\tall/x\n")
        with pytest.raises(StreamFormatError, match="leaf"):
            read_stream(p)

    def test_malformed_body_line_points_at_line_number(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("#path\tall/x\nnot a record\n")
        with pytest.raises(StreamFormatError, match="2"):
            read_stream(p)


class TestReports:
    def test_round_trip_and_sorting(self, tmp_path):
        events = [
            make_event("all/b", 1800, 20.0, 4.0),
            make_event("all/a", 900, 30.0, 10.0),
        ]
        p = tmp_path / "r.tsv"
        write_report(p, events)
        back = read_report(p)
        assert [e.key for e in back] == [(900, "all/a"), (1800, "all/b")]
        assert back[0].actual == 30.0
        assert back[0].ratio == pytest.approx(3.0)

    def test_bad_field_rejected(self, tmp_path):
        p = tmp_path / "r.tsv"
        p.write_text("unit_start:2020-05-01T00:00:00Z\tnonsense\n")
        with pytest.raises(StreamFormatError):
            read_report(p)


class TestLabels:
    def test_round_trip_dedup_sorted(self, tmp_path):
        p = tmp_path / "l.tsv"
        write_labels(p, [(1800, "all/b"), (900, "all/a"), (900, "all/a")])
        assert read_labels(p) == [(900, "all/a"), (1800, "all/b")]


class TestConfigFiles:
    def test_kv_parsing_with_comments(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# comment\ntheta = 25\n\nrt = 2.8\n")
        assert read_kv_file(p) == [("theta", "25"), ("rt", "2.8")]
        assert read_config_mapping(p) == {"theta": "25", "rt": "2.8"}

    def test_duplicate_key_rejected_in_mapping(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("theta = 25\ntheta = 30\n")
        with pytest.raises(StreamFormatError, match="duplicate"):
            read_config_mapping(p)

    def test_missing_equals_rejected(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("theta 25\n")
        with pytest.raises(StreamFormatError):
            read_kv_file(p)
