import pytest

from treespike import cli


@pytest.fixture
def gen_cfg(tmp_path):
    p = tmp_path / "gen.cfg"
    p.write_text(
        "fanouts = 3,2\n"
        "base_rate = 3.0\n"
        "diurnal_amplitude = 0.5\n"
        "day_period = 8\n"
        "n_units = 140\n"
        "delta = 60\n"
        "churn_period = 6\n"
        "churn_boost = 6.0\n"
        "sparsity = 0.2\n"
        "seed = 5\n"
        "spike = all/a1/b0:100:2:12\n"
    )
    return p


@pytest.fixture
def det_cfg(tmp_path):
    p = tmp_path / "det.cfg"
    p.write_text(
        "delta = 60\nshift = 60\nwindow_len = 24\ntheta = 12\nrt = 2.8\n"
        "dt = 8\nalpha = 0.1\nbeta = 0.01\ngamma = 0.1\nperiods = 480\n"
        "xi = 1.0\nsplit_rule = uniform\nref_levels = 2\nlambda = 4\neta = 1\n"
    )
    return p


@pytest.fixture
def stream_files(tmp_path, gen_cfg):
    stream = tmp_path / "s.tsv"
    labels = tmp_path / "l.tsv"
    rc = cli.main(
        ["gen", "--gen-config", str(gen_cfg), "--out-stream", str(stream),
         "--out-labels", str(labels)]
    )
    assert rc == 0
    return stream, labels


class TestGen:
    def test_same_seed_is_byte_identical(self, tmp_path, gen_cfg):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        assert cli.main(["gen", "--gen-config", str(gen_cfg), "--out-stream", str(a)]) == 0
        assert cli.main(["gen", "--gen-config", str(gen_cfg), "--out-stream", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_flag_changes_the_stream(self, tmp_path, gen_cfg):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        cli.main(["gen", "--gen-config", str(gen_cfg), "--out-stream", str(a)])
        cli.main(["gen", "--gen-config", str(gen_cfg), "--seed", "99",
                  "--out-stream", str(b)])
        assert a.read_bytes() != b.read_bytes()

    def test_bad_fanout_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("fanouts = 0,3\n")
        rc = cli.main(["gen", "--gen-config", str(bad), "--out-stream",
                       str(tmp_path / "x.tsv")])
        assert rc == 1


class TestRun:
    def test_reports_byte_identical_across_algorithms(self, tmp_path, stream_files, det_cfg):
        stream, _ = stream_files
        ada, sta = tmp_path / "ada.rep", tmp_path / "sta.rep"
        assert cli.main(["run", str(stream), "--config", str(det_cfg),
                         "--algo", "ada", "--out", str(ada)]) == 0
        assert cli.main(["run", str(stream), "--config", str(det_cfg),
                         "--algo", "sta", "--out", str(sta)]) == 0
        assert ada.read_bytes() == sta.read_bytes()

    def test_run_is_deterministic(self, tmp_path, stream_files, det_cfg):
        stream, _ = stream_files
        a, b = tmp_path / "a.rep", tmp_path / "b.rep"
        cli.main(["run", str(stream), "--config", str(det_cfg), "--out", str(a)])
        cli.main(["run", str(stream), "--config", str(det_cfg), "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_detects_injected_spike(self, tmp_path, stream_files, det_cfg):
        from treespike.streamio import read_labels, read_report

        stream, labels = stream_files
        rep = tmp_path / "r.rep"
        cli.main(["run", str(stream), "--config", str(det_cfg), "--out", str(rep)])
        flagged = {(e.unit_start, e.path) for e in read_report(rep)}
        assert set(read_labels(labels)) <= flagged

    def test_short_stream_is_data_error(self, tmp_path, stream_files, det_cfg, capsys):
        stream, _ = stream_files
        big = tmp_path / "big.cfg"
        big.write_text(det_cfg.read_text().replace("window_len = 24", "window_len = 9000"))
        rc = cli.main(["run", str(stream), "--config", str(big),
                       "--out", str(tmp_path / "x.rep")])
        assert rc == 2
        assert "insufficient bootstrap" in capsys.readouterr().err

    def test_invalid_config_value_is_usage_error(self, tmp_path, stream_files, det_cfg):
        stream, _ = stream_files
        bad = tmp_path / "bad.cfg"
        bad.write_text(det_cfg.read_text().replace("rt = 2.8", "rt = 0.5"))
        rc = cli.main(["run", str(stream), "--config", str(bad),
                       "--out", str(tmp_path / "x.rep")])
        assert rc == 1

    def test_missing_file_is_data_error(self, tmp_path, det_cfg):
        rc = cli.main(["run", str(tmp_path / "nope.tsv"), "--config", str(det_cfg),
                       "--out", str(tmp_path / "x.rep")])
        assert rc == 2

    def test_unknown_flag_is_usage_error(self):
        assert cli.main(["run", "--frobnicate"]) == 1

    def test_trace_lists_member_sets(self, tmp_path, stream_files, det_cfg):
        stream, _ = stream_files
        trace = tmp_path / "t.tsv"
        cli.main(["run", str(stream), "--config", str(det_cfg),
                  "--out", str(tmp_path / "r.rep"), "--trace", str(trace)])
        lines = trace.read_text().splitlines()
        assert lines and all(l.startswith("unit:") and "\tshhh:" in l for l in lines)


class TestEval:
    def test_identity_report_scores_one(self, tmp_path, stream_files, det_cfg, capsys):
        stream, labels = stream_files
        rep = tmp_path / "r.rep"
        cli.main(["run", str(stream), "--config", str(det_cfg), "--out", str(rep)])
        # evaluating a report against labels derived from itself
        from treespike.streamio import read_report, write_labels

        events = read_report(rep)
        self_labels = tmp_path / "self.tsv"
        write_labels(self_labels, [(e.unit_start, e.path) for e in events])
        rc = cli.main(["eval", str(rep), str(self_labels)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "Type1: 1.000000" in out
        assert "Type2: 1.000000" in out
        assert "Type3: 1.000000" in out

    def test_empty_report_has_zero_type2(self, tmp_path, stream_files, capsys):
        _, labels = stream_files
        empty = tmp_path / "empty.rep"
        empty.write_text("")
        rc = cli.main(["eval", str(empty), str(labels)])
        assert rc == 0
        assert "Type2: 0.000000" in capsys.readouterr().out

    def test_descendant_detections_match_ancestor_labels(self, tmp_path, capsys):
        from treespike.detect import make_event
        from treespike.streamio import write_labels, write_report

        rep, labels = tmp_path / "r.rep", tmp_path / "l.tsv"
        write_report(rep, [make_event("all/a1/b0", 900, 30.0, 5.0),
                           make_event("all/a0/b1", 1800, 40.0, 5.0)])
        write_labels(labels, [(900, "all/a1"), (1800, "all/a0")])
        cli.main(["eval", str(rep), str(labels)])
        out = capsys.readouterr().out
        assert "TA: 2" in out and "MA: 0" in out


class TestSeasonalityCommand:
    def test_prints_periods_energies_and_weight(self, tmp_path, capsys):
        gen = tmp_path / "gen.cfg"
        gen.write_text(
            "fanouts = 2,2\nbase_rate = 20\ndiurnal_amplitude = 0.6\n"
            "weekly_amplitude = 0.25\nday_period = 96\nweek_period = 672\n"
            "n_units = 2016\ndelta = 900\nseed = 4\n"
        )
        stream = tmp_path / "s.tsv"
        cli.main(["gen", "--gen-config", str(gen), "--out-stream", str(stream)])
        rc = cli.main(["seasonality", str(stream), "--max-scale", "6"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "dominant periods" in out
        assert "96.00" in out
        assert "wavelet detail energies" in out
        assert "seasonal mixing weight xi" in out


class TestCompareCommand:
    def test_prints_stage_times_and_metrics(self, stream_files, det_cfg, capsys):
        stream, _ = stream_files
        rc = cli.main(["compare", str(stream), "--config", str(det_cfg)])
        out = capsys.readouterr().out
        assert rc == 0
        for stage in ("Reading Traces", "Updating Hierarchies",
                      "Creating Time Series", "Detecting Anomalies"):
            assert stage in out
        assert "accuracy: 1.000000" in out
        assert "mean_abs_series_error: 0.000000" in out

    def test_h_override_changes_accuracy(self, stream_files, det_cfg, capsys):
        stream, _ = stream_files
        cli.main(["compare", str(stream), "--config", str(det_cfg), "--h", "0"])
        out0 = capsys.readouterr().out
        assert "accuracy: " in out0
