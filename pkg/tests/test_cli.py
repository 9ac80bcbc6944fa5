import csv

import numpy as np
import pytest

from mabc.cli import main
from mabc.frame import frames_equal, read_y4m, write_y4m
from tests.test_gop import small_video


@pytest.fixture(scope="module")
def y4m_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("clips") / "clip.y4m"
    path.write_bytes(write_y4m(small_video(frames=5)))
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestEncodeDecode:
    def test_round_trip(self, y4m_path, tmp_path, capsys):
        stream = tmp_path / "out.mabc"
        stats = tmp_path / "stats.csv"
        assert run("encode", "-i", y4m_path, "-o", stream, "--quality", "1",
                   "--gop", "4", "--stats", stats) == 0
        out = capsys.readouterr().out
        assert "bpp=" in out and "frame" in out
        decoded_path = tmp_path / "dec.y4m"
        assert run("decode", "-i", stream, "-o", decoded_path) == 0
        original = read_y4m(y4m_path.read_bytes())
        decoded = read_y4m(decoded_path.read_bytes())
        assert len(decoded.frames) == len(original.frames)
        with open(stats) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 5
        assert {r["type"] for r in rows} == {"I", "B"}

    def test_lossless_flag(self, y4m_path, tmp_path):
        stream = tmp_path / "l.mabc"
        decoded_path = tmp_path / "l.y4m"
        assert run("encode", "-i", y4m_path, "-o", stream, "--lossless", "--gop", "4") == 0
        assert run("decode", "-i", stream, "-o", decoded_path) == 0
        original = read_y4m(y4m_path.read_bytes())
        decoded = read_y4m(decoded_path.read_bytes())
        for a, b in zip(original.frames, decoded.frames):
            assert frames_equal(a, b)

    def test_no_flow_prediction_marks_dash(self, y4m_path, tmp_path, capsys):
        stream = tmp_path / "nfp.mabc"
        assert run("encode", "-i", y4m_path, "-o", stream, "--gop", "4",
                   "--no-flow-prediction") == 0
        out = capsys.readouterr().out
        assert "d=-" in out and "d=1" not in out

    def test_fixed_d_implies_no_adaptive(self, y4m_path, tmp_path, capsys):
        stream = tmp_path / "fd.mabc"
        assert run("encode", "-i", y4m_path, "-o", stream, "--gop", "4", "--fixed-d", "2") == 0
        assert "d=2" in capsys.readouterr().out

    def test_fixed_d_invalid_value_usage_error(self, y4m_path, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run("encode", "-i", y4m_path, "-o", tmp_path / "x.mabc", "--fixed-d", "3")
        assert exc.value.code == 2

    def test_missing_input_is_runtime_error(self, tmp_path, capsys):
        assert run("encode", "-i", tmp_path / "nope.y4m", "-o", tmp_path / "x.mabc") == 1
        assert "error" in capsys.readouterr().err

    def test_truncated_stream_reports_frame(self, y4m_path, tmp_path, capsys):
        stream = tmp_path / "t.mabc"
        run("encode", "-i", y4m_path, "-o", stream, "--gop", "4")
        stream.write_bytes(stream.read_bytes()[:-20])
        assert run("decode", "-i", stream, "-o", tmp_path / "t.y4m") == 1
        assert "frame" in capsys.readouterr().err


class TestSweepAndBdrate:
    def test_rdsweep_and_bdrate(self, y4m_path, tmp_path, capsys):
        a = tmp_path / "a.csv"
        assert run("rdsweep", "-i", y4m_path, "--qualities", "0", "1", "2", "3",
                   "--csv", a, "--gop", "4", "--label", "base") == 0
        with open(a) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert [r["quality"] for r in rows] == ["0", "1", "2", "3"]

        capsys.readouterr()
        assert run("bdrate", a, a) == 0
        assert "+0.00%" in capsys.readouterr().out

    def test_bdrate_doubled_curve(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        with open(a, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "quality", "bpp", "psnr"])
            for bpp, p in ((0.1, 30), (0.2, 33), (0.4, 36), (0.8, 39)):
                w.writerow(["x", 0, bpp, p])
        with open(b, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "quality", "bpp", "psnr"])
            for bpp, p in ((0.2, 30), (0.4, 33), (0.8, 36), (1.6, 39)):
                w.writerow(["x", 0, bpp, p])
        assert run("bdrate", a, b) == 0
        assert "+100.0" in capsys.readouterr().out

    def test_rdsweep_needs_two_qualities(self, y4m_path, tmp_path):
        assert run("rdsweep", "-i", y4m_path, "--qualities", "1",
                   "--csv", tmp_path / "x.csv") == 2


class TestMetrics:
    def test_metrics_self(self, y4m_path, tmp_path, capsys):
        out_csv = tmp_path / "m.csv"
        assert run("metrics", "--original", y4m_path, "--decoded", y4m_path,
                   "--bits", "1000", "--csv", out_csv) == 0
        out = capsys.readouterr().out
        assert "mean psnr=99.0000" in out and "bpp=" in out
        with open(out_csv) as fh:
            assert len(list(csv.DictReader(fh))) == 5
