import io
import json
import os

import numpy as np
import pytest

from mtctraffic.cli import main, read_sample
from mtctraffic.distributions import ALL_FAMILIES, DistSpec
from mtctraffic.fixture import make_fixture
from mtctraffic.ingest import write_csv
from mtctraffic.report import BUNDLED_CONFIG, PACKAGE_DATA
from mtctraffic.traffic import stream

FIXTURE = os.path.join(PACKAGE_DATA, "smart_campus_fixture.csv")
CLASSES = ("event_driven", "quasi_periodic")


def read_dir(path):
    return {name: open(os.path.join(path, name), "rb").read() for name in sorted(os.listdir(path))}


@pytest.fixture(scope="module")
def pipeline_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipe")
    assert main(["pipeline", "--out", str(out)]) == 0
    return read_dir(out)


def write_cfg(path, text):
    path.write_text(text)
    return str(path)


def test_pipeline_produces_all_artifacts(pipeline_out):
    expected = {f"{c}_{k}" for c in CLASSES for k in ("report.json", "table.txt", "histogram.tsv", "tail_errors.json")}
    assert set(pipeline_out) == expected | {"summary.json"}
    for c in CLASSES:
        report = json.loads(pipeline_out[f"{c}_report.json"])
        assert len(report["entries"]) == 5
        assert {e["model_name"] for e in report["entries"]} == {"Gen. Pareto", "Beta", "GEV", "Weibull", "Exponential"}
        hist = pipeline_out[f"{c}_histogram.tsv"].decode().splitlines()
        assert hist[0].split("\t")[:4] == ["bin_left", "bin_right", "count", "density"]
        assert len(hist[0].split("\t")) == 9
    summary = json.loads(pipeline_out["summary.json"])
    assert summary["row_errors"] == [] and summary["readings"] > 10_000


def test_pipeline_is_byte_identical_across_runs_and_threads(pipeline_out, tmp_path):
    for threads in ("1", "4"):
        out = tmp_path / threads
        assert main(["pipeline", "--out", str(out), "--threads", threads]) == 0
        assert read_dir(out) == pipeline_out


def test_pipeline_unknown_measurement(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "p.cfg", f"input = {FIXTURE}\nmeasurements = co2, wind_speed\n")
    out = tmp_path / "out"
    assert main(["pipeline", "--config", cfg, "--out", str(out)]) == 2
    assert "classify" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("text,stage", [
    ("input = x.csv\ncolour = blue\n", "config"),
    ("slot_ms = 60000\n", "config"),
    ("input = x.csv\ninput = y.csv\n", "config"),
    ("input = does_not_exist.csv\n", "ingest"),
    (f"input = {FIXTURE}\ncandidates = Gamma\n", "config"),
    (f"input = {FIXTURE}\nclass.wind = event_driven\n", "classify"),
    (f"input = {FIXTURE}\nslot_ms = 86400000000\n", "rank"),
])
def test_pipeline_input_errors(tmp_path, capsys, text, stage):
    cfg = write_cfg(tmp_path / "p.cfg", text)
    assert main(["pipeline", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert f"error: {stage}:" in capsys.readouterr().err


def test_pipeline_bad_csv_header(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("a,b,c,d\n")
    cfg = write_cfg(tmp_path / "p.cfg", "input = bad.csv\n")
    assert main(["pipeline", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "ingest" in capsys.readouterr().err


def test_pipeline_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["pipeline", "--out", str(blocker)]) == 1
    assert "write" in capsys.readouterr().err


def test_pipeline_override_and_augmentation(tmp_path):
    cfg = write_cfg(tmp_path / "p.cfg", f"input = {FIXTURE}\nslot_ms = 60000\nclass.motion = quasi_periodic\n"
                                        "augment_jitter = 1\naugment_fraction = 0.1\nseed = 3\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["pipeline", "--config", cfg, "--out", str(a)]) == 0
    assert main(["pipeline", "--config", cfg, "--out", str(b)]) == 0
    assert read_dir(a) == read_dir(b)
    assert main(["pipeline", "--config", cfg, "--out", str(b), "--seed", "4"]) == 0
    assert read_dir(a)["event_driven_report.json"] != read_dir(b)["event_driven_report.json"]


def test_bundled_fixture_regenerates():
    buf = io.StringIO()
    write_csv(make_fixture(), buf)
    assert buf.getvalue().encode() == open(FIXTURE, "rb").read()
    assert os.path.exists(BUNDLED_CONFIG)


def test_fixture_scale():
    readings = make_fixture()
    devices = {r.device_id for r in readings}
    assert len(devices) == 20
    span_h = (max(r.timestamp_ms for r in readings) - min(r.timestamp_ms for r in readings)) / 3.6e6
    assert 24 < span_h <= 25


def test_generate_chain_raster(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "g.cfg", "model = chain\np_activate = 1\nq = 0\nhorizon = 10\ndevice_count = 2\n")
    assert main(["generate", "--config", cfg, "--format", "table"]) == 0
    assert capsys.readouterr().out.splitlines() == ["       0 ##########", "       1 ##########"]


def test_generate_outputs(tmp_path):
    cfg = write_cfg(tmp_path / "e.cfg", "model = event_driven\nhorizon = 200\nlambda_t = 0.2\n")
    assert main(["generate", "--config", cfg, "--seed", "5", "--out", str(tmp_path / "e")]) == 0
    files = read_dir(tmp_path / "e")
    assert set(files) == {"traces.json", "devices.tsv"}
    traces = json.loads(files["traces.json"])["traces"]
    assert len(traces) == len(files["devices.tsv"].splitlines())

    cfg = write_cfg(tmp_path / "q.cfg", "model = quasi_periodic\nhorizon = 100\nstart_offset = 2\n"
                                        "nominal_period = 10\ndevice_count = 1\np_activate = 1\n")
    assert main(["generate", "--config", cfg, "--format", "tsv", "--out", str(tmp_path / "q")]) == 0
    rows = read_dir(tmp_path / "q")["traces.tsv"].decode().splitlines()
    assert [r.split("\t")[1] for r in rows[1:]] == [str(s) for s in range(2, 100, 10)]

    cfg = write_cfg(tmp_path / "t.cfg", "model = 3gpp\naccess_model = beta\ndevice_count = 40\nwindow = 5\n")
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "t")]) == 0
    arrivals = json.loads(read_dir(tmp_path / "t")["arrivals.json"])["arrivals"]
    assert len(arrivals) == 40 and all(0 <= a <= 5 for a in arrivals)


@pytest.mark.parametrize("text", ["model = fractal\n", "bogus = 1\n", "model = chain\np_activate = 2\n",
                                  "model = quasi_periodic\njitter = 99\n", "horizon = ten\n"])
def test_generate_config_errors(tmp_path, text):
    cfg = write_cfg(tmp_path / "g.cfg", text)
    assert main(["generate", "--config", cfg]) == 2


def test_ingest_command(tmp_path):
    out = tmp_path / "i"
    assert main(["ingest", FIXTURE, "--slot-ms", "60000", "--out", str(out)]) == 0
    files = read_dir(out)
    assert set(files) == {"traces.json", "row_errors.tsv", "interarrivals_event_driven.tsv",
                          "interarrivals_quasi_periodic.tsv"}
    gaps = [int(v) for v in files["interarrivals_quasi_periodic.tsv"].split()]
    assert min(gaps) >= 1
    assert main(["ingest", str(tmp_path / "missing.csv")]) == 2
    assert main(["ingest"]) == 2


@pytest.fixture
def sample_file(tmp_path):
    x = DistSpec.of("GeneralizedPareto", shape=0.2, scale=1.0).sample(2000, stream(1))
    path = tmp_path / "s.txt"
    path.write_text("# inter-arrival times\n" + "\n".join(repr(v) for v in x.tolist()) + "\n\n")
    return str(path)


def test_read_sample(tmp_path, sample_file):
    assert read_sample(sample_file).size == 2000
    bad = tmp_path / "bad.txt"
    bad.write_text("1\nx\n")
    assert main(["fit", "--input", str(bad)]) == 2
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    assert main(["fit", "--input", str(empty)]) == 2


def test_fit_command(sample_file, capsys):
    assert main(["fit", "--input", sample_file]) == 0
    fits = json.loads(capsys.readouterr().out)
    assert set(fits) == set(ALL_FAMILIES)
    assert abs(fits["GeneralizedPareto"]["spec"]["params"]["shape"] - 0.2) < 0.1


def test_gof_command(sample_file, capsys, tmp_path):
    spec = '{"family": "GeneralizedPareto", "params": {"shape": 0.2, "scale": 1.0}}'
    assert main(["gof", "--input", sample_file, "--spec", spec]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["sample_size"] == 2000 and res["chi2_pass"] is True
    (tmp_path / "spec.json").write_text(spec)
    assert main(["gof", "--input", sample_file, "--spec", str(tmp_path / "spec.json")]) == 0
    assert json.loads(capsys.readouterr().out) == res
    assert main(["gof", "--input", sample_file, "--spec", '{"family": "Nope", "params": {}}']) == 2


def test_report_command(sample_file, capsys, tmp_path):
    assert main(["report", "--input", sample_file]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[2].split()[1].startswith("Gen.")
    assert main(["report", "--input", sample_file, "--format", "json", "--out", str(tmp_path / "r")]) == 0
    report = json.loads(read_dir(tmp_path / "r")["report.json"])
    assert report["entries"][0]["model_name"] == "Gen. Pareto"
    assert main(["report", "--input", sample_file, "--format", "tsv", "--family", "Weibull"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_json_has_no_nan_tokens(tmp_path):
    x = -np.abs(stream(6).normal(size=200)) - 1.0
    path = tmp_path / "neg.txt"
    path.write_text("\n".join(map(repr, x.tolist())))
    out = tmp_path / "o"
    assert main(["report", "--input", str(path), "--format", "json", "--out", str(out)]) == 0
    text = read_dir(out)["report.json"].decode()
    assert "NaN" not in text and "null" in text
    json.loads(text)
