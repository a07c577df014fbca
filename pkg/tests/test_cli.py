import json

import pytest

from lpcmbench.cli import main
from lpcmbench.entropy import reports_from_csv
from lpcmbench.ingest import load_dataset


@pytest.fixture
def synth_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"sampling_rate": 8000, "duration": 0.5, "noise_lsb": 2.0, "seed": 4}))
    out = tmp_path / "s.raw"
    assert main(["synth", "--spec", str(spec), "-o", str(out), "--out", str(tmp_path / "m")]) == 0
    return out


def test_synth_then_entropy(synth_file, tmp_path):
    out = tmp_path / "e"
    assert main(["entropy", str(synth_file), "--dataset-id", "syn", "--out", str(out), "--format", "markdown",
                 "--dump-histograms"]) == 0
    rows = reports_from_csv((out / "entropy.csv").read_text())
    assert [r[1] for r in rows] == ["voltage", "current"]
    assert all(r[0] == "syn" and 0 < r[5] <= 16 for r in rows)
    assert (out / "entropy.md").read_text().startswith("|")
    assert (out / "hist_voltage.dat").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "entropy" and len(manifest["config_hash"]) == 64
    assert manifest["inputs"][0]["sha256"]


def test_synth_manifest_records_seed(synth_file, tmp_path):
    m = json.loads((tmp_path / "m" / "manifest.json").read_text())
    assert m["seeds"] == {"synth": 4}


def test_bench_top_30_and_deterministic(synth_file, tmp_path):
    runs = []
    for i in range(2):
        out = tmp_path / f"b{i}"
        assert main(["bench", str(synth_file), "--matrix", "default", "--top", "30", "--jobs", "1",
                     "--out", str(out)]) == 0
        runs.append(out)
    table = (runs[0] / "ranking.md").read_text()
    assert sum(1 for line in table.splitlines()[2:] if line.startswith("|")) == 30
    for name in ("ranking.md", "records.csv"):
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes()


def test_bench_specs_filter_stdout(synth_file, capsys):
    assert main(["bench", str(synth_file), "--specs", "row+store,zstd:3", "--format", "csv"]) == 0
    out, err = capsys.readouterr()
    lines = out.strip().splitlines()
    assert lines[0].startswith("dataset_id,")
    assert len(lines) > 2
    assert err.startswith("manifest: ")


def test_report_rerender(synth_file, tmp_path, capsys):
    main(["bench", str(synth_file), "--specs", "store,lzma:0", "--out", str(tmp_path / "b")])
    capsys.readouterr()
    assert main(["report", str(tmp_path / "b" / "records.csv"), "--top", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("| s |") == 2


def test_chunk_sweep(synth_file, tmp_path):
    out = tmp_path / "c"
    assert main(["chunk-sweep", str(synth_file), "--plan", "0.0078125,0.015625", "--out", str(out)]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[1].startswith("row+zstd:9,8192,")


def test_convert_roundtrip_leaves_input(synth_file, tmp_path):
    before = synth_file.read_bytes()
    wav = tmp_path / "s.wav"
    assert main(["convert", str(synth_file), "-o", str(wav), "--out", str(tmp_path / "v")]) == 0
    back = tmp_path / "back.csv"
    assert main(["convert", str(wav), "-o", str(back), "--out", str(tmp_path / "v2")]) == 0
    assert synth_file.read_bytes() == before
    a, b = load_dataset(synth_file), load_dataset(back)
    assert [c.samples.tolist() for c in a.channels] == [c.samples.tolist() for c in b.channels]


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["entropy", "--bogus", "x"])
    assert info.value.code == 2


def test_data_error_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav file at all")
    assert main(["entropy", str(bad)]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: ContainerError:")


def test_missing_file_exits_1(tmp_path, capsys):
    assert main(["entropy", str(tmp_path / "nope.wav")]) == 1
    assert capsys.readouterr().err.startswith("error: ")
