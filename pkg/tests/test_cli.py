import json
import subprocess
import sys

import numpy as np
import pytest

from noisy_ica_kit import __version__
from noisy_ica_kit.cli import main

HEADER = f"# noisy-ica-kit v{__version__} "


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def data_cfg(tmp_path):
    return write(tmp_path / "data.json", {"k": 2, "rho": 0.1, "seed": 3, "n": 3000, "sources": [{"kind": "uniform"}] * 2})


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_writes_header_and_rows(data_cfg, tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert run(["gen", "--config", data_cfg, "--out", str(out)], capsys)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == HEADER + "gen"
    assert lines[1] == "x1,x2"
    assert len(lines) == 2 + 3000


def test_gen_seed_override(data_cfg, capsys):
    a = run(["gen", "--config", data_cfg], capsys)[1]
    b = run(["gen", "--config", data_cfg, "--seed", "4"], capsys)[1]
    c = run(["gen", "--config", data_cfg], capsys)[1]
    assert a == c and a != b


def test_demix_score_meta(data_cfg, tmp_path, capsys):
    F = tmp_path / "F.csv"
    assert run(["demix", "--config", data_cfg, "--contrast", "cgf", "--out", str(F)], capsys)[0] == 0
    assert F.read_text().startswith(HEADER + "demix\n")
    assert np.loadtxt(F, delimiter=",", comments="#").shape == (2, 2)

    code, out, _ = run(["score", "--config", data_cfg, "--demixing", str(F), "--probes", "20"], capsys)
    report = json.loads(out)
    assert code == 0 and report["num_probes"] == 20 and report["corrected"] is True
    unc = json.loads(run(["score", "--config", data_cfg, "--demixing", str(F), "--uncorrected"], capsys)[1])
    assert unc["corrected"] is False

    code, out, _ = run(
        ["meta", "--config", data_cfg, "--probes", "20", "--candidate-file", f"ext={F}"], capsys
    )
    result = json.loads(out)
    assert code == 0
    assert [c["name"] for c in result["per_candidate"]] == ["PEGI-k4", "CHF", "CGF", "ext"]
    assert result["meta_amari"] < 0.2


def test_data_from_csv(data_cfg, tmp_path, capsys):
    x = tmp_path / "x.csv"
    run(["gen", "--config", data_cfg, "--out", str(x)], capsys)
    cfg = write(tmp_path / "c.json", {"data": str(x), "seed": 1})
    code, out, _ = run(["meta", "--config", cfg, "--probes", "10"], capsys)
    assert code == 0 and "meta_amari" not in json.loads(out)


def test_experiment_determinism(tmp_path, capsys):
    cfg = write(tmp_path / "l.json", {"experiment": "landscape", "resolution": 10, "n": 2000})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["landscape", "--config", cfg, "--out", str(a)], capsys)[0] == 0
    assert run(["landscape", "--config", cfg, "--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith(HEADER + "landscape\n")


def test_output_key_in_config(tmp_path, capsys):
    target = tmp_path / "o.csv"
    cfg = write(tmp_path / "l.json", {"experiment": "landscape", "resolution": 8, "n": 500, "output": str(target)})
    run(["landscape", "--config", cfg], capsys)
    assert target.read_text().startswith(HEADER)


def test_empty_sweep(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", {"experiment": "sweep_n", "values": []})
    code, out, _ = run(["sweep", "--config", cfg], capsys)
    assert code == 0 and len(out.splitlines()) == 2


@pytest.mark.parametrize(
    "args,cfg",
    [
        (["table"], {"experiment": "landscape"}),
        (["landscape"], {"experiment": "landscape", "k": 3}),
        (["gen"], {"k": 2, "rho": -1.0}),
        (["table"], {"experiment": "table_kurtosis", "candidates": ["nope"]}),
    ],
)
def test_config_errors(tmp_path, capsys, args, cfg):
    path = write(tmp_path / "bad.json", cfg)
    code, _, err = run(args + ["--config", path], capsys)
    assert code == 2 and err.startswith("noisy-ica: error:")


def test_unreadable_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["gen", "--config", str(bad)], capsys)[0] == 2
    assert run(["gen", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2


def test_bad_flags(capsys):
    with pytest.raises(SystemExit):
        main(["meta", "--config", "x", "--candidate-file", "novalue"])
    with pytest.raises(SystemExit):
        main(["gen", "--config", "x", "--seed", "-3"])
    with pytest.raises(SystemExit):
        main(["gen", "--config", "x", "--probes", "0"])


def test_console_script(tmp_path):
    cfg = write(tmp_path / "l.json", {"experiment": "landscape", "resolution": 8, "n": 500})
    out = subprocess.run(
        [sys.executable, "-m", "noisy_ica_kit.cli", "landscape", "--config", cfg],
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.startswith(HEADER + "landscape")
