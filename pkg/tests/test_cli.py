"""Command-line interface checks (kept on tiny configs for speed)."""

import json

import pytest

from fabricsim.cli import main
from fabricsim.config import load_preset


def small_config_file(tmp_path, **over):
    cfg = load_preset("overhead-c4-mtu148").replace(
        nodes=2, accelerators_per_node=2,
        loads=(0.2,), duration_us=5.0, **over)
    path = tmp_path / "small.json"
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def test_presets_lists_all(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "scaleup-conf3-8acc" in out
    assert "overhead-c5-mtu4096" in out
    assert len(out.strip().splitlines()) == 20


def test_pcie_latency_values(capsys):
    assert main(["pcie-latency", "4096", "128K"]) == 0
    out = capsys.readouterr().out
    assert "304.688" in out  # 4096 B on Gen3 x16
    assert "131072" in out


def test_pcie_latency_bad_size():
    with pytest.raises(SystemExit) as exc:
        main(["pcie-latency", "12x"])
    assert exc.value.code == 2


def test_overhead_factor_and_bound(capsys):
    assert main(["overhead"]) == 0
    assert "1.138184" in capsys.readouterr().out
    assert main(["overhead", "--adjustment", "16384",
                 "--inter-pct", "20", "--nodes", "128"]) == 0
    out = capsys.readouterr().out
    assert "92127." in out


def test_overhead_bound_needs_all_three(capsys):
    assert main(["overhead", "--adjustment", "16384"]) == 2
    assert "together" in capsys.readouterr().err


def test_fit_roundtrip(tmp_path, capsys):
    data = tmp_path / "fitdata.csv"
    rows = ["inter_pct,throughput_gbps"]
    rows += [f"{x},{2500.0 * x ** -0.9:.6f}" for x in (5, 7.5, 10, 15, 20, 25)]
    data.write_text("\n".join(rows) + "\n")
    assert main(["fit", str(data)]) == 0
    out = capsys.readouterr().out
    assert "best PowerLaw" in out


def test_fit_rejects_wrong_header(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["fit", str(bad)]) == 2
    assert "expected header" in capsys.readouterr().err


def test_fit_missing_file(capsys):
    assert main(["fit", "/nonexistent/data.csv"]) == 2


def test_run_config_file_writes_csv(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    path = small_config_file(tmp_path)
    assert main(["run", str(path), "--output", str(tmp_path / "out.csv")]) == 0
    out = capsys.readouterr().out
    assert "wrote" in out
    text = (tmp_path / "out.csv").read_text()
    assert text.startswith("load_pct,intra_gbps,inter_gbps,total_gbps")
    assert (tmp_path / "out_p99.csv").exists()


def test_run_overrides_and_svg(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    path = small_config_file(tmp_path)
    rc = main(["run", str(path), "--loads", "0.3", "--seed", "7",
               "--duration", "4", "--pattern", "C5",
               "--arbitration", "AgeBased",
               "--output", str(tmp_path / "o.csv"),
               "--svg", str(tmp_path / "chart")])
    assert rc == 0
    assert (tmp_path / "chart-throughput.svg").exists()
    assert (tmp_path / "chart-latency.svg").exists()
    first_row = (tmp_path / "o.csv").read_text().splitlines()[1]
    assert first_row.startswith("30,")
    assert first_row.split(",")[2] == "0.000000"  # C5 has no inter traffic


def test_run_preset_flag(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rc = main(["run", "--preset", "overhead-c5-mtu148",
               "--loads", "0.2", "--duration", "5",
               "--accelerators", "2",
               "--output", str(tmp_path / "p.csv")])
    assert rc == 0
    assert (tmp_path / "p.csv").exists()


def test_run_requires_exactly_one_source():
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 2


def test_run_missing_config_file(capsys):
    assert main(["run", "/nonexistent/cfg.json"]) == 2
    assert "config error" in capsys.readouterr().err


def test_run_bad_loads_value(tmp_path, capsys):
    path = small_config_file(tmp_path)
    assert main(["run", str(path), "--loads", "0.5,x"]) == 2


def test_validate_table(capsys):
    assert main(["validate", "--sizes", "4096,128K"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert len(lines) == 3
    assert lines[1].split()[0] == "4096"
    # plateau close to 12.3 GB/s at 128 KiB
    bw = float(lines[2].split()[1])
    assert 11.5 < bw < 12.7
