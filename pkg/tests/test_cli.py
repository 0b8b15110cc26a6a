import io
import json
import os

import numpy as np
import pytest

from capa_secrecy import cli
from capa_secrecy import sweep as sw


def small_config(**overrides):
    cfg = {
        "wavelength_m": 0.1249,
        "aperture_lambdas": 2.0,
        "gamma_e_db": 0.0,
        "k_eves": 3,
        "target_rate_r0": 1.0,
        "quadrature_order": 120,
        "q_floor": 160,
        "n_trials": 20000,
        "seed": 42,
        "axis": "gamma_b_db",
        "values": [0.0, 10.0, 20.0],
        "scenarios": ["SE", "MIE"],
        "evaluators": ["quadrature", "monte-carlo"],
        "outputs": ["rate", "sop"],
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run_sweep_to_string(cfg_dict):
    cfg = sw.config_from_dict(cfg_dict)
    out = io.StringIO()
    code = sw.run_sweep(cfg, out, summary_stream=io.StringIO())
    return code, out.getvalue()


def parse_rows(csv_text):
    lines = csv_text.strip().split("\n")
    assert lines[0] == sw.CSV_HEADER
    rows = []
    for ln in lines[1:]:
        ax, val, scen, ev, metric, res, se, seed, wall = ln.split(",")
        rows.append(dict(axis=ax, value=float(val), scenario=scen,
                         evaluator=ev, metric=metric, result=res,
                         std_err=se, seed=seed, wall=wall))
    return rows


# ---------------------------------------------------------------------------
# configuration handling
# ---------------------------------------------------------------------------

def test_empty_scenarios_exit_2(tmp_path, capsys):
    path = write_config(tmp_path, small_config(scenarios=[]))
    code = cli.main(["sweep", "--config", path])
    assert code == 2
    assert "scenarios" in capsys.readouterr().err


def test_missing_config_exit_2(capsys):
    assert cli.main(["sweep", "--config", "/nonexistent.json"]) == 2


@pytest.mark.parametrize("bad,field", [
    ({"values": [3.0, 1.0]}, "values"),
    ({"values": []}, "values"),
    ({"axis": "bandwidth"}, "axis"),
    ({"evaluators": ["exact"]}, "evaluators"),
    ({"outputs": ["latency"]}, "outputs"),
    ({"n_trials": -5}, "n_trials"),
    ({"frequency": 1.0}, "frequency"),
])
def test_validation_names_field(bad, field):
    with pytest.raises(sw.ConfigError, match=field):
        sw.config_from_dict(small_config(**bad))


def test_table1_preset():
    cfg = sw.config_from_dict({"preset": "table1"})
    assert cfg.gamma_b_db == 20.0
    assert cfg.gamma_e_db == 20.0
    assert cfg.k_eves == 5
    assert cfg.target_rate_r0 == 3.0
    assert cfg.q_floor == 160
    assert cfg.quadrature_order == 1000
    assert cfg.aperture_len_m == pytest.approx(40 * 0.1249)
    with pytest.raises(sw.ConfigError, match="preset"):
        sw.config_from_dict({"preset": "table2"})


def test_config_round_trip():
    cfg = sw.config_from_dict(small_config())
    back = sw.config_from_dict(json.loads(sw.serialize_config(cfg)))
    assert back == cfg


# ---------------------------------------------------------------------------
# sweep runs
# ---------------------------------------------------------------------------

def test_sweep_byte_deterministic(tmp_path):
    path = write_config(tmp_path, small_config())
    out_a, out_b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert cli.main(["sweep", "--config", path, "--out", out_a]) == 0
    assert cli.main(["sweep", "--config", path, "--out", out_b]) == 0
    assert open(out_a, "rb").read() == open(out_b, "rb").read()


def test_sweep_rate_monotone_in_bob_snr():
    code, text = run_sweep_to_string(small_config(
        values=[-10.0, 0.0, 10.0, 20.0, 30.0], scenarios=["SE", "MIE"],
        evaluators=["quadrature"]))
    assert code == 0
    rows = parse_rows(text)
    for scen in ("SE", "MIE"):
        rates = [float(r["result"]) for r in rows
                 if r["scenario"] == scen and r["metric"] == "rate"]
        assert len(rates) == 5
        assert all(b >= a for a, b in zip(rates, rates[1:]))


def test_sweep_k_axis_trends():
    code, text = run_sweep_to_string(small_config(
        axis="k_eves", values=[1, 2, 4, 8], scenarios=["MCE"],
        evaluators=["quadrature"], gamma_b_db=20.0))
    assert code == 0
    rows = parse_rows(text)
    rates = [float(r["result"]) for r in rows if r["metric"] == "rate"]
    sops = [float(r["result"]) for r in rows if r["metric"] == "sop"]
    assert all(b <= a for a, b in zip(rates, rates[1:]))
    assert all(b >= a for a, b in zip(sops, sops[1:]))


def test_sweep_reports_numerical_failures():
    # a vanishing-rate corner trips the closed-form precision guard; the
    # sweep must finish, tag the row, and exit 1
    code, text = run_sweep_to_string(small_config(
        gamma_e_db=100.0, gamma_b_db=0.0, values=[0.0],
        scenarios=["SE"], evaluators=["closed-form"], outputs=["rate"]))
    assert code == 1
    rows = parse_rows(text)
    assert any(r["metric"] == "error"
               and r["result"] == "error:PrecisionLossError" for r in rows)


def test_sweep_cli_overrides(tmp_path):
    path = write_config(tmp_path, small_config())
    out = str(tmp_path / "o.csv")
    code = cli.main(["sweep", "--config", path, "--out", out,
                     "--trials", "15000", "--seed", "9",
                     "--evaluator", "monte-carlo"])
    assert code == 0
    text = open(out).read()
    rows = parse_rows(text)
    assert all(r["evaluator"] == "monte-carlo" for r in rows)


def test_worker_pool_output_identical():
    base = small_config(evaluators=["quadrature", "monte-carlo"])
    _, seq = run_sweep_to_string(base)
    _, par = run_sweep_to_string({**base, "workers": 4})
    assert seq == par


def test_wall_ms_only_with_timing_flag():
    _, text = run_sweep_to_string(small_config(evaluators=["quadrature"]))
    assert all(r["wall"] == "" for r in parse_rows(text))
    _, text = run_sweep_to_string(small_config(evaluators=["quadrature"],
                                               timing=True))
    assert all(float(r["wall"]) >= 0.0 for r in parse_rows(text))


def test_spectrum_cache_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CAPA_CACHE_DIR", str(tmp_path / "cache"))
    path = write_config(tmp_path, small_config(evaluators=["quadrature"],
                                               values=[10.0]))
    out = str(tmp_path / "o.csv")
    assert cli.main(["sweep", "--config", path, "--out", out]) == 0
    assert list((tmp_path / "cache").glob("*.npz"))


# ---------------------------------------------------------------------------
# plot data emission
# ---------------------------------------------------------------------------

def synth_csv(tmp_path, axes, metrics):
    lines = [sw.CSV_HEADER]
    for ax in axes:
        for metric in metrics:
            for v in (1.0, 2.0):
                lines.append(f"{ax},{v},SE,quadrature,{metric},0.5,,1,")
    path = tmp_path / "sweep.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def test_plotdata_cardinality_and_idempotence(tmp_path):
    path = synth_csv(tmp_path, sw.AXES, ("rate", "sop"))
    outdir = str(tmp_path / "plots")
    written = sw.emit_plotdata(path, outdir)
    assert len(written) == 8
    snapshot = {p: open(p, "rb").read() for p in written}
    again = sw.emit_plotdata(path, outdir)
    assert again == written
    for p in written:
        assert open(p, "rb").read() == snapshot[p]


def test_plotdata_single_axis(tmp_path):
    path = synth_csv(tmp_path, ["k_eves"], ("rate",))
    written = sw.emit_plotdata(path, str(tmp_path / "plots"))
    assert [os.path.basename(p) for p in written] == ["rate_vs_k_eves.csv"]


def test_plotdata_malformed_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,sweep\n1,2,3\n")
    code = cli.main(["plotdata", str(bad), "--outdir", str(tmp_path / "p")])
    assert code == 2


def test_spectrum_subcommand(capsys):
    code = cli.main(["spectrum", "--lambda", "0.1249",
                     "--length", str(0.1249 * 2), "--t", "60"])
    assert code == 0
    out = capsys.readouterr().out
    assert "dof=4" in out
    assert "l,sigma_m,epsilon" in out
