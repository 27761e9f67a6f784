import csv

import pytest

from hsdpa_tsp.cli import comparison_table, main

QUICK = """
[scenario]
name = t
variants = original, enhanced
ftp_rate_kbps = {rates}
seeds = 1
[sim]
duration_s = 4
warmup_s = 1
"""


@pytest.fixture
def scenario(tmp_path):
    def make(rates="128", extra=""):
        p = tmp_path / "s.ini"
        p.write_text(QUICK.format(rates=rates) + extra)
        return str(p)
    return make


def test_defaults(capsys):
    assert main(["defaults"]) == 0
    out = capsys.readouterr().out
    for line in ("flow_control.iub_latency_ms = 20", "voip.packet_bits = 304", "amc.count = 6",
                 "thresholds.r = 20", "flow_control.w_q = 0.7"):
        assert line in out


def test_run_prints_summary_and_traces(scenario, tmp_path, capsys):
    traces = tmp_path / "tr"
    s = scenario()
    text = open(s).read().replace("variants = original, enhanced", "variants = enhanced, original")
    open(s, "w").write(text)
    assert main(["run", "--scenario", s, "--trace-dir", str(traces)]) == 0
    assert "VoIP loss" in capsys.readouterr().out
    for name in ("radio", "grants", "iub", "packets"):
        lines = (traces / f"{name}.csv").read_text().splitlines()
        assert len(lines) > 1


def test_sweep_writes_sorted_csv(scenario, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["sweep", "--scenario", scenario("64, 256"), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [(r["variant"], r["ftp_rate_kbps"]) for r in rows] == [
        ("enhanced", "64.00"), ("enhanced", "256.00"), ("original", "64.00"), ("original", "256.00")]


def test_sweep_is_reproducible_and_seed_override_changes_it(scenario, tmp_path):
    paths = [tmp_path / f"{k}.csv" for k in range(3)]
    s = scenario()
    main(["sweep", "--scenario", s, "--out", str(paths[0])])
    main(["sweep", "--scenario", s, "--out", str(paths[1])])
    main(["sweep", "--scenario", s, "--out", str(paths[2]), "--seed", "99"])
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_bytes() != paths[2].read_bytes()
    assert {r["seed"] for r in csv.DictReader(paths[2].open())} == {"99"}


def test_env_var_mirrors_flag(scenario, tmp_path, monkeypatch):
    out = tmp_path / "env.csv"
    monkeypatch.setenv("HSDPA_TSP_SEED", "42")
    monkeypatch.setenv("HSDPA_TSP_OUT", str(out))
    assert main(["sweep", "--scenario", scenario()]) == 0
    assert {r["seed"] for r in csv.DictReader(out.open())} == {"42"}


def test_compare_single_rate_gives_one_row_per_rate(scenario, capsys):
    assert main(["compare", "--scenario", scenario()]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 and "nrt_loss/O" in lines[0] and lines[1].split()[0] == "128"


def test_compare_needs_both_variants(scenario, capsys):
    s = scenario()
    text = open(s).read().replace("variants = original, enhanced", "variants = original")
    open(s, "w").write(text)
    assert main(["compare", "--scenario", s]) == 2


def test_comparison_table_shape():
    from hsdpa_tsp.engine import MetricsReport
    reps = [MetricsReport(v, 1, rate, 1.0, 0.0, 0.0, 0.0, 0.0, 1e3)
            for v in ("original", "enhanced") for rate in (64.0, 128.0, 256.0, 512.0, 1024.0)]
    lines = comparison_table(reps).splitlines()
    assert len(lines) == 6 and len(lines[0].split()) == 9


def test_bad_scenario_exits_nonzero(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[thresholds]\nh = 400\n")
    assert main(["sweep", "--scenario", str(p)]) == 2
    assert "thresholds.h" in capsys.readouterr().err
    assert main(["run", "--scenario", str(tmp_path / "missing.ini")]) == 2


def test_oracle_check_subset(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert main(["oracle-check", "--n", "2", "--slots", "20000", "--out", str(out)]) == 0
    assert "4 cells" in capsys.readouterr().err
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 36 * 2 and {r["n"] for r in rows} == {"2"}
    assert all(r["pass"] == "pass" for r in rows)


def test_oracle_check_catches_wrong_rt_cap(capsys):
    assert main(["oracle-check", "--n", "2", "--slots", "20000", "--inject-r-offset", "-1"]) == 1


def test_exactly_one_subcommand():
    with pytest.raises(SystemExit):
        main([])
