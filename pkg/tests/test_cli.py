import json

import pytest
from typer.testing import CliRunner

from api.routes.tools.event_log.functions import export, ingest
from cli.config import read_config_file, resolve
from cli.main import app
from core.config import settings as app_settings
from core.errors import ParameterError, ParseError
from tests.conftest import random_log, write_profile

runner = CliRunner()


@pytest.fixture
def flagged_log(tmp_path):
    path = tmp_path / "orders.csv"
    export(random_log(seed=1, N=3000, M=6, with_flags=True, persistence=0.5), path)
    return path


def test_simulate_writes_a_log_with_its_configuration(tmp_path):
    out = tmp_path / "sim.csv"
    result = runner.invoke(app, ["simulate", "--model", "public-info", "--n", "2000", "--m", "20", "--seed", "4", "--out", str(out)])

    assert result.exit_code == 0, result.output
    log = ingest(out)
    assert log.N == 2000
    assert not log.has_price_flags
    assert log.metadata["model"] == "public_info"
    assert log.metadata["run.command"] == "simulate"
    assert log.metadata["run.seed"] == "4"


def test_decompose_outputs(tmp_path, flagged_log):
    out = tmp_path / "dec"
    result = runner.invoke(app, ["decompose", "--in", str(flagged_log), "--tau-max", "10", "--out", str(out), "--conditional"])

    assert result.exit_code == 0, result.output
    for name in ("decomposition.csv", "splitting_ratio.csv", "diagonal.csv", "scatter.csv", "conditional_decomposition.csv"):
        assert (out / name).is_file()
    header = (out / "decomposition.csv").read_text().splitlines()
    assert "# tau_max=10" in header
    assert "tau,C,C_split,C_herd,S,term2_total,approximation_error" in header
    summary = json.loads((out / "summary.json").read_text())
    assert summary["N"] == 3000
    assert summary["config"]["command"] == "decompose"


def test_config_file_with_flag_override(tmp_path, flagged_log):
    config = tmp_path / "run.cfg"
    config.write_text(f"# decomposition run\ninput = {flagged_log}\ntau-max = 4\nout = {tmp_path / 'a'}\n")

    result = runner.invoke(app, ["decompose", "--config", str(config), "--tau-max", "6"])

    assert result.exit_code == 0, result.output
    lines = (tmp_path / "a" / "decomposition.csv").read_text().splitlines()
    assert "# tau_max=6" in lines
    assert lines[-1].startswith("6,")


def test_config_file_errors(tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("tau_max 4\n")
    with pytest.raises(ParseError) as excinfo:
        read_config_file(config)
    assert excinfo.value.line == 1
    with pytest.raises(ParameterError):
        resolve("decompose", {"input": "x.csv"})
    with pytest.raises(ParameterError):
        resolve("decompose", {"input": "x.csv", "out": "y", "bogus": 1})


def test_map_commands(tmp_path):
    investors = tmp_path / "investors.csv"
    runner.invoke(app, ["simulate", "--model", "public-info", "--n", "5000", "--m", "50", "--out", str(investors)])
    profile = tmp_path / "profile.csv"
    write_profile(profile, [0.4, 0.3, 0.2, 0.1])

    fixed = runner.invoke(
        app,
        ["map", "--kind", "fixed", "--profile", str(profile), "--in", str(investors), "--out", str(tmp_path / "fixed.csv"), "--map-out", str(tmp_path / "map.csv")],
    )
    assert fixed.exit_code == 0, fixed.output
    brokers = ingest(tmp_path / "fixed.csv")
    assert set(brokers.labels) <= {"B000", "B001", "B002", "B003"}
    assert brokers.metadata["brokerage"] == "fixed_random"
    assert (tmp_path / "map.csv").read_text().count("\n") > 50

    dynamic = runner.invoke(app, ["map", "--kind", "dynamic", "--profile", str(profile), "--in", str(investors), "--out", str(tmp_path / "dyn.csv")])
    assert dynamic.exit_code == 0, dynamic.output

    no_phi = runner.invoke(app, ["map", "--kind", "correlated", "--profile", str(profile), "--in", str(investors), "--out", str(tmp_path / "c.csv")])
    assert no_phi.exit_code == 2


def test_correlated_map_of_an_imitation_log(tmp_path):
    investors = tmp_path / "imitation.csv"
    simulated = runner.invoke(app, ["simulate", "--model", "imitation", "--n", "3000", "--m", "300", "--seed", "2", "--out", str(investors)])
    assert simulated.exit_code == 0, simulated.output
    profile = tmp_path / "profile.csv"
    write_profile(profile, [0.5, 0.3, 0.2])

    result = runner.invoke(
        app,
        ["map", "--kind", "correlated", "--phi", "0.5", "--profile", str(profile), "--in", str(investors), "--out", str(tmp_path / "brokers.csv")],
    )

    assert result.exit_code == 0, result.output
    assert ingest(tmp_path / "brokers.csv").metadata["phi"] == "0.5"


def test_nulltest_and_its_errors(tmp_path, flagged_log):
    out = tmp_path / "null"
    ok = runner.invoke(app, ["nulltest", "--in", str(flagged_log), "--replicates", "100", "--tau-max", "5", "--out", str(out)])
    assert ok.exit_code == 0, ok.output
    assert (out / "nulltest.csv").is_file()

    too_few = runner.invoke(app, ["nulltest", "--in", str(flagged_log), "--replicates", "50", "--out", str(out)])
    assert too_few.exit_code == 2
    unreachable = runner.invoke(app, ["nulltest", "--in", str(flagged_log), "--replicates", "100", "--alpha", "0.001", "--out", str(out)])
    assert unreachable.exit_code == 10


def test_condprob(tmp_path, flagged_log):
    out = tmp_path / "cp"
    result = runner.invoke(app, ["condprob", "--in", str(flagged_log), "--tau-max", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "condprob.json").read_text())
    assert set(summary) >= {"config", "mean_P_same", "mean_P_diff_change", "mean_P_same_nochange"}

    unflagged = tmp_path / "unflagged.csv"
    unflagged.write_text("sign,agent\nB,a\nS,b\nB,a\nB,b\n")
    missing = runner.invoke(app, ["condprob", "--in", str(unflagged), "--tau-max", "1", "--out", str(out)])
    assert missing.exit_code == 7


def test_parse_and_lag_errors_exit_codes(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("sign,agent\nB,a\nQ,b\n")
    assert runner.invoke(app, ["ingest-check", "--in", str(bad)]).exit_code == 3

    tiny = tmp_path / "tiny.csv"
    tiny.write_text("sign,agent\nB,a\nS,b\n")
    assert runner.invoke(app, ["decompose", "--in", str(tiny), "--tau-max", "5", "--out", str(tmp_path / "o")]).exit_code == 5
    assert runner.invoke(app, ["ingest-check", "--in", str(tmp_path / "nope.csv")]).exit_code == 2


def test_ingest_check_report(tmp_path, flagged_log):
    report = tmp_path / "report.json"
    result = runner.invoke(app, ["ingest-check", "--in", str(flagged_log), "--out", str(report)])
    assert result.exit_code == 0, result.output
    payload = json.loads(report.read_text())
    assert payload["N"] == 3000
    assert len(payload["agents"]) == 6


def test_scenario_command(tmp_path):
    out = tmp_path / "scn"
    result = runner.invoke(
        app,
        ["scenario", "--name", "any+DRB", "--sweep", "0,1", "--seeds", "0:1:2", "--n", "5000", "--m", "50", "--n-brokers", "5", "--tau-max", "5", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "scenario.json").read_text())
    assert [point["value"] for point in summary["points"]] == [0.0, 1.0]
    assert (out / "scenario.csv").read_text().count("\n") >= 4


def test_nulltest_and_condprob_default_output_next_to_the_input(tmp_path, flagged_log):
    nulltest = runner.invoke(app, ["nulltest", "--input", str(flagged_log), "--replicates", "100", "--alpha", "0.05", "--tau-max", "5"])
    assert nulltest.exit_code == 0, nulltest.output
    assert (tmp_path / "orders_nulltest" / "nulltest.csv").is_file()

    condprob = runner.invoke(app, ["condprob", "--input", str(flagged_log), "--tau-max", "5"])
    assert condprob.exit_code == 0, condprob.output
    assert (tmp_path / "orders_condprob" / "condprob.json").is_file()


def test_invalid_scenario_sweep_is_a_parameter_error(tmp_path):
    result = runner.invoke(app, ["scenario", "--name", "imitation+FRB", "--sweep", "0,1.5", "--out", str(tmp_path / "o")])
    assert result.exit_code == 2
    assert "phi" in result.output


def test_workers_flag_leaves_global_settings_alone(tmp_path, flagged_log):
    before = app_settings.WORKERS
    result = runner.invoke(app, ["decompose", "--in", str(flagged_log), "--tau-max", "5", "--workers", "3", "--out", str(tmp_path / "w")])
    assert result.exit_code == 0, result.output
    assert app_settings.WORKERS == before
