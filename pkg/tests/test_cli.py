import json

import pytest

from src.cli import EXIT_FAILURE, EXIT_IO, EXIT_OK, EXIT_USAGE, main, parse_config
from src.config import Config
from src.database import CampaignRepository
from src.errors import UsageError
from src.experiment import Protocol
from src.oracle import brute_force_ground_state
from src.sk_model import generate_couplings

SMALL_RUN = ["run", "--sizes", "8,10,12", "--lambdas", "10", "--nreal", "2", "--starts", "2", "--seed", "3"]


@pytest.fixture(autouse=True)
def isolated_output(monkeypatch, tmp_path):
    monkeypatch.setattr(Config, "OUTPUT_DIR", str(tmp_path / "results"))
    monkeypatch.setattr(Config, "WORKERS_RAW", "1")


# ----- configuration parsing -----

def test_parse_full_fixed_starts_config():
    config = parse_config([
        "run", "--protocol", "fixed-starts", "--sizes", "25,50,100", "--lambdas", "1,10,100",
        "--nreal", "50", "--starts", "N", "--seed", "0",
    ])
    assert config.protocol is Protocol.FIXED_STARTS
    assert config.sizes == [25, 50, 100]
    assert config.lambdas == [1.0, 10.0, 100.0]
    assert config.nreal == 50
    assert config.starts_per_realization == "N"
    assert config.master_seed == 0


def test_parse_fixed_budget_config():
    config = parse_config(["run", "--protocol", "fixed-budget", "--sizes", "200", "--budget-flips", "20000"])
    assert config.protocol is Protocol.FIXED_BUDGET
    assert config.flip_budget == 20000


def test_fixed_budget_without_budget_is_a_usage_error():
    with pytest.raises(UsageError, match="flip_budget"):
        parse_config(["run", "--protocol", "fixed-budget", "--sizes", "200"])


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--lambdas", "0"],
        ["run", "--lambdas", "1,-2"],
        ["run", "--sizes", "ten"],
        ["run", "--nreal", "0"],
        ["run", "--starts", "many"],
        ["run", "--unknown-flag"],
        ["oracle", "--n", "4", "--seed", "1"],
    ],
)
def test_bad_arguments_are_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_config(argv)


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps({"sizes": [10, 20], "nreal": 7, "master_seed": 5}))
    config = parse_config(["run", "--config", str(path), "--nreal", "3"])
    assert config.sizes == [10, 20]
    assert config.nreal == 3
    assert config.master_seed == 5


def test_config_file_with_unknown_keys_is_rejected(tmp_path):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps({"sizes": [10], "temperature": 0.5}))
    with pytest.raises(UsageError, match="temperature"):
        parse_config(["run", "--config", str(path)])


@pytest.mark.parametrize(
    "content, field",
    [
        ({"nreal": 2.7}, "nreal"),
        ({"sizes": [25.9]}, "sizes"),
        ({"starts_per_realization": 3.5}, "starts_per_realization"),
        ({"nreal": True}, "nreal"),
        ({"protocol": "fixed-budget", "flip_budget": 100.5}, "flip_budget"),
    ],
)
def test_non_integral_config_values_are_rejected(tmp_path, content, field):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(content))
    with pytest.raises(UsageError, match=field):
        parse_config(["run", "--config", str(path)])


def test_integral_floats_in_config_file_are_accepted(tmp_path):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps({"sizes": [10.0, 20], "nreal": 4.0}))
    config = parse_config(["run", "--config", str(path)])
    assert config.sizes == [10, 20]
    assert config.nreal == 4
    assert isinstance(config.nreal, int)


def test_missing_config_file_is_a_usage_error(tmp_path):
    with pytest.raises(UsageError):
        parse_config(["run", "--config", str(tmp_path / "absent.json")])


# ----- run -----

def test_run_writes_csv(tmp_path):
    out = tmp_path / "out.csv"
    assert main(SMALL_RUN + ["--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("protocol,n,lambda,")


def test_run_defaults_to_the_output_directory():
    assert main(SMALL_RUN + ["--format", "json"]) == EXIT_OK
    path = Config.database_path().parent / "fixed-starts-seed3.json"
    data = json.loads(path.read_text())
    assert len(data["cells"]) == 3
    assert len(data["fits"]) == 1


def test_run_print_config(capsys):
    assert main(SMALL_RUN + ["--print-config"]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["sizes"] == [8, 10, 12]
    assert printed["master_seed"] == 3


def test_run_exit_codes(tmp_path):
    assert main(["run", "--lambdas", "0"]) == EXIT_USAGE
    assert main(["run", "--protocol", "fixed-budget"]) == EXIT_USAGE
    assert main(SMALL_RUN + ["--out", str(tmp_path)]) == EXIT_IO


def test_run_rejects_bad_worker_setting(monkeypatch):
    monkeypatch.setattr(Config, "WORKERS_RAW", "zero")
    assert main(SMALL_RUN + ["--out", "-"]) == EXIT_USAGE


def test_record_and_history(tmp_path, capsys):
    assert main(SMALL_RUN + ["--out", str(tmp_path / "out.csv"), "--record", "--label", "smoke"]) == EXIT_OK

    campaigns = CampaignRepository(Config.database_path()).list_campaigns()
    assert len(campaigns) == 1
    assert campaigns[0].label == "smoke"

    assert main(["history"]) == EXIT_OK
    assert main(["history", "--show", campaigns[0].id[:8]]) == EXIT_OK
    assert main(["history", "--show", "nope"]) == EXIT_USAGE
    assert main(["fit", "--campaign", campaigns[0].id]) == EXIT_OK


# ----- fit -----

def test_fit_from_results_file(tmp_path):
    results = tmp_path / "out.csv"
    fits = tmp_path / "fits.csv"
    assert main(SMALL_RUN + ["--out", str(results)]) == EXIT_OK
    assert main(["fit", str(results), "--out", str(fits)]) == EXIT_OK
    assert fits.read_text().splitlines()[0] == "lambda,exponent,prefactor,r_squared,sizes_used,sizes_excluded"


def test_fit_with_too_few_sizes_fails(tmp_path):
    results = tmp_path / "out.csv"
    assert main(SMALL_RUN + ["--out", str(results)]) == EXIT_OK
    assert main(["fit", str(results), "--exclude-sizes", "8"]) == EXIT_FAILURE


def test_fit_needs_exactly_one_source():
    assert main(["fit"]) == EXIT_USAGE


def test_fit_missing_file_is_an_io_error(tmp_path):
    assert main(["fit", str(tmp_path / "absent.csv")]) == EXIT_IO


# ----- oracle and sampler -----

def test_oracle_json(capsys):
    assert main(["oracle", "--n", "8", "--seed", "4", "--count-stable", "--json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    expected = brute_force_ground_state(generate_couplings(8, 4))
    assert data["energy_per_spin"] == expected.energy_per_spin
    assert data["n_stable_states"] >= 2


def test_oracle_table():
    assert main(["oracle", "--n", "6", "--seed", "1"]) == EXIT_OK


def test_oracle_size_limit_is_a_usage_error():
    assert main(["oracle", "--n", "25", "--seed", "1"]) == EXIT_USAGE


def test_sample_depth_to_stdout(capsys):
    assert main(["sample-depth", "--lambda", "2", "--count", "5", "--seed", "1"]) == EXIT_OK
    draws = [float(line) for line in capsys.readouterr().out.splitlines()]
    assert len(draws) == 5
    assert all(d <= 0.0 for d in draws)


def test_sample_depth_to_file(tmp_path):
    out = tmp_path / "draws.txt"
    assert main(["sample-depth", "--lambda", "2", "--count", "10", "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 10


def test_sample_depth_rejects_bad_arguments():
    assert main(["sample-depth", "--lambda", "0"]) == EXIT_USAGE
    assert main(["sample-depth", "--lambda", "1", "--count", "0"]) == EXIT_USAGE
