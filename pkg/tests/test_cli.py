import json

import pytest

from semistream.cli import COMMANDS, REPORT_KEYS, RunConfig, main, parse_args, run

PETERSEN = """\
# outer cycle, spokes, inner star
0 1
1 2
2 3
3 4
4 0
0 5
1 6
2 7
3 8
4 9
5 7
7 9
9 6
6 8
8 5
"""


@pytest.fixture
def petersen_file(tmp_path):
    p = tmp_path / "petersen.txt"
    p.write_text(PETERSEN)
    return str(p)


@pytest.fixture
def weighted_file(tmp_path):
    p = tmp_path / "weighted.txt"
    p.write_text("10 20 5\n20 30 1\n30 40 5\n40 10 2\n")
    return str(p)


def json_out(capsys, argv):
    status = main(argv + ["--output_format", "json"])
    return status, json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("command", [c for c in COMMANDS if c != "odd-cut"])
def test_every_command_reports_the_shared_keys(capsys, petersen_file, command):
    status, rep = json_out(capsys, [command, petersen_file])
    assert status == 0
    assert set(REPORT_KEYS) <= rep.keys()
    assert rep["epsilon"] == 0.2 and rep["seed"] == 0


def test_match_and_estimates_on_petersen(capsys, petersen_file):
    _, rep = json_out(capsys, ["match", petersen_file])
    assert rep["value"] >= 0.8 * 5 and len(rep["matching"]) == rep["value"]
    _, rep = json_out(capsys, ["estimate-mcm", petersen_file])
    assert 5 - 1e-9 <= rep["value"] <= 6
    _, rep = json_out(capsys, ["gomory-hu", petersen_file])
    assert all(f == pytest.approx(3.0) for _, _, f in rep["tree"])  # Petersen is 3-edge-connected


def test_weighted_input_uses_remapped_ids(capsys, weighted_file):
    _, rep = json_out(capsys, ["match", weighted_file])
    assert rep["value"] == pytest.approx(10.0)
    _, rep = json_out(capsys, ["estimate-mwm", weighted_file, "--epsilon", "0.25"])
    assert 7.5 <= rep["value"] <= 12.5


def test_odd_cut_with_designated_nodes(capsys, petersen_file):
    status, rep = json_out(capsys, ["odd-cut", petersen_file, "--odd", "0,1,2,3"])
    assert status == 0 and rep["value"] == pytest.approx(3.0)
    assert len(set(rep["side"]) & {0, 1, 2, 3}) % 2 == 1
    status, rep = json_out(capsys, ["odd-cut", petersen_file, "--odd", "0,1,2"])
    assert status == 1 and "even" in rep["error"]


def test_check_prints_one_line_per_invariant(capsys, petersen_file):
    assert main(["check", petersen_file]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4 and "FAIL" not in out


def test_text_format_lists_the_report_keys(capsys, petersen_file):
    main(["match", petersen_file])
    out = capsys.readouterr().out
    for k in REPORT_KEYS:
        assert f"{k}: " in out


def test_missing_file_and_bad_input_exit_one(capsys, tmp_path):
    status, rep = json_out(capsys, ["match", str(tmp_path / "nope.txt")])
    assert status == 1 and "error" in rep
    bad = tmp_path / "bad.txt"
    bad.write_text("0 x\n")
    status, rep = json_out(capsys, ["match", str(bad)])
    assert status == 1 and "error" in rep


def test_usage_errors_exit_one(petersen_file):
    for argv in (["frobnicate", petersen_file], ["match", petersen_file, "--epsilon", "0.9"], ["match"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1


def test_exhausted_budget_exits_two_with_the_report(capsys, petersen_file):
    status, rep = json_out(capsys, ["match", petersen_file, "--passes_budget", "1"])
    assert status == 2
    assert rep["passes"] > 1 and "budget" in rep["error"] and "value" in rep


def test_seed_environment_override(monkeypatch, petersen_file):
    monkeypatch.setenv("SEMISTREAM_SEED", "17")
    assert parse_args(["match", petersen_file, "--seed", "3"]).seed == 17
    monkeypatch.setenv("SEMISTREAM_SEED", "")
    assert parse_args(["match", petersen_file, "--seed", "3"]).seed == 3


def test_same_seed_same_report(petersen_file):
    a = run(RunConfig("estimate-mcm", petersen_file, p=1, seed=4))[1]
    b = run(RunConfig("estimate-mcm", petersen_file, p=1, seed=4))[1]
    assert a == b


def test_run_config_validation(petersen_file):
    with pytest.raises(ValueError):
        RunConfig("match", petersen_file, p=-1)
    with pytest.raises(ValueError):
        RunConfig("match", petersen_file, output_format="xml")
