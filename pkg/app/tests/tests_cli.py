import json

import pytest

from app.cli import EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION, main


@pytest.fixture
def adversary_file(tmp_path):
    path = tmp_path / "adversary.json"
    assert main(["gen", "lf-adversary", "--s", "1", "--c", "2", "--out", str(path)]) == EXIT_OK
    return path


@pytest.fixture
def plain_file(tmp_path):
    """Instance without deadlines"""
    path = tmp_path / "plain.json"
    assert main(["gen", "random", "--seed", "4", "--pages", "2", "--requests", "4", "--out", str(path)]) == EXIT_OK
    return path


def test_run_lf_on_adversary(adversary_file, capsys):
    assert main(["run", "--instance", str(adversary_file), "--policy", "lf"]) == EXIT_OK
    out = capsys.readouterr().out

    assert "max_delay_factor = 2" in out
    assert "preemptions = 0" in out


def test_run_grouped_matches(adversary_file, capsys):
    assert main(["run", "--instance", str(adversary_file), "--policy", "lf", "--grouped"]) == EXIT_OK
    assert "max_delay_factor = 2" in capsys.readouterr().out


def test_run_writes_transcript_and_log(adversary_file, tmp_path, capsys):
    out = tmp_path / "run.json"
    log = tmp_path / "events.log"
    code = main([
        "run", "--instance", str(adversary_file), "--policy", "ssfw", "--c", "2",
        "--mode", "preemptive", "--out", str(out), "--log", str(log),
    ])

    assert code == EXIT_OK
    assert json.loads(out.read_text())["instance"]["setting"] == "unicast"
    assert log.read_text().startswith("t=0 arrive")

    assert main(["validate", "--instance", str(adversary_file), "--transcript", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.strip().endswith("valid")

    assert main(["metrics", "--transcript", str(out), "--metric", "max_response"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("max_response = ")

    assert main(["metrics", "--transcript", str(out), "--report"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("page,index,arrival,deadline")


def test_run_requires_c_for_waiting_policies(adversary_file, capsys):
    assert main(["run", "--instance", str(adversary_file), "--policy", "ssfw"]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_run_slotted_preemptive_is_usage_error(tmp_path, capsys):
    path = tmp_path / "slotted.json"
    main(["gen", "random", "--slotted", "--deadlines", "random", "--out", str(path)])
    code = main(["run", "--instance", str(path), "--policy", "ssfw", "--c", "2", "--mode", "preemptive"])

    assert code == EXIT_USAGE
    assert "slotted requires nonpreemptive" in capsys.readouterr().err


def test_run_without_deadlines_is_mismatch(plain_file):
    assert main(["run", "--instance", str(plain_file), "--policy", "ssfw", "--c", "2"]) == EXIT_MISMATCH
    assert main(["run", "--instance", str(plain_file), "--policy", "fifo"]) == EXIT_OK


def test_run_missing_instance_file(tmp_path):
    assert main(["run", "--instance", str(tmp_path / "missing.json"), "--policy", "fifo"]) == EXIT_USAGE


def test_bad_rational_argument():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--instance", "x.json", "--policy", "fifo", "--speed", "1.5"])
    assert exc.value.code == 2


def test_lf_lowerbound(capsys):
    assert main(["lf-lowerbound", "--s", "1", "--c", "2"]) == EXIT_OK
    out = capsys.readouterr().out

    assert "k = 3" in out
    assert "jobs = 23" in out
    assert "ratio = 2" in out
    assert "FAIL" not in out


def test_lf_lowerbound_k_too_small(capsys):
    assert main(["lf-lowerbound", "--s", "1", "--c", "2", "--k", "2"]) == EXIT_USAGE
    assert "R_0" in capsys.readouterr().err


def test_oracle_cap(adversary_file, tmp_path, capsys):
    code = main(["oracle", "--instance", str(adversary_file), "--metric", "max_delay_factor", "--cap", "5"])
    assert code == EXIT_USAGE
    assert "oracle cap is 5" in capsys.readouterr().err

    out = tmp_path / "opt.json"
    code = main([
        "oracle", "--instance", str(adversary_file), "--metric", "max_delay_factor",
        "--cap", "23", "--out", str(out),
    ])
    assert code == EXIT_OK
    assert json.loads(out.read_text())["objective"] == "1"


def test_oracle_without_deadlines(plain_file):
    assert main(["oracle", "--instance", str(plain_file), "--metric", "max_delay_factor"]) == EXIT_MISMATCH
    assert main(["oracle", "--instance", str(plain_file), "--metric", "max_response"]) == EXIT_OK


def test_validate_reports_foreign_transcript(adversary_file, plain_file, tmp_path, capsys):
    out = tmp_path / "plain-run.json"
    main(["run", "--instance", str(plain_file), "--policy", "fifo", "--out", str(out)])
    capsys.readouterr()

    assert main(["validate", "--instance", str(adversary_file), "--transcript", str(out)]) == EXIT_VERIFICATION
    assert "transcript embeds a different instance" in capsys.readouterr().out


def test_verify_fifo_writes_csv(tmp_path, capsys):
    report = tmp_path / "fifo.csv"
    code = main([
        "verify", "fifo", "--max-pages", "2", "--horizon", "2", "--max-requests", "2",
        "--workers", "1", "--csv", str(report),
    ])

    assert code == EXIT_OK
    assert report.read_text().splitlines()[0] == "instance,online,optimum,ratio,bound"
    assert "bound = 2" in capsys.readouterr().err


def test_verify_ssfw_random_family(capsys):
    code = main([
        "verify", "ssfw", "--family", "random", "--seeds", "10", "--max-requests", "3",
        "--horizon", "3", "--max-pages", "2", "--workers", "1",
    ])

    assert code == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out.startswith("instance,online,optimum,ratio,bound")
    assert "instances = 10" in captured.err


def test_gen_adversary_with_plan(tmp_path):
    plan = tmp_path / "plan.json"
    instance = tmp_path / "expanded.json"
    code = main([
        "gen", "lf-adversary", "--s", "1", "--c", "2", "--expand",
        "--out", str(instance), "--plan", str(plan),
    ])

    assert code == EXIT_OK
    assert json.loads(plan.read_text())["k"] == 3
    assert len(json.loads(instance.read_text())["requests"]) == 23


def test_gen_random_rejects_bad_params(capsys):
    assert main(["gen", "random", "--weights", "inverse_slack"]) == EXIT_USAGE
    assert "inverse_slack weights need deadlines" in capsys.readouterr().err


def test_metrics_on_transcript_without_finishes(adversary_file, tmp_path, capsys):
    out = tmp_path / "run.json"
    assert main(["run", "--instance", str(adversary_file), "--policy", "lf", "--out", str(out)]) == EXIT_OK
    document = json.loads(out.read_text())
    document["finishes"] = []
    out.write_text(json.dumps(document))
    capsys.readouterr()

    assert main(["metrics", "--transcript", str(out)]) == EXIT_USAGE
    assert "has no finish record" in capsys.readouterr().err


def test_metrics_on_transcript_with_empty_instance(tmp_path, capsys):
    path = tmp_path / "empty.json"
    path.write_text('{"instance": {}, "attempts": []}')

    assert main(["metrics", "--transcript", str(path)]) == EXIT_USAGE
    assert "malformed transcript" in capsys.readouterr().err
