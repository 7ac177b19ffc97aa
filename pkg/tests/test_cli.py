import json

from varops.cli import EXIT_CONFIG, EXIT_PASS, main

domination_config = """\
experiment: domination
n: 32
ladder_density: 2
battery:
  kinds: [spike, step]
  count: 2
  seed: 0
"""


def test_run_writes_report(tmp_path):
    config = tmp_path / "domination.yaml"
    config.write_text(domination_config)
    output = tmp_path / "reports" / "domination.json"
    assert main(["run", str(config), "--output", str(output), "--timing"]) == EXIT_PASS
    report = json.loads(output.read_text())
    assert report["experiment"] == "Domination"
    assert report["passed"] and "runtime" in report
    assert len(report["rows"]) == 2


def test_run_config_errors(tmp_path, capsys):
    missing_id = tmp_path / "no_id.yaml"
    missing_id.write_text("n: 32\n")
    assert main(["run", str(missing_id)]) == EXIT_CONFIG
    unknown_key = tmp_path / "unknown.yaml"
    unknown_key.write_text("experiment: bmo\nfrobnicate: 1\n")
    assert main(["run", str(unknown_key)]) == EXIT_CONFIG
    assert main(["run", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_report_merges_directory(tmp_path):
    config = tmp_path / "domination.yaml"
    config.write_text(domination_config)
    reports = tmp_path / "reports"
    main(["run", str(config), "--output", str(reports / "a.json")])
    table = tmp_path / "table.csv"
    assert main(["report", str(reports), "--output", str(table)]) == EXIT_PASS
    lines = table.read_text().splitlines()
    assert lines[0].startswith("instance_id,seed,ratio")
    assert len(lines) == 3


def test_report_of_empty_directory(tmp_path):
    assert main(["report", str(tmp_path)]) == EXIT_CONFIG
