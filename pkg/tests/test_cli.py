import json

import pytest

from bellseries import fileio, refdata
from bellseries.model import table_from_run


def test_simulate_is_reproducible(cli, tmp_path):
    out1 = tmp_path / "r1.jsonl"
    out2 = tmp_path / "r2.jsonl"
    args = ["simulate", "--seed", "7", "--slots", "40", "--schedule", "random"]
    assert cli(*args, "--output", str(out1)) == 0
    assert cli(*args, "--output", str(out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_report_matches_analyze(cli, tmp_path, capsys):
    out = tmp_path / "run.jsonl"
    assert cli("simulate", "--seed", "3", "--slots", "100",
               "--schedule", "random", "--output", str(out)) == 0
    sim_report = json.loads(capsys.readouterr().out)
    assert cli("analyze", "--input", str(out)) == 0
    analysis = json.loads(capsys.readouterr().out)
    analysis.pop("detectors")
    assert analysis == sim_report["analysis"]


def test_analyze_empty_event_log(cli, tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert cli("analyze", "--input", str(empty), "--format", "text") == 0
    out = capsys.readouterr().out
    assert "S undefined" in out
    assert "N_c = 0" in out


def test_analyze_writes_report_file(cli, tmp_path, read_json):
    runfile = tmp_path / "run.jsonl"
    fileio.write_run_file(refdata.fig5(), str(runfile))
    report_path = tmp_path / "report.json"
    assert cli("analyze", "--input", str(runfile),
               "--output", str(report_path)) == 0
    report = read_json(report_path)
    assert report["schema_version"] == 1


def test_figures_emit_the_reference_stats(cli, tmp_path, read_json):
    assert cli("figures", "--output", str(tmp_path)) == 0
    stats = read_json(tmp_path / "fig3.stats.json")
    assert (stats["chsh"]["s"]["num"], stats["chsh"]["s"]["den"]) == (16, 7)
    assert (stats["efficiency"]["eta"]["num"],
            stats["efficiency"]["eta"]["den"]) == (14, 15)
    assert stats["cardinality_bound"]["rhs"] == 32

    black = read_json(tmp_path / "fig6-black.stats.json")
    assert black["chsh"]["s"]["num"] == 4
    assert black["reorder"]["success"] is False

    fig8 = read_json(tmp_path / "fig8.table.json")
    assert fig8 == fileio.table_to_json(
        refdata.fig8().table, refdata.fig8().provenance
    )


def test_single_figure_selection(cli, tmp_path):
    assert cli("figures", "--which", "fig7", "--output", str(tmp_path)) == 0
    assert (tmp_path / "fig7.table.json").exists()
    assert not (tmp_path / "fig2.table.json").exists()


def test_completion_command_reproduces_published_table(cli, tmp_path, read_json):
    events = tmp_path / "black.jsonl"
    fileio.write_run_file(refdata.fig6("black"), str(events))
    out = tmp_path / "complete.json"
    assert cli("sica-complete", "--input", str(events),
               "--free-choices", "1,2", "--output", str(out)) == 0
    expected = fileio.table_to_json(refdata.fig8().table, refdata.fig8().provenance)
    assert read_json(out) == expected


def test_reorder_then_condense_pipeline(cli, tmp_path, capsys):
    events = tmp_path / "red.jsonl"
    fileio.write_run_file(refdata.fig6("red"), str(events))
    fixed = tmp_path / "red_fixed.jsonl"
    assert cli("sica-reorder", "--input", str(events),
               "--output", str(fixed)) == 0
    reorder_report = json.loads(capsys.readouterr().out)
    assert reorder_report["success"] is True
    cond = tmp_path / "red_cond.json"
    assert cli("sica-condense", "--input", str(fixed),
               "--output", str(cond)) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["analysis"]["chsh"]["s"] == {
        "num": 2, "den": 1, "decimal": 2.0,
    }


def test_check_command_reports_witnesses(cli, tmp_path, capsys):
    events = tmp_path / "fig5.jsonl"
    fileio.write_run_file(refdata.fig5(), str(events))
    assert cli("sica-check", "--input", str(events)) == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["holds"] is False
    assert verdict["witnesses"][0]["row"] == "a"


def test_fill_zeros_policy(cli, tmp_path, capsys):
    events = tmp_path / "black.jsonl"
    fileio.write_run_file(refdata.fig6("black"), str(events))
    assert cli("fill", "zeros", "--input", str(events)) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["analysis"]["efficiency"]["verdict"] == "not_applicable"


def test_oracle_command(cli, capsys):
    assert cli("oracle", "--objective", "chsh", "--slots", "4",
               "--constraint", "sica") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["max"]["num"] == 2
    assert report["tables_scanned"] == 256


def test_exit_code_for_missing_input(cli, capsys):
    assert cli("analyze", "--input", "/no/such/file.jsonl") == 3
    assert "cannot read" in capsys.readouterr().err


def test_exit_code_for_usage_errors(cli, capsys):
    assert cli("frobnicate") == 2
    capsys.readouterr()
    assert cli("simulate", "--seed", "1", "--slots", "8") == 2
    capsys.readouterr()


def test_exit_code_for_budget_refusal(cli, capsys):
    assert cli("oracle", "--objective", "chsh", "--slots", "7") == 3
    assert "budget" in capsys.readouterr().err


def test_schedule_from_file(cli, tmp_path):
    from bellseries.model import random_per_slot

    sched_path = tmp_path / "sched.json"
    sched_path.write_text(json.dumps(random_per_slot(16, 5).to_json()))
    out = tmp_path / "run.jsonl"
    assert cli("simulate", "--seed", "2", "--slots", "16",
               "--schedule", f"file:{sched_path}", "--output", str(out)) == 0
    run = fileio.read_run_file(str(out))
    assert run.schedule == random_per_slot(16, 5)


def test_text_format_renders_rationals(cli, tmp_path, capsys):
    tabfile = tmp_path / "fig3.json"
    fileio.write_json_atomic(str(tabfile), fileio.table_to_json(refdata.fig3()))
    assert cli("analyze", "--input", str(tabfile), "--format", "text") == 0
    out = capsys.readouterr().out
    assert "S = 16/7" in out
    assert "eta = 14/15" in out
