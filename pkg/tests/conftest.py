import json
import os
import sys

import pytest

from dlczmux.cli import main

ACCEPTANCE: list[tuple[str, bool, str]] = []


def record(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.append((name, passed, detail))
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def run_cli(tmp_path, capsys):
    """Run the CLI in-process; returns (exit_code, output_text, stderr)."""

    def run(*args, config=None, name="out.csv"):
        argv = list(args)
        if config is not None:
            cfg_path = tmp_path / f"cfg_{len(os.listdir(tmp_path))}.json"
            cfg_path.write_text(json.dumps(config))
            argv += ["--config", str(cfg_path)]
        out = tmp_path / name
        argv += ["--out", str(out), "--quiet"]
        code = main(argv)
        err = capsys.readouterr().err
        text = out.read_text() if out.exists() else ""
        return code, text, err

    return run
