import sys
from pathlib import Path

# Make the shared oracle helpers importable as a plain module.
sys.path.insert(0, str(Path(__file__).parent))

# Criterion id -> (passed, detail), filled in by the acceptance suite.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}: {detail}")
