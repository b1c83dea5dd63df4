import oracles  # noqa: F401  (keeps the helper importable from every test module)

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


def record_criterion(number: int, ok: bool, detail: str) -> str:
    line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
