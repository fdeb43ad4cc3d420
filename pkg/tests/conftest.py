"""Shared fixtures; prints the acceptance criterion summary at the end."""

CRITERIA: list[tuple[int, str, bool, str]] = []


def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
    CRITERIA.append((number, title, bool(passed), detail))
    print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'} {title}: {detail}")
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(CRITERIA):
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
