"""Terminal reporting for the acceptance suite.

Verdict lines recorded via `record_verdict` are replayed after the test
summary so they are visible regardless of output capture.
"""

_VERDICTS = []


def record_verdict(num, name, passed):
    _VERDICTS.append((num, name, passed))


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, passed in sorted(_VERDICTS):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num} ({name}): {verdict}")
