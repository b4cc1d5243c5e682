"""Session-level pytest wiring: print the acceptance results table."""

from _acceptance_log import RESULTS


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, passed, detail in sorted(RESULTS):
        status = "PASS" if passed else "FAIL"
        suffix = f"  [{detail}]" if detail else ""
        terminalreporter.write_line(f"[{number:2d}] {label}: {status}{suffix}")
