"""Prints one [PASS]/[FAIL] line per acceptance criterion after a run."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in report.nodeid:
                continue
            label = report.nodeid.split("::")[-1]
            doc = getattr(report, "acceptance_label", None)
            lines.append((label, doc, outcome))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for label, doc, outcome in sorted(lines):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {doc or label}")


def pytest_runtest_makereport(item, call):
    # Attach the criterion description (test docstring) to the report object.
    if call.when != "call":
        return None
    import pytest

    outcome = pytest.TestReport.from_item_and_call(item, call)
    doc = (item.function.__doc__ or "").strip().splitlines()
    outcome.acceptance_label = doc[0] if doc else None
    return outcome
