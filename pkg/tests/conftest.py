import re

_CRITERION = re.compile(r"::test_(A\d)_")
_results = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    if report.when != "call" and report.outcome == "passed":
        return
    entry = _results.setdefault(m.group(1), {"ok": True, "notes": []})
    if report.outcome != "passed" or hasattr(report, "wasxfail"):
        entry["ok"] = False
        name = report.nodeid.split("::")[-1]
        entry["notes"].append(f"{name} {'xfail' if hasattr(report, 'wasxfail') else report.outcome}")
    for key, value in report.user_properties:
        if key == "measured":
            entry["notes"].append(value)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=lambda k: int(k[1:])):
        entry = _results[key]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"{key} {status}: " + "; ".join(entry["notes"]))
