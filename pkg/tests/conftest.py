import pytest

_results: dict[str, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid, title = marker.args
    entry = _results.setdefault(cid, {"title": title, "status": "PASS", "seconds": 0.0, "why": ""})
    if report.when == "call":
        entry["seconds"] += report.duration
    if report.skipped:
        entry["status"] = "SKIP"
        if isinstance(report.longrepr, tuple):
            entry["why"] = report.longrepr[2]
    elif report.failed:
        entry["status"] = "FAIL"
        entry["why"] = report.longreprtext.strip().splitlines()[-1] if report.longreprtext else ""


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_results, key=lambda c: int(c.lstrip("AC"))):
        r = _results[cid]
        line = f"{cid:<4} {r['status']:<4} {r['title']} ({r['seconds']:.2f} s)"
        if r["why"]:
            line += f"  [{r['why']}]"
        tr.write_line(line)
