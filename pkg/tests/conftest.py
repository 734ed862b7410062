import pytest

_outcomes: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call" and call.excinfo is None:
        return
    n, title = mark.args
    entry = _outcomes.setdefault(n, {"title": title, "ok": True, "detail": []})
    if call.excinfo is not None:
        entry["ok"] = False
    detail = getattr(item, "_criterion_detail", None)
    if call.when == "call" and detail:
        entry["detail"].append(detail)


@pytest.fixture
def report_detail(request):
    """Attach a one-line summary (measured values) to the criterion of this test."""
    def attach(text):
        request.node._criterion_detail = text
    return attach


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        e = _outcomes[n]
        status = "PASS" if e["ok"] else "FAIL"
        detail = "; ".join(e["detail"])
        terminalreporter.write_line(f"criterion {n} {status}: {e['title']}"
                                    + (f" [{detail}]" if detail else ""))
