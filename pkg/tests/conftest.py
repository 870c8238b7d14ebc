import pytest

_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    props = dict(rep.user_properties)
    if "criterion" in props and (rep.when == "call" or rep.outcome == "failed"):
        detail = props.get("detail") or (str(call.excinfo.value).splitlines() or [""])[0] if call.excinfo else props.get("detail", "")
        _results.append((props["criterion"], rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _results:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
