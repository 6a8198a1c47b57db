import pytest

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(key, title): acceptance criterion, summarized at the end")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _acceptance[marker.args[0]] = (marker.args[1], rep.outcome, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance, key=lambda k: int(k[2:])):
        title, outcome, duration = _acceptance[key]
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{verdict} {key:<5} {title} ({duration:.2f} s)")
