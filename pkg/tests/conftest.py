_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid or report.when != "call" and report.passed:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.failed:
        summary = dict(report.user_properties).get("summary", "")
        if report.failed and not summary:
            summary = str(report.longrepr).strip().splitlines()[-1]
        _ACCEPTANCE[name] = ("PASS" if report.passed else "FAIL", summary)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        status, summary = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{status} {name[5:]}: {summary}")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criteria at full scale")
