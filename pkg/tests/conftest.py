"""Collects acceptance outcomes and prints one verdict line per criterion."""

import pytest

CRITERIA = {
    1: "analytic two-rung spectrum and degeneracies",
    2: "cubic roots and Vieta identity",
    3: "golden gamma values from both backends",
    4: "selection rules and symmetries of gamma",
    5: "anisotropy sweep (Fig. 1 data)",
    6: "distance profile and length sweep (Fig. 2 data)",
    7: "CPF, CNOT and SWAP synthesis",
    8: "fluctuation error model (Fig. 3 data)",
    9: "effective model against exact diagonalization",
    10: "single-qubit channel",
    11: "adiabatic criterion",
}

_outcomes: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes.setdefault(marker.args[0], []).append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            terminalreporter.write_line(f"AC{n:<2} NOT RUN  {title}")
            continue
        failed = [name for name, outcome in results if outcome != "passed"]
        verdict = "PASS" if not failed else "FAIL"
        detail = f"  (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"AC{n:<2} {verdict:<8} {title}{detail}")
