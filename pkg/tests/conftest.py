import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance outcomes, keyed by criterion number; filled by test_acceptance.py.
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record_acceptance(criterion: int, title: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((title, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[criterion]
        verdict = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        terminalreporter.write_line(f"criterion {criterion}: {verdict}")
        for title, ok, detail in checks:
            terminalreporter.write_line(f"    [{'ok' if ok else 'FAIL'}] {title}: {detail}")
