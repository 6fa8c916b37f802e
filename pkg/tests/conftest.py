import numpy as np
import pytest

from bellsphere.states import BlochVector

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def random_unit_vectors(rng: np.random.Generator, n: int) -> list[BlochVector]:
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return [BlochVector.from_array(row) for row in v]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance():
    """Record one acceptance criterion outcome; printed in the terminal summary."""

    def record(label: str, ok: bool, detail: str) -> None:
        _ACCEPTANCE.append((label, bool(ok), detail))
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
