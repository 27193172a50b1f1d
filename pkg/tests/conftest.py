import pytest

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """record(n, ok, detail): store the outcome of acceptance criterion n."""

    def record(n: int, ok: bool, detail: str) -> bool:
        prev_ok, prev_detail = _ACCEPTANCE.get(n, (True, ""))
        _ACCEPTANCE[n] = (prev_ok and ok, "; ".join(d for d in (prev_detail, detail) if d))
        print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
