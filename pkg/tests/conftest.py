import pytest

# filled by tests/test_acceptance.py: criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion.

    Usage: ``with criterion(5) as detail: ...; detail.append("text")``. The
    line is printed immediately and again in the terminal summary.
    """
    class _Recorder:
        def __init__(self, number):
            self.number = number
            self.detail = []

        def __enter__(self):
            return self.detail

        def __exit__(self, exc_type, exc, tb):
            ok = exc_type is None
            text = "; ".join(self.detail) or (str(exc) if exc else "")
            ACCEPTANCE[self.number] = (ok, text)
            print(f"criterion {self.number}: {'PASS' if ok else 'FAIL'} {text}")
            return False

    return _Recorder


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}")
