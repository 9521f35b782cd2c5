import pytest

_RESULTS = {}
_SEEN = set()


@pytest.fixture
def acceptance_report(request):
    """Record one summary line per acceptance criterion; returns the verdict."""
    def report(num, title, ok, detail=""):
        _RESULTS[num] = (title, bool(ok), detail)
        return bool(ok)
    return report


def pytest_collection_finish(session):
    for item in session.items:
        if item.module.__name__.endswith("test_acceptance"):
            num = getattr(item.function, "criterion", None)
            if num is not None:
                _SEEN.add(num)


def pytest_terminal_summary(terminalreporter):
    if not _SEEN:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_SEEN):
        if num in _RESULTS:
            title, ok, detail = _RESULTS[num]
            tr.write_line(f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        else:
            tr.write_line(f"criterion {num:>2} FAIL  not evaluated (test errored or was skipped)")
