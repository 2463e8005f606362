import pytest
from hypothesis import settings

# fixed example sequence so every run draws the same cases
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

_CRITERIA = []


@pytest.fixture
def criterion():
    """Report one acceptance criterion as a single PASS/FAIL line, then assert it.

    ``checks`` is a list of ``(description, ok)`` pairs.
    """
    def report(tag, checks):
        failed = [d for d, ok in checks if not ok]
        status = "FAIL" if failed else "PASS"
        detail = "; ".join(d for d, _ in checks)
        line = f"{tag} {status}: {detail}"
        _CRITERIA.append((tag, line))
        print(line)
        assert not failed, f"{tag} failed: {'; '.join(failed)}"
    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA, key=lambda c: int(c[0][1:])):
            terminalreporter.write_line(line)
