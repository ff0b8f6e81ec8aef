import pytest

_LINES: list[str] = []


class AcceptanceLog:
    def __init__(self, request):
        self.request = request

    def record(self, criterion: int, title: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {title}: {detail}"
        _LINES.append(line)
        print(line)
        return ok


@pytest.fixture
def acceptance(request):
    return AcceptanceLog(request)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
