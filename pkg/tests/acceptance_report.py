"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

LINES = []


def report(key: str, title: str, ok: bool, detail: str) -> None:
    line = f"{key:<4s}{'PASS' if ok else 'FAIL'}  {title}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line
