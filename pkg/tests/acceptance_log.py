"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

LINES = []


def record(criterion: str, passed: bool, detail: str = "") -> None:
    LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}" + (f"  ({detail})" if detail else ""))
