"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

_LINES: dict[str, str] = {}


def record(key: str, ok: bool, detail: str) -> bool:
    line = f"criterion {key:<3} {'PASS' if ok else 'FAIL'}  {detail}"
    _LINES[key] = line
    print(line)
    return ok


def lines() -> list[str]:
    def order(k: str):
        num = "".join(c for c in k if c.isdigit())
        return int(num), k
    return [_LINES[k] for k in sorted(_LINES, key=order)]
