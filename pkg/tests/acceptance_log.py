"""Collects one summary line per acceptance criterion."""

_LINES = {}


def record(number, title, ok, detail=""):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    _LINES[number] = line
    print(line)
    return ok


def lines():
    return [_LINES[k] for k in sorted(_LINES)]
