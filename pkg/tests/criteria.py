"""Collects one verdict line per acceptance criterion for the terminal summary."""

RESULTS = []


def verdict(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    RESULTS.append((number, line))
    print(line)
    assert ok, line
