"""Compare CSV output with committed golden files."""

import math
from pathlib import Path

GOLDEN = Path(__file__).parent / "golden"
TOLERANCE = 1e-9


def _number(field):
    try:
        return float(field)
    except ValueError:
        return None


def assert_matches_golden(text: str, name: str, tolerance: float = TOLERANCE) -> None:
    expected = (GOLDEN / name).read_text(encoding="utf-8").splitlines()
    actual = text.splitlines()
    assert len(actual) == len(expected), f"{name}: {len(actual)} lines, golden has {len(expected)}"
    for number, (got, want) in enumerate(zip(actual, expected), start=1):
        if want.startswith("#") or number == 2:
            assert got == want, f"{name}:{number}: {got!r} != {want!r}"
            continue
        got_fields, want_fields = got.split(","), want.split(",")
        assert len(got_fields) == len(want_fields), f"{name}:{number}: field count differs"
        for g, w in zip(got_fields, want_fields):
            gv, wv = _number(g), _number(w)
            if gv is None or wv is None:
                assert g == w, f"{name}:{number}: {g!r} != {w!r}"
            elif math.isnan(wv):
                assert math.isnan(gv), f"{name}:{number}: expected nan, got {g}"
            else:
                assert abs(gv - wv) <= tolerance, f"{name}:{number}: {gv!r} differs from golden {wv!r}"
