"""Acceptance criteria 1-13, each at its frozen tolerance.

Every criterion prints one ``PASS``/``FAIL`` line; the lines are collected in
``RESULTS`` and repeated in the pytest terminal summary. Run directly with
``python tests/test_acceptance.py`` for the lines alone.
"""
import time

import pytest

from kfl import verify

RESULTS = {}

TITLES = {
    1: "CZ reconstruction",
    2: "Whitney invariants",
    3: "CZ constants stability",
    4: "feasibility sandwich",
    5: "lower-bound consistency",
    6: "Holmstedt window",
    7: "interpolation equivalence",
    8: "RH refinement dichotomy",
    9: "maximal operator stability",
    10: "rearrangement exactness",
    11: "Hardy inequality",
    12: "Fefferman-Phong constant",
    13: "q = inf characterisation",
}


def run_criterion(k):
    t0 = time.perf_counter()
    rep = verify.ACCEPTANCE[k](verify.Checker())
    line = f"[{k:2d}] {TITLES[k]} ({time.perf_counter() - t0:.1f} s): {rep.line()}"
    RESULTS[k] = line
    print(line)
    return rep


@pytest.mark.slow
@pytest.mark.parametrize("k", sorted(verify.ACCEPTANCE), ids=lambda k: f"criterion{k:02d}")
def test_criterion(k):
    rep = run_criterion(k)
    assert rep.passed, rep.line()


if __name__ == "__main__":
    import sys

    sys.exit(0 if all([run_criterion(k).passed for k in sorted(verify.ACCEPTANCE)]) else 1)
