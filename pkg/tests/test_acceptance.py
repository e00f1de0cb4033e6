"""Acceptance criteria A1-A13.

Each criterion prints one ``A<n>: PASS|FAIL`` line (collected in the pytest
terminal summary).  Run directly with ``python tests/test_acceptance.py`` for
the same lines without pytest.
"""
import sys

import pytest

from torsionlab.verification import CHECKS, run_check

RESULTS = {}


@pytest.mark.slow
@pytest.mark.parametrize("name", list(CHECKS))
def test_criterion(name):
    res = run_check(name)
    RESULTS[name] = res
    line = f"{name}: {'PASS' if res.passed else 'FAIL'}  {res.summary}  ({res.seconds:.1f}s)"
    print(line)
    assert res.passed, line


def main() -> int:
    ok = True
    for name in CHECKS:
        res = run_check(name)
        ok &= res.passed
        print(f"{name}: {'PASS' if res.passed else 'FAIL'}  {res.summary}  ({res.seconds:.1f}s)",
              flush=True)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
