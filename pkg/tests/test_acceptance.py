"""One test per acceptance criterion; each prints a PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for the plain listing.
"""

import sys

import pytest

from billiard_twist.verification import CRITERIA, run_criterion

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # executed as a script outside pytest
    ACCEPTANCE_LINES = []


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number):
    result = run_criterion(number)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line


if __name__ == "__main__":
    results = [run_criterion(n) for n in sorted(CRITERIA)]
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
