"""The release gate: every published number and algorithmic contract the
package commits to, one test per criterion.

Each criterion function returns a detail string on success and raises with a
diagnostic on failure, so `pytest -v` shows one pass/fail line per criterion
and `icurisk selftest` prints the same battery outside the test harness.
"""

import pytest

from icurisk.selftest import CRITERIA


@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.cid for c in CRITERIA])
def test_acceptance(criterion):
    detail = criterion.fn()
    print(f"PASS {criterion.cid} {criterion.title}: {detail}")
