"""The thirteen acceptance criteria at their stated sizes and tolerances."""

import pytest

from shufflelab.verify import CHECKS, run_check

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", [c[0] for c in CHECKS], ids=[f"{c[0]:02d}-{c[1].replace(' ', '-')}" for c in CHECKS])
def test_criterion(number):
    result = run_check(number)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
