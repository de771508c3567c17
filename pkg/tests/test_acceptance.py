"""The eleven acceptance criteria at their stated tolerances, one test each."""

import pytest

from hypannulus.acceptance import CRITERIA, format_line

from conftest import ACCEPTANCE_LINES


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.__name__.removeprefix("criterion_") for c in CRITERIA])
def test_criterion(criterion):
    result = criterion()
    line = format_line(result)
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
