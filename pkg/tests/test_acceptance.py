"""One test per acceptance criterion; the PASS/FAIL lines are collected into the terminal summary."""
import pytest

from cartan import _kernels
from cartan.acceptance import RUNNERS
from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module", autouse=True)
def _compiled():
    # keep JIT compilation out of the timed sections
    _kernels.warmup()


@pytest.mark.parametrize("runner", RUNNERS, ids=[f"criterion_{i:02d}_{r.__name__}" for i, r in enumerate(RUNNERS, 1)])
def test_criterion(runner):
    outcome = runner()
    print(outcome.line())
    ACCEPTANCE_LINES.append(outcome.line())
    assert outcome.passed, outcome.metrics
    assert outcome.seconds <= outcome.limit, f"{outcome.seconds:.2f}s over the {outcome.limit:g}s budget"
