import numpy as np
import pytest
from hypothesis import settings

from slipcal.synth import generate_corpus

settings.register_profile("slipcal", deadline=None, max_examples=60)
settings.load_profile("slipcal")


@pytest.fixture(scope="session")
def small_corpus():
    """Short synthetic corpus: every cell present, 2 s of slip per cell."""
    return generate_corpus(per_cell_duration_s=2.0, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict and fail the test when it does not hold.

    Tests are named ``test_criterion_NN_...``; a test that errors out before
    reaching its check is reported as a failure too.
    """
    number = int(request.node.name.split("_")[2])
    ACCEPTANCE[number] = (False, "did not complete")

    def check(ok: bool, detail: str) -> None:
        ACCEPTANCE[number] = (bool(ok), detail)
        assert ok, f"criterion {number}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
