import numpy as np
import pytest

from bhquench.dispersion import QuenchParams
from bhquench.lattice import build_lattice
from bhquench.validation import Check, all_passed, format_checks, run_invariants


@pytest.mark.parametrize(
    "lattice, params",
    [
        (build_lattice(2, 32, "range", 2), QuenchParams.from_epsilon(1.0, 0.1, np.linspace(0, 15, 16))),
        (build_lattice(2, 16), QuenchParams(1.0, 0.1, np.linspace(0, 20, 21))),
        (build_lattice(1, 32), QuenchParams(1.0, 4.0, np.linspace(0, 2, 11))),
    ],
)
def test_invariants_hold(lattice, params):
    checks = run_invariants(lattice, params)
    assert len({c.name for c in checks}) == len(checks)
    assert all_passed(checks), format_checks(checks)


def test_format_checks():
    text = format_checks([Check("a", 0.0, 1.0, True), Check("b", 2.0, 1.0, False)])
    assert text.splitlines()[0].startswith("PASS a")
    assert text.splitlines()[1].startswith("FAIL b")
