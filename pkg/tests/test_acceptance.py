"""The twelve acceptance criteria, one test each, at their stated tolerances.

Each test prints a single PASS/FAIL line (also collected into the terminal
summary).  The measurements come from the named checks of the suite runner,
so ``freewrap verify --only acceptance`` reports the same numbers.
"""
import pytest

from freewrap.harness import SuiteConfig, run_suite

from conftest import ACCEPTANCE_LINES

CRITERIA = {
    "01": "wrapped Cauchy, direct and via eta",
    "02": "simplest non-Cauchy class-L law",
    "03": "atoms of the point-mass descriptor",
    "04": "homomorphism over random pairs",
    "05": "wrapping is not a free homomorphism off the class",
    "06": "Levy pair map and classical coefficients",
    "07": "line preimage of the multiplicative free Gaussian",
    "08": "monotone multiplicative flow",
    "09": "multiplicative flow semigroup and Loewner residual",
    "10": "limit theorem for infinitesimal arrays",
    "11": "subordination and power identities",
    "12": "atom law for free multiplicative powers",
}


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num):
    rep = run_suite(SuiteConfig(), [f"acceptance.{num}"])
    bad = [r for r in rep.records if not r.passed]
    parts = "; ".join(f"{r.name.split('.', 2)[-1]}={r.error:.2e}{'<' if r.mode == 'below' else '>'}{r.tolerance:.3g}"
                      + ("" if r.passed else " FAILED") for r in rep.records)
    line = f"criterion {num} {'PASS' if not bad else 'FAIL'} ({CRITERIA[num]}): {parts}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert not bad, "; ".join(f"{r.name}: {r.error:.3e} vs {r.tolerance:.1e} {r.note}" for r in bad)
