import numpy as np
import pytest

from thetamul.avcore import PolarizationType
from thetamul.errors import DegenerateSampling
from thetamul.experiments import random_siegel
from thetamul.sections import (
    SectionVector,
    basis_L,
    basis_L2,
    evaluate,
    linear_independence_check,
    sample_points,
)
from thetamul.theta import Characteristic, theta


def P(*d):
    return PolarizationType(d)


def test_basis_sizes(tau_i1, tau_diag2):
    b = basis_L(P(1), tau_i1)
    assert len(b) == 1 and b.characteristics[0].a == (0,)
    b = basis_L(P(2), tau_i1)
    assert [c.a[0] for c in b.characteristics] == [0, 0.5]
    assert len(basis_L(P(2, 2), tau_diag2)) == 4
    assert len(basis_L2(P(1), tau_i1)) == 2
    assert len(basis_L2(P(2), tau_i1)) == 4
    assert len(basis_L2(P(2, 2), tau_diag2)) == 16
    for b in (basis_L(P(2, 2), tau_diag2), basis_L2(P(2, 2), tau_diag2)):
        assert len(set(b.characteristics)) == len(b)


def test_evaluate(tau_i1):
    b = basis_L(P(2), tau_i1)
    assert evaluate(SectionVector(b, np.zeros(2)), [0.3j]) == 0
    z = [0.1 + 0.4j]
    single = evaluate(SectionVector(b, np.array([0, 1.0])), z)
    assert single == pytest.approx(theta(Characteristic.make([0.5]), z, tau_i1).value, abs=1e-14)


@pytest.mark.parametrize("d", [(2,), (1, 2), (2, 2)])
def test_section_hood(d):
    D = P(*d)
    pm = random_siegel(D.g, 17)
    rng = np.random.default_rng(1)
    for level, basis in ((1, basis_L(D, pm)), (2, basis_L2(D, pm))):
        for _ in range(5):
            z = sample_points(pm, D, 1, rng)[0]
            m = rng.integers(-1, 2, D.g)
            k = rng.integers(-2, 3, D.g)
            shift = pm.tau @ m + D.array * k
            vals = basis.evaluate_all([z, z + shift], 1e-14)
            f = np.exp(-1j * np.pi * m @ pm.tau @ m - 2j * np.pi * m @ z) ** level
            np.testing.assert_allclose(vals[:, 1], f * vals[:, 0], rtol=1e-9)


def test_random_vector_shares_factor():
    D = P(1, 2)
    pm = random_siegel(2, 8)
    b = basis_L(D, pm)
    v = SectionVector(b, np.array([0.3 - 1j, 2.0]))
    z = np.array([0.1 + 0.2j, 0.3 + 0.1j])
    m = np.array([1, 0])
    f = np.exp(-1j * np.pi * m @ pm.tau @ m - 2j * np.pi * m @ z)
    assert evaluate(v, z + pm.tau @ m, 1e-14) == pytest.approx(f * evaluate(v, z, 1e-14), rel=1e-9)


def test_linear_independence(tau_i1, tau_diag2):
    assert linear_independence_check(basis_L(P(1), tau_i1)).rank == 1
    assert linear_independence_check(basis_L(P(2), tau_i1)).rank == 2
    assert linear_independence_check(basis_L(P(2, 2), tau_diag2)).rank == 4
    assert linear_independence_check(basis_L2(P(1, 2), tau_diag2), seed=3).independent


def test_degenerate_sampling_detected(tau_i1):
    b = basis_L(P(2), tau_i1)
    dup = type(b)(b.level, b.D, b.tau, b.indices, (b.characteristics[0],) * 2)
    with pytest.raises(DegenerateSampling):
        linear_independence_check(dup)
