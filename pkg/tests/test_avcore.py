import json

import numpy as np
import pytest

from thetamul.avcore import (
    PolarizationType,
    appell_humbert_residual,
    check_cocycle_identity,
    dump_period_file,
    lattice_basis_residual,
    load_period_file,
    symplectic_data,
    validate_period_matrix,
)
from thetamul.errors import InvalidPolarization, LatticeMembership, NearDegenerateWarning, NotPositive, NotSymmetric
from thetamul.experiments import random_siegel


def test_polarization_invariants():
    D = PolarizationType([1, 2, 2])
    assert D.g == 3 and D.s == 1 and D.h0 == 4
    with pytest.raises(InvalidPolarization):
        PolarizationType([2, 3])
    with pytest.raises(InvalidPolarization):
        PolarizationType([0])
    assert PolarizationType.parse("1, 2") == PolarizationType([1, 2])


@pytest.mark.parametrize("tau, lam", [([[1j]], 1.0), ([[1j, 0], [0, 2j]], 1.0)])
def test_validate_ok(tau, lam):
    pm = validate_period_matrix(tau)
    assert pm.lambda_min == pytest.approx(lam)


def test_validate_errors():
    with pytest.raises(NotSymmetric, match=r"tau\[0,1\]"):
        validate_period_matrix([[1j, 1], [0, 1j]])
    with pytest.raises(NotPositive, match="eigenvalue"):
        validate_period_matrix([[1j, 0], [0, -1j]])
    with pytest.warns(NearDegenerateWarning):
        validate_period_matrix([[1e-4j]])


@pytest.mark.parametrize(
    "tau, d, H",
    [
        ([[1j]], [1], [[1]]),
        ([[1j]], [2], [[1]]),  # lattice i Z + 2 Z: E(i, 2) = 2 forces H = 1
        (np.diag([1j, 1j]), [1, 1], np.eye(2)),
    ],
)
def test_symplectic_data_examples(tau, d, H):
    sd = symplectic_data(validate_period_matrix(tau), PolarizationType(d))
    np.testing.assert_allclose(sd.H, H, atol=1e-12)


def test_H_is_inverse_imaginary_part():
    pm = random_siegel(3, 4)
    sd = symplectic_data(pm, PolarizationType([1, 2, 2]))
    np.testing.assert_allclose(sd.H, np.linalg.inv(pm.tau.imag), atol=1e-12)
    assert np.allclose(sd.E, -sd.E.T)
    assert np.all(np.linalg.eigvalsh(sd.H) > 0)
    assert lattice_basis_residual(sd) < 1e-10


def test_cocycle_examples():
    sd = symplectic_data(validate_period_matrix([[1j]]), PolarizationType([1]))
    assert check_cocycle_identity(sd, [0], [1j], [0.3 + 0.7j]) == 0.0
    assert check_cocycle_identity(sd, [1.0], [0], [0.3 + 0.7j]) < 1e-15
    assert check_cocycle_identity(sd, [1.0], [1j], [0.3 + 0.7j]) < 1e-10


def test_cocycle_rejects_off_lattice():
    sd = symplectic_data(validate_period_matrix([[1j]]), PolarizationType([2]))
    with pytest.raises(LatticeMembership):
        check_cocycle_identity(sd, [1.0], [1.0], [0.0])


@pytest.mark.parametrize("d", [[1], [2], [1, 2], [2, 2], [1, 1, 2]])
def test_random_identity_samples(d):
    D = PolarizationType(d)
    pm = random_siegel(D.g, 99)
    sd = symplectic_data(pm, D)
    rng = np.random.default_rng(0)
    for _ in range(100):
        v, z, w = (rng.normal(size=D.g) + 1j * rng.normal(size=D.g) for _ in range(3))
        lam = sd.lattice_point(rng.integers(-3, 4, D.g), rng.integers(-3, 4, D.g))
        assert appell_humbert_residual(sd, z, w) < 1e-10
        assert check_cocycle_identity(sd, v, lam, z) < 1e-10 * (1 + abs(np.pi * sd.H_form(v, lam)))


def test_period_file_roundtrip(tmp_path):
    pm = random_siegel(2, 5)
    D = PolarizationType([1, 2])
    f = tmp_path / "tau.json"
    dump_period_file(f, pm, D)
    doc = json.loads(f.read_text())
    assert set(doc) == {"g", "d", "tau_re", "tau_im"}
    pm2, D2 = load_period_file(f)
    assert D2 == D
    assert np.array_equal(pm2.tau, pm.tau)
