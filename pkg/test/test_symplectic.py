# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_equistab.action import catalog_action, LinearGAction
from colcon_equistab.errors import NoConsistentSign, SingularOmega
from colcon_equistab.expr import parse
from colcon_equistab.lie import so2
from colcon_equistab.symplectic import (
    augmented_hamiltonian,
    gradient_field,
    hamiltonian_field,
    HamiltonianSystem,
    noether_report,
    quadratic_momentum,
    SymplecticStructure,
    verify_momentum_map,
    verify_symplectic_invariance,
)
import numpy as np
import pytest


def kepler_system():
    action = catalog_action("SO2_DIAG_R4")
    omega = SymplecticStructure.canonical(2)
    h = parse("0.5*(x3^2 + x4^2) - 1/sqrt(x1^2 + x2^2)", 4)
    return HamiltonianSystem(action, omega, h, quadratic_momentum(action, omega), name="kepler")


def test_canonical_form():
    omega = SymplecticStructure.canonical(1)
    np.testing.assert_array_equal(omega.omega, [[0.0, 1.0], [-1.0, 0.0]])
    assert omega.pairing(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0


def test_invalid_forms():
    with pytest.raises(SingularOmega):
        SymplecticStructure(np.eye(2))
    with pytest.raises(SingularOmega):
        SymplecticStructure(np.zeros((2, 2)))
    with pytest.raises(SingularOmega):
        SymplecticStructure(np.zeros((3, 3)))


def test_harmonic_oscillator_field():
    omega = SymplecticStructure.canonical(1)
    field = gradient_field(omega, parse("0.5*(x1^2 + x2^2)", 2))
    # q' = p, p' = -q
    np.testing.assert_allclose(field(np.array([1.0, 2.0])), [2.0, -1.0])
    np.testing.assert_allclose(field(np.array([[1.0, 2.0], [0.0, 1.0]])), [[2.0, -1.0], [1.0, 0.0]])


def test_kepler_momentum_is_angular_momentum():
    system = kepler_system()
    m = np.array([1.0, 0.0, 0.0, 1.0])
    np.testing.assert_allclose(system.momentum_value(m), [1.0])
    x = np.array([0.3, -1.2, 0.5, 0.8])
    assert system.momentum_value(x)[0] == pytest.approx(x[0] * x[3] - x[1] * x[2])
    assert system.momentum_dual_norm2(m) == pytest.approx(0.5)


def test_momentum_map_checks():
    system = kepler_system()
    report = verify_momentum_map(system, center=np.array([1.0, 0.0, 0.0, 1.0]), scale=0.1)
    assert report.property_violation < 1e-12
    assert report.equivariance_violation < 1e-12
    assert verify_symplectic_invariance(system.action, system.omega) < 1e-12


def test_noether_conservation_rates_vanish():
    system = kepler_system()
    report = noether_report(system, center=np.array([1.0, 0.0, 0.0, 1.0]), scale=0.1)
    assert report.energy_drift_rate < 1e-12
    assert report.momentum_drift_rate < 1e-12


def test_hamiltonian_field_identity_is_checked():
    system = kepler_system()
    field = hamiltonian_field(system, center=np.array([1.0, 0.0, 0.0, 1.0]))
    np.testing.assert_allclose(field(np.array([1.0, 0.0, 0.0, 1.0])), [0.0, 1.0, -1.0, 0.0], atol=1e-12)


def test_non_symplectic_action_has_no_momentum():
    # rotations of q alone do not preserve the canonical form
    rep = np.zeros((1, 4, 4))
    rep[0, :2, :2] = [[0.0, -1.0], [1.0, 0.0]]
    action = LinearGAction(so2(), rep)
    omega = SymplecticStructure.canonical(2)
    assert verify_symplectic_invariance(action, omega) > 1e-3
    with pytest.raises(NoConsistentSign):
        quadratic_momentum(action, omega)


def test_augmented_hamiltonian():
    system = kepler_system()
    assert augmented_hamiltonian(system, np.zeros(1)) is system.h
    augmented = augmented_hamiltonian(system, np.array([1.0]))
    m = np.array([1.0, 0.0, 0.0, 1.0])
    assert augmented.evaluate(m) == pytest.approx(0.5 - 1.0 - 1.0)
    np.testing.assert_allclose(augmented.gradient(m), 0.0, atol=1e-12)
