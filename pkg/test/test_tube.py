# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_equistab.action import augment_field, catalog_action, fundamental_field
from colcon_equistab.errors import InvalidAction
from colcon_equistab.model import load_model
from colcon_equistab.stability import mro_verdict
from colcon_equistab.symplectic import hamiltonian_field
from colcon_equistab.tube import (
    build_tube,
    embed,
    extend_E,
    linearized_spectrum,
    project_P,
    retract,
    roundtrip_gauge,
    roundtrip_residual,
    slice_coords,
    slice_gauges,
    slice_representation,
    split_tangent,
    transport_rel_eq_checks,
    tube_point,
    with_splitting,
)
import numpy as np
import pytest

CIRCULAR = np.array([1.0, 0.0, 0.0, 1.0])


@pytest.fixture(scope="module")
def kepler():
    return load_model("kepler").system


@pytest.fixture(scope="module")
def kepler_tube(kepler):
    return build_tube(kepler.action, CIRCULAR)


def test_tube_dimensions(kepler_tube):
    assert kepler_tube.orbit_basis.shape == (4, 1)
    assert kepler_tube.slice_dim == 3
    assert kepler_tube.stabilizer_basis.shape == (1, 0)
    assert 0 < kepler_tube.radius <= 0.5
    np.testing.assert_allclose(kepler_tube.slice_basis.T @ kepler_tube.orbit_basis, 0, atol=1e-12)
    np.testing.assert_allclose(slice_coords(kepler_tube, embed(kepler_tube, [0.1, 0.2, 0.3])),
                               [0.1, 0.2, 0.3], atol=1e-12)


def test_affine_actions_have_no_tube():
    with pytest.raises(InvalidAction):
        build_tube(catalog_action("SE2_R2"), [1.0, 0.0])


def test_split_tangent_recovers_components(kepler_tube):
    v = np.array([0.05, -0.02, 0.01])
    eta = np.array([0.7])
    u = np.array([1.0, 2.0, -1.0])
    w = fundamental_field(kepler_tube.action, eta, embed(kepler_tube, v)) + kepler_tube.slice_basis @ u
    split = split_tangent(kepler_tube, v, w)
    np.testing.assert_allclose(split.eta, eta, atol=1e-10)
    np.testing.assert_allclose(split.u, u, atol=1e-10)


def test_relative_equilibrium_projects_to_a_zero(kepler, kepler_tube):
    report = transport_rel_eq_checks(kepler_tube, hamiltonian_field(kepler))
    assert report.passed
    assert report.projected_residual < 1e-12
    # trivial stabilizer, so there is nothing to gauge by
    assert report.gauge_residuals == ()


def test_gauged_projections_vanish_at_a_fixed_point():
    model = load_model("oscillator")
    system = model.system
    tube = build_tube(system.action, model.point("origin"))
    gauges = slice_gauges(tube)
    assert len(gauges) == 1
    psi = gauges[0]
    assert not np.allclose(psi(np.array([0.1, 0.0])), psi(np.array([0.0, 0.3])))
    report = transport_rel_eq_checks(tube, hamiltonian_field(system))
    assert report.passed
    assert len(report.gauge_residuals) == 1
    assert report.gauge_violation < 1e-9


def test_gauged_projections_along_a_normal_mode():
    model = load_model("coupled_modes")
    system = model.system
    tube = build_tube(system.action, model.point("mode1"))
    report = transport_rel_eq_checks(tube, hamiltonian_field(system))
    assert report.passed
    assert len(report.gauge_residuals) == 1
    assert max(report.gauge_residuals) < 1e-9


def test_roundtrip_through_the_tube(kepler, kepler_tube):
    X = hamiltonian_field(kepler)
    g = kepler.group.exp([0.9])
    v = np.array([0.03, 0.01, -0.02])
    assert roundtrip_residual(kepler_tube, X, g, v) < 1e-10


def test_retract_inverts_tube_point(kepler_tube):
    g = kepler_tube.action.group.exp([0.7])
    v = np.array([0.02, -0.03, 0.01])
    p = tube_point(kepler_tube, g, v)
    g2, v2 = retract(kepler_tube, p)
    np.testing.assert_allclose(tube_point(kepler_tube, g2, v2), p, atol=1e-9)
    assert np.linalg.norm(v2) == pytest.approx(np.linalg.norm(v), abs=1e-8)


def test_fixed_point_tube_and_slice_representation():
    action = catalog_action("SO2_R2")
    tube = build_tube(action, [0.0, 0.0])
    assert tube.slice_dim == 2
    assert tube.stabilizer_basis.shape == (1, 1)
    rep = slice_representation(tube)
    assert rep.group.dim == 1
    # rotations act on the slice by a generator with eigenvalues +-i
    np.testing.assert_allclose(np.sort(np.abs(np.linalg.eigvals(rep.algebra_rep[0]))), [1.0, 1.0])


def test_tube_of_a_rotation_orbit_in_space():
    tube = build_tube(catalog_action("SO3_R3"), [0.0, 0.0, 1.0])
    assert tube.orbit_basis.shape == (3, 2)
    assert tube.stabilizer_basis.shape == (3, 1)
    np.testing.assert_allclose(np.abs(tube.slice_basis[:, 0]), [0.0, 0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(tube.stabilizer_basis[:, 0]), [0.0, 0.0, 1.0], atol=1e-12)


def test_projection_inverts_extension():
    tube = build_tube(catalog_action("SO3_R3"), [0.0, 0.0, 1.0])
    identity = tube.action.group.identity()

    def Y(v):
        return 0.3 * v + 0.1

    rng = np.random.default_rng(9)
    for _ in range(100):
        v = rng.uniform(-0.5, 0.5, size=1) * tube.radius
        split = split_tangent(tube, v, extend_E(tube, Y, identity, v))
        np.testing.assert_allclose(split.u, Y(v), atol=1e-12)
        np.testing.assert_allclose(split.eta, 0.0, atol=1e-12)


def test_tube_gauge_on_ambient_points():
    model = load_model("coupled_modes")
    system = model.system
    tube = build_tube(system.action, model.point("mode1"))
    gauge = roundtrip_gauge(tube, hamiltonian_field(system))
    psi = gauge.as_gauge()
    g = system.group.exp(tube.complement_basis @ [0.6])
    v = np.array([0.05, 0.03, -0.02])
    value = psi(tube_point(tube, g, v))
    np.testing.assert_allclose(value, gauge(g, v), atol=1e-8)
    # values lie in the complement of the stabilizer algebra
    np.testing.assert_allclose(tube.splitting.project(value), 0.0, atol=1e-10)
    stacked = psi(np.stack([tube_point(tube, g, v), tube_point(tube, g, -v)]))
    assert stacked.shape == (2, system.group.dim)


def test_with_splitting_changes_the_projection_along_the_stabilizer():
    model = load_model("coupled_modes")
    system = model.system
    point = model.point("mode1")
    tube = build_tube(system.action, point)
    sheared = with_splitting(tube, tube.complement_basis + 0.7 * tube.stabilizer_basis)
    np.testing.assert_allclose(
        sheared.complement_basis, tube.complement_basis + 0.7 * tube.stabilizer_basis)
    xi = mro_verdict(system, point).xi
    X = augment_field(system.action, hamiltonian_field(system), xi)
    P1, P2 = project_P(tube, X), project_P(sheared, X)
    origin = np.zeros(tube.slice_dim)
    assert np.linalg.norm(P1(origin)) < 1e-10
    assert np.linalg.norm(P2(origin)) < 1e-10
    v = np.full(tube.slice_dim, 0.15)
    difference = P1(v) - P2(v)
    assert np.linalg.norm(difference) > 1e-6
    # the projections differ by a multiple of the stabilizer generator on the slice
    generator = fundamental_field(system.action, tube.stabilizer_basis[:, 0], embed(tube, v))
    s = tube.slice_basis.T @ generator
    along = (difference @ s) / (s @ s) * s
    np.testing.assert_allclose(difference, along, atol=1e-10)
    np.testing.assert_allclose(
        np.sort_complex(linearized_spectrum(tube, X).eigenvalues),
        np.sort_complex(linearized_spectrum(sheared, X).eigenvalues), atol=1e-5)


def test_linearized_spectrum_of_kepler_orbit(kepler, kepler_tube):
    X = augment_field(kepler.action, hamiltonian_field(kepler), np.array([1.0]))
    eigenvalues = linearized_spectrum(kepler_tube, X).eigenvalues
    assert eigenvalues.shape == (3,)
    assert np.max(np.abs(eigenvalues.real)) < 1e-5
    assert np.max(np.abs(eigenvalues.imag)) == pytest.approx(1.0, abs=1e-5)


def test_linearized_spectrum_of_unstable_orbit():
    system = load_model("unstable").system
    tube = build_tube(system.action, CIRCULAR)
    X = augment_field(system.action, hamiltonian_field(system), np.array([1.0]))
    eigenvalues = linearized_spectrum(tube, X).eigenvalues
    assert eigenvalues.real.max() == pytest.approx(np.sqrt(2.0), abs=1e-5)
    assert eigenvalues.real.min() == pytest.approx(-np.sqrt(2.0), abs=1e-5)
