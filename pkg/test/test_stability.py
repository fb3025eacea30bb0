# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_equistab.config import DEFAULT_TOLERANCES
from colcon_equistab.errors import (
    HessianIllDefined,
    NotPositiveDefinite,
    NotSymmetric,
    PreconditionFailed,
)
from colcon_equistab.expr import parse
from colcon_equistab.model import load_model
from colcon_equistab.stability import (
    characterize,
    classify,
    complement_independence_check,
    Definiteness,
    definiteness,
    morse_branch,
    mro_verdict,
    restricted_form_lemma_check,
    restricted_hessian,
    slice_complement,
    Verdict,
)
import numpy as np
import pytest

CIRCULAR = np.array([1.0, 0.0, 0.0, 1.0])


def test_classify():
    assert definiteness(np.diag([1.0, 2.0])) is Definiteness.POSITIVE_DEFINITE
    assert definiteness(np.diag([-1.0, -2.0])) is Definiteness.NEGATIVE_DEFINITE
    assert definiteness(np.diag([-1.0, 2.0])) is Definiteness.INDEFINITE
    assert definiteness(np.diag([1.0, 1e-15])) is Definiteness.DEGENERATE
    assert definiteness(np.zeros((0, 0))) is Definiteness.DEGENERATE
    kind, eigenvalues, tol = classify(np.diag([1.0, 1e-6]), nondeg_tol=1e-5)
    assert kind is Definiteness.DEGENERATE
    assert tol == 1e-5
    with pytest.raises(NotSymmetric):
        classify(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_characterize_kepler_orbit():
    system = load_model("kepler").system
    found = characterize(system, CIRCULAR)
    assert found.is_relative_equilibrium
    assert found.is_critical
    assert found.consistent
    np.testing.assert_allclose(found.xi, [1.0], atol=1e-12)
    np.testing.assert_allclose(found.mu, [1.0], atol=1e-12)


def test_non_relative_equilibrium_is_rejected():
    system = load_model("kepler").system
    point = np.array([1.0, 0.0, 0.3, 1.0])
    assert not characterize(system, point).is_relative_equilibrium
    with pytest.raises(PreconditionFailed):
        mro_verdict(system, point)


def test_slice_complement_of_kepler_orbit():
    system = load_model("kepler").system
    complement = slice_complement(system, CIRCULAR)
    assert complement.kernel_basis.shape == (4, 3)
    assert complement.dim == 2
    expected = np.array([[1.0, 0.0, 0.0, -1.0], [0.0, 1.0, 1.0, 0.0]]).T / np.sqrt(2.0)
    # same subspace as the expected basis
    np.testing.assert_allclose(
        complement.basis @ complement.basis.T, expected @ expected.T, atol=1e-12)


def test_kepler_orbit_is_stable():
    system = load_model("kepler").system
    report = mro_verdict(system, CIRCULAR)
    assert report.verdict is Verdict.STABLE_MOD_G_MU
    assert report.definiteness is Definiteness.POSITIVE_DEFINITE
    np.testing.assert_allclose(report.eigenvalues, [0.5, 2.0], atol=1e-9)
    assert report.to_dict()["w_dim"] == 2


def test_unstable_orbit_is_inconclusive():
    system = load_model("unstable").system
    report = mro_verdict(system, CIRCULAR, search="nelder-mead")
    assert report.verdict is Verdict.INCONCLUSIVE
    assert report.definiteness is Definiteness.INDEFINITE
    np.testing.assert_allclose(report.eigenvalues, [-1.0, 2.0], atol=1e-9)


def test_oscillator_ring_has_trivial_complement():
    model = load_model("oscillator")
    report = mro_verdict(model.system, model.point("ring"))
    np.testing.assert_allclose(report.xi, [-5.0], atol=1e-9)
    np.testing.assert_allclose(report.mu, [-0.5], atol=1e-12)
    assert report.complement.dim == 0
    assert report.definiteness is Definiteness.DEGENERATE
    assert report.verdict is Verdict.INCONCLUSIVE


def test_oscillator_origin_is_stable():
    model = load_model("oscillator")
    report = mro_verdict(model.system, model.point("origin"))
    assert report.family_basis.shape == (1, 1)
    assert report.verdict is Verdict.STABLE_MOD_G_MU


def test_coupled_modes_search_over_the_stabilizer():
    model = load_model("coupled_modes")
    report = mro_verdict(model.system, model.point("mode1"))
    assert report.complement.kernel_basis.shape[1] == 3
    assert report.complement.dim == 2
    assert report.family_basis.shape == (2, 1)
    assert report.verdict is Verdict.STABLE_MOD_G_MU
    np.testing.assert_allclose(report.xi, [-1.0, 2.0], atol=1e-6)
    np.testing.assert_allclose(report.eigenvalues, [3.7, 3.7], atol=1e-6)


def test_restricted_hessian_requires_a_critical_point():
    system = load_model("kepler").system
    with pytest.raises(HessianIllDefined):
        restricted_hessian(system, CIRCULAR, np.array([2.0]), np.eye(4))


def test_complement_independence_on_kepler():
    system = load_model("kepler").system
    report = complement_independence_check(system, CIRCULAR, np.array([1.0]), n_trials=50)
    assert report.reference is Definiteness.POSITIVE_DEFINITE
    assert len(report.classes) == 50
    assert report.all_agree


def test_restricted_form_lemma_on_random_forms():
    rng = np.random.default_rng(17)
    seen = set()
    for _ in range(500):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n))
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        u, w = q[:, :k], q[:, k:]
        magnitudes = rng.uniform(0.5, 2.0, n - k) * rng.choice([-1.0, 1.0], n - k)
        form = w @ np.diag(magnitudes) @ w.T
        form = 0.5 * (form + form.T)
        w_tilde = w + u @ rng.standard_normal((k, n - k))
        report = restricted_form_lemma_check(form, u, w, w_tilde)
        assert report.agree
        seen.add(report.class_w)
    assert Definiteness.INDEFINITE in seen
    assert Definiteness.POSITIVE_DEFINITE in seen


def test_restricted_form_lemma():
    form = np.diag([0.0, 1.0, 3.0])
    u = np.array([[1.0], [0.0], [0.0]])
    w = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    w_tilde = np.array([[2.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    report = restricted_form_lemma_check(form, u, w, w_tilde)
    assert report.agree
    assert report.class_w is Definiteness.POSITIVE_DEFINITE
    with pytest.raises(PreconditionFailed):
        restricted_form_lemma_check(form, u, w, u @ np.ones((1, 2)))
    with pytest.raises(PreconditionFailed):
        restricted_form_lemma_check(np.eye(3), u, w, w_tilde)


def test_morse_branch_of_quadratic():
    f = parse("x2^2 + x1*x2", 2)
    branch = morse_branch(f, n_rho=1, n_w=1)
    assert branch.sigma(0.1)[0] == pytest.approx(-0.05, abs=1e-12)
    assert branch.expansion_residual() < 1e-12


def test_morse_branch_cubic_remainder():
    f = parse("x2^2 + x1*x2 + x2^3", 2)
    branch = morse_branch(f, n_rho=1, n_w=1, rho_max=0.1)
    coarse = branch.expansion_residual(y_scale=0.1)
    fine = branch.expansion_residual(y_scale=0.05)
    assert coarse == pytest.approx(1e-3, rel=1e-6)
    assert coarse / fine == pytest.approx(8.0, rel=1e-4)


def test_morse_branch_preconditions():
    with pytest.raises(PreconditionFailed):
        morse_branch(parse("1 + x2^2", 2), 1, 1)
    with pytest.raises(NotPositiveDefinite):
        morse_branch(parse("x1*x2 - x2^2", 2), 1, 1)


def test_tolerances_reach_the_classification():
    system = load_model("kepler").system
    tol = DEFAULT_TOLERANCES.replace(nondeg=1.0)
    report = mro_verdict(system, CIRCULAR, tol=tol)
    assert report.definiteness is Definiteness.DEGENERATE
