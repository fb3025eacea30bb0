# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_core.logging import colcon_logger
from colcon_core.plugin_system import satisfies_version
from colcon_equistab.action import augment_field
from colcon_equistab.checks import model_checks
from colcon_equistab.config import get_thread_count
from colcon_equistab.dynamics import (
    certify_slice_flow,
    IntegratorConfig,
    stability_probe,
)
from colcon_equistab.errors import EquistabError
from colcon_equistab.mgs import mgs_data, reduction_check
from colcon_equistab.report import build_report, write_report
from colcon_equistab.stability import mro_verdict, Verdict
from colcon_equistab.subverb import (
    add_model_arguments,
    add_tolerance_arguments,
    EquistabSubverbExtensionPoint,
    EXIT_INCONCLUSIVE,
    load_model_and_point,
    tolerances_from_args,
)
from colcon_equistab.symplectic import hamiltonian_field
from colcon_equistab.tube import build_tube, linearized_spectrum, project_P
from colcon_equistab.verb import check_row, gray, red, verdict_line, yellow
import numpy as np

logger = colcon_logger.getChild(__name__)


def add_probe_arguments(parser, default_samples):
    group = parser.add_argument_group("stability probe")
    group.add_argument(
        "--eps", type=float, default=0.1,
        help="Escape radius in invariant coordinates (default: %(default)s)")
    group.add_argument(
        "--delta", type=float, action="append", default=None,
        help="Initial invariant distance, may be repeated (default: 1e-3)")
    group.add_argument(
        "--samples", type=int, default=default_samples,
        help="Initial states per delta (default: %(default)s)")
    group.add_argument(
        "--horizon", type=float, default=1000.0,
        help="Integration horizon of each sample (default: %(default)s)")
    group.add_argument(
        "--step", type=float, default=0.01,
        help="Runge-Kutta step (default: %(default)s)")
    group.add_argument(
        "--threads", type=int, default=None,
        help="Worker threads (default: EQUISTAB_THREADS or the CPU count)")


def run_probe(model, point, args):
    if not model.invariants.dim:
        raise EquistabError("model '{}' declares no invariants to probe with".format(model.name))
    field = hamiltonian_field(model.system, verify=False)
    return stability_probe(
        field, point, model.invariants, args.eps, args.delta or [1e-3],
        n_samples=args.samples, horizon=args.horizon, step=args.step,
        seed=args.seed, threads=args.threads or get_thread_count(),
    )


def normal_form_summary(system, point, xi, tol):
    try:
        data = mgs_data(system, point, tol)
        reduction = reduction_check(system, point, xi, tol)
    except EquistabError as e:
        return {"skipped": str(e)}
    k0, w, orbit = data.dims
    if not reduction.agree:
        logger.warning(
            "complement and symplectic normal space classify differently: {} vs {}".format(
                reduction.class_u.value, reduction.class_w.value))
    return {
        "k0_dim": k0,
        "w_dim": w,
        "orbit_dim": orbit,
        "stabilizer_dim": int(data.k_basis.shape[1]),
        "omega_w": data.omega_w.tolist(),
        "w_invariance_defect": data.w_invariance_defect,
        "k0_radius": data.k0_radius,
        "w_radius": data.w_radius,
        "reduction": {
            "class_u": reduction.class_u.value,
            "class_w": reduction.class_w.value,
            "agree": reduction.agree,
        },
    }


def certificate_summary(system, point, xi, tol, seed, coupling=None):
    """
    Monitor the Lyapunov certificate along the projected augmented flow
    started a short distance from the base point inside the slice.
    """
    try:
        tube = build_tube(system.action, point, tol.radius_hint, tol.cond_max)
        direction = np.random.default_rng(seed).standard_normal(tube.slice_dim)
        if direction.size:
            direction *= 0.1 * tube.radius / np.linalg.norm(direction)
        config = IntegratorConfig(step=1e-2, horizon=10.0, log_every=10)
        report = certify_slice_flow(system, tube, xi, direction, config, coupling=coupling)
    except EquistabError as e:
        return {"skipped": str(e)}
    return report.to_dict()


def linearization_summary(system, point, xi, tol):
    try:
        tube = build_tube(system.action, point, tol.radius_hint, tol.cond_max)
        field = augment_field(system.action, hamiltonian_field(system, verify=False), xi)
        spectrum = linearized_spectrum(tube, field).eigenvalues
    except EquistabError as e:
        return {"skipped": str(e)}
    # P(X) must vanish at the origin for the spectrum to mean anything
    residual = float(np.linalg.norm(project_P(tube, field)(np.zeros(tube.slice_dim))))
    return {
        "slice_dim": tube.slice_dim,
        "radius": tube.radius,
        "origin_residual": residual,
        "eigenvalues": [[float(z.real), float(z.imag)] for z in spectrum],
    }


class AnalyzeSubverb(EquistabSubverbExtensionPoint):
    """Run the energy-momentum stability test at a point of a model."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(EquistabSubverbExtensionPoint.EXTENSION_POINT_VERSION, "^1.0")

    def add_arguments(self, *, parser):  # noqa: D102
        add_model_arguments(parser)
        parser.add_argument(
            "--search", choices=("grid", "nelder-mead"), default="grid",
            help="Search over the stabilizer family of velocities (default: %(default)s)")
        parser.add_argument(
            "--out", default=None,
            help="Write the JSON report to this path")
        parser.add_argument(
            "--probe", action="store_true",
            help="Also run the orbit-space stability probe")
        add_tolerance_arguments(parser)
        add_probe_arguments(parser, default_samples=16)

    def main(self, *, context):  # noqa: D102
        args = context.args
        tol = tolerances_from_args(args)
        model, point = load_model_and_point(args)
        system = model.system

        checks = model_checks(model, point, args.seed, tol)
        print("checks for '{}' at '{}':".format(model.name, args.point))
        for check in checks:
            check_row(check.name, "{:.2e}".format(check.value), check.passed)
        if not all(check.passed for check in checks):
            red("model failed its consistency checks")
            return 1

        stability = mro_verdict(system, point, search=args.search, tol=tol)
        normal_form = normal_form_summary(system, point, stability.xi, tol)
        linearization = linearization_summary(system, point, stability.xi, tol)
        certificate = certificate_summary(
            system, point, stability.xi, tol, args.seed, coupling=args.a_override)
        probe = run_probe(model, point, args).to_dict() if args.probe else None

        stable = stability.verdict is Verdict.STABLE_MOD_G_MU
        exit_code = 0 if stable else EXIT_INCONCLUSIVE
        gray("xi = {}  mu = {}  dim W = {}".format(
            np.round(stability.xi, 12).tolist(), np.round(stability.mu, 12).tolist(),
            stability.complement.dim))
        gray("restricted Hessian eigenvalues: {}".format(
            np.round(stability.eigenvalues, 12).tolist()))
        verdict_line("{} ({})".format(stability.verdict.value, stability.definiteness.value), stable)
        if not normal_form.get("reduction", {}).get("agree", True):
            yellow("complement and symplectic normal space disagree: {} vs {}".format(
                normal_form["reduction"]["class_u"], normal_form["reduction"]["class_w"]))
        if "holds" in certificate:
            gray("certificate with A = {:.3g}: {}".format(
                certificate["coupling"], "holds" if certificate["holds"] else "violated"))
        if probe is not None:
            verdict_line("probe: {}".format(probe["verdict"]), probe["verdict"] == "NoEscapeObserved")

        if args.out:
            report = build_report(
                model, args.point, args.seed, tol, stability.to_dict(), exit_code,
                checks={c.name: c.to_dict() for c in checks},
                normal_form=normal_form, linearization=linearization, probe=probe,
                certificate=certificate)
            write_report(args.out, report)
            logger.info("report written to {}".format(args.out))
        return exit_code
