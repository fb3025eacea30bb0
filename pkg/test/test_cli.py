# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

import argparse
import json

from colcon_core.command import CommandContext
from colcon_equistab import __version__
from colcon_equistab.errors import ModelError
from colcon_equistab.report import validate_report
from colcon_equistab.subverb import EquistabSubverbExtensionPoint, get_subverb_extensions
from colcon_equistab.subverb.analyze import AnalyzeSubverb
from colcon_equistab.subverb.demos import DemosSubverb
from colcon_equistab.subverb.probe import ProbeSubverb
from colcon_equistab.subverb.simulate import SimulateSubverb
from colcon_equistab.subverb.verify import VerifySubverb
from colcon_equistab.subverb.version import VersionSubverb
from colcon_equistab.verb.equistab import EquistabVerb
import pytest


def run(extension, argv):
    parser = argparse.ArgumentParser()
    extension.add_arguments(parser=parser)
    args = parser.parse_args(argv)
    return extension.main(context=CommandContext(command_name="colcon", args=args))


@pytest.fixture(autouse=True)
def no_color(monkeypatch):
    monkeypatch.setenv("NO_COLOR", "1")


def test_analyze_stable_orbit(tmp_path, capsys):
    out = tmp_path / "kepler.json"
    assert run(AnalyzeSubverb(), ["kepler", "circular", "--out", str(out)]) == 0
    assert "StableModGmu" in capsys.readouterr().out
    report = json.loads(out.read_text())
    validate_report(report)
    assert report["exit_code"] == 0
    assert report["stability"]["w_dim"] == 2
    assert report["normal_form"]["w_dim"] == 2
    assert report["linearization"]["slice_dim"] == 3
    assert report["probe"] is None
    assert report["normal_form"]["reduction"]["agree"]
    assert 0 < report["normal_form"]["k0_radius"]
    # no stabilizer to turn the augmented flow along
    assert "skipped" in report["certificate"]
    assert all(check["passed"] for check in report["checks"].values())


def test_analyze_takes_every_tolerance_flag(tmp_path, capsys):
    out = tmp_path / "origin.json"
    argv = ["oscillator", "origin", "--out", str(out), "--tol-releq", "1e-8",
            "--radius-hint", "0.25", "--tol-nondeg", "1e-6", "--A-override", "2.5"]
    run(AnalyzeSubverb(), argv)
    assert "certificate with A = 2.5: holds" in capsys.readouterr().out
    report = json.loads(out.read_text())
    validate_report(report)
    assert report["tolerances"]["rel_eq"] == 1e-8
    assert report["tolerances"]["radius_hint"] == 0.25
    assert report["tolerances"]["nondeg"] == 1e-6
    assert report["linearization"]["radius"] <= 0.25
    assert report["certificate"]["coupling"] == 2.5
    assert report["certificate"]["holds"]


def test_analyze_rejects_a_nonpositive_coupling(tmp_path):
    out = tmp_path / "origin.json"
    run(AnalyzeSubverb(), ["oscillator", "origin", "--out", str(out), "--A-override", "0"])
    assert "must be positive" in json.loads(out.read_text())["certificate"]["skipped"]


def test_analyze_is_reproducible(tmp_path):
    paths = [tmp_path / "first.json", tmp_path / "second.json"]
    for path in paths:
        run(AnalyzeSubverb(), ["kepler", "circular", "--seed", "7", "--out", str(path)])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_analyze_unstable_orbit_is_inconclusive(tmp_path):
    out = tmp_path / "unstable.json"
    argv = ["unstable", "circular", "--out", str(out), "--probe", "--samples", "16", "--horizon", "30"]
    assert run(AnalyzeSubverb(), argv) == 2
    report = json.loads(out.read_text())
    assert report["stability"]["definiteness"] == "Indefinite"
    assert report["probe"]["verdict"] == "Escaped"


def test_analyze_degenerate_complement(capsys):
    assert run(AnalyzeSubverb(), ["oscillator", "ring"]) == 2
    assert "Degenerate" in capsys.readouterr().out


def test_analyze_unknown_point():
    with pytest.raises(ModelError):
        run(AnalyzeSubverb(), ["kepler", "apoapsis"])


def test_verify_all_points(capsys):
    assert run(VerifySubverb(), ["coupled_modes"]) == 0
    output = capsys.readouterr().out
    assert "around 'mode1'" in output
    assert "around 'origin'" in output


def test_probe_writes_witness(tmp_path):
    witness = tmp_path / "witness.csv"
    result = tmp_path / "probe.json"
    argv = ["unstable", "circular", "--samples", "16", "--horizon", "30",
            "--witness", str(witness), "--out", str(result)]
    assert run(ProbeSubverb(), argv) == 2
    assert witness.read_text().startswith("t,x1,x2,x3,x4,h,phi2,inv1")
    assert json.loads(result.read_text())["verdict"] == "Escaped"


def test_simulate_on_the_slice(tmp_path, capsys):
    out = tmp_path / "slice.csv"
    argv = ["oscillator", "origin", "--field", "vertical_augmented", "--xi", "0.5",
            "--offset", "0.05,0", "--horizon", "1", "--out", str(out)]
    assert run(SimulateSubverb(), argv) == 0
    assert "drift of h" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) == 1002


def test_simulate_reports_the_certificate(capsys):
    argv = ["oscillator", "origin", "--field", "vertical_augmented", "--xi", "0.5",
            "--offset", "0.05,0", "--horizon", "1", "--A-override", "3"]
    assert run(SimulateSubverb(), argv) == 0
    assert "certificate with A = 3:" in capsys.readouterr().out


def test_zero_samples_are_vacuous(tmp_path):
    result = tmp_path / "probe.json"
    argv = ["kepler", "circular", "--samples", "0", "--horizon", "1", "--out", str(result)]
    assert run(ProbeSubverb(), argv) == 0
    scan = json.loads(result.read_text())
    assert scan["verdict"] == "NoEscapeObserved"
    assert scan["vacuous"]
    assert scan["levels"][0]["n_samples"] == 0


def test_simulate_rejects_malformed_vectors():
    with pytest.raises(ValueError):
        run(SimulateSubverb(), ["kepler", "circular", "--xi", "1,2"])


def test_demos_and_version(capsys):
    assert run(DemosSubverb(), []) == 0
    assert "kepler" in capsys.readouterr().out
    assert run(DemosSubverb(), ["kepler"]) == 0
    assert capsys.readouterr().out.strip().endswith("kepler.json")
    with pytest.raises(FileNotFoundError):
        run(DemosSubverb(), ["pendulum"])
    assert run(VersionSubverb(), []) == 0
    assert capsys.readouterr().out.strip() == __version__
    assert run(VersionSubverb(), ["numpy"]) == 0
    assert run(VersionSubverb(), ["not-a-real-package-name"]).startswith("Error")


def test_verb_registers_every_subverb():
    assert list(get_subverb_extensions()) == [
        "analyze", "demos", "probe", "simulate", "verify", "version"]
    verb = EquistabVerb()
    assert run(verb, []).startswith("Error")


def test_subverb_interface_documents_its_version():
    assert EquistabSubverbExtensionPoint.EXTENSION_POINT_VERSION == "1.0"
    assert "EXTENSION_POINT_VERSION" in EquistabSubverbExtensionPoint.__doc__
    assert "SUBVERB_NAME" in EquistabSubverbExtensionPoint.__doc__
