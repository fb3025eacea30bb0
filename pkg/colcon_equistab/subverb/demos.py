# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

import json
import os

from colcon_core.plugin_system import satisfies_version
from colcon_equistab.config import get_demos_dir
from colcon_equistab.model import list_demos
from colcon_equistab.subverb import EquistabSubverbExtensionPoint
from colcon_equistab.verb import gray, green


class DemosSubverb(EquistabSubverbExtensionPoint):
    """List the bundled demo models."""

    def __init__(self):  # noqa: D107
        super().__init__()
        satisfies_version(EquistabSubverbExtensionPoint.EXTENSION_POINT_VERSION, "^1.0")

    def add_arguments(self, *, parser):  # noqa: D102
        parser.add_argument(
            "name", nargs="?",
            help="Print the path of this demo instead of listing all")

    def main(self, *, context):  # noqa: D102
        demos_dir = get_demos_dir()
        if context.args.name:
            path = os.path.join(demos_dir, context.args.name + ".json")
            if not os.path.exists(path):
                raise FileNotFoundError(path, "not a bundled demo")
            print(path)
            return 0
        for name in list_demos():
            with open(os.path.join(demos_dir, name + ".json"), "r") as handle:
                document = json.load(handle)
            green(name)
            gray("  {} (points: {})".format(
                document.get("description", ""), ", ".join(sorted(document["points"]))))
        return 0
