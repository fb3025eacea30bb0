# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

import os

_CODES = {
    "red": "\033[31m",
    "green": "\033[32m",
    "yellow": "\033[33m",
    "cyan": "\033[36m",
    "gray": "\033[90m",
}


def _paint(color, text, end="\n"):
    # NO_COLOR disables escapes, see no-color.org
    if os.environ.get("NO_COLOR"):
        print(text, end=end)
    else:
        print(_CODES[color], text, "\033[0m", sep="", end=end)


def red(text):
    _paint("red", text)


def redinline(text):
    _paint("red", text, end="")


def green(text):
    _paint("green", text)


def greeninline(text):
    _paint("green", text, end="")


def yellow(text):
    _paint("yellow", text)


def yellowinline(text):
    _paint("yellow", text, end="")


def cyan(text):
    _paint("cyan", text)


def gray(text):
    _paint("gray", text)


def check_row(label, value, passed):
    """Print one ``label  value  PASS/FAIL`` line of a check table."""
    print("  {:<34} {:>12}  ".format(label, value), end="")
    if passed:
        green("PASS")
    else:
        red("FAIL")


def verdict_line(text, good):
    if good:
        green(text)
    else:
        yellow(text)
