# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

"""Exceptions raised by colcon-equistab.

Every error derives from RuntimeError so that the colcon command runner
reports it as a plain error line and returns 1.
"""


class EquistabError(RuntimeError):
    """Base class of all library errors."""


class ModelError(EquistabError):
    """A model file failed schema or semantic validation."""


class InvalidConfig(EquistabError):
    """An integrator or search configuration is inconsistent."""


# lie
class NonFiniteInput(EquistabError):
    pass


class DimensionMismatch(EquistabError):
    pass


class NotInAlgebra(EquistabError):
    """A matrix could not be re-expanded in the algebra basis."""


class NotInGroup(EquistabError):
    """A matrix fails the membership predicate of its group."""


class DegenerateBasis(EquistabError):
    pass


class InvalidInnerProduct(EquistabError):
    pass


# expr
class ParseError(EquistabError):
    """Malformed expression text.

    :param position: zero-based character offset of the offending token
    :param expected: what the parser was looking for
    """

    def __init__(self, position, expected, text=None):
        self.position = position
        self.expected = expected
        self.text = text
        message = "expected {} at position {}".format(expected, position)
        if text is not None:
            message += " in '{}'".format(text)
        super().__init__(message)


class UnknownFunction(ParseError):
    def __init__(self, name, position, text=None):
        self.name = name
        super().__init__(position, "one of sin, cos, exp, sqrt (got '{}')".format(name), text)


class VariableOutOfRange(ParseError):
    def __init__(self, index, n_vars, position, text=None):
        self.index = index
        self.n_vars = n_vars
        super().__init__(
            position, "a variable x1..x{} (got x{})".format(n_vars, index), text)


class DomainError(EquistabError):
    """Evaluation left the domain of sqrt or division."""


# action / slice
class InvalidAction(EquistabError):
    pass


class DegenerateSplit(EquistabError):
    pass


class IllConditioned(EquistabError):
    pass


class NotRelativeEquilibrium(EquistabError):
    pass


class RetractionFailed(EquistabError):
    pass


# symplectic
class SingularOmega(EquistabError):
    pass


class NoConsistentSign(EquistabError):
    pass


# stability
class RankAmbiguous(EquistabError):
    def __init__(self, message, gap=None):
        self.gap = gap
        super().__init__(message)


class HessianIllDefined(EquistabError):
    pass


class NotSymmetric(EquistabError):
    pass


class PreconditionFailed(EquistabError):
    pass


class NewtonDiverged(EquistabError):
    pass


class NotPositiveDefinite(EquistabError):
    pass


# mgs
class NonzeroMoment(EquistabError):
    pass


class OutOfChart(EquistabError):
    pass


# dynamics
class NonFiniteState(EquistabError):
    pass


class ReportError(EquistabError):
    """A report failed validation against its schema."""
