"""Exception types shared across the package.

The CLI maps these onto exit codes: parse/validation problems exit 2,
infeasible allocation instances exit 3, numeric failures exit 4.
"""


class ParseError(ValueError):
    """A data file could not be parsed (bad header, bad row, bad format)."""


class InfeasibleError(Exception):
    """An allocation instance violates its feasibility constraints."""


class NumericError(RuntimeError):
    """A numeric procedure produced no usable result (e.g. all scores -inf)."""
