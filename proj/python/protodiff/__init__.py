"""Sensitivity of parametric variational inequalities of the second kind."""

import json
import os

from ._protodiff import ProtodiffError
from . import _protodiff as _core

__all__ = [
    "ProtodiffError",
    "error_code",
    "load",
    "solve",
    "derive",
    "validate",
    "second_epi_derivative",
    "epi_probe",
    "csh_probe",
    "phi_gap",
]


def _text(problem):
    if isinstance(problem, dict):
        return json.dumps(problem)
    if isinstance(problem, (str, os.PathLike)) and os.path.exists(problem):
        with open(problem) as fh:
            return fh.read()
    if isinstance(problem, str):
        return problem
    raise TypeError("problem must be a dict, a JSON string or a path")


def error_code(exc):
    """Error code of a ProtodiffError, e.g. 'PARSE_ERROR'."""
    return str(exc).split(":", 1)[0]


def load(problem):
    """Parsed and normalized problem as a dict."""
    return json.loads(_core.normalize_problem(_text(problem)))


def solve(problem, t=0.0, **kw):
    return _core.solve(_text(problem), t, **kw)


def derive(problem, **kw):
    return json.loads(_core.derive(_text(problem), **kw))


def validate(problem, **kw):
    return json.loads(_core.validate(_text(problem), **kw))


second_epi_derivative = _core.second_epi_derivative
epi_probe = _core.epi_probe
csh_probe = _core.csh_probe
phi_gap = _core.phi_gap
