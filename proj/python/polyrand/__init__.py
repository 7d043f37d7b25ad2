"""Characteristic functionals of polynomials of random variables.

Thin Python layer over the compiled ``_core`` module. Quadratic-form specs and
CLI suite parameters may be given as dicts; they are passed on as JSON.
"""

import json as _json

from . import _core
from ._core import (
    ComplexEstimate,
    Distribution,
    EnvelopeReport,
    EnvelopeRow,
    Infeasible,
    InvalidInput,
    cantor_cf,
    cantor_cramer_scan,
    cantor_power_threshold,
    cf_monomial_empirical,
    classify,
    cp_distance,
    gaussian_monomial_cf,
    ik_estimate,
    jk_count,
    laws,
    noncentral_fk,
    quad_moments_normal,
    remark3_check,
    set_jobs,
    suite_names,
    vinogradov_constants,
    weyl_sum,
)

__all__ = [
    "ComplexEstimate",
    "Distribution",
    "EnvelopeReport",
    "EnvelopeRow",
    "Infeasible",
    "InvalidInput",
    "cantor_cf",
    "cantor_cramer_scan",
    "cantor_power_threshold",
    "cf_monomial_empirical",
    "classify",
    "cp_distance",
    "density_p",
    "gaussian_monomial_cf",
    "ik_estimate",
    "jk_count",
    "laws",
    "noncentral_fk",
    "quad_moments_normal",
    "remark3_check",
    "run_suite",
    "set_jobs",
    "suite_names",
    "tail_prob",
    "tilt_weight",
    "verify_theorem15",
    "vinogradov_constants",
    "weyl_sum",
]


def _as_json(obj):
    return obj if isinstance(obj, str) else _json.dumps(obj)


def tilt_weight(spec):
    return _core.tilt_weight(_as_json(spec))


def density_p(spec, u, method="cf_inversion", n_mc=1_000_000, seed=0):
    return _core.density_p(_as_json(spec), u, method, n_mc, seed)


def tail_prob(spec, r):
    return _core.tail_prob(_as_json(spec), r)


def verify_theorem15(spec, u_grid):
    return _core.verify_theorem15(_as_json(spec), list(u_grid))


def run_suite(suite, params=None, seed=0, format="csv", jobs=1):
    """Run a CLI suite in-process; returns (exit_code, artifact, summary)."""
    return _core.run_suite(suite, _as_json(params or {}), seed, format, jobs)
