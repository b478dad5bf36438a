"""Two-to-infinity norm perturbation toolkit (C++ core)."""

import json as _json

from ._core import (
    ConfigError,
    ConvergenceError,
    InvalidInput,
    PreconditionError,
    RankDeficient,
    align,
    align_bruteforce,
    bound_baseline,
    bound_entrywise_symmetric,
    bound_low_rank,
    bound_uniform_rect,
    canonical_angles,
    coherence,
    davis_kahan,
    decompose,
    gaussian_noise,
    matrix_norm,
    orthonormalize,
    residual_sandwich,
    rho_sbm_pair,
    sin_theta_norms,
    singular_values,
    two_to_inf_norm,
)
from ._core import run_experiment as _run_experiment


def run_experiment(config):
    """Run an experiment described by a dict (or JSON string); returns the report dict."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_run_experiment(text, "json"))


__all__ = [name for name in dir() if not name.startswith("_")]
