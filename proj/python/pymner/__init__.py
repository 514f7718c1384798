"""Multivariate nested-error regression: estimation, EBLUP, MSE matrices and intervals."""

import json

from ._core import (
    Dataset,
    MnerError,
    __version__,
    bias_psi0,
    corrected_quantile,
    estimate_components,
    g3,
    gls_fit,
    intervals,
    load,
    predict,
    preset_names,
    v_approx,
)
from ._core import simulate_json as _simulate_json


def simulate(preset="desk-k2-rho05-normal", seed=20180417, reps_a=0, reps_b=0, workers=0, v_form="printed"):
    """Runs the two-phase Monte Carlo study of a preset and returns its summary as a dict.

    reps_a / reps_b of 0 keep the preset's replication counts.
    """
    return json.loads(_simulate_json(preset, seed, reps_a, reps_b, workers, v_form))


__all__ = [
    "Dataset",
    "MnerError",
    "__version__",
    "bias_psi0",
    "corrected_quantile",
    "estimate_components",
    "g3",
    "gls_fit",
    "intervals",
    "load",
    "predict",
    "preset_names",
    "simulate",
    "v_approx",
]
