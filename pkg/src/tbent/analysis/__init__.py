"""Fringe fitting, state tomography and the effective-noise state model."""

from .fringes import (CHSH_THRESHOLD, ChshResult, FringeFit, FringeScan, bootstrap_visibility, chsh_check,
                      fit_fringe, predict_fringe)
from .noise import calibrate_white_noise, ideal_target, jitter_fidelity, predict_state_under_noise
from .tomography import (TomographyInput, TomographyResult, bootstrap_fidelity, exact_input,
                         input_from_records, measurement_plan, tomography_mle, tomography_settings)

__all__ = [
    "CHSH_THRESHOLD", "ChshResult", "FringeFit", "FringeScan", "bootstrap_visibility", "chsh_check",
    "fit_fringe", "predict_fringe", "calibrate_white_noise", "ideal_target", "jitter_fidelity",
    "predict_state_under_noise", "TomographyInput", "TomographyResult", "bootstrap_fidelity", "exact_input",
    "input_from_records", "measurement_plan", "tomography_mle", "tomography_settings",
]
