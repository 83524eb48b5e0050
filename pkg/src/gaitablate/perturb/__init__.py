"""Feature-masking operators and their composition."""

from .operators import (
    body_part,
    coarsen_macro,
    coarsen_micro,
    ideal_trajectory,
    motion_extraction,
    normalize,
    remove_trajectories,
    resample_static,
    static_pose,
)
from .pipeline import KINDS, PerturbationSpec, Pipeline, apply_pipeline, apply_step
from .sinusoid import SinusoidGaitModel, equalize, fit_sinusoid, fit_sinusoid_model

__all__ = [
    "KINDS", "PerturbationSpec", "Pipeline", "SinusoidGaitModel", "apply_pipeline",
    "apply_step", "body_part", "coarsen_macro", "coarsen_micro", "equalize",
    "fit_sinusoid", "fit_sinusoid_model", "ideal_trajectory", "motion_extraction",
    "normalize", "remove_trajectories", "resample_static", "static_pose",
]
