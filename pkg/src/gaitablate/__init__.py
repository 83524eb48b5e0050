"""Gait-feature ablation toolkit: perturb motion-capture gait data and measure
how identity and sex recognition accuracy respond."""

__version__ = "0.1.0"
