"""Toolkit for eye-video segmentation masks: prompt generation from ground-truth
annotations, conversion of per-frame masks into eye-feature signals, and the
signal-quality / overlap-accuracy metrics suite."""

__version__ = "0.1.0"
