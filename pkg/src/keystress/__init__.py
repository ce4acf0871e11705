"""Stress detection from keystroke and mouse-click dynamics.

Session event logs are turned into per-session timing and frequency
features, reduced to a few chi-squared-selected coordinates, and fed to
supervised classifiers and to anomaly detectors trained on normal sessions.
"""

from .errors import KeystressError
from .events import Session, load_session, load_session_dir, make_session
from .features import FeatureMatrix, default_schema, extract_features, extract_matrix
from .preprocess import PipelineConfig, PipelineParams, apply_pipeline, fit_pipeline

__version__ = "0.1.0"

__all__ = [
    "KeystressError", "Session", "load_session", "load_session_dir", "make_session",
    "FeatureMatrix", "default_schema", "extract_features", "extract_matrix",
    "PipelineConfig", "PipelineParams", "apply_pipeline", "fit_pipeline",
]
