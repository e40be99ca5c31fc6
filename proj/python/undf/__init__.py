"""Pattern-conditioned directional filtering for compact microphone arrays."""

import json

from . import _undf
from ._undf import (
    DegeneratePatternError,
    IngestionError,
    NotFoundError,
    NumericalError,
    ValidationError,
    eval_simplified_dma,
    istft,
    loss_l1,
    read_wav,
    recipe_patterns,
    resample,
    sdr,
    stft,
    write_wav,
)

__all__ = [
    "DegeneratePatternError",
    "IngestionError",
    "NotFoundError",
    "NumericalError",
    "ValidationError",
    "eval_simplified_dma",
    "istft",
    "loss_l1",
    "pattern_gain",
    "pattern_vector",
    "process_timeline",
    "read_wav",
    "recipe_patterns",
    "resample",
    "sdr",
    "simulate",
    "stft",
    "write_wav",
]


def pattern_vector(spec, length=72):
    """Floored pattern vector for an analytic spec dict or {"gains": [...]}."""
    return _undf.pattern_vector(json.dumps(spec), length)


def pattern_gain(spec, theta):
    return _undf.pattern_gain(json.dumps(spec), theta)


def simulate(scene, base_dir=""):
    """Render a scene dict; returns mics (Q x S), components (N x S) and doas."""
    return _undf.simulate(json.dumps(scene), str(base_dir))


def process_timeline(scene, timeline, method="parametric-oracle", model_path="", win_len=512, hop=256):
    return _undf.process_timeline(json.dumps(scene), json.dumps(timeline), method, str(model_path), win_len, hop)
