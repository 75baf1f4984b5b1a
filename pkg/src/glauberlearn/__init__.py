"""Glauber dynamics simulation and structure learning for sparse Ising models."""

from __future__ import annotations

__version__ = "0.1.0"

from .dynamics import RngSeed, Trace, read_trace, simulate_ct, simulate_dt, state_at, state_before, write_trace
from .learner import LearnerParams, ParameterUnderflow, glauber_learn, practical_params, theory_params
from .model import Graph, IsingModel, ParamBounds, make_model, read_model, write_model

__all__ = [
    "Graph",
    "IsingModel",
    "LearnerParams",
    "ParamBounds",
    "ParameterUnderflow",
    "RngSeed",
    "Trace",
    "glauber_learn",
    "make_model",
    "practical_params",
    "read_model",
    "read_trace",
    "simulate_ct",
    "simulate_dt",
    "state_at",
    "state_before",
    "theory_params",
    "write_model",
    "write_trace",
]
