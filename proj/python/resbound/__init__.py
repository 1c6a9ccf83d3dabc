"""Cramer-Rao and semiparametric Cramer-Rao bounds for elliptical models."""

from ._core import (
    ConfigError,
    Error,
    EstimatorError,
    IntegrityError,
    Model,
    ModelError,
    SingularFim,
    crb,
    derive_seed,
    huber,
    run_cli,
    sample,
    sample_moments,
    score,
    scrb,
    set_threads,
    student_t_mle,
    tyler,
)

__version__ = "0.1.0"
