"""Monte Carlo oracle for the exit identities."""

from .estimate import (
    Barriers,
    MCEstimate,
    ObservationScheme,
    PathBatch,
    PathOutcome,
    estimate,
    mc_target,
    occupation_transform,
    overshoot_samples,
    simulate,
    simulate_path,
    total_dividend_samples,
)

__all__ = [
    "Barriers", "MCEstimate", "ObservationScheme", "PathBatch", "PathOutcome", "estimate", "mc_target",
    "occupation_transform", "overshoot_samples", "simulate", "simulate_path", "total_dividend_samples",
]
