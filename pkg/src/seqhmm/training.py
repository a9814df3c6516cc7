"""Training configuration and result record shared by both HMM variants."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputDomainError

# Relative size of the seeded perturbation applied to otherwise-uniform
# probability rows at initialization.
ROW_INIT_NOISE = 0.02


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 200
    tol: float = 1e-4
    init_noise: float = 0.0
    variance_floor: float = 1e-6

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputDomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise InputDomainError(f"tol must be > 0, got {self.tol}")
        if not 0.0 <= self.init_noise <= 0.1:
            raise InputDomainError(
                f"init_noise must be in [0, 0.1], got {self.init_noise}"
            )
        if self.variance_floor <= 0:
            raise InputDomainError(
                f"variance_floor must be > 0, got {self.variance_floor}"
            )


@dataclass(frozen=True)
class TrainResult:
    """A trained model plus its per-iteration log-likelihood trace.

    trace[i] is the log-likelihood of the parameters entering iteration
    i. Runs that converge stop before the re-estimation step, so their
    final entry is exactly the returned model's log-likelihood; runs
    that exhaust max_iters return the once-more-updated model, whose
    true score is at least the final entry.
    """

    model: object
    trace: np.ndarray
    converged: bool
    seed: int = 0

    @property
    def final_log_likelihood(self) -> float:
        return float(self.trace[-1])

    @property
    def iterations(self) -> int:
        return len(self.trace)


def perturbed_uniform_rows(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Approximately uniform stochastic rows with seeded relative noise."""
    raw = 1.0 + rng.uniform(-ROW_INIT_NOISE, ROW_INIT_NOISE, size=(rows, cols))
    return raw / raw.sum(axis=1, keepdims=True)


def check_stochastic(name: str, rows: np.ndarray, atol: float = 1e-9) -> None:
    """Assert each row is a probability vector within atol."""
    if np.any(rows < 0):
        raise AssertionError(f"{name} has a negative entry")
    sums = rows.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > atol):
        raise AssertionError(f"{name} rows sum to {sums!r}, expected 1")
