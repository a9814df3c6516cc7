"""Discrete-observation hidden Markov model: scoring and Baum-Welch training.

The model is the classic (pi, A, B) triple over N hidden states and K
observation symbols. Scoring runs the scaled forward pass; training is
expectation-maximization on a single observation stream.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import backward_pass, forward_pass
from .errors import InputDomainError
from .training import TrainConfig, TrainResult, check_stochastic, perturbed_uniform_rows


@dataclass(frozen=True, eq=False)
class DiscreteHmm:
    """Hidden Markov model with a finite emission alphabet.

    pi: initial state distribution, shape (N,)
    trans: state transition matrix, shape (N, N), row stochastic
    emit: per-state symbol distributions, shape (N, K), row stochastic
    """

    pi: np.ndarray
    trans: np.ndarray
    emit: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        trans = np.asarray(self.trans, dtype=float)
        emit = np.asarray(self.emit, dtype=float)
        n = pi.shape[0]
        if pi.ndim != 1 or n < 1:
            raise InputDomainError(f"pi must be a non-empty vector, got shape {pi.shape}")
        if trans.shape != (n, n):
            raise InputDomainError(f"transition matrix shape {trans.shape} != ({n}, {n})")
        if emit.ndim != 2 or emit.shape[0] != n or emit.shape[1] < 1:
            raise InputDomainError(f"emission matrix shape {emit.shape} is invalid for {n} states")
        check_stochastic("pi", pi[None, :])
        check_stochastic("transition matrix", trans)
        check_stochastic("emission matrix", emit)
        for arr in (pi, trans, emit):
            arr.flags.writeable = False
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "emit", emit)

    @property
    def n_states(self) -> int:
        return self.pi.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.emit.shape[1]


@dataclass(frozen=True, eq=False)
class DiscreteSequence:
    """A sequence of integer observation symbols."""

    symbols: np.ndarray

    def __post_init__(self):
        sym = np.asarray(self.symbols)
        if sym.ndim != 1 or sym.shape[0] < 1:
            raise InputDomainError(f"symbols must be a non-empty vector, got shape {sym.shape}")
        if not np.issubdtype(sym.dtype, np.integer):
            as_int = sym.astype(np.int64)
            if np.any(as_int != sym):
                raise InputDomainError("symbols must be integers")
            sym = as_int
        else:
            sym = sym.astype(np.int64)
        if sym.min() < 0:
            pos = int(np.argmax(sym < 0))
            raise InputDomainError(f"negative symbol {sym[pos]} at position {pos}")
        sym.flags.writeable = False
        object.__setattr__(self, "symbols", sym)

    def __len__(self) -> int:
        return self.symbols.shape[0]


def _check_symbols(seq: DiscreteSequence, n_symbols: int) -> None:
    sym = seq.symbols
    if sym.max() >= n_symbols:
        pos = int(np.argmax(sym >= n_symbols))
        raise InputDomainError(
            f"symbol {sym[pos]} at position {pos} is outside the alphabet [0, {n_symbols})"
        )


def _emission_matrix(model: DiscreteHmm, seq: DiscreteSequence) -> np.ndarray:
    return np.ascontiguousarray(model.emit[:, seq.symbols].T)


def dhmm_log_score(model: DiscreteHmm, seq: DiscreteSequence) -> float:
    """log P(sequence | model) via the scaled forward pass.

    Equals the log of the sum over all N^T state paths; -inf if the
    sequence is impossible under the model.
    """
    _check_symbols(seq, model.n_symbols)
    emit = _emission_matrix(model, seq)
    _, _, log_lik = forward_pass(model.pi, model.trans, emit)
    return float(log_lik)


def _forward_backward(model: DiscreteHmm, emit: np.ndarray):
    alphas, scales, log_lik = forward_pass(model.pi, model.trans, emit)
    if not np.isfinite(log_lik):
        return None
    betas = backward_pass(model.trans, emit, scales)
    return alphas, betas, scales, log_lik


def _reestimate(model: DiscreteHmm, seq: np.ndarray, emit: np.ndarray,
                alphas, betas, scales) -> DiscreteHmm:
    ab = alphas * betas
    gammas = ab / ab.sum(axis=1, keepdims=True)

    # Transition counts: digamma_t(i, j) summed over t = 0..T-2.
    w = emit[1:] * betas[1:] / scales[1:, None]
    trans_num = model.trans * (alphas[:-1].T @ w)
    trans_den = gammas[:-1].sum(axis=0)
    new_trans = np.where(
        trans_den[:, None] > 0, trans_num / np.where(trans_den == 0, 1.0, trans_den)[:, None],
        model.trans,
    )

    # Symbol counts over t = 0..T-1.
    n_states, n_symbols = model.emit.shape
    emit_num = np.zeros((n_states, n_symbols))
    np.add.at(emit_num.T, seq, gammas)
    emit_den = gammas.sum(axis=0)
    new_emit = np.where(
        emit_den[:, None] > 0, emit_num / np.where(emit_den == 0, 1.0, emit_den)[:, None],
        model.emit,
    )

    new_pi = gammas[0]
    check_stochastic("updated pi", new_pi[None, :])
    check_stochastic("updated transition matrix", new_trans)
    check_stochastic("updated emission matrix", new_emit)
    new_trans = new_trans / new_trans.sum(axis=1, keepdims=True)
    new_emit = new_emit / new_emit.sum(axis=1, keepdims=True)
    new_pi = new_pi / new_pi.sum()
    return DiscreteHmm(pi=new_pi, trans=new_trans, emit=new_emit)


def dhmm_init(n_states: int, n_symbols: int, seed: int) -> DiscreteHmm:
    """Approximately uniform rows with seeded perturbation."""
    rng = np.random.default_rng(seed)
    pi = perturbed_uniform_rows(rng, 1, n_states)[0]
    trans = perturbed_uniform_rows(rng, n_states, n_states)
    emit = perturbed_uniform_rows(rng, n_states, n_symbols)
    return DiscreteHmm(pi=pi, trans=trans, emit=emit)


def dhmm_train(seq: DiscreteSequence, n_states: int, n_symbols: int,
               config: TrainConfig = TrainConfig(), seed: int = 0) -> TrainResult:
    """Baum-Welch on one observation stream.

    Stops when the log-likelihood gain drops below config.tol or after
    config.max_iters iterations. The trace is non-decreasing up to a
    1e-8 slack.
    """
    if n_states < 1:
        raise InputDomainError(f"n_states must be >= 1, got {n_states}")
    if n_symbols <= int(seq.symbols.max()):
        raise InputDomainError(
            f"n_symbols={n_symbols} does not cover the observed maximum symbol "
            f"{int(seq.symbols.max())}"
        )
    model = dhmm_init(n_states, n_symbols, seed)
    trace = []
    converged = False
    prev = -np.inf
    for _ in range(config.max_iters):
        emit = _emission_matrix(model, seq)
        fb = _forward_backward(model, emit)
        if fb is None:
            raise InputDomainError("sequence has zero probability under the current model")
        alphas, betas, scales, log_lik = fb
        trace.append(log_lik)
        if log_lik - prev < config.tol:
            converged = True
            break
        model = _reestimate(model, seq.symbols, emit, alphas, betas, scales)
        prev = log_lik
    return TrainResult(model=model, trace=np.array(trace), converged=converged, seed=seed)
