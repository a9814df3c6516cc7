"""HMM with per-state Gaussian-mixture emissions.

Observations are real vectors; the emission probability of a step is
the mixture's probability mass in a small box of half-width eps around
the observation, so the scaled forward/backward machinery of the
discrete model carries over unchanged. Training is EM with joint
state-and-component responsibilities.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ._kernels import (
    backward_pass,
    forward_pass,
    interval_probs_1d,
    joint_responsibilities,
)
from .errors import DegenerateModelError, InputDomainError, TooShortInputError
from .gmm import (
    _LOG_2PI,
    GaussianComponent,
    GaussianMixture,
    floor_covariance,
    mixture_interval_prob,
)
from .training import TrainConfig, TrainResult, check_stochastic, perturbed_uniform_rows

# Lower clamp applied to emission probabilities inside training only.
# A transiently starved component can push a step's mixture mass to
# numerical zero; the clamp keeps the lattice finite so EM can recover.
# Scoring never clamps: an impossible sequence scores -inf.
EMISSION_FLOOR = 1e-300

DEFAULT_EPS = 1e-3


@dataclass(frozen=True, eq=False)
class GmmHmm:
    """Mixture-emission HMM: (pi, A, per-state mixtures, eps).

    eps is the integration half-width that turns emission densities
    into probabilities; it is part of the model so a serialized model
    scores sequences identically after reload.
    """

    pi: np.ndarray
    trans: np.ndarray
    emissions: tuple
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        trans = np.asarray(self.trans, dtype=float)
        emissions = tuple(self.emissions)
        n = pi.shape[0]
        if pi.ndim != 1 or n < 1:
            raise InputDomainError(f"pi must be a non-empty vector, got shape {pi.shape}")
        if trans.shape != (n, n):
            raise InputDomainError(f"transition matrix shape {trans.shape} != ({n}, {n})")
        if len(emissions) != n:
            raise InputDomainError(f"{len(emissions)} emission mixtures for {n} states")
        m = emissions[0].n_components
        d = emissions[0].dim
        for i, mix in enumerate(emissions):
            if not isinstance(mix, GaussianMixture):
                raise InputDomainError(f"emission {i} is not a GaussianMixture")
            if mix.n_components != m or mix.dim != d:
                raise InputDomainError(
                    f"emission {i} has (M={mix.n_components}, D={mix.dim}), "
                    f"expected (M={m}, D={d})"
                )
        if not self.eps > 0:
            raise InputDomainError(f"eps must be > 0, got {self.eps}")
        check_stochastic("pi", pi[None, :])
        check_stochastic("transition matrix", trans)
        pi.flags.writeable = False
        trans.flags.writeable = False
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "emissions", emissions)
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def n_states(self) -> int:
        return self.pi.shape[0]

    @property
    def n_components(self) -> int:
        return self.emissions[0].n_components

    @property
    def dim(self) -> int:
        return self.emissions[0].dim


@dataclass(frozen=True, eq=False)
class ContinuousSequence:
    """A sequence of real observation vectors, stored as a (T, D) array.

    One-dimensional input is treated as T scalar observations.
    """

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.vectors, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputDomainError(
                f"observations must form a (T, D) array, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            t = int(np.argmax(~np.isfinite(arr).all(axis=1)))
            raise InputDomainError(f"non-finite observation at position {t}")
        arr.flags.writeable = False
        object.__setattr__(self, "vectors", arr)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def ghmm_emission_prob(model: GmmHmm, state: int, x) -> float:
    """b_state(x): mixture probability mass in the eps-box around x."""
    if not 0 <= state < model.n_states:
        raise InputDomainError(f"state {state} out of range [0, {model.n_states})")
    return mixture_interval_prob(x, model.eps, model.emissions[state])


def _mixture_arrays(model: GmmHmm):
    n, m, d = model.n_states, model.n_components, model.dim
    means = np.empty((n, m, d))
    covs = np.empty((n, m, d, d))
    weights = np.empty((n, m))
    for j, mix in enumerate(model.emissions):
        weights[j] = mix.weights
        for k, comp in enumerate(mix.components):
            means[j, k] = comp.mean
            covs[j, k] = comp.covariance
    return means, covs, weights


def _comp_mix_probs(obs: np.ndarray, means, covs, weights, eps: float):
    """Per-component and mixture interval probabilities, shapes (T,N,M), (T,N)."""
    n_steps, d = obs.shape
    n_states, n_comps = weights.shape
    if d == 1:
        sds = np.sqrt(covs[:, :, 0, 0])
        return interval_probs_1d(
            np.ascontiguousarray(obs[:, 0]), means[:, :, 0], sds, weights, eps
        )
    # Midpoint rule: density at the observation times the box volume.
    chols = np.linalg.cholesky(covs)
    vol = (2.0 * eps) ** d
    comp = np.empty((n_steps, n_states, n_comps))
    for j in range(n_states):
        for k in range(n_comps):
            diff = obs - means[j, k]
            z = solve_triangular(chols[j, k], diff.T, lower=True)
            maha = np.einsum("dt,dt->t", z, z)
            log_det = 2.0 * np.sum(np.log(np.diag(chols[j, k])))
            comp[:, j, k] = np.exp(-0.5 * (d * _LOG_2PI + log_det + maha)) * vol
    mix = np.einsum("tnm,nm->tn", comp, weights)
    return comp, mix


def ghmm_log_score(model: GmmHmm, seq: ContinuousSequence) -> float:
    """log P(sequence | model) via the scaled forward pass.

    -inf if some step has zero emission mass in every state.
    """
    if seq.dim != model.dim:
        raise InputDomainError(
            f"sequence dimension {seq.dim} does not match model dimension {model.dim}"
        )
    means, covs, weights = _mixture_arrays(model)
    _, mix = _comp_mix_probs(seq.vectors, means, covs, weights, model.eps)
    _, _, log_lik = forward_pass(model.pi, model.trans, np.ascontiguousarray(mix))
    return float(log_lik)


def ghmm_stationary(model: GmmHmm) -> np.ndarray:
    """Stationary distribution of the transition matrix.

    Power iteration from the uniform start, run on the half-lazy chain
    (I + A)/2, which has the same fixed points but cannot oscillate on
    periodic chains. Stops when successive iterates agree to 1e-12;
    reducible chains return whichever fixed point the uniform start
    converges to.
    """
    n = model.n_states
    lazy = 0.5 * (np.eye(n) + model.trans)
    v = np.full(n, 1.0 / n)
    for _ in range(200000):
        nxt = v @ lazy
        nxt = nxt / nxt.sum()
        if np.max(np.abs(nxt - v)) <= 1e-12:
            return nxt
        v = nxt
    return v


def _initial_params(obs: np.ndarray, n_states: int, n_comps: int,
                    config: TrainConfig, rng: np.random.Generator):
    n_steps, d = obs.shape
    global_mean = obs.mean(axis=0)
    centered = obs - global_mean
    if np.max(np.abs(centered)) == 0.0:
        raise DegenerateModelError(
            "all observations are identical; the global covariance is zero"
        )
    global_cov = floor_covariance(centered.T @ centered / n_steps, config.variance_floor)
    global_sd = np.sqrt(np.diag(global_cov))

    pi = perturbed_uniform_rows(rng, 1, n_states)[0]
    trans = perturbed_uniform_rows(rng, n_states, n_states)
    weights = perturbed_uniform_rows(rng, n_states, n_comps)
    jitter = rng.uniform(-1.0, 1.0, size=(n_states, n_comps, d))
    means = global_mean + jitter * (config.init_noise * global_sd)
    covs = np.broadcast_to(global_cov, (n_states, n_comps, d, d)).copy()
    return pi, trans, weights, means, covs


def _floor_all(covs: np.ndarray, floor: float) -> np.ndarray:
    if covs.shape[-1] == 1:
        out = covs.copy()
        out[..., 0, 0] = np.maximum(out[..., 0, 0], floor)
        return out
    out = np.empty_like(covs)
    n_states, n_comps = covs.shape[:2]
    for j in range(n_states):
        for k in range(n_comps):
            out[j, k] = floor_covariance(covs[j, k], floor)
    return out


def _build_model(pi, trans, weights, means, covs, eps: float) -> GmmHmm:
    emissions = []
    for j in range(weights.shape[0]):
        comps = tuple(
            GaussianComponent(mean=means[j, k], covariance=covs[j, k])
            for k in range(weights.shape[1])
        )
        emissions.append(GaussianMixture(components=comps, weights=weights[j]))
    return GmmHmm(pi=pi, trans=trans, emissions=tuple(emissions), eps=eps)


def _em_loop(obs: np.ndarray, pi, trans, weights, means, covs,
             eps: float, config: TrainConfig):
    """Run EM from the given parameters; returns them updated plus the trace."""
    trace = []
    converged = False
    prev = -np.inf
    for _ in range(config.max_iters):
        comp, mix = _comp_mix_probs(obs, means, covs, weights, eps)
        emit = np.maximum(mix, EMISSION_FLOOR)
        alphas, scales, log_lik = forward_pass(pi, trans, emit)
        if not np.isfinite(log_lik):
            raise DegenerateModelError("zero forward probability during training")
        trace.append(log_lik)
        if log_lik - prev < config.tol:
            converged = True
            break
        betas = backward_pass(trans, emit, scales)

        ab = alphas * betas
        gammas = ab / ab.sum(axis=1, keepdims=True)
        comp_gammas = joint_responsibilities(gammas, comp, weights, mix)

        state_w = gammas.sum(axis=0)
        comp_w = comp_gammas.sum(axis=0)
        starved_state = state_w <= 0
        starved_comp = comp_w <= 1e-12

        new_weights = np.where(
            starved_state[:, None],
            weights, comp_w / np.where(starved_state, 1.0, state_w)[:, None],
        )

        safe_comp_w = np.where(starved_comp, 1.0, comp_w)
        mu_num = np.einsum("tnm,td->nmd", comp_gammas, obs)
        new_means = np.where(
            starved_comp[..., None], means, mu_num / safe_comp_w[..., None]
        )
        diffs = obs[:, None, None, :] - new_means
        cov_num = np.einsum("tnm,tnmi,tnmj->nmij", comp_gammas, diffs, diffs)
        new_covs = np.where(
            starved_comp[..., None, None],
            covs, cov_num / safe_comp_w[..., None, None],
        )
        new_covs = _floor_all(new_covs, config.variance_floor)

        w2 = emit[1:] * betas[1:] / scales[1:, None]
        trans_num = trans * (alphas[:-1].T @ w2)
        trans_den = gammas[:-1].sum(axis=0)
        new_trans = np.where(
            trans_den[:, None] > 0,
            trans_num / np.where(trans_den == 0, 1.0, trans_den)[:, None],
            trans,
        )
        new_pi = gammas[0]

        check_stochastic("updated pi", new_pi[None, :])
        check_stochastic("updated transition matrix", new_trans)
        check_stochastic("updated mixture weights", new_weights)
        pi = new_pi / new_pi.sum()
        trans = new_trans / new_trans.sum(axis=1, keepdims=True)
        weights = new_weights / new_weights.sum(axis=1, keepdims=True)
        means = new_means
        covs = new_covs
        prev = log_lik
    return pi, trans, weights, means, covs, trace, converged


def ghmm_train(seq: ContinuousSequence, n_states: int, n_components: int,
               eps: float, config: TrainConfig = TrainConfig(),
               seed: int = 0) -> TrainResult:
    """EM training of a mixture-emission HMM on one observation stream.

    Initialization sets every component's mean to the global data mean
    (plus seeded jitter scaled by config.init_noise and the global
    standard deviation) and every covariance to the global covariance;
    pi, A, and the mixture weights start approximately uniform. Each
    iteration re-estimates pi and A with the usual di-gamma sums and
    the mixtures with the joint state/component responsibilities, then
    clamps covariance eigenvalues at config.variance_floor.
    """
    if n_states < 1 or n_components < 1:
        raise InputDomainError(
            f"n_states and n_components must be >= 1, got {n_states}, {n_components}"
        )
    if not eps > 0:
        raise InputDomainError(f"eps must be > 0, got {eps}")
    obs = seq.vectors
    if obs.shape[0] < 2:
        raise TooShortInputError(
            f"training needs at least 2 observations, got {obs.shape[0]}",
            needed=2, got=obs.shape[0],
        )
    rng = np.random.default_rng(seed)
    pi, trans, weights, means, covs = _initial_params(
        obs, n_states, n_components, config, rng
    )
    pi, trans, weights, means, covs, trace, converged = _em_loop(
        obs, pi, trans, weights, means, covs, eps, config
    )
    model = _build_model(pi, trans, weights, means, covs, eps)
    return TrainResult(model=model, trace=np.array(trace), converged=converged, seed=seed)
