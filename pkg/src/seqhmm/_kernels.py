"""Scaled forward/backward recursions, JIT-compiled.

Both HMM variants reduce to the same recursions once the per-step
emission probabilities are laid out as a (T, N) matrix, so the discrete
and mixture models share these kernels. Scaling normalizes alpha at
every step; the log-likelihood is the accumulated log of the scale
factors, which keeps T around 1e5 tractable in double precision.

The state loops are written out elementwise: N is small, so the
recursions are memory-bound and per-step array temporaries would
dominate the runtime.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def forward_pass(pi, trans, emit):
    """Scaled alpha recursion.

    emit[t, i] is the emission probability of observation t in state i.
    Returns (alphas, scales, log_likelihood); alphas rows each sum to 1.
    A zero scale means the sequence is impossible under the model; the
    log-likelihood is then -inf and the remaining rows are unspecified.
    """
    n_steps, n_states = emit.shape
    alphas = np.empty((n_steps, n_states))
    scales = np.zeros(n_steps)
    s = 0.0
    for i in range(n_states):
        v = pi[i] * emit[0, i]
        alphas[0, i] = v
        s += v
    if s <= 0.0:
        return alphas, scales, -np.inf
    inv = 1.0 / s
    for i in range(n_states):
        alphas[0, i] *= inv
    scales[0] = s
    log_lik = np.log(s)
    for t in range(1, n_steps):
        s = 0.0
        for j in range(n_states):
            acc = 0.0
            for i in range(n_states):
                acc += alphas[t - 1, i] * trans[i, j]
            v = acc * emit[t, j]
            alphas[t, j] = v
            s += v
        if s <= 0.0:
            return alphas, scales, -np.inf
        inv = 1.0 / s
        for j in range(n_states):
            alphas[t, j] *= inv
        scales[t] = s
        log_lik += np.log(s)
    return alphas, scales, log_lik


@njit(cache=True)
def backward_pass(trans, emit, scales):
    """Scaled beta recursion, reusing the forward scale factors.

    betas[T-1] = 1; each earlier row is divided by the forward scale of
    the following step, so alphas[t] * betas[t] sums to 1 for every t.
    """
    n_steps, n_states = emit.shape
    betas = np.empty((n_steps, n_states))
    for i in range(n_states):
        betas[n_steps - 1, i] = 1.0
    for t in range(n_steps - 2, -1, -1):
        inv = 1.0 / scales[t + 1]
        for i in range(n_states):
            acc = 0.0
            for j in range(n_states):
                acc += trans[i, j] * emit[t + 1, j] * betas[t + 1, j]
            betas[t, i] = acc * inv
    return betas


@njit(cache=True)
def interval_probs_1d(x, means, sds, weights, eps):
    """Per-component and mixture interval probabilities, 1-d observations.

    x has shape (T,); means, sds, weights have shape (N, M). Returns
    (comp, mix) where comp[t, j, k] = P(x[t]-eps <= X <= x[t]+eps) under
    component k of state j and mix[t, j] is the weighted sum over k.

    The probability is an exact normal CDF difference written with erfc
    so both interval endpoints in the same tail keep full relative
    accuracy instead of cancelling. Intervals more than 40 standard
    deviations out are zero (erfc underflows there anyway).
    """
    n_steps = x.shape[0]
    n_states, n_comps = means.shape
    inv_rt2 = 1.0 / math.sqrt(2.0)
    comp = np.empty((n_steps, n_states, n_comps))
    mix = np.empty((n_steps, n_states))
    for t in range(n_steps):
        for j in range(n_states):
            acc = 0.0
            for k in range(n_comps):
                s = sds[j, k]
                hi = (x[t] + eps - means[j, k]) / s
                lo = (x[t] - eps - means[j, k]) / s
                if lo >= 40.0 or hi <= -40.0:
                    p = 0.0
                elif lo > 0.0:
                    p = 0.5 * (math.erfc(lo * inv_rt2) - math.erfc(hi * inv_rt2))
                else:
                    p = 0.5 * (math.erfc(-hi * inv_rt2) - math.erfc(-lo * inv_rt2))
                if p < 0.0:
                    p = 0.0
                elif p > 1.0:
                    p = 1.0
                comp[t, j, k] = p
                acc += weights[j, k] * p
            mix[t, j] = acc
    return comp, mix


@njit(cache=True)
def joint_responsibilities(gammas, comp, weights, mix):
    """gamma_t(j, k): state posterior split across mixture components.

    Where a step's mixture mass is zero (flooring kept the lattice
    alive), the split falls back to the mixture weights so each state's
    responsibilities still sum to its posterior.
    """
    n_steps, n_states, n_comps = comp.shape
    out = np.empty((n_steps, n_states, n_comps))
    for t in range(n_steps):
        for j in range(n_states):
            g = gammas[t, j]
            m = mix[t, j]
            if m > 0.0:
                scale = g / m
                for k in range(n_comps):
                    out[t, j, k] = comp[t, j, k] * weights[j, k] * scale
            else:
                for k in range(n_comps):
                    out[t, j, k] = g * weights[j, k]
    return out
