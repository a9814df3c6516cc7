"""Gaussian mixture densities.

A mixture is a convex combination of multivariate Gaussian components.
These types are the emission model of the continuous-observation HMM and
the operand of the model-divergence comparator, so everything here is an
immutable value evaluated by pure functions.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp, ndtr

from .errors import DegenerateModelError, InputDomainError

# Smallest admissible eigenvalue for a covariance matrix. EM on
# low-variance data collapses components; updates clamp here.
VARIANCE_FLOOR = 1e-6

_LOG_2PI = float(np.log(2.0 * np.pi))


def _as_float_array(x, ndim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != ndim:
        raise InputDomainError(f"expected a {ndim}-d array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    """One multivariate Gaussian: mean vector and full covariance matrix.

    The covariance must be symmetric positive definite; the Cholesky
    factor is computed once at construction and reused by every density
    evaluation.
    """

    mean: np.ndarray
    covariance: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = _as_float_array(self.mean, 1)
        cov = _as_float_array(self.covariance, 2)
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise InputDomainError(
                f"covariance shape {cov.shape} does not match mean dimension {d}"
            )
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise DegenerateModelError(f"covariance is not symmetric: {cov!r}")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise DegenerateModelError(
                f"covariance is not positive definite (mean {mean!r}, covariance {cov!r})"
            ) from None
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Weighted sum of Gaussian components sharing one dimension.

    Weights are non-negative and sum to one within 1e-9.
    """

    components: tuple
    weights: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 1:
            raise InputDomainError("a mixture needs at least one component")
        w = _as_float_array(self.weights, 1)
        if w.shape[0] != len(comps):
            raise InputDomainError(
                f"{len(comps)} components but {w.shape[0]} weights"
            )
        if np.any(w < 0):
            raise InputDomainError(f"negative mixture weight in {w!r}")
        if abs(w.sum() - 1.0) > 1e-9:
            raise InputDomainError(f"mixture weights sum to {w.sum()!r}, not 1")
        d = comps[0].dim
        for i, c in enumerate(comps):
            if c.dim != d:
                raise InputDomainError(
                    f"component {i} has dimension {c.dim}, expected {d}"
                )
        w.flags.writeable = False
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim


def log_gaussian_pdf(x, comp: GaussianComponent) -> float:
    """Log density of one Gaussian component at x."""
    x = _as_float_array(x, 1)
    if x.shape[0] != comp.dim:
        raise InputDomainError(
            f"x has dimension {x.shape[0]}, component has {comp.dim}"
        )
    chol = comp._chol
    diff = x - comp.mean
    # Solve L z = diff; the Mahalanobis term is ||z||^2 and
    # log|Sigma| = 2 sum(log diag L).
    z = solve_triangular(chol, diff, lower=True)
    maha = float(z @ z)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (comp.dim * _LOG_2PI + log_det + maha)


def gaussian_pdf(x, comp: GaussianComponent) -> float:
    """Density of one Gaussian component at x.

    Evaluated in log space and exponentiated on return, so the value is
    strictly positive whenever it is representable at all.
    """
    return float(np.exp(log_gaussian_pdf(x, comp)))


def mixture_pdf(x, gmm: GaussianMixture) -> float:
    """Density of the mixture at x: the weight-averaged component pdfs."""
    log_ps = np.array([log_gaussian_pdf(x, c) for c in gmm.components])
    return float(np.sum(gmm.weights * np.exp(log_ps)))


def mixture_log_pdf(xs, gmm: GaussianMixture) -> np.ndarray:
    """Log mixture density at each row of xs, shape (n, D).

    Computed per component and combined with logsumexp, so values stay
    finite far into the tails until the Mahalanobis term itself
    overflows.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    if xs.shape[1] != gmm.dim:
        raise InputDomainError(
            f"samples have dimension {xs.shape[1]}, mixture has {gmm.dim}"
        )
    logs = np.empty((xs.shape[0], gmm.n_components))
    for k, comp in enumerate(gmm.components):
        diff = xs - comp.mean
        z = solve_triangular(comp._chol, diff.T, lower=True)
        maha = np.einsum("dt,dt->t", z, z)
        log_det = 2.0 * float(np.sum(np.log(np.diag(comp._chol))))
        logs[:, k] = -0.5 * (comp.dim * _LOG_2PI + log_det + maha)
    with np.errstate(divide="ignore"):
        log_w = np.log(gmm.weights)
    return logsumexp(logs + log_w, axis=1)


def sample_mixture(gmm: GaussianMixture, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points from the mixture, shape (n, D)."""
    if n < 1:
        raise InputDomainError(f"n must be >= 1, got {n}")
    picks = rng.choice(gmm.n_components, size=n, p=gmm.weights)
    normals = rng.standard_normal((n, gmm.dim))
    out = np.empty((n, gmm.dim))
    for k, comp in enumerate(gmm.components):
        mask = picks == k
        out[mask] = comp.mean + normals[mask] @ comp._chol.T
    return out


def interval_prob_1d(x, mean, sd, eps) -> np.ndarray:
    """P(x - eps <= X <= x + eps) for scalar Gaussians, vectorized.

    Exact CDF difference. The tail branch subtracts complementary CDFs
    so far-out observations keep full relative accuracy instead of
    cancelling to zero.
    """
    hi = (x + eps - mean) / sd
    lo = (x - eps - mean) / sd
    upper_tail = lo > 0
    p = np.where(upper_tail, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    return np.clip(p, 0.0, 1.0)


def mixture_interval_prob(x, eps: float, gmm: GaussianMixture) -> float:
    """Probability mass of the mixture in a half-width-eps box around x.

    For 1-d mixtures this is the exact per-component CDF difference over
    [x - eps, x + eps]; in higher dimensions the midpoint approximation
    pdf(x) * (2 eps)^D is used.
    """
    if eps <= 0:
        if eps == 0 and gmm.dim == 1:
            return 0.0
        raise InputDomainError(f"eps must be > 0, got {eps}")
    x = _as_float_array(x, 1)
    if x.shape[0] != gmm.dim:
        raise InputDomainError(
            f"x has dimension {x.shape[0]}, mixture has {gmm.dim}"
        )
    if gmm.dim == 1:
        means = np.array([c.mean[0] for c in gmm.components])
        sds = np.sqrt([c.covariance[0, 0] for c in gmm.components])
        probs = interval_prob_1d(x[0], means, sds, eps)
        return float(np.sum(gmm.weights * probs))
    return mixture_pdf(x, gmm) * (2.0 * eps) ** gmm.dim


def floor_covariance(cov: np.ndarray, floor: float) -> np.ndarray:
    """Clamp covariance eigenvalues to at least `floor`, symmetrizing first.

    The 1x1 case is a scalar max so the floor is hit exactly.
    """
    if cov.shape == (1, 1):
        return np.array([[max(cov[0, 0], floor)]])
    sym = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(sym)
    vals = np.maximum(vals, floor)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T)
