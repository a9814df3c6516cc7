"""Experiment harness: restart selection, cross-validated AUC, model KL.

The classification protocol trains on one family and scores held-out
samples of that family against samples of another, summarized by the
rank-based AUC. Model-to-model divergence is a Monte Carlo symmetric KL
between the stationary-pooled emission mixtures of two trained models.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.stats import rankdata

from .discrete_hmm import DiscreteSequence, dhmm_log_score, dhmm_train
from .errors import EvaluationError, InputDomainError, SeqHmmError
from .features import DEFAULT_T_CAP
from .gmm import GaussianMixture, mixture_log_pdf, sample_mixture
from .gmm_hmm import ContinuousSequence, GmmHmm, ghmm_log_score, ghmm_stationary, ghmm_train
from .training import TrainConfig

DEFAULT_KL_SAMPLES = 100000

# Stand-in for -inf log-scores so ranking stays defined: every
# impossible sequence ties at the most negative representable value.
_SCORE_FLOOR = float(np.finfo(float).min)


@dataclass(frozen=True)
class ScoredSample:
    id: str
    score: float
    label: str

    def __post_init__(self):
        if self.label not in ("positive", "negative"):
            raise InputDomainError(f"label must be positive/negative, got {self.label!r}")
        if not np.isfinite(self.score):
            raise InputDomainError(f"score must be finite, got {self.score}")


@dataclass(frozen=True)
class EvalReport:
    per_fold_auc: np.ndarray
    mean_auc: float
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        aucs = np.asarray(self.per_fold_auc, dtype=float)
        if np.any(aucs < 0) or np.any(aucs > 1):
            raise EvaluationError(f"AUC outside [0, 1]: {aucs!r}")
        if abs(self.mean_auc - aucs.mean()) > 1e-12:
            raise EvaluationError(
                f"mean_auc {self.mean_auc} is not the mean of {aucs!r}"
            )
        object.__setattr__(self, "per_fold_auc", aucs)


def auc(samples) -> float:
    """Probability a random positive outscores a random negative.

    Rank-based (Mann-Whitney) with ties counted half; identical to
    brute-force pairwise counting.
    """
    samples = list(samples)
    scores = np.array([s.score for s in samples])
    pos = np.array([s.label == "positive" for s in samples])
    n_pos = int(pos.sum())
    n_neg = len(samples) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError(
            f"AUC needs both classes, got {n_pos} positive / {n_neg} negative"
        )
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def train_restarts(train_fn, restarts: int, seed: int, jobs: int = 1):
    """Run seeded restarts of train_fn(seed) and keep the best.

    Child seeds derive deterministically from seed. Returns the best
    TrainResult (highest final log-likelihood, first on ties) and the
    list of every restart's final log-likelihood in restart order.
    """
    if restarts < 1:
        raise InputDomainError(f"restarts must be >= 1, got {restarts}")
    child_seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(restarts)]
    if jobs > 1 and restarts > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(train_fn, child_seeds))
    else:
        results = [train_fn(s) for s in child_seeds]
    finals = [r.final_log_likelihood for r in results]
    return results[int(np.argmax(finals))], finals


@dataclass(frozen=True)
class DiscreteRecipe:
    """How to fit and score a discrete HMM inside the harness.

    Training concatenates the training-portion sequences into one
    observation stream, capped at t_cap symbols.
    """

    n_states: int
    n_symbols: int
    config: TrainConfig = TrainConfig()
    restarts: int = 1
    t_cap: int = DEFAULT_T_CAP

    kind = "discrete"

    def train(self, seqs, seed: int, jobs: int = 1):
        symbols = np.concatenate([s.symbols for s in seqs])[: self.t_cap]
        stream = DiscreteSequence(symbols=symbols)
        fn = partial(dhmm_train, stream, self.n_states, self.n_symbols, self.config)
        best, _ = train_restarts(fn, self.restarts, seed, jobs)
        return best.model

    def score(self, model, seq) -> float:
        return dhmm_log_score(model, seq)

    def describe(self) -> dict:
        return {
            "model": "discrete", "n_states": self.n_states,
            "n_symbols": self.n_symbols, "restarts": self.restarts,
            "t_cap": self.t_cap, "max_iters": self.config.max_iters,
            "tol": self.config.tol,
        }


@dataclass(frozen=True)
class GmmRecipe:
    """How to fit and score a mixture-emission HMM inside the harness.

    Training concatenates the training-portion sequences into one long
    observation stream.
    """

    n_states: int
    n_components: int
    eps: float
    config: TrainConfig = TrainConfig()
    restarts: int = 1

    kind = "gmm"

    def train(self, seqs, seed: int, jobs: int = 1):
        stream = ContinuousSequence(vectors=np.vstack([s.vectors for s in seqs]))
        fn = partial(
            ghmm_train, stream, self.n_states, self.n_components, self.eps, self.config
        )
        best, _ = train_restarts(fn, self.restarts, seed, jobs)
        return best.model

    def score(self, model, seq) -> float:
        return ghmm_log_score(model, seq)

    def describe(self) -> dict:
        return {
            "model": "gmm", "n_states": self.n_states,
            "n_components": self.n_components, "eps": self.eps,
            "restarts": self.restarts, "max_iters": self.config.max_iters,
            "tol": self.config.tol, "init_noise": self.config.init_noise,
        }


def _normalized_score(trainer, model, seq) -> float:
    raw = trainer.score(model, seq) / len(seq)
    return raw if np.isfinite(raw) else _SCORE_FLOOR


def cross_validate(family_a, family_b, trainer, folds: int = 5,
                   test_per_family: int = 100, seed: int = 0,
                   jobs: int = 1) -> EvalReport:
    """Train-on-A, test A-vs-B classification, k-fold cross-validated.

    family_a is split into `folds` disjoint parts covering every
    sequence; each fold trains on the rest of family_a, then scores up
    to test_per_family held-out family_a sequences (positives) and as
    many family_b sequences (negatives) with per-symbol-normalized log
    scores. Returns per-fold and mean AUC.
    """
    family_a = list(family_a)
    family_b = list(family_b)
    if folds < 2:
        raise InputDomainError(f"folds must be >= 2, got {folds}")
    if test_per_family < 1:
        raise InputDomainError(f"test_per_family must be >= 1, got {test_per_family}")
    if len(family_a) < folds:
        raise EvaluationError(
            f"family_a has {len(family_a)} sequences, need at least {folds}"
        )
    if not family_b:
        raise EvaluationError("family_b is empty")

    rng = np.random.default_rng(seed)
    parts = np.array_split(rng.permutation(len(family_a)), folds)
    fold_seeds = np.random.SeedSequence(seed).generate_state(folds)

    per_fold = []
    for f in range(folds):
        test_idx = parts[f]
        train_idx = np.concatenate([parts[g] for g in range(folds) if g != f])
        try:
            model = trainer.train(
                [family_a[i] for i in train_idx], seed=int(fold_seeds[f]), jobs=jobs
            )
        except SeqHmmError as exc:
            raise EvaluationError(f"fold {f}: training failed: {exc}") from exc
        neg_idx = rng.permutation(len(family_b))[:test_per_family]
        samples = [
            ScoredSample(id=f"a{i}", label="positive",
                         score=_normalized_score(trainer, model, family_a[i]))
            for i in test_idx[:test_per_family]
        ]
        samples.extend(
            ScoredSample(id=f"b{i}", label="negative",
                         score=_normalized_score(trainer, model, family_b[i]))
            for i in neg_idx
        )
        per_fold.append(auc(samples))

    per_fold = np.array(per_fold)
    config = dict(trainer.describe())
    config.update({"folds": folds, "test_per_family": test_per_family, "seed": seed})
    return EvalReport(per_fold_auc=per_fold, mean_auc=float(per_fold.mean()),
                      config=config)


@dataclass(frozen=True)
class KlEstimate:
    """Monte Carlo KL estimate in nats, with its standard error.

    n_zero_density counts samples where the reference density was zero;
    any such sample makes the estimate +inf.
    """

    estimate: float
    std_error: float
    n_samples: int
    n_zero_density: int = 0

    def __float__(self) -> float:
        return self.estimate


def kl_gmm(p: GaussianMixture, q: GaussianMixture, n_samples: int = DEFAULT_KL_SAMPLES,
           seed: int = 0) -> KlEstimate:
    """KL(p || q) by sampling from p: mean of log p(x) - log q(x)."""
    if p.dim != q.dim:
        raise InputDomainError(f"dimension mismatch: p has {p.dim}, q has {q.dim}")
    if n_samples < 1:
        raise InputDomainError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    xs = sample_mixture(p, n_samples, rng)
    log_p = mixture_log_pdf(xs, p)
    log_q = mixture_log_pdf(xs, q)
    n_zero = int(np.sum(np.isneginf(log_q)))
    if n_zero > 0:
        return KlEstimate(estimate=np.inf, std_error=np.inf,
                          n_samples=n_samples, n_zero_density=n_zero)
    diffs = log_p - log_q
    se = float(np.std(diffs, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else np.inf
    return KlEstimate(estimate=float(diffs.mean()), std_error=se, n_samples=n_samples)


def pooled_emissions(model: GmmHmm) -> GaussianMixture:
    """The model's emission density as one mixture.

    Per-state mixtures are pooled with weights from the stationary
    distribution of the transition matrix, giving the long-run marginal
    density of a single observation.
    """
    stationary = ghmm_stationary(model)
    comps = []
    weights = []
    for j, mix in enumerate(model.emissions):
        comps.extend(mix.components)
        weights.extend(stationary[j] * mix.weights)
    weights = np.array(weights)
    return GaussianMixture(components=tuple(comps), weights=weights / weights.sum())


def kl_models(m1: GmmHmm, m2: GmmHmm, n_samples: int = DEFAULT_KL_SAMPLES,
              seed: int = 0) -> KlEstimate:
    """Symmetric KL between two models' pooled emission densities.

    Both directions use the same seed, so swapping the arguments swaps
    the two one-directional estimates and the average is exactly
    symmetric.
    """
    if m1.dim != m2.dim:
        raise InputDomainError(f"dimension mismatch: {m1.dim} vs {m2.dim}")
    p1 = pooled_emissions(m1)
    p2 = pooled_emissions(m2)
    fwd = kl_gmm(p1, p2, n_samples, seed)
    rev = kl_gmm(p2, p1, n_samples, seed)
    std_error = 0.5 * math.sqrt(fwd.std_error ** 2 + rev.std_error ** 2)
    return KlEstimate(
        estimate=0.5 * (fwd.estimate + rev.estimate),
        std_error=std_error,
        n_samples=fwd.n_samples + rev.n_samples,
        n_zero_density=fwd.n_zero_density + rev.n_zero_density,
    )
