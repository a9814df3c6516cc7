"""Two-state HMMs trained on English text.

A classic sanity experiment: lowercase English reduced to 26 letters
plus word-space, encoded a..z -> 0..25 and space -> 26, then fit with a
two-state discrete HMM and a two-state six-component mixture HMM. The
discrete model's emission rows split vowels+space from consonants; the
mixture model's components in one state settle onto the encoded values
of the six vowel/space symbols.
"""

from dataclasses import dataclass
from functools import partial

import numpy as np

from .discrete_hmm import DiscreteSequence, dhmm_train
from .errors import TooShortInputError
from .evaluate import train_restarts
from .gmm_hmm import ContinuousSequence, ghmm_train
from .training import TrainConfig, TrainResult

ALPHABET = "abcdefghijklmnopqrstuvwxyz "
SPACE_CODE = 26
VOWEL_SPACE_CODES = (0, 4, 8, 14, 20, 26)

DEMO_T = 50000
DEMO_STATES = 2
DEMO_COMPONENTS = 6
DEMO_EPS = 1e-3
# Identical component means are a fixed point of EM (equal densities
# give every component the same responsibilities, so their means all
# receive the same update); a little seeded mean jitter is what lets
# the components separate.
DEMO_INIT_NOISE = 0.05

_CODE = {ch: i for i, ch in enumerate(ALPHABET)}


def filter_text(text: str) -> str:
    """Lowercase; keep letters; any whitespace run becomes one space."""
    out = []
    last_space = True
    for ch in text.lower():
        if ch in _CODE and ch != " ":
            out.append(ch)
            last_space = False
        elif ch.isspace():
            if not last_space:
                out.append(" ")
            last_space = True
    return "".join(out).strip()


def encode_text(text: str) -> np.ndarray:
    """Codes 0..26 for a string that filter_text has already cleaned."""
    return np.array([_CODE[ch] for ch in text], dtype=np.int64)


@dataclass(frozen=True)
class DemoReport:
    codes: np.ndarray
    discrete: TrainResult
    discrete_restart_lls: list
    discrete_vowel_state: int
    gmm: TrainResult
    gmm_restart_lls: list
    gmm_vowel_state: int

    @property
    def discrete_success(self) -> bool:
        return self.discrete_vowel_state >= 0

    @property
    def gmm_success(self) -> bool:
        return self.gmm_vowel_state >= 0


def discrete_vowel_state(model) -> int:
    """The state whose emission row dominates on every vowel and space.

    Returns -1 when no single state has the strictly higher probability
    for all six symbols.
    """
    for j in range(model.n_states):
        others = [g for g in range(model.n_states) if g != j]
        if all(
            all(model.emit[j, code] > model.emit[g, code] for g in others)
            for code in VOWEL_SPACE_CODES
        ):
            return j
    return -1


def gmm_vowel_state(model, tolerance: float = 1.0) -> int:
    """The state whose component means sit on the six vowel/space codes.

    Sorted component means must each lie within `tolerance` of the
    sorted encoded values {0, 4, 8, 14, 20, 26}; returns -1 if no state
    qualifies.
    """
    target = np.sort(np.array(VOWEL_SPACE_CODES, dtype=float))
    for j, mix in enumerate(model.emissions):
        means = np.sort(np.array([c.mean[0] for c in mix.components]))
        if means.shape == target.shape and np.all(np.abs(means - target) <= tolerance):
            return j
    return -1


def component_mean_table(model) -> np.ndarray:
    """Component means per state, shape (N, M), in stored component order."""
    return np.array(
        [[c.mean[0] for c in mix.components] for mix in model.emissions]
    )


def run_demo(text: str, restarts: int = 100, seed: int = 0, jobs: int = 1,
             t: int = DEMO_T, config: TrainConfig | None = None) -> DemoReport:
    """Train both demo models on a corpus and check the vowel structure.

    The corpus must filter down to at least t characters. Both models
    run `restarts` seeded trainings and keep the highest final
    log-likelihood.
    """
    filtered = filter_text(text)
    if len(filtered) < t:
        raise TooShortInputError(
            f"corpus has {len(filtered)} usable characters, the demo needs {t}",
            needed=t, got=len(filtered),
        )
    codes = encode_text(filtered[:t])
    if config is None:
        config = TrainConfig(init_noise=DEMO_INIT_NOISE)

    discrete_seq = DiscreteSequence(symbols=codes)
    fn = partial(dhmm_train, discrete_seq, DEMO_STATES, len(ALPHABET), config)
    best_d, lls_d = train_restarts(fn, restarts, seed, jobs)

    continuous_seq = ContinuousSequence(vectors=codes.astype(float))
    fn = partial(ghmm_train, continuous_seq, DEMO_STATES, DEMO_COMPONENTS,
                 DEMO_EPS, config)
    best_g, lls_g = train_restarts(fn, restarts, seed, jobs)

    return DemoReport(
        codes=codes,
        discrete=best_d,
        discrete_restart_lls=lls_d,
        discrete_vowel_state=discrete_vowel_state(best_d.model),
        gmm=best_g,
        gmm_restart_lls=lls_g,
        gmm_vowel_state=gmm_vowel_state(best_g.model),
    )
