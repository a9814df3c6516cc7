"""Sequence classification with hidden Markov models.

Discrete-alphabet and Gaussian-mixture-emission HMMs, entropy and
opcode feature pipelines, and an evaluation harness for cross-validated
AUC and model-to-model KL divergence.
"""

from .discrete_hmm import DiscreteHmm, DiscreteSequence, dhmm_log_score, dhmm_train
from .errors import (
    DegenerateModelError,
    EvaluationError,
    InputDomainError,
    SeqHmmError,
    TooShortInputError,
)
from .evaluate import (
    DiscreteRecipe,
    EvalReport,
    GmmRecipe,
    KlEstimate,
    ScoredSample,
    auc,
    cross_validate,
    kl_gmm,
    kl_models,
    pooled_emissions,
    train_restarts,
)
from .features import (
    EntropyConfig,
    OpcodeVocab,
    build_opcode_vocab,
    encode_opcodes,
    entropy_series,
    read_entropy_file,
    read_symbol_file,
    read_vocab_file,
    synth_generate,
    write_entropy_file,
    write_symbol_file,
    write_vocab_file,
)
from .gmm import (
    GaussianComponent,
    GaussianMixture,
    floor_covariance,
    gaussian_pdf,
    log_gaussian_pdf,
    mixture_interval_prob,
    mixture_log_pdf,
    mixture_pdf,
    sample_mixture,
)
from .gmm_hmm import (
    ContinuousSequence,
    GmmHmm,
    ghmm_emission_prob,
    ghmm_log_score,
    ghmm_stationary,
    ghmm_train,
)
from .model_io import load_model, model_record, save_model
from .training import TrainConfig, TrainResult

__all__ = [
    "DiscreteHmm", "DiscreteSequence", "dhmm_log_score", "dhmm_train",
    "GmmHmm", "ContinuousSequence", "ghmm_emission_prob", "ghmm_log_score",
    "ghmm_stationary", "ghmm_train",
    "GaussianComponent", "GaussianMixture", "gaussian_pdf", "log_gaussian_pdf",
    "mixture_pdf", "mixture_log_pdf", "mixture_interval_prob", "sample_mixture",
    "floor_covariance",
    "TrainConfig", "TrainResult",
    "EntropyConfig", "OpcodeVocab", "entropy_series", "build_opcode_vocab",
    "encode_opcodes", "synth_generate",
    "read_entropy_file", "write_entropy_file", "read_symbol_file",
    "write_symbol_file", "read_vocab_file", "write_vocab_file",
    "ScoredSample", "EvalReport", "auc", "cross_validate", "train_restarts",
    "DiscreteRecipe", "GmmRecipe", "KlEstimate", "kl_gmm", "kl_models",
    "pooled_emissions",
    "load_model", "save_model", "model_record",
    "SeqHmmError", "DegenerateModelError", "InputDomainError",
    "TooShortInputError", "EvaluationError",
]
