"""JSON persistence for trained models.

Floats are written with repr (shortest round-trip form), so a loaded
model reproduces every parameter bit-exactly and scores sequences
identically to the in-memory original. Keys are sorted and no
timestamps are recorded, making the files byte-stable across reruns.
"""

import json

import numpy as np

from .discrete_hmm import DiscreteHmm
from .errors import InputDomainError
from .gmm import GaussianComponent, GaussianMixture
from .gmm_hmm import GmmHmm

FORMAT_VERSION = 1


def _listify(arr) -> list:
    return np.asarray(arr, dtype=float).tolist()


def model_record(model, seed=None, iterations=None, final_log_likelihood=None) -> dict:
    """The JSON-ready dict for a model plus its training metadata."""
    record = {
        "format_version": FORMAT_VERSION,
        "training": {
            "seed": None if seed is None else int(seed),
            "iterations": None if iterations is None else int(iterations),
            "final_log_likelihood": (
                None if final_log_likelihood is None else float(final_log_likelihood)
            ),
        },
    }
    if isinstance(model, DiscreteHmm):
        record.update({
            "kind": "discrete",
            "n_states": model.n_states,
            "n_symbols": model.n_symbols,
            "pi": _listify(model.pi),
            "trans": _listify(model.trans),
            "emit": _listify(model.emit),
        })
    elif isinstance(model, GmmHmm):
        record.update({
            "kind": "gmm",
            "n_states": model.n_states,
            "n_components": model.n_components,
            "dim": model.dim,
            "eps": float(model.eps),
            "pi": _listify(model.pi),
            "trans": _listify(model.trans),
            "weights": [_listify(m.weights) for m in model.emissions],
            "means": [[_listify(c.mean) for c in m.components] for m in model.emissions],
            "covariances": [
                [_listify(c.covariance) for c in m.components] for m in model.emissions
            ],
        })
    else:
        raise InputDomainError(f"cannot serialize a {type(model).__name__}")
    return record


def save_model(path, model, seed=None, iterations=None, final_log_likelihood=None) -> None:
    record = model_record(model, seed=seed, iterations=iterations,
                          final_log_likelihood=final_log_likelihood)
    with open(path, "w") as fh:
        json.dump(record, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _model_from_record(record: dict):
    kind = record.get("kind")
    if record.get("format_version") != FORMAT_VERSION:
        raise InputDomainError(
            f"unsupported model file version {record.get('format_version')!r}"
        )
    if kind == "discrete":
        return DiscreteHmm(
            pi=np.array(record["pi"]),
            trans=np.array(record["trans"]),
            emit=np.array(record["emit"]),
        )
    if kind == "gmm":
        emissions = []
        for weights, means, covs in zip(
            record["weights"], record["means"], record["covariances"]
        ):
            comps = tuple(
                GaussianComponent(mean=np.array(m), covariance=np.array(c))
                for m, c in zip(means, covs)
            )
            emissions.append(GaussianMixture(components=comps, weights=np.array(weights)))
        return GmmHmm(
            pi=np.array(record["pi"]),
            trans=np.array(record["trans"]),
            emissions=tuple(emissions),
            eps=record["eps"],
        )
    raise InputDomainError(f"unknown model kind {kind!r}")


def load_model(path):
    """Returns (model, training-metadata dict)."""
    with open(path) as fh:
        try:
            record = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputDomainError(f"{path}: not a model file ({exc})") from exc
    try:
        model = _model_from_record(record)
    except (KeyError, TypeError) as exc:
        raise InputDomainError(f"{path}: malformed model file ({exc})") from exc
    return model, record.get("training", {})
