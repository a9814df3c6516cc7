"""Command-line surface for extraction, training, scoring, and evaluation.

Every command is deterministic given --seed and its inputs: file
outputs carry no timestamps, floats are written in shortest round-trip
form, and all randomness flows from numpy generators seeded explicitly.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import json
from functools import partial
from pathlib import Path

import click
import numpy as np

from .demo import DEMO_T, component_mean_table, run_demo
from .discrete_hmm import DiscreteHmm, DiscreteSequence, dhmm_log_score, dhmm_train
from .errors import SeqHmmError
from .evaluate import (
    DiscreteRecipe,
    GmmRecipe,
    cross_validate,
    kl_models,
    train_restarts,
)
from .features import (
    DEFAULT_T_CAP,
    DEFAULT_TOP_K,
    EntropyConfig,
    build_opcode_vocab,
    encode_opcodes,
    entropy_series,
    feature_kind,
    read_entropy_file,
    read_mnemonics,
    read_symbol_file,
    read_vocab_file,
    synth_generate,
    write_entropy_file,
    write_symbol_file,
    write_vocab_file,
)
from .gmm_hmm import ContinuousSequence, GmmHmm, ghmm_log_score, ghmm_train
from .model_io import load_model, save_model
from .training import TrainConfig


def _warn(message: str) -> None:
    click.echo(f"warning: {message}", err=True)


def _write_json(path: Path, record: dict) -> None:
    with open(path, "w") as fh:
        json.dump(record, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _fail(message: str):
    raise click.ClickException(message)


@click.group()
def main():
    """Sequence-model experiments: HMMs over entropy and opcode features."""


seed_option = click.option("--seed", default=0, show_default=True, help="Base RNG seed.")
jobs_option = click.option(
    "--jobs", default=1, show_default=True, type=click.IntRange(min=1),
    help="Worker processes for restart/extraction fan-out.",
)
out_dir_option = click.option(
    "--out-dir", default=".", show_default=True,
    type=click.Path(file_okay=False, path_type=Path),
)


def _train_config(max_iters, tol, init_noise) -> TrainConfig:
    try:
        return TrainConfig(max_iters=max_iters, tol=tol, init_noise=init_noise)
    except SeqHmmError as exc:
        raise click.UsageError(str(exc)) from exc


# ---------------------------------------------------------------- extract


@main.command()
@click.argument("inputs", nargs=-1, type=click.Path(path_type=Path))
@click.option("--mode", type=click.Choice(["entropy", "opcodes"]), required=True)
@click.option("--window", default=512, show_default=True, type=click.IntRange(min=2))
@click.option("--slide", default=None, type=click.IntRange(min=1),
              help="Default: half the window.")
@click.option("--vocab", "vocab_path", default=None,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Opcode vocabulary file; built from the inputs when omitted.")
@click.option("--top-k", default=DEFAULT_TOP_K, show_default=True,
              type=click.IntRange(min=1))
@click.option("--t-cap", default=DEFAULT_T_CAP, show_default=True,
              type=click.IntRange(min=1))
@out_dir_option
def extract(inputs, mode, window, slide, vocab_path, top_k, t_cap, out_dir):
    """Turn raw files into feature files (one per input) plus a manifest."""
    if not inputs:
        raise click.UsageError("no input files given")
    out_dir.mkdir(parents=True, exist_ok=True)
    slide = slide if slide is not None else max(window // 2, 1)
    entries = []
    written = 0

    if mode == "entropy":
        cfg = EntropyConfig(window=window, slide=slide)
        params = {"mode": mode, "window": window, "slide": slide}
        for path in inputs:
            entry = {"input": str(path)}
            try:
                seq = entropy_series(path.read_bytes(), cfg)
            except (OSError, SeqHmmError) as exc:
                _warn(f"{path}: {exc}")
                entry["error"] = str(exc)
            else:
                out = out_dir / (path.name + ".entropy")
                write_entropy_file(out, seq, cfg)
                entry.update({"output": str(out), "values": len(seq)})
                written += 1
            entries.append(entry)
    else:
        params = {"mode": mode, "top_k": top_k, "t_cap": t_cap}
        streams = {}
        for path in inputs:
            try:
                streams[path] = read_mnemonics(path.read_text())
            except OSError as exc:
                _warn(f"{path}: {exc}")
                entries.append({"input": str(path), "error": str(exc)})
        if vocab_path is not None:
            vocab = read_vocab_file(vocab_path)
            params["vocab"] = str(vocab_path)
        else:
            try:
                vocab, coverage = build_opcode_vocab(streams.values(), k=top_k)
            except SeqHmmError as exc:
                _fail(str(exc))
            vocab_out = out_dir / "vocab.txt"
            write_vocab_file(vocab_out, vocab)
            params.update({"vocab": str(vocab_out), "coverage": coverage})
            click.echo(f"vocabulary: {vocab_out} "
                       f"({len(vocab.ranked_opcodes)} + other, "
                       f"coverage {coverage:.4f})")
        for path, stream in streams.items():
            entry = {"input": str(path)}
            try:
                seq = encode_opcodes(stream, vocab, t_cap=t_cap)
            except SeqHmmError as exc:
                _warn(f"{path}: {exc}")
                entry["error"] = str(exc)
            else:
                out = out_dir / (path.name + ".opcodes")
                write_symbol_file(out, seq, vocab.n_symbols)
                entry.update({"output": str(out), "values": len(seq)})
                written += 1
            entries.append(entry)

    _write_json(out_dir / "manifest.json", {"params": params, "files": entries})
    click.echo(f"extracted {written}/{len(inputs)} inputs -> {out_dir}")
    if written == 0:
        _fail("no input could be extracted")


# ------------------------------------------------------------------ train


def _load_feature_sequences(paths):
    """Returns ('entropy', [ContinuousSequence]) or ('opcodes', [DiscreteSequence], K)."""
    kinds = set()
    for p in paths:
        kinds.add(feature_kind(p))
    if len(kinds) != 1:
        _fail(f"mixed feature kinds: {sorted(kinds)}")
    kind = kinds.pop()
    if kind == "entropy":
        return kind, [read_entropy_file(p)[0] for p in paths], None
    seqs = []
    n_symbols = 0
    for p in paths:
        seq, k = read_symbol_file(p)
        seqs.append(seq)
        n_symbols = max(n_symbols, k)
    return kind, seqs, n_symbols


@main.command()
@click.argument("features", nargs=-1,
                type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--states", default=2, show_default=True, type=click.IntRange(min=1))
@click.option("--components", default=6, show_default=True, type=click.IntRange(min=1))
@click.option("--eps", default=1e-3, show_default=True, type=float)
@click.option("--max-iters", default=200, show_default=True, type=click.IntRange(min=1))
@click.option("--tol", default=1e-4, show_default=True, type=float)
@click.option("--init-noise", default=0.0, show_default=True, type=float)
@click.option("--restarts", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--t-cap", default=DEFAULT_T_CAP, show_default=True,
              type=click.IntRange(min=1))
@seed_option
@jobs_option
@out_dir_option
def train(features, states, components, eps, max_iters, tol, init_noise,
          restarts, t_cap, seed, jobs, out_dir):
    """Fit one model to the concatenated feature files; keep the best restart."""
    if not features:
        raise click.UsageError("no feature files given")
    config = _train_config(max_iters, tol, init_noise)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        kind, seqs, n_symbols = _load_feature_sequences(features)
        if kind == "entropy":
            stream = ContinuousSequence(vectors=np.vstack([s.vectors for s in seqs]))
            fn = partial(ghmm_train, stream, states, components, eps, config)
        else:
            stream = DiscreteSequence(
                symbols=np.concatenate([s.symbols for s in seqs])[:t_cap]
            )
            fn = partial(dhmm_train, stream, states, n_symbols, config)
        best, finals = train_restarts(fn, restarts, seed, jobs)
    except SeqHmmError as exc:
        _fail(str(exc))
    for i, ll in enumerate(finals):
        click.echo(f"restart {i:3d} final log-likelihood {ll!r}")
    out = out_dir / "model.json"
    save_model(out, best.model, seed=best.seed, iterations=best.iterations,
               final_log_likelihood=best.final_log_likelihood)
    click.echo(f"best restart {int(np.argmax(finals))} "
               f"(converged={best.converged}) -> {out}")


# ------------------------------------------------------------------ score


def _score_one(model, path) -> tuple:
    kind = feature_kind(path)
    if isinstance(model, DiscreteHmm):
        if kind != "opcodes":
            _fail(f"{path}: {kind} features cannot be scored by a discrete model")
        seq, k = read_symbol_file(path)
        if k > model.n_symbols or int(seq.symbols.max()) >= model.n_symbols:
            _fail(f"{path}: alphabet k={k} exceeds the model's {model.n_symbols}")
        return len(seq), dhmm_log_score(model, seq)
    if kind != "entropy":
        _fail(f"{path}: {kind} features cannot be scored by a gmm model")
    seq, _ = read_entropy_file(path)
    if seq.dim != model.dim:
        _fail(f"{path}: dimension {seq.dim} does not match the model's {model.dim}")
    return len(seq), ghmm_log_score(model, seq)


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("features", nargs=-1,
                type=click.Path(exists=True, dir_okay=False, path_type=Path))
def score(model_file, features):
    """Log-probability of each feature file under a saved model (CSV)."""
    if not features:
        raise click.UsageError("no feature files given")
    try:
        model, _ = load_model(model_file)
        click.echo("id,T,log_prob,log_prob_per_symbol")
        for path in features:
            t, log_prob = _score_one(model, path)
            click.echo(f"{path},{t},{log_prob!r},{log_prob / t!r}")
    except SeqHmmError as exc:
        _fail(str(exc))


# --------------------------------------------------------------- evaluate


def _family_sequences(directory: Path):
    files = []
    for p in sorted(directory.iterdir()):
        if not p.is_file():
            continue
        try:
            kind = feature_kind(p)
        except (SeqHmmError, OSError):
            continue
        files.append((p, kind))
    if not files:
        _fail(f"{directory}: no feature files found")
    kinds = {k for _, k in files}
    if len(kinds) != 1:
        _fail(f"{directory}: mixed feature kinds {sorted(kinds)}")
    return [p for p, _ in files], kinds.pop()


@main.command()
@click.option("--family-a", "family_a_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Directory of feature files for the trained (positive) family.")
@click.option("--family-b", "family_b_dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Directory of feature files for the negative family.")
@click.option("--states", default=2, show_default=True, type=click.IntRange(min=1))
@click.option("--components", default=6, show_default=True, type=click.IntRange(min=1))
@click.option("--eps", default=1e-3, show_default=True, type=float)
@click.option("--max-iters", default=200, show_default=True, type=click.IntRange(min=1))
@click.option("--tol", default=1e-4, show_default=True, type=float)
@click.option("--init-noise", default=0.0, show_default=True, type=float)
@click.option("--restarts", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--t-cap", default=DEFAULT_T_CAP, show_default=True,
              type=click.IntRange(min=1))
@click.option("--folds", default=5, show_default=True, type=click.IntRange(min=2))
@click.option("--test-per-family", default=100, show_default=True,
              type=click.IntRange(min=1))
@seed_option
@jobs_option
@out_dir_option
def evaluate(family_a_dir, family_b_dir, states, components, eps, max_iters, tol,
             init_noise, restarts, t_cap, folds, test_per_family, seed, jobs, out_dir):
    """Cross-validated train-on-A, score-A-vs-B AUC."""
    config = _train_config(max_iters, tol, init_noise)
    out_dir.mkdir(parents=True, exist_ok=True)
    files_a, kind_a = _family_sequences(family_a_dir)
    files_b, kind_b = _family_sequences(family_b_dir)
    if kind_a != kind_b:
        _fail(f"family feature kinds differ: {kind_a} vs {kind_b}")
    try:
        if kind_a == "entropy":
            seqs_a = [read_entropy_file(p)[0] for p in files_a]
            seqs_b = [read_entropy_file(p)[0] for p in files_b]
            recipe = GmmRecipe(n_states=states, n_components=components, eps=eps,
                               config=config, restarts=restarts)
        else:
            loaded = [read_symbol_file(p) for p in files_a + files_b]
            n_symbols = max(k for _, k in loaded)
            seqs_a = [s for s, _ in loaded[: len(files_a)]]
            seqs_b = [s for s, _ in loaded[len(files_a):]]
            recipe = DiscreteRecipe(n_states=states, n_symbols=n_symbols,
                                    config=config, restarts=restarts, t_cap=t_cap)
        report = cross_validate(seqs_a, seqs_b, recipe, folds=folds,
                                test_per_family=test_per_family, seed=seed, jobs=jobs)
    except SeqHmmError as exc:
        _fail(str(exc))

    lines = [
        "cross-validation report",
        f"family_a: {family_a_dir} ({len(files_a)} files)",
        f"family_b: {family_b_dir} ({len(files_b)} files)",
        "config: " + " ".join(f"{k}={v}" for k, v in sorted(report.config.items())),
        "fold  auc",
    ]
    lines.extend(
        f"{i:4d}  {a:.4f}" for i, a in enumerate(report.per_fold_auc)
    )
    lines.append(f"mean  {report.mean_auc:.4f}")
    text = "\n".join(lines) + "\n"
    click.echo(text, nl=False)
    (out_dir / "report.txt").write_text(text)
    _write_json(out_dir / "report.json", {
        "per_fold_auc": [float(a) for a in report.per_fold_auc],
        "mean_auc": report.mean_auc,
        "config": report.config,
        "family_a": {"path": str(family_a_dir), "files": len(files_a)},
        "family_b": {"path": str(family_b_dir), "files": len(files_b)},
    })
    click.echo(f"report -> {out_dir / 'report.txt'}, {out_dir / 'report.json'}")


# -------------------------------------------------------------------- kl


@main.command()
@click.argument("model_file_1", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("model_file_2", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--n-samples", default=100000, show_default=True, type=click.IntRange(min=1))
@seed_option
def kl(model_file_1, model_file_2, n_samples, seed):
    """Symmetric Monte Carlo KL between two saved gmm models (nats)."""
    try:
        m1, _ = load_model(model_file_1)
        m2, _ = load_model(model_file_2)
        if not isinstance(m1, GmmHmm) or not isinstance(m2, GmmHmm):
            _fail("kl compares gmm models; got a discrete model")
        est = kl_models(m1, m2, n_samples=n_samples, seed=seed)
    except SeqHmmError as exc:
        _fail(str(exc))
    click.echo(f"symmetric KL (nats): {est.estimate:.4f} +/- {est.std_error:.4f}")
    click.echo(
        f"exact: estimate={est.estimate!r} std_error={est.std_error!r} "
        f"n_samples={est.n_samples} n_zero_density={est.n_zero_density}"
    )


# ------------------------------------------------------------------ demo


@main.command()
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--restarts", default=100, show_default=True, type=click.IntRange(min=1))
@click.option("--t", default=DEMO_T, show_default=True, type=click.IntRange(min=2))
@seed_option
@jobs_option
@out_dir_option
def demo(corpus, restarts, t, seed, jobs, out_dir):
    """English-text experiment: two-state models should isolate vowels."""
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        report = run_demo(corpus.read_text(), restarts=restarts, seed=seed,
                          jobs=jobs, t=t)
    except SeqHmmError as exc:
        _fail(str(exc))

    alphabet = "abcdefghijklmnopqrstuvwxyz_"
    d_model = report.discrete.model
    click.echo(f"discrete HMM: best of {restarts} restarts, "
               f"final log-likelihood {report.discrete.final_log_likelihood:.4f}")
    click.echo("letter  " + "  ".join(f"state{j}" for j in range(d_model.n_states)))
    for code, ch in enumerate(alphabet):
        row = "  ".join(f"{d_model.emit[j, code]:.4f}" for j in range(d_model.n_states))
        click.echo(f"     {ch}  {row}")
    if report.discrete_success:
        click.echo(f"vowels and space dominate state {report.discrete_vowel_state}: "
                   "separation succeeded")
    else:
        click.echo("no state dominates all vowels and space: separation failed")

    g_model = report.gmm.model
    click.echo(f"gmm HMM: best of {restarts} restarts, "
               f"final log-likelihood {report.gmm.final_log_likelihood:.4f}")
    means = component_mean_table(g_model)
    for j in range(means.shape[0]):
        row = " ".join(f"{m:6.2f}" for m in sorted(means[j]))
        click.echo(f"state {j} component means: {row}")
    if report.gmm_success:
        click.echo(f"state {report.gmm_vowel_state} component means match the "
                   "encoded vowels and space: separation succeeded")
    else:
        click.echo("no state's component means match the encoded vowels and space: "
                   "separation failed")

    save_model(out_dir / "demo_discrete.json", d_model,
               seed=report.discrete.seed, iterations=report.discrete.iterations,
               final_log_likelihood=report.discrete.final_log_likelihood)
    save_model(out_dir / "demo_gmm.json", g_model,
               seed=report.gmm.seed, iterations=report.gmm.iterations,
               final_log_likelihood=report.gmm.final_log_likelihood)
    _write_json(out_dir / "demo_report.json", {
        "t": int(len(report.codes)),
        "restarts": restarts,
        "seed": seed,
        "discrete": {
            "final_log_likelihood": report.discrete.final_log_likelihood,
            "restart_log_likelihoods": report.discrete_restart_lls,
            "vowel_state": report.discrete_vowel_state,
            "success": report.discrete_success,
            "emit": [list(map(float, row)) for row in d_model.emit],
        },
        "gmm": {
            "final_log_likelihood": report.gmm.final_log_likelihood,
            "restart_log_likelihoods": report.gmm_restart_lls,
            "vowel_state": report.gmm_vowel_state,
            "success": report.gmm_success,
            "component_means": [list(map(float, row)) for row in means],
        },
    })
    click.echo(f"demo artifacts -> {out_dir}")


# ----------------------------------------------------------------- synth


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--t", default=1000, show_default=True, type=click.IntRange(min=1))
@click.option("--count", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--window", default=512, show_default=True, type=click.IntRange(min=2),
              help="Header label for generated entropy-style files.")
@click.option("--slide", default=256, show_default=True, type=click.IntRange(min=1))
@seed_option
@out_dir_option
def synth(model_file, t, count, window, slide, seed, out_dir):
    """Sample feature files from a saved model (synthetic test data)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        model, _ = load_model(model_file)
        file_seeds = np.random.SeedSequence(seed).generate_state(count)
        for i, s in enumerate(file_seeds):
            seq = synth_generate(model, t, int(s))
            if isinstance(model, DiscreteHmm):
                out = out_dir / f"synth_{i:03d}.opcodes"
                write_symbol_file(out, seq, model.n_symbols)
            else:
                out = out_dir / f"synth_{i:03d}.entropy"
                write_entropy_file(out, seq, EntropyConfig(window=window, slide=slide))
            click.echo(str(out))
    except SeqHmmError as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
