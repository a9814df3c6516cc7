"""Feature extraction: sliding-window byte entropy and opcode symbol streams.

Entropy series feed the mixture-emission HMM; opcode streams feed the
discrete HMM. Both have a one-value-per-line text file format with a
single header line, plus a synthetic generator that samples sequences
directly from a trained model.
"""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .discrete_hmm import DiscreteHmm, DiscreteSequence
from .errors import InputDomainError, TooShortInputError
from .gmm_hmm import ContinuousSequence, GmmHmm

# The window/slide pairings used for sweeps; slide is half the window.
WINDOW_GRID = ((512, 256), (256, 128), (128, 64))

DEFAULT_TOP_K = 30
DEFAULT_T_CAP = 100000


@dataclass(frozen=True)
class EntropyConfig:
    window: int = 512
    slide: int = 256

    def __post_init__(self):
        if self.window < 2:
            raise InputDomainError(f"window must be >= 2 bytes, got {self.window}")
        if not 1 <= self.slide <= self.window:
            raise InputDomainError(
                f"slide must be in [1, window={self.window}], got {self.slide}"
            )


@dataclass(frozen=True)
class OpcodeVocab:
    """Ranked mnemonics plus a trailing catch-all bucket.

    Symbol i < len(ranked_opcodes) is ranked_opcodes[i]; everything
    else encodes to other_index, so the alphabet size is K = len + 1.
    """

    ranked_opcodes: tuple

    def __post_init__(self):
        ranked = tuple(self.ranked_opcodes)
        if len(ranked) < 1:
            raise InputDomainError("vocabulary needs at least one mnemonic")
        if len(set(ranked)) != len(ranked):
            raise InputDomainError("vocabulary mnemonics must be unique")
        object.__setattr__(self, "ranked_opcodes", ranked)

    @property
    def other_index(self) -> int:
        return len(self.ranked_opcodes)

    @property
    def n_symbols(self) -> int:
        return len(self.ranked_opcodes) + 1


def entropy_series(data: bytes, cfg: EntropyConfig = EntropyConfig()) -> ContinuousSequence:
    """Shannon entropy (bits) of each sliding window over the bytes.

    Windows start at 0, slide, 2*slide, ... and a trailing partial
    window is discarded, so the output has floor((len - window)/slide)
    + 1 values, each in [0, 8].
    """
    n = len(data)
    if n < cfg.window:
        raise TooShortInputError(
            f"input is {n} bytes, one window needs {cfg.window}",
            needed=cfg.window, got=n,
        )
    arr = np.frombuffer(bytes(data), dtype=np.uint8)
    n_windows = (n - cfg.window) // cfg.slide + 1
    values = np.empty(n_windows)
    for i in range(n_windows):
        start = i * cfg.slide
        counts = np.bincount(arr[start:start + cfg.window], minlength=256)
        p = counts[counts > 0] / cfg.window
        # 0 log 0 terms are dropped above; +0.0 normalizes the -0.0
        # that negating an exact zero would produce.
        values[i] = -np.sum(p * np.log2(p)) + 0.0
    return ContinuousSequence(vectors=values)


def build_opcode_vocab(training_streams, k: int = DEFAULT_TOP_K):
    """Rank mnemonics by total frequency; return (vocab, coverage).

    Ties at any rank break lexicographically. coverage is the fraction
    of all opcode occurrences that the retained top-k mnemonics cover.
    """
    if k < 1:
        raise InputDomainError(f"k must be >= 1, got {k}")
    counts = Counter()
    for stream in training_streams:
        counts.update(stream)
    if not counts:
        raise InputDomainError("opcode corpus is empty")
    ranked = sorted(counts, key=lambda m: (-counts[m], m))[:k]
    total = sum(counts.values())
    covered = sum(counts[m] for m in ranked)
    return OpcodeVocab(ranked_opcodes=tuple(ranked)), covered / total


def encode_opcodes(stream, vocab: OpcodeVocab, t_cap: int = DEFAULT_T_CAP) -> DiscreteSequence:
    """Map mnemonics to vocabulary indices, truncated to the first t_cap."""
    if t_cap < 1:
        raise InputDomainError(f"t_cap must be >= 1, got {t_cap}")
    index = {m: i for i, m in enumerate(vocab.ranked_opcodes)}
    other = vocab.other_index
    symbols = [index.get(m, other) for _, m in zip(range(t_cap), stream)]
    if not symbols:
        raise InputDomainError("opcode stream is empty")
    return DiscreteSequence(symbols=np.array(symbols, dtype=np.int64))


def read_mnemonics(text: str):
    """One mnemonic per line, lowercased; blank lines are skipped."""
    return [line.strip().lower() for line in text.splitlines() if line.strip()]


def synth_generate(model, t: int, seed: int):
    """Sample a length-t observation sequence from a trained model.

    Draws the hidden state path from (pi, A) and one emission per step;
    returns a DiscreteSequence or ContinuousSequence to match the model.
    """
    if t < 1:
        raise InputDomainError(f"t must be >= 1, got {t}")
    rng = np.random.default_rng(seed)
    n = model.n_states
    state_u = rng.random(t)
    pi_cum = np.cumsum(model.pi)
    trans_cum = np.cumsum(model.trans, axis=1)
    states = np.empty(t, dtype=np.int64)
    states[0] = np.searchsorted(pi_cum, state_u[0] * pi_cum[-1])
    for i in range(1, t):
        row = trans_cum[states[i - 1]]
        states[i] = np.searchsorted(row, state_u[i] * row[-1])
    states = np.minimum(states, n - 1)

    if isinstance(model, DiscreteHmm):
        emit_u = rng.random(t)
        emit_cum = np.cumsum(model.emit, axis=1)
        rows = emit_cum[states]
        symbols = np.minimum(
            (rows < (emit_u * rows[:, -1])[:, None]).sum(axis=1),
            model.n_symbols - 1,
        )
        return DiscreteSequence(symbols=symbols.astype(np.int64))
    if isinstance(model, GmmHmm):
        comp_u = rng.random(t)
        normals = rng.standard_normal((t, model.dim))
        out = np.empty((t, model.dim))
        weight_cum = np.cumsum(
            np.array([mix.weights for mix in model.emissions]), axis=1
        )
        for i in range(t):
            row = weight_cum[states[i]]
            k = min(int(np.searchsorted(row, comp_u[i] * row[-1])), row.shape[0] - 1)
            comp = model.emissions[states[i]].components[k]
            out[i] = comp.mean + comp._chol @ normals[i]
        return ContinuousSequence(vectors=out)
    raise InputDomainError(f"cannot sample from a {type(model).__name__}")


def write_entropy_file(path, seq: ContinuousSequence, cfg: EntropyConfig) -> None:
    """One value per line under a `# entropy window=<w> slide=<s>` header.

    Values are written with repr so they reload bit-exactly.
    """
    if seq.dim != 1:
        raise InputDomainError(f"entropy files hold 1-d series, got D={seq.dim}")
    lines = [f"# entropy window={cfg.window} slide={cfg.slide}"]
    lines.extend(repr(float(v)) for v in seq.vectors[:, 0])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_symbol_file(path, seq: DiscreteSequence, n_symbols: int) -> None:
    """One integer symbol per line under a `# opcodes k=<K>` header."""
    if n_symbols <= int(seq.symbols.max()):
        raise InputDomainError(
            f"n_symbols={n_symbols} does not cover symbol {int(seq.symbols.max())}"
        )
    lines = [f"# opcodes k={n_symbols}"]
    lines.extend(str(int(s)) for s in seq.symbols)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_feature_header(path):
    with open(path) as fh:
        header = fh.readline().strip()
        body = fh.read()
    parts = header.split()
    if len(parts) < 2 or parts[0] != "#" or parts[1] not in ("entropy", "opcodes"):
        raise InputDomainError(f"{path}: not a feature file (header {header!r})")
    params = dict(p.split("=", 1) for p in parts[2:])
    return parts[1], params, body


def feature_kind(path) -> str:
    """'entropy' or 'opcodes', from the file header."""
    kind, _, _ = _read_feature_header(path)
    return kind


def read_entropy_file(path):
    """Returns (ContinuousSequence, EntropyConfig)."""
    kind, params, body = _read_feature_header(path)
    if kind != "entropy":
        raise InputDomainError(f"{path}: expected an entropy file, found {kind}")
    if "window" not in params or "slide" not in params:
        raise InputDomainError(f"{path}: entropy header lacks window/slide")
    cfg = EntropyConfig(window=int(params["window"]), slide=int(params["slide"]))
    values = np.array([float(line) for line in body.split()])
    return ContinuousSequence(vectors=values), cfg


def read_symbol_file(path):
    """Returns (DiscreteSequence, n_symbols)."""
    kind, params, body = _read_feature_header(path)
    if kind != "opcodes":
        raise InputDomainError(f"{path}: expected an opcode file, found {kind}")
    if "k" not in params:
        raise InputDomainError(f"{path}: opcode header lacks k")
    n_symbols = int(params["k"])
    symbols = np.array([int(line) for line in body.split()], dtype=np.int64)
    seq = DiscreteSequence(symbols=symbols)
    if symbols.max() >= n_symbols:
        raise InputDomainError(f"{path}: symbol {symbols.max()} exceeds k={n_symbols}")
    return seq, n_symbols


def write_vocab_file(path, vocab: OpcodeVocab) -> None:
    """One mnemonic per line, in rank order; the other-bucket is implicit."""
    with open(path, "w") as fh:
        fh.write("\n".join(vocab.ranked_opcodes) + "\n")


def read_vocab_file(path) -> OpcodeVocab:
    with open(path) as fh:
        return OpcodeVocab(
            ranked_opcodes=tuple(line.strip() for line in fh if line.strip())
        )
