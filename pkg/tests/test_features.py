import numpy as np
import pytest

from oracles import shannon_entropy
from seqhmm.discrete_hmm import DiscreteHmm, DiscreteSequence
from seqhmm.errors import InputDomainError, TooShortInputError
from seqhmm.features import (
    DEFAULT_T_CAP,
    DEFAULT_TOP_K,
    WINDOW_GRID,
    EntropyConfig,
    OpcodeVocab,
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
from seqhmm.gmm import GaussianComponent, GaussianMixture
from seqhmm.gmm_hmm import GmmHmm


class TestEntropySeries:
    def test_constant_window_is_zero(self):
        seq = entropy_series(bytes(512), EntropyConfig(window=512, slide=256))
        np.testing.assert_array_equal(seq.vectors[:, 0], [0.0])
        # Exactly 0.0, not -0.0.
        assert str(seq.vectors[0, 0]) == "0.0"

    def test_all_256_values_once_is_eight(self):
        data = bytes(range(256))
        seq = entropy_series(data, EntropyConfig(window=256, slide=256))
        np.testing.assert_array_equal(seq.vectors[:, 0], [8.0])

    def test_half_and_half_windows(self):
        # 128 zeros, 128 ones, then 128 zeros of tail padding: both
        # windows see a 50/50 byte split, entropy exactly 1 bit.
        data = bytes(128) + bytes([1] * 128) + bytes(128)
        seq = entropy_series(data, EntropyConfig(window=256, slide=128))
        np.testing.assert_array_equal(seq.vectors[:, 0], [1.0, 1.0])

    def test_matches_counting_oracle(self, rng):
        data = bytes(rng.integers(0, 256, size=2000, dtype=np.uint8))
        cfg = EntropyConfig(window=300, slide=150)
        seq = entropy_series(data, cfg)
        for i, got in enumerate(seq.vectors[:, 0]):
            window = data[i * 150 : i * 150 + 300]
            counts = np.bincount(np.frombuffer(window, dtype=np.uint8), minlength=256)
            assert got == pytest.approx(shannon_entropy(counts), abs=1e-12)

    def test_length_formula(self, rng):
        for _ in range(100):
            window = int(rng.integers(2, 64))
            slide = int(rng.integers(1, window + 1))
            n = int(rng.integers(window, 600))
            data = bytes(rng.integers(0, 256, size=n, dtype=np.uint8))
            seq = entropy_series(data, EntropyConfig(window=window, slide=slide))
            assert len(seq) == (n - window) // slide + 1

    def test_values_within_byte_entropy_range(self, rng):
        data = bytes(rng.integers(0, 256, size=4096, dtype=np.uint8))
        for window, slide in WINDOW_GRID:
            seq = entropy_series(data, EntropyConfig(window=window, slide=slide))
            assert np.all(seq.vectors >= 0.0)
            assert np.all(seq.vectors <= 8.0)

    def test_too_short_input(self):
        with pytest.raises(TooShortInputError) as exc:
            entropy_series(bytes(100), EntropyConfig(window=512, slide=256))
        assert exc.value.needed == 512
        assert exc.value.got == 100

    def test_config_validation(self):
        with pytest.raises(InputDomainError):
            EntropyConfig(window=1, slide=1)
        with pytest.raises(InputDomainError):
            EntropyConfig(window=16, slide=0)
        with pytest.raises(InputDomainError):
            EntropyConfig(window=16, slide=17)


class TestOpcodeVocab:
    def test_fewer_than_k_distinct(self):
        vocab, coverage = build_opcode_vocab([["mov", "push", "mov", "call"]], k=30)
        assert vocab.ranked_opcodes == ("mov", "call", "push")
        assert vocab.n_symbols == 4
        assert vocab.other_index == 3
        assert coverage == 1.0

    def test_tie_at_boundary_keeps_lexicographically_smaller(self):
        # "add" and "mov" both occur twice; only one slot remains after
        # "push", so "add" wins the tie.
        stream = ["push", "push", "push", "mov", "mov", "add", "add"]
        vocab, _ = build_opcode_vocab([stream], k=2)
        assert vocab.ranked_opcodes == ("push", "add")

    def test_coverage_matches_counting_oracle(self, rng):
        # Zipf-ish corpus: mnemonic i appears about 1000 / (i + 1) times.
        names = [f"op{i}" for i in range(60)]
        stream = []
        for i, name in enumerate(names):
            stream.extend([name] * (1000 // (i + 1)))
        vocab, coverage = build_opcode_vocab([stream], k=DEFAULT_TOP_K)
        counts = {name: 1000 // (i + 1) for i, name in enumerate(names)}
        covered = sum(counts[m] for m in vocab.ranked_opcodes)
        assert coverage == pytest.approx(covered / sum(counts.values()))
        assert len(vocab.ranked_opcodes) == DEFAULT_TOP_K
        assert vocab.n_symbols == DEFAULT_TOP_K + 1

    def test_counts_pool_across_streams(self):
        vocab, _ = build_opcode_vocab([["a", "b"], ["b", "c"], ["b"]], k=1)
        assert vocab.ranked_opcodes == ("b",)

    def test_empty_corpus_rejected(self):
        with pytest.raises(InputDomainError):
            build_opcode_vocab([[], []])

    def test_duplicate_mnemonics_rejected(self):
        with pytest.raises(InputDomainError):
            OpcodeVocab(ranked_opcodes=("mov", "mov"))


class TestEncodeOpcodes:
    def test_lookup_matches_dictionary_oracle(self, rng):
        vocab = OpcodeVocab(ranked_opcodes=("mov", "push", "call"))
        stream = [
            ["mov", "push", "call", "xor", "mov"][int(i)]
            for i in rng.integers(0, 5, size=200)
        ]
        seq = encode_opcodes(stream, vocab)
        table = {"mov": 0, "push": 1, "call": 2}
        expected = [table.get(m, 3) for m in stream]
        assert list(seq.symbols) == expected

    def test_all_out_of_vocab(self):
        vocab = OpcodeVocab(ranked_opcodes=("mov",))
        seq = encode_opcodes(["xor", "lea", "nop"], vocab)
        assert list(seq.symbols) == [1, 1, 1]

    def test_shorter_than_cap_preserved(self):
        vocab = OpcodeVocab(ranked_opcodes=("mov",))
        seq = encode_opcodes(["mov"] * 17, vocab)
        assert len(seq) == 17

    def test_truncates_to_cap(self):
        vocab = OpcodeVocab(ranked_opcodes=("mov",))
        seq = encode_opcodes(["mov"] * 50, vocab, t_cap=10)
        assert len(seq) == 10
        assert DEFAULT_T_CAP == 100000

    def test_truncation_works_on_lazy_streams(self):
        vocab = OpcodeVocab(ranked_opcodes=("mov",))

        def endless():
            while True:
                yield "mov"

        seq = encode_opcodes(endless(), vocab, t_cap=25)
        assert len(seq) == 25

    def test_empty_stream_rejected(self):
        vocab = OpcodeVocab(ranked_opcodes=("mov",))
        with pytest.raises(InputDomainError):
            encode_opcodes([], vocab)

    def test_read_mnemonics_normalizes(self):
        text = "MOV\n  push \n\n\ncall\n"
        assert read_mnemonics(text) == ["mov", "push", "call"]


class TestSynthGenerate:
    def test_discrete_deterministic_and_in_range(self):
        model = DiscreteHmm(
            pi=np.array([0.7, 0.3]),
            trans=np.array([[0.6, 0.4], [0.3, 0.7]]),
            emit=np.array([[0.8, 0.1, 0.1], [0.1, 0.1, 0.8]]),
        )
        a = synth_generate(model, 500, seed=3)
        b = synth_generate(model, 500, seed=3)
        np.testing.assert_array_equal(a.symbols, b.symbols)
        assert a.symbols.min() >= 0
        assert a.symbols.max() < 3
        assert not np.array_equal(a.symbols, synth_generate(model, 500, seed=4).symbols)

    def test_discrete_frequencies_approach_stationary_mix(self):
        # Uniform 2-state chain: stationary (0.5, 0.5), so symbol 0 is
        # emitted with probability 0.5 * (0.9 + 0.1) = 0.5.
        model = DiscreteHmm(
            pi=np.array([0.5, 0.5]),
            trans=np.full((2, 2), 0.5),
            emit=np.array([[0.9, 0.1], [0.1, 0.9]]),
        )
        seq = synth_generate(model, 100_000, seed=0)
        assert np.mean(seq.symbols == 0) == pytest.approx(0.5, abs=0.01)

    def test_continuous_moments(self):
        comp_a = GaussianComponent(np.array([-4.0]), np.array([[0.25]]))
        comp_b = GaussianComponent(np.array([4.0]), np.array([[0.25]]))
        mix = GaussianMixture(components=(comp_a, comp_b), weights=np.array([0.5, 0.5]))
        model = GmmHmm(
            pi=np.array([1.0]), trans=np.array([[1.0]]), emissions=(mix,), eps=0.1
        )
        seq = synth_generate(model, 50_000, seed=1)
        assert seq.vectors.mean() == pytest.approx(0.0, abs=0.1)
        # Var = E[X^2] = 0.25 + 16 for this symmetric bimodal mixture.
        assert seq.vectors.var() == pytest.approx(16.25, rel=0.05)

    def test_rejects_bad_length_and_type(self):
        model = DiscreteHmm(
            pi=np.array([1.0]), trans=np.array([[1.0]]), emit=np.array([[1.0]])
        )
        with pytest.raises(InputDomainError):
            synth_generate(model, 0, seed=0)
        with pytest.raises(InputDomainError):
            synth_generate("not a model", 5, seed=0)


class TestFeatureFiles:
    def test_entropy_round_trip_bit_exact(self, rng, tmp_path):
        data = bytes(rng.integers(0, 256, size=3000, dtype=np.uint8))
        cfg = EntropyConfig(window=256, slide=128)
        seq = entropy_series(data, cfg)
        path = tmp_path / "sample.entropy"
        write_entropy_file(path, seq, cfg)
        loaded, loaded_cfg = read_entropy_file(path)
        np.testing.assert_array_equal(loaded.vectors, seq.vectors)
        assert loaded_cfg == cfg
        assert feature_kind(path) == "entropy"

    def test_symbol_round_trip(self, rng, tmp_path):
        seq = DiscreteSequence(symbols=rng.integers(0, 31, size=500))
        path = tmp_path / "sample.opcodes"
        write_symbol_file(path, seq, 31)
        loaded, k = read_symbol_file(path)
        np.testing.assert_array_equal(loaded.symbols, seq.symbols)
        assert k == 31
        assert feature_kind(path) == "opcodes"

    def test_vocab_round_trip(self, tmp_path):
        vocab = OpcodeVocab(ranked_opcodes=("mov", "push", "call"))
        path = tmp_path / "vocab.txt"
        write_vocab_file(path, vocab)
        assert read_vocab_file(path).ranked_opcodes == vocab.ranked_opcodes

    def test_kind_mismatch_rejected(self, rng, tmp_path):
        seq = DiscreteSequence(symbols=rng.integers(0, 5, size=20))
        path = tmp_path / "sample.opcodes"
        write_symbol_file(path, seq, 5)
        with pytest.raises(InputDomainError):
            read_entropy_file(path)

    def test_unheadered_file_rejected(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("1.0\n2.0\n")
        with pytest.raises(InputDomainError):
            feature_kind(path)

    def test_symbol_file_k_must_cover(self, tmp_path):
        path = tmp_path / "bad.opcodes"
        path.write_text("# opcodes k=3\n0\n5\n")
        with pytest.raises(InputDomainError):
            read_symbol_file(path)

    def test_header_missing_params_rejected(self, tmp_path):
        path = tmp_path / "bad.entropy"
        path.write_text("# entropy\n1.0\n")
        with pytest.raises(InputDomainError):
            read_entropy_file(path)

    def test_symbol_write_requires_covering_k(self, rng, tmp_path):
        seq = DiscreteSequence(symbols=np.array([0, 9]))
        with pytest.raises(InputDomainError):
            write_symbol_file(tmp_path / "x.opcodes", seq, 5)
