import json

import numpy as np
import pytest

from seqhmm.discrete_hmm import DiscreteHmm, DiscreteSequence, dhmm_log_score, dhmm_train
from seqhmm.errors import InputDomainError
from seqhmm.gmm import GaussianComponent, GaussianMixture
from seqhmm.gmm_hmm import ContinuousSequence, GmmHmm, ghmm_log_score, ghmm_train
from seqhmm.model_io import FORMAT_VERSION, load_model, model_record, save_model
from seqhmm.training import TrainConfig


def trained_discrete(rng):
    seq = DiscreteSequence(symbols=rng.integers(0, 4, size=400))
    return dhmm_train(seq, 2, 4, config=TrainConfig(max_iters=25), seed=3), seq


def trained_gmm(rng):
    vectors = np.concatenate([rng.normal(0, 1, 200), rng.normal(6, 1, 200)])
    seq = ContinuousSequence(vectors=vectors)
    res = ghmm_train(seq, 2, 2, eps=0.1,
                     config=TrainConfig(max_iters=25, init_noise=0.1), seed=5)
    return res, seq


class TestRoundTrip:
    def test_discrete_parameters_bit_exact(self, rng, tmp_path):
        res, _ = trained_discrete(rng)
        path = tmp_path / "model.json"
        save_model(path, res.model, seed=res.seed, iterations=res.iterations,
                   final_log_likelihood=res.final_log_likelihood)
        loaded, meta = load_model(path)
        np.testing.assert_array_equal(loaded.pi, res.model.pi)
        np.testing.assert_array_equal(loaded.trans, res.model.trans)
        np.testing.assert_array_equal(loaded.emit, res.model.emit)
        assert meta["seed"] == 3
        assert meta["iterations"] == res.iterations
        assert meta["final_log_likelihood"] == res.final_log_likelihood

    def test_discrete_scores_bit_exact(self, rng, tmp_path):
        res, seq = trained_discrete(rng)
        path = tmp_path / "model.json"
        save_model(path, res.model)
        loaded, _ = load_model(path)
        probe = DiscreteSequence(symbols=rng.integers(0, 4, size=200))
        assert dhmm_log_score(loaded, probe) == dhmm_log_score(res.model, probe)
        assert dhmm_log_score(loaded, seq) == dhmm_log_score(res.model, seq)

    def test_gmm_scores_bit_exact(self, rng, tmp_path):
        res, seq = trained_gmm(rng)
        path = tmp_path / "model.json"
        save_model(path, res.model)
        loaded, _ = load_model(path)
        assert loaded.eps == res.model.eps
        probe = ContinuousSequence(vectors=rng.normal(3, 2, 300))
        assert ghmm_log_score(loaded, probe) == ghmm_log_score(res.model, probe)
        assert ghmm_log_score(loaded, seq) == ghmm_log_score(res.model, seq)

    def test_gmm_parameters_bit_exact(self, rng, tmp_path):
        res, _ = trained_gmm(rng)
        path = tmp_path / "model.json"
        save_model(path, res.model)
        loaded, _ = load_model(path)
        for mix_a, mix_b in zip(loaded.emissions, res.model.emissions):
            np.testing.assert_array_equal(mix_a.weights, mix_b.weights)
            for ca, cb in zip(mix_a.components, mix_b.components):
                np.testing.assert_array_equal(ca.mean, cb.mean)
                np.testing.assert_array_equal(ca.covariance, cb.covariance)

    def test_save_is_byte_stable(self, rng, tmp_path):
        res, _ = trained_gmm(rng)
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_model(p1, res.model, seed=1, iterations=2, final_log_likelihood=-3.5)
        save_model(p2, res.model, seed=1, iterations=2, final_log_likelihood=-3.5)
        assert p1.read_bytes() == p2.read_bytes()


class TestRecord:
    def test_discrete_record_fields(self, rng):
        res, _ = trained_discrete(rng)
        record = model_record(res.model, seed=7, iterations=10,
                              final_log_likelihood=-1.25)
        assert record["kind"] == "discrete"
        assert record["format_version"] == FORMAT_VERSION
        assert record["n_states"] == 2
        assert record["n_symbols"] == 4
        assert record["training"] == {
            "seed": 7, "iterations": 10, "final_log_likelihood": -1.25,
        }

    def test_gmm_record_fields(self, rng):
        res, _ = trained_gmm(rng)
        record = model_record(res.model)
        assert record["kind"] == "gmm"
        assert record["n_components"] == 2
        assert record["dim"] == 1
        assert record["eps"] == 0.1
        assert record["training"]["seed"] is None

    def test_unknown_type_rejected(self):
        with pytest.raises(InputDomainError):
            model_record({"not": "a model"})


class TestLoadErrors:
    def test_not_json(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("definitely not json{")
        with pytest.raises(InputDomainError, match="not a model file"):
            load_model(path)

    def test_missing_fields(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"format_version": 1, "kind": "gmm"}))
        with pytest.raises(InputDomainError, match="malformed"):
            load_model(path)

    def test_unknown_kind(self, tmp_path):
        path = tmp_path / "odd.json"
        path.write_text(json.dumps({"format_version": 1, "kind": "quantum"}))
        with pytest.raises(InputDomainError, match="unknown model kind"):
            load_model(path)

    def test_wrong_version(self, tmp_path):
        path = tmp_path / "v9.json"
        path.write_text(json.dumps({"format_version": 9, "kind": "discrete"}))
        with pytest.raises(InputDomainError, match="version"):
            load_model(path)

    def test_invalid_parameters_rejected(self, tmp_path):
        record = {
            "format_version": 1, "kind": "discrete", "n_states": 1, "n_symbols": 2,
            "pi": [1.0], "trans": [[1.0]], "emit": [[0.9, 0.3]],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(record))
        with pytest.raises(AssertionError):
            load_model(path)
