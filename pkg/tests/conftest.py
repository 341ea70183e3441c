"""Shared fixtures: a small corpus and quickly trained experts, built once."""
import pytest

from cvrdetect.corpus import CorpusConfig, build_corpus
from cvrdetect.harness import ProtocolConfig, train_all


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_corpus")
    cfg = CorpusConfig(out_dir=out, family="A", n_train=6, n_test=4, n_val=3,
                       seed=123, resolution=48)
    return build_corpus(cfg)


@pytest.fixture(scope="session")
def tiny_experts(tiny_corpus, tmp_path_factory):
    runs = tmp_path_factory.mktemp("tiny_runs")
    cfg = ProtocolConfig(manifest_a=tiny_corpus, out_dir=runs, seed=1,
                         epochs=15, lr=1e-3, batch_size=6)
    return cfg, train_all(cfg)
