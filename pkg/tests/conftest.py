"""Shared test setup."""

import pytest

from opinion_miner import lda
from opinion_miner.textproc import Document


@pytest.fixture(scope="session", autouse=True)
def _warm_gibbs_kernel():
    """Touch the compiled sampler once so no timed test pays compilation."""
    docs = [Document(tokens=(0, 1), source_id="warmup")]
    model = lda.init_model(docs, 2, 0.1, 0.1, 0, 2)
    lda.train(model, docs, sweeps=1)
