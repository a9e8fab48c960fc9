"""Shared corpus builders and hypothesis strategies for the test suite."""

from __future__ import annotations

from hypothesis import strategies as st

from sortbatch.batcher import PARTIAL_SORT, POLICIES, BatchPlanConfig
from sortbatch.corpus import Corpus, SentencePair


def make_corpus(lengths, max_len_filter=None) -> Corpus:
    """Corpus from a list of ints (src=tgt) or (src, tgt) tuples."""
    pairs = []
    for i, entry in enumerate(lengths):
        src, tgt = (entry, entry) if isinstance(entry, int) else entry
        pairs.append(SentencePair(id=i, src_len=src, tgt_len=tgt))
    return Corpus(tuple(pairs), max_len_filter=max_len_filter)


length_pairs = st.tuples(st.integers(1, 30), st.integers(1, 30))

corpora = st.builds(
    make_corpus,
    st.lists(length_pairs, min_size=1, max_size=40),
)


@st.composite
def corpus_and_config(draw, max_n=40, max_m=8, max_k=6, policies=POLICIES):
    """A corpus together with a loader config valid for it."""
    corpus = draw(st.builds(make_corpus, st.lists(length_pairs, min_size=1, max_size=max_n)))
    m = draw(st.integers(1, max_m))
    config = BatchPlanConfig(
        m=m,
        k=draw(st.integers(1, max_k)),
        policy=draw(st.sampled_from(policies)),
        seed=draw(st.integers(0, 2**31)),
        drop_last=draw(st.booleans()) and m <= len(corpus.pairs),
        epochs=draw(st.integers(1, 3)),
    )
    return corpus, config


partial_sort_configs = st.builds(
    BatchPlanConfig,
    m=st.integers(1, 8),
    k=st.integers(1, 6),
    policy=st.just(PARTIAL_SORT),
    seed=st.integers(0, 2**31),
)
