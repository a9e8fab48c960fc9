"""Buffered partial-sort batch loader and the two reference policies.

The loader keeps a buffer of at most m*k pairs. Whenever fewer than m pairs
remain buffered and unread pairs exist, it tops the buffer up to m*k, sorts
the whole buffer ascending by (src_len, tgt_len), and then keeps popping the
first m pairs per batch. k=1 degenerates to plain chunking of the shuffled
corpus ("unsorted"); sorting the entire epoch order up front gives the
"full_sort" policy. Buffers are never carried across epochs: each epoch gets
a fresh permutation derived from (seed, epoch) and drains completely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from operator import attrgetter
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .corpus import Corpus, SentencePair, shuffle

PARTIAL_SORT = "partial_sort"
UNSORTED = "unsorted"
FULL_SORT = "full_sort"
POLICIES = (PARTIAL_SORT, UNSORTED, FULL_SORT)

#: Buffer sort key: source length first, target length second; ties keep
#: their shuffled order (stable sort), preserving residual randomness.
SORT_KEY = attrgetter("src_len", "tgt_len")

__all__ = [
    "PARTIAL_SORT",
    "UNSORTED",
    "FULL_SORT",
    "POLICIES",
    "SORT_KEY",
    "BatchPlanConfig",
    "Batch",
    "EpochLoader",
    "Loader",
    "epoch_shuffle_seed",
    "epoch_order",
    "run_epochs",
    "batch_record",
    "write_batches_jsonl",
    "read_batches_jsonl",
]


@dataclass(frozen=True)
class BatchPlanConfig:
    """Batching policy descriptor. full_sort ignores k; unsorted behaves as k=1."""

    m: int
    k: int = 1
    policy: str = PARTIAL_SORT
    seed: int = 0
    drop_last: bool = False
    epochs: int = 1

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"batch size m must be >= 1, got {self.m}")
        if self.k < 1:
            raise ValueError(f"look-ahead k must be >= 1, got {self.k}")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}, expected one of {POLICIES}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True)
class Batch:
    """Pairs emitted in one iteration plus the padded dimensions they imply."""

    pairs: tuple[SentencePair, ...]
    padded_src: int
    padded_tgt: int
    iteration_index: int
    epoch_index: int


def _make_batch(pairs: Sequence[SentencePair], iteration: int, epoch: int) -> Batch:
    if not pairs:
        raise ValueError("a batch must contain at least one pair")
    return Batch(
        pairs=tuple(pairs),
        padded_src=max(p.src_len for p in pairs),
        padded_tgt=max(p.tgt_len for p in pairs),
        iteration_index=iteration,
        epoch_index=epoch,
    )


def epoch_shuffle_seed(base_seed: int, epoch: int) -> int:
    """Derive the shuffle seed for one epoch from the run seed.

    SeedSequence spawn keys keep the per-epoch permutations decorrelated while
    staying fully replayable from (base_seed, epoch).
    """
    sequence = np.random.SeedSequence(entropy=base_seed, spawn_key=(epoch,))
    return int(sequence.generate_state(1)[0])


def epoch_order(corpus: Corpus, config: BatchPlanConfig, epoch: int) -> tuple[SentencePair, ...]:
    """The deterministic pair order one epoch iterates over under a policy."""
    shuffled = shuffle(corpus, epoch_shuffle_seed(config.seed, epoch))
    if config.policy == FULL_SORT:
        return tuple(sorted(shuffled.pairs, key=SORT_KEY))
    return shuffled.pairs


class EpochLoader:
    """State machine over one epoch's pre-arranged pair order.

    Exposes the loader state directly: `buffer` (sorted ascending by
    (src_len, tgt_len) after every refill), `cursor` (index of the next
    unread pair in `order`), and `iteration` (batches emitted so far).
    Single-consumer: not safe for concurrent mutation.
    """

    def __init__(
        self,
        order: Sequence[SentencePair],
        m: int,
        k: int,
        drop_last: bool = False,
        epoch_index: int = 0,
    ) -> None:
        if m < 1:
            raise ValueError(f"batch size m must be >= 1, got {m}")
        if k < 1:
            raise ValueError(f"look-ahead k must be >= 1, got {k}")
        self.order = tuple(order)
        self.m = m
        self.k = k
        self.drop_last = drop_last
        self.epoch_index = epoch_index
        self.buffer: list[SentencePair] = []
        self.cursor = 0
        self.iteration = 0

    def refill(self) -> None:
        """Top the buffer up to m*k pairs (or corpus exhaustion) and sort it.

        Retained leftovers count toward the m*k target, so the buffer never
        exceeds m*k pairs. The sort is stable, so equal-length pairs keep
        their pre-sort order.
        """
        if len(self.buffer) >= self.m:
            raise ValueError("refill requires fewer than m buffered pairs")
        take = min(self.m * self.k - len(self.buffer), len(self.order) - self.cursor)
        if take > 0:
            self.buffer.extend(self.order[self.cursor : self.cursor + take])
            self.cursor += take
        self.buffer.sort(key=SORT_KEY)

    def next_batch(self) -> Batch | None:
        """Emit the next batch, refilling first if needed; None ends the epoch.

        A final short batch is emitted unless drop_last is set, in which case
        it is discarded and the epoch ends.
        """
        if len(self.buffer) < self.m and self.cursor < len(self.order):
            self.refill()
        if not self.buffer:
            return None
        popped = self.buffer[: self.m]
        del self.buffer[: self.m]
        if len(popped) < self.m and self.drop_last:
            return None
        batch = _make_batch(popped, self.iteration, self.epoch_index)
        self.iteration += 1
        return batch

    def __iter__(self) -> Iterator[Batch]:
        while (batch := self.next_batch()) is not None:
            yield batch


class Loader:
    """Multi-epoch loader over a corpus under a BatchPlanConfig.

    Construction validates the inputs and prepares epoch 0: the corpus is
    shuffled with the epoch-derived seed, the buffer is empty, and the cursor
    is at 0. `start_epoch` rewinds or advances to any epoch deterministically.
    """

    def __init__(self, corpus: Corpus, config: BatchPlanConfig) -> None:
        if not corpus.pairs:
            raise ValueError("cannot batch an empty corpus")
        if config.drop_last and config.m > len(corpus.pairs):
            raise ValueError(
                f"batch size {config.m} exceeds corpus size {len(corpus.pairs)} with drop_last"
            )
        self.corpus = corpus
        self.config = config
        self._run = self._make_run(0)

    def _make_run(self, epoch: int) -> EpochLoader:
        lookahead = self.config.k if self.config.policy == PARTIAL_SORT else 1
        return EpochLoader(
            epoch_order(self.corpus, self.config, epoch),
            self.config.m,
            lookahead,
            drop_last=self.config.drop_last,
            epoch_index=epoch,
        )

    @property
    def buffer(self) -> tuple[SentencePair, ...]:
        return tuple(self._run.buffer)

    @property
    def cursor(self) -> int:
        return self._run.cursor

    @property
    def iteration(self) -> int:
        return self._run.iteration

    @property
    def epoch(self) -> int:
        return self._run.epoch_index

    def start_epoch(self, epoch: int) -> None:
        if not 0 <= epoch < self.config.epochs:
            raise ValueError(f"epoch {epoch} outside configured range [0, {self.config.epochs})")
        self._run = self._make_run(epoch)

    def next_batch(self) -> Batch | None:
        """Next batch of the current epoch, or None at end of epoch."""
        return self._run.next_batch()

    def __iter__(self) -> Iterator[Batch]:
        """All remaining batches of the current epoch, then subsequent epochs."""
        start = self.epoch
        for epoch in range(start, self.config.epochs):
            if epoch != start:
                self.start_epoch(epoch)
            while (batch := self.next_batch()) is not None:
                yield batch


def run_epochs(corpus: Corpus, config: BatchPlanConfig) -> list[Batch]:
    """Concatenated batch stream of all configured epochs."""
    return list(Loader(corpus, config))


# ---------------------------------------------------------------------------
# JSON-lines batch stream
# ---------------------------------------------------------------------------


def batch_record(batch: Batch) -> dict:
    """Wire-format record for one batch."""
    return {
        "epoch": batch.epoch_index,
        "iteration": batch.iteration_index,
        "ids": [p.id for p in batch.pairs],
        "padded_src": batch.padded_src,
        "padded_tgt": batch.padded_tgt,
    }


def write_batches_jsonl(batches: Sequence[Batch], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for batch in batches:
            handle.write(json.dumps(batch_record(batch)) + "\n")


def read_batches_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(json.loads(line))
    return records
