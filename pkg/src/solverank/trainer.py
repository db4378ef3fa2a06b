"""Contrastive training of the dual encoder.

Each training instance pairs an anchor problem (query side) with one
verified synthetic variant (passage side) against 25 negatives: the top-5
BM25 results for the anchor plus 20 problems sampled uniformly without
replacement, all mined once before epoch 1 and frozen.  The loss is the
temperature-scaled softmax cross-entropy

    L = -log( exp(s+/tau) / (exp(s+/tau) + sum_j exp(s-_j/tau)) )

evaluated with a max-shifted log-sum-exp, and the gradient is analytic,
including the Jacobian of embedding L2-normalization when it is enabled.
"""

from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import dataclass, field

import numpy as np

from solverank.bm25 import Bm25Index, bm25_search
from solverank.corpus import Corpus, Problem, tokenize
from solverank.encoder import (
    EncoderParams,
    FeatureVec,
    featurize,
    init_params,
    project,
)
from solverank.errors import DataError
from solverank.synth import SyntheticSet
from solverank.util import derive_seed

log = logging.getLogger(__name__)

N_BM25_NEGATIVES = 5
N_RANDOM_NEGATIVES = 20
N_NEGATIVES = N_BM25_NEGATIVES + N_RANDOM_NEGATIVES


@dataclass
class TrainInstance:
    """One (anchor, positive, 25 negatives) tuple, pre-featurized."""

    anchor_id: str
    anchor_features: FeatureVec
    positive_features: FeatureVec
    negative_features: list[FeatureVec]
    negative_ids: list[str]

    def __post_init__(self):
        if len(self.negative_features) != N_NEGATIVES or len(self.negative_ids) != N_NEGATIVES:
            raise DataError(
                f"instance {self.anchor_id!r}: expected {N_NEGATIVES} negatives, "
                f"got {len(self.negative_ids)}"
            )
        if self.anchor_id in self.negative_ids:
            raise DataError(f"instance {self.anchor_id!r}: anchor leaked into negatives")


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 4
    learning_rate: float = 1e-3  # 3e-5 suits pretrained backbones, not this one
    embed_dim: int = 128
    feature_dim: int = 1 << 16
    normalize: bool = True
    tau: float | None = None  # defaulted from normalize in init_params
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")


def sample_negatives(
    anchor: Problem,
    bm25: Bm25Index,
    corpus: Corpus,
    seed: int,
    exclude_ids: frozenset[str] = frozenset(),
) -> list[str]:
    """Mine the 25 negative ids for one anchor.

    The first five are the highest-ranked BM25 results for the anchor
    statement, skipping the anchor itself and anything in ``exclude_ids``
    (its own variants), padded from rank 6+ when exclusions bite.  The rest
    are drawn uniformly without replacement from the remaining corpus.  When
    lexical overlap yields fewer than five BM25 candidates the random draw
    makes up the difference, keeping the total at 25.  Deterministic in
    (seed, anchor id); independent of worker scheduling.
    """
    if len(corpus) < N_NEGATIVES + 1:
        raise DataError(
            f"corpus of {len(corpus)} is too small to mine {N_NEGATIVES} negatives"
        )
    excluded = {anchor.id} | set(exclude_ids)
    ranking = bm25_search(bm25, anchor.statement, k=bm25.doc_count, query_id=anchor.id)
    bm25_picks: list[str] = []
    for doc_id, _score in ranking.entries:
        if doc_id in excluded:
            continue
        bm25_picks.append(doc_id)
        if len(bm25_picks) == N_BM25_NEGATIVES:
            break
    taken = excluded | set(bm25_picks)
    pool = [p.id for p in corpus if p.id not in taken]
    needed = N_NEGATIVES - len(bm25_picks)
    if len(pool) < needed:
        raise DataError(f"anchor {anchor.id!r}: only {len(pool)} candidates for {needed} negatives")
    rng = random.Random(derive_seed(seed, "negatives", anchor.id))
    random_picks = rng.sample(pool, needed)
    return bm25_picks + random_picks


def infonce_loss(sim_pos: float, sim_negs: list[float], tau: float) -> float:
    """Numerically stable contrastive loss; 0 when there are no negatives."""
    if tau <= 0:
        raise DataError(f"tau must be positive, got {tau}")
    if not math.isfinite(sim_pos) or any(not math.isfinite(s) for s in sim_negs):
        raise DataError("non-finite similarity passed to infonce_loss")
    z_pos = sim_pos / tau
    z = [z_pos] + [s / tau for s in sim_negs]
    m = max(z)
    lse = m + math.log(sum(math.exp(zi - m) for zi in z))
    return max(0.0, lse - z_pos)


@dataclass
class _InstanceGrad:
    grad_wq_cols: np.ndarray  # (d, nnz_anchor)
    loss: float


def loss_gradient(
    params: EncoderParams, batch: list[TrainInstance]
) -> tuple[np.ndarray, np.ndarray, float]:
    """Mean gradients of the contrastive loss over a batch.

    Returns (grad for w_query, grad for w_passage, mean loss).  Includes the
    normalization Jacobian ``(I - e e^T)/||raw||`` when embeddings are
    normalized.  Raises DataError naming the instance if anything goes
    non-finite.
    """
    if not batch:
        raise DataError("loss_gradient needs a nonempty batch")
    d = params.embed_dim
    tau = params.tau
    grad_q = np.zeros_like(params.w_query)
    grad_p = np.zeros_like(params.w_passage)
    total_loss = 0.0
    for inst in batch:
        u_raw = project(params.w_query, inst.anchor_features)
        u_norm = float(np.linalg.norm(u_raw))
        if params.normalize and u_norm > 0.0:
            u = u_raw / u_norm
        else:
            u = u_raw
        passage_feats = [inst.positive_features] + inst.negative_features
        n_pass = len(passage_feats)
        v_raw = np.empty((n_pass, d), dtype=np.float64)
        for j, feats in enumerate(passage_feats):
            v_raw[j] = project(params.w_passage, feats)
        v_norms = np.linalg.norm(v_raw, axis=1)
        if params.normalize:
            safe = np.where(v_norms > 0.0, v_norms, 1.0)
            v = v_raw / safe[:, None]
        else:
            v = v_raw
        sims = v @ u
        if not np.all(np.isfinite(sims)):
            raise DataError(f"non-finite similarity for instance {inst.anchor_id!r}")
        z = sims / tau
        m = float(np.max(z))
        exp_z = np.exp(z - m)
        softmax = exp_z / float(np.sum(exp_z))
        total_loss += max(0.0, m + math.log(float(np.sum(exp_z))) - float(z[0]))

        # dL/ds_j = (softmax_j - [j == positive]) / tau
        g = softmax.copy()
        g[0] -= 1.0
        g /= tau

        # Query side: dL/du = sum_j g_j v_j, back through normalization.
        dl_du = g @ v
        if params.normalize and u_norm > 0.0:
            dl_du_raw = (dl_du - float(np.dot(u, dl_du)) * u) / u_norm
        else:
            dl_du_raw = dl_du
        af = inst.anchor_features
        if af.nnz:
            grad_q[:, af.indices] += np.outer(dl_du_raw, af.values)

        # Passage side: dL/dv_j = g_j u, back through each normalization.
        for j, feats in enumerate(passage_feats):
            if feats.nnz == 0:
                continue
            dl_dv = g[j] * u
            if params.normalize and v_norms[j] > 0.0:
                dl_dv_raw = (dl_dv - float(np.dot(v[j], dl_dv)) * v[j]) / v_norms[j]
            else:
                dl_dv_raw = dl_dv
            grad_p[:, feats.indices] += np.outer(dl_dv_raw, feats.values)

    n = float(len(batch))
    grad_q /= n
    grad_p /= n
    if not (np.all(np.isfinite(grad_q)) and np.all(np.isfinite(grad_p))):
        raise DataError("non-finite gradient in batch")
    return grad_q, grad_p, total_loss / n


class AdamOptimizer:
    """Standard Adam with bias correction over the two projection matrices."""

    def __init__(self, config: TrainConfig, params: EncoderParams):
        self.lr = config.learning_rate
        self.b1 = config.adam_beta1
        self.b2 = config.adam_beta2
        self.eps = config.adam_eps
        self.t = 0
        self.m_q = np.zeros_like(params.w_query)
        self.v_q = np.zeros_like(params.w_query)
        self.m_p = np.zeros_like(params.w_passage)
        self.v_p = np.zeros_like(params.w_passage)

    def step(self, params: EncoderParams, grad_q: np.ndarray, grad_p: np.ndarray) -> None:
        self.t += 1
        bias1 = 1.0 - self.b1**self.t
        bias2 = 1.0 - self.b2**self.t
        for w, m, v, g in (
            (params.w_query, self.m_q, self.v_q, grad_q),
            (params.w_passage, self.m_p, self.v_p, grad_p),
        ):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * (g * g)
            w -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    wallclock_s: float


@dataclass
class TrainingLog:
    epochs: list[EpochRecord] = field(default_factory=list)

    def to_jsonl_records(self) -> list[dict]:
        return [
            {"epoch": e.epoch, "mean_loss": e.mean_loss, "wallclock_s": e.wallclock_s}
            for e in self.epochs
        ]


def build_instances(
    corpus: Corpus,
    synth: SyntheticSet,
    bm25: Bm25Index,
    config: TrainConfig,
) -> list[TrainInstance]:
    """One instance per (anchor, verified variant); an anchor's negatives are
    mined once and shared by all its instances."""
    feature_cache: dict[str, FeatureVec] = {}

    def feats(text: str) -> FeatureVec:
        cached = feature_cache.get(text)
        if cached is None:
            cached = featurize(tokenize(text), config.feature_dim)
            feature_cache[text] = cached
        return cached

    instances: list[TrainInstance] = []
    for problem in corpus:
        variants = synth.by_anchor.get(problem.id, [])
        if not variants:
            continue
        variant_ids = frozenset(v.variant_id for v in variants)
        negative_ids = sample_negatives(problem, bm25, corpus, config.seed, exclude_ids=variant_ids)
        negative_features = [feats(corpus.get(nid).statement) for nid in negative_ids]
        anchor_features = feats(problem.statement)
        for variant in variants:
            instances.append(
                TrainInstance(
                    anchor_id=problem.id,
                    anchor_features=anchor_features,
                    positive_features=feats(variant.text),
                    negative_features=negative_features,
                    negative_ids=list(negative_ids),
                )
            )
    return instances


def train(
    config: TrainConfig,
    corpus: Corpus,
    synth: SyntheticSet,
    bm25: Bm25Index,
) -> tuple[EncoderParams, TrainingLog]:
    """Full contrastive training run; deterministic given (seed, data, config)."""
    instances = build_instances(corpus, synth, bm25, config)
    if not instances:
        raise DataError("no verified variants: the training set is empty")
    params = init_params(
        embed_dim=config.embed_dim,
        feature_dim=config.feature_dim,
        normalize=config.normalize,
        tau=config.tau,
        seed=config.seed,
    )
    optimizer = AdamOptimizer(config, params)
    training_log = TrainingLog()
    initial_loss = None
    final_loss = None
    for epoch in range(1, config.epochs + 1):
        started = time.monotonic()
        order = list(range(len(instances)))
        random.Random(derive_seed(config.seed, "epoch", str(epoch))).shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [instances[i] for i in order[start : start + config.batch_size]]
            grad_q, grad_p, batch_loss = loss_gradient(params, batch)
            optimizer.step(params, grad_q, grad_p)
            epoch_loss += batch_loss * len(batch)
        mean_loss = epoch_loss / len(instances)
        if initial_loss is None:
            initial_loss = mean_loss
        final_loss = mean_loss
        training_log.epochs.append(
            EpochRecord(epoch=epoch, mean_loss=mean_loss, wallclock_s=time.monotonic() - started)
        )
        log.info("epoch %d/%d mean_loss=%.6f", epoch, config.epochs, mean_loss)
    if final_loss is not None and initial_loss is not None and final_loss > initial_loss:
        log.warning(
            "training loss increased: %.6f -> %.6f (check learning rate)",
            initial_loss,
            final_loss,
        )
    return params, training_log
