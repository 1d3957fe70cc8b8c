"""Intent-aware collaborative scorer over the interaction history.

Forward pass only, with deterministic seeded weights: per-modality linear
projections (text embedding, optional precomputed image vector) fuse into
one d-dim representation per item; one multi-head self-attention layer
encodes the history as a set (no positional encoding, so history order
never matters); the stated intent cross-attends over the encoded history
and the pooled context is dotted with each candidate's fused vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .catalog import Catalog, Item, UserHistory, render_item_text
from .embedding import EmbeddingProvider


class AiaConfigError(ValueError):
    """Raised at construction time for shape or parameter mismatches."""


def _uniform(rng: np.random.Generator, fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


@dataclass
class AiaParams:
    """All projection and attention weights, finite and explicitly shaped.

    ``heads`` must divide ``dim``. Attention weight stacks have shape
    (heads, dim, dim // heads); output projections are (dim, dim).
    """

    dim: int
    heads: int
    seed: int
    w_text: np.ndarray
    w_image: np.ndarray
    w_fuse: np.ndarray
    self_q: np.ndarray
    self_k: np.ndarray
    self_v: np.ndarray
    self_o: np.ndarray
    cross_q: np.ndarray
    cross_k: np.ndarray
    cross_v: np.ndarray
    cross_o: np.ndarray

    def __post_init__(self) -> None:
        if self.dim <= 0 or self.heads <= 0:
            raise AiaConfigError("dim and heads must be positive")
        if self.dim % self.heads != 0:
            raise AiaConfigError(f"heads ({self.heads}) must divide dim ({self.dim})")
        head_dim = self.dim // self.heads
        expected = {
            "w_fuse": (2 * self.dim, self.dim),
            "self_q": (self.heads, self.dim, head_dim),
            "self_k": (self.heads, self.dim, head_dim),
            "self_v": (self.heads, self.dim, head_dim),
            "self_o": (self.dim, self.dim),
            "cross_q": (self.heads, self.dim, head_dim),
            "cross_k": (self.heads, self.dim, head_dim),
            "cross_v": (self.heads, self.dim, head_dim),
            "cross_o": (self.dim, self.dim),
        }
        for name, shape in expected.items():
            matrix = getattr(self, name)
            if matrix.shape != shape:
                raise AiaConfigError(f"{name} must have shape {shape}, got {matrix.shape}")
        if self.w_text.shape[1] != self.dim or self.w_image.shape[1] != self.dim:
            raise AiaConfigError("modality projections must map into dim")
        for name in ("w_text", "w_image", "w_fuse", "self_q", "self_k", "self_v",
                     "self_o", "cross_q", "cross_k", "cross_v", "cross_o"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise AiaConfigError(f"{name} contains non-finite values")

    @property
    def text_dim(self) -> int:
        return self.w_text.shape[0]

    @property
    def image_dim(self) -> int:
        return self.w_image.shape[0]

    @classmethod
    def seeded(
        cls,
        text_dim: int,
        image_dim: int = 0,
        dim: int = 32,
        heads: int = 2,
        seed: int = 0,
    ) -> "AiaParams":
        """Deterministic initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
        rng = np.random.default_rng(seed)
        head_dim = dim // max(heads, 1)
        return cls(
            dim=dim,
            heads=heads,
            seed=seed,
            w_text=_uniform(rng, text_dim, (text_dim, dim)),
            w_image=_uniform(rng, image_dim, (image_dim, dim)),
            w_fuse=_uniform(rng, 2 * dim, (2 * dim, dim)),
            self_q=_uniform(rng, dim, (heads, dim, head_dim)),
            self_k=_uniform(rng, dim, (heads, dim, head_dim)),
            self_v=_uniform(rng, dim, (heads, dim, head_dim)),
            self_o=_uniform(rng, dim, (dim, dim)),
            cross_q=_uniform(rng, dim, (heads, dim, head_dim)),
            cross_k=_uniform(rng, dim, (heads, dim, head_dim)),
            cross_v=_uniform(rng, dim, (heads, dim, head_dim)),
            cross_o=_uniform(rng, dim, (dim, dim)),
        )

    @classmethod
    def identity(cls, dim: int, text_dim: int | None = None, image_dim: int = 0) -> "AiaParams":
        """Single-head identity-like weights, handy for hand-checked fixtures."""
        text_dim = dim if text_dim is None else text_dim
        eye = np.eye(dim)
        proj_text = np.zeros((text_dim, dim))
        np.fill_diagonal(proj_text, 1.0)
        fuse = np.vstack([eye, np.zeros((dim, dim))])
        stack = eye[np.newaxis, :, :]
        return cls(
            dim=dim,
            heads=1,
            seed=0,
            w_text=proj_text,
            w_image=np.zeros((image_dim, dim)),
            w_fuse=fuse,
            self_q=stack.copy(),
            self_k=stack.copy(),
            self_v=stack.copy(),
            self_o=eye.copy(),
            cross_q=stack.copy(),
            cross_k=stack.copy(),
            cross_v=stack.copy(),
            cross_o=eye.copy(),
        )


@dataclass
class AiaDetails:
    """Attention maps from one scoring call, exposed for invariant checks."""

    self_attention: np.ndarray   # (heads, n, n), rows sum to 1
    cross_attention: np.ndarray  # (heads, n), each head sums to 1
    context: np.ndarray          # (dim,)


class AiaScorer:
    """Scores candidates against (intent, history) over a fixed catalog.

    Fused item representations are precomputed for the whole catalog at
    construction, so per-round work is one history encoding plus one dot
    product per candidate.
    """

    def __init__(self, catalog: Catalog, provider: EmbeddingProvider, params: AiaParams):
        if params.text_dim != provider.dim:
            raise AiaConfigError(
                f"text projection expects dim {params.text_dim}, provider has {provider.dim}"
            )
        if params.image_dim != catalog.image_dim:
            raise AiaConfigError(
                f"image projection expects dim {params.image_dim}, catalog has {catalog.image_dim}"
            )
        self.catalog = catalog
        self.provider = provider
        self.params = params
        self._index = {item.id: i for i, item in enumerate(catalog.items)}
        texts = [render_item_text(item) for item in catalog.items]
        text_matrix = np.stack(provider.embed_many(texts))
        image_matrix = np.zeros((len(catalog.items), params.image_dim))
        for i, item in enumerate(catalog.items):
            if item.image_features is not None:
                image_matrix[i] = np.asarray(item.image_features, dtype=np.float64)
        fused_input = np.hstack([text_matrix @ params.w_text, image_matrix @ params.w_image])
        self._fused = fused_input @ params.w_fuse  # (n_items, dim)

    def fused(self, item_id: str) -> np.ndarray:
        return self._fused[self._index[item_id]]

    def neutral_intent(self) -> np.ndarray:
        return np.zeros(self.params.text_dim)

    def _attend(
        self, queries: np.ndarray, keys_values: np.ndarray,
        wq: np.ndarray, wk: np.ndarray, wv: np.ndarray, wo: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Multi-head attention; returns (outputs, weights per head)."""
        p = self.params
        head_dim = p.dim // p.heads
        scale = 1.0 / np.sqrt(head_dim)
        head_outputs = []
        head_weights = []
        for h in range(p.heads):
            q = queries @ wq[h]
            k = keys_values @ wk[h]
            v = keys_values @ wv[h]
            weights = _softmax_rows((q @ k.T) * scale)
            head_weights.append(weights)
            head_outputs.append(weights @ v)
        combined = np.hstack(head_outputs) @ wo
        return combined, np.stack(head_weights)

    def encode_history(self, history: UserHistory) -> tuple[np.ndarray, np.ndarray]:
        """Self-attention over fused history items; returns (encoded, weights)."""
        rows = np.stack([self._fused[self._index[i]] for i in history.interactions])
        p = self.params
        encoded, weights = self._attend(rows, rows, p.self_q, p.self_k, p.self_v, p.self_o)
        return encoded, weights

    def score_pool(
        self,
        intent_vector: np.ndarray,
        history: UserHistory,
        pool_ids: Sequence[str],
        with_details: bool = False,
    ) -> tuple[dict[str, float], AiaDetails | None]:
        """Raw collaborative scores for every candidate in the pool."""
        if not history:
            return ({item_id: 0.0 for item_id in pool_ids}, None)
        if intent_vector.shape != (self.params.text_dim,):
            raise AiaConfigError(
                f"intent vector must have dim {self.params.text_dim}, got {intent_vector.shape}"
            )
        encoded, self_weights = self.encode_history(history)
        p = self.params
        h_intent = (intent_vector @ p.w_text)[np.newaxis, :]
        context, cross_weights = self._attend(
            h_intent, encoded, p.cross_q, p.cross_k, p.cross_v, p.cross_o
        )
        context = context[0]
        scores = {
            item_id: float(np.dot(context, self._fused[self._index[item_id]]))
            for item_id in pool_ids
        }
        details = None
        if with_details:
            details = AiaDetails(
                self_attention=self_weights,
                cross_attention=cross_weights[:, 0, :],
                context=context,
            )
        return scores, details


def aia_score(
    item: Item,
    intent_vector: np.ndarray,
    history: UserHistory,
    scorer: AiaScorer,
) -> float:
    """Collaborative score for one candidate; 0.0 when there is no history."""
    if not history:
        return 0.0
    scores, _ = scorer.score_pool(intent_vector, history, [item.id])
    return scores[item.id]
