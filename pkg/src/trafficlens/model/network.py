"""Encoder-decoder forecaster with graph spatial attention and temporal attention.

Spatial attention mixes each road with its in-neighbors plus a sentinel key
derived from the road's own features; the sentinel weight scales a skip
projection of those features. Temporal attention is multi-head self-attention
over the 12 steps; the decoder uses causal self-attention plus cross-attention
onto the encoder steps. Spatial attention lives in the encoder only, so
overriding one road's attention rows can never leak into other roads'
predictions.
"""

from __future__ import annotations

import math
import warnings

import torch
from torch import nn

NUM_FEATURES = 10  # z-speed, sin/cos time-of-day, day-of-week one-hot


def positional_encoding(steps: int, width: int, dtype: torch.dtype) -> torch.Tensor:
    pe = torch.zeros(steps, width, dtype=dtype)
    pos = torch.arange(steps, dtype=dtype).unsqueeze(1)
    div = torch.exp(torch.arange(0, width, 2, dtype=dtype) * (-math.log(10000.0) / width))
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div[: width // 2])
    return pe


def enforced_spatial_rows(
    weights: torch.Tensor, ref_idx: int, head_average: bool
) -> torch.Tensor:
    """Replacement SA rows: reference's self share on the sentinel slot,
    the residual on the reference road itself.

    ``weights`` is (B, H, T, N, N+1); returns rows (B, H, T, N+1).
    """
    n = weights.shape[-1] - 1
    ref_rows = weights[..., ref_idx, :]
    sigma = ref_rows[..., ref_idx] + ref_rows[..., n]  # explicit self column + sentinel
    if head_average:
        sigma = sigma.mean(dim=1, keepdim=True).expand(sigma.shape)
    if float(sigma.sum()) < 1e-12:
        warnings.warn("reference self-profile is all zero; using uniform 0.5 self share")
        sigma = torch.full_like(sigma, 0.5)
    rows = torch.zeros_like(ref_rows)
    rows[..., n] = sigma
    rows[..., ref_idx] = 1.0 - sigma
    return rows


def enforced_temporal_rows(
    weights: torch.Tensor, ref_idx: int, head_average: bool
) -> torch.Tensor:
    """Replacement TA rows: the reference road's query->key tables.

    ``weights`` is (B, H, N, Q, K); returns rows (B, H, Q, K).
    """
    rows = weights[..., ref_idx, :, :]
    if head_average:
        rows = rows.mean(dim=1, keepdim=True).expand(rows.shape)
    return rows


class SpatialAttention(nn.Module):
    """Directed graph attention over in-neighbors plus a sentinel skip key."""

    def __init__(self, width: int, heads: int):
        super().__init__()
        self.heads = heads
        self.dh = width // heads
        self.q = nn.Linear(width, width)
        self.k = nn.Linear(width, width)
        self.v = nn.Linear(width, width)
        self.sentinel_k = nn.Linear(width, width)
        self.sentinel_v = nn.Linear(width, width)
        self.out = nn.Linear(width, width)

    def forward(
        self,
        x: torch.Tensor,
        adj_mask: torch.Tensor,
        enforcement: dict[int, int] | None = None,
        head_average: bool = False,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        b, n, t, d = x.shape
        h, dh = self.heads, self.dh
        q = self.q(x).view(b, n, t, h, dh)
        k = self.k(x).view(b, n, t, h, dh)
        v = self.v(x).view(b, n, t, h, dh)
        ks = self.sentinel_k(x).view(b, n, t, h, dh)
        vs = self.sentinel_v(x).view(b, n, t, h, dh)

        scale = 1.0 / math.sqrt(dh)
        logits = torch.einsum("bithd,bjthd->bhtij", q, k) * scale
        logits = logits.masked_fill(~adj_mask[None, None, None, :, :], float("-inf"))
        sentinel = (q * ks).sum(-1).permute(0, 3, 2, 1) * scale  # (B, H, T, N)
        full = torch.cat([logits, sentinel.unsqueeze(-1)], dim=-1)
        weights = torch.softmax(full, dim=-1)  # (B, H, T, N, N+1)

        if enforcement:
            weights = weights.clone()
            for tgt, ref in enforcement.items():
                weights[..., tgt, :] = enforced_spatial_rows(weights, ref, head_average)

        mixed = torch.einsum("bhtij,bjthd->bithd", weights[..., :n], v)
        mixed = mixed + torch.einsum("bhti,bithd->bithd", weights[..., n], vs)
        return self.out(mixed.reshape(b, n, t, d)), weights


class TemporalAttention(nn.Module):
    """Multi-head attention along the step axis, per road."""

    def __init__(self, width: int, heads: int):
        super().__init__()
        self.heads = heads
        self.dh = width // heads
        self.q = nn.Linear(width, width)
        self.k = nn.Linear(width, width)
        self.v = nn.Linear(width, width)
        self.out = nn.Linear(width, width)

    def forward(
        self,
        x: torch.Tensor,
        memory: torch.Tensor | None = None,
        causal: bool = False,
        enforcement: dict[int, int] | None = None,
        head_average: bool = False,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        b, n, steps_q, d = x.shape
        kv = x if memory is None else memory
        steps_k = kv.shape[2]
        h, dh = self.heads, self.dh
        q = self.q(x).view(b, n, steps_q, h, dh)
        k = self.k(kv).view(b, n, steps_k, h, dh)
        v = self.v(kv).view(b, n, steps_k, h, dh)

        logits = torch.einsum("bnqhd,bnkhd->bhnqk", q, k) / math.sqrt(dh)
        if causal:
            mask = torch.triu(
                torch.ones(steps_q, steps_k, dtype=torch.bool, device=x.device), diagonal=1
            )
            logits = logits.masked_fill(mask[None, None, None, :, :], float("-inf"))
        weights = torch.softmax(logits, dim=-1)  # (B, H, N, Q, K)

        if enforcement:
            weights = weights.clone()
            for tgt, ref in enforcement.items():
                weights[..., tgt, :, :] = enforced_temporal_rows(weights, ref, head_average)

        mixed = torch.einsum("bhnqk,bnkhd->bnqhd", weights, v)
        return self.out(mixed.reshape(b, n, steps_q, d)), weights


def _ffn(width: int, multiplier: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(width, width * multiplier),
        nn.ReLU(),
        nn.Linear(width * multiplier, width),
    )


class EncoderLayer(nn.Module):
    def __init__(self, width: int, heads: int, ffn_multiplier: int):
        super().__init__()
        self.spatial = SpatialAttention(width, heads)
        self.temporal = TemporalAttention(width, heads)
        self.ffn = _ffn(width, ffn_multiplier)
        self.ln1 = nn.LayerNorm(width)
        self.ln2 = nn.LayerNorm(width)
        self.ln3 = nn.LayerNorm(width)

    def forward(self, x, adj_mask, enforcement=None, head_average=False):
        sa_out, sa_w = self.spatial(self.ln1(x), adj_mask, enforcement, head_average)
        x = x + sa_out
        ta_out, ta_w = self.temporal(self.ln2(x))
        x = x + ta_out
        x = x + self.ffn(self.ln3(x))
        return x, sa_w, ta_w


class DecoderLayer(nn.Module):
    def __init__(self, width: int, heads: int, ffn_multiplier: int):
        super().__init__()
        self.self_attn = TemporalAttention(width, heads)
        self.cross_attn = TemporalAttention(width, heads)
        self.ffn = _ffn(width, ffn_multiplier)
        self.ln1 = nn.LayerNorm(width)
        self.ln2 = nn.LayerNorm(width)
        self.ln3 = nn.LayerNorm(width)

    def forward(self, y, memory, enforcement=None, head_average=False):
        self_out, self_w = self.self_attn(self.ln1(y), causal=True)
        y = y + self_out
        cross_out, cross_w = self.cross_attn(
            self.ln2(y), memory=memory, enforcement=enforcement, head_average=head_average
        )
        y = y + cross_out
        y = y + self.ffn(self.ln3(y))
        return y, self_w, cross_w


class Forecaster(nn.Module):
    """Full network; all attention weights are returned for analysis.

    Attention enforcement (a {target_index: reference_index} mapping) applies
    at the last encoder layer's spatial attention and the last decoder
    layer's cross-attention, the same layers the analysis views read.
    """

    def __init__(self, config):
        super().__init__()
        self.config = config
        w = config.width
        self.enc_embed = nn.Linear(NUM_FEATURES, w)
        self.dec_embed = nn.Linear(NUM_FEATURES, w)
        self.register_buffer(
            "posenc", positional_encoding(config.input_steps, w, torch.float64)
        )
        self.encoder = nn.ModuleList(
            EncoderLayer(w, config.heads, config.ffn_multiplier)
            for _ in range(config.encoder_layers)
        )
        self.decoder = nn.ModuleList(
            DecoderLayer(w, config.heads, config.ffn_multiplier)
            for _ in range(config.decoder_layers)
        )
        self.ln_out = nn.LayerNorm(w)
        self.head = nn.Linear(w, 1)

    def encode(self, feats, adj_mask, enforcement=None, head_average=False):
        if torch.isnan(feats).any():
            raise ValueError("encoder features contain missing values; fill the panel first")
        x = self.enc_embed(feats) + self.posenc[None, None, :, :]
        sa_w = ta_w = None
        for i, layer in enumerate(self.encoder):
            last = i == len(self.encoder) - 1
            x, sa_w, ta_w = layer(x, adj_mask, enforcement if last else None, head_average)
        return x, sa_w, ta_w

    def decode(self, feats, memory, enforcement=None, head_average=False):
        steps = feats.shape[2]
        y = self.dec_embed(feats) + self.posenc[None, None, :steps, :]
        self_w = cross_w = None
        for i, layer in enumerate(self.decoder):
            last = i == len(self.decoder) - 1
            y, self_w, cross_w = layer(y, memory, enforcement if last else None, head_average)
        return self.head(self.ln_out(y)).squeeze(-1), self_w, cross_w
