"""Miniature decoder-only language model.

Qwen2-family layout scaled down to desk size: RMSNorm pre-norm residual
blocks, rotary position embeddings, grouped-query attention (q/k/v carry
biases, o and the MLP do not) and a SwiGLU feed-forward.  Everything runs
comfortably on one CPU core; tests switch to float64 where tolerances are
tight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import torch
import torch.nn as nn
import torch.nn.functional as F

from .tokenizer import EOS_ID


@dataclass
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_layers: int = 4
    n_heads: int = 8
    n_kv_heads: int = 2
    head_dim: int = 8
    d_mlp: int = 256
    max_seq_len: int = 512
    rope_theta: float = 10000.0
    norm_eps: float = 1e-6
    tie_embeddings: bool = False

    def validate(self) -> None:
        if min(self.vocab_size, self.d_model, self.n_layers, self.n_heads,
               self.n_kv_heads, self.head_dim, self.d_mlp, self.max_seq_len) <= 0:
            raise ValueError("all model dimensions must be positive")
        if self.n_heads % self.n_kv_heads != 0:
            raise ValueError(f"n_heads={self.n_heads} not divisible by n_kv_heads={self.n_kv_heads}")

    @classmethod
    def desk(cls, vocab_size: int) -> "ModelConfig":
        return cls(vocab_size=vocab_size)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class RMSNorm(nn.Module):
    def __init__(self, dim: int, eps: float = 1e-6):
        super().__init__()
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        rms = torch.sqrt(x.pow(2).mean(dim=-1, keepdim=True) + self.eps)
        return x / rms * self.weight


def rope_angles(positions: torch.Tensor, head_dim: int, theta: float,
                dtype: torch.dtype) -> tuple[torch.Tensor, torch.Tensor]:
    """cos/sin tables of shape (len(positions), head_dim // 2)."""
    half = head_dim // 2
    inv_freq = theta ** (-torch.arange(half, dtype=dtype) / max(half, 1))
    ang = positions.to(dtype)[:, None] * inv_freq[None, :]
    return torch.cos(ang), torch.sin(ang)


def apply_rope(x: torch.Tensor, cos: torch.Tensor, sin: torch.Tensor) -> torch.Tensor:
    """Rotate (..., seq, head_dim) with half-split pairing.

    Dimension i pairs with i + head_dim//2; with an odd head_dim the last
    dimension passes through unrotated.
    """
    half = x.shape[-1] // 2
    x1 = x[..., :half]
    x2 = x[..., half:2 * half]
    rot = torch.cat([x1 * cos - x2 * sin, x1 * sin + x2 * cos], dim=-1)
    if x.shape[-1] % 2:
        rot = torch.cat([rot, x[..., -1:]], dim=-1)
    return rot


class Attention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.n_heads = cfg.n_heads
        self.n_kv_heads = cfg.n_kv_heads
        self.head_dim = cfg.head_dim
        self.rope_theta = cfg.rope_theta
        self.q_proj = nn.Linear(cfg.d_model, cfg.n_heads * cfg.head_dim, bias=True)
        self.k_proj = nn.Linear(cfg.d_model, cfg.n_kv_heads * cfg.head_dim, bias=True)
        self.v_proj = nn.Linear(cfg.d_model, cfg.n_kv_heads * cfg.head_dim, bias=True)
        self.o_proj = nn.Linear(cfg.n_heads * cfg.head_dim, cfg.d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        bsz, seq, _ = x.shape
        q = self.q_proj(x).view(bsz, seq, self.n_heads, self.head_dim).transpose(1, 2)
        k = self.k_proj(x).view(bsz, seq, self.n_kv_heads, self.head_dim).transpose(1, 2)
        v = self.v_proj(x).view(bsz, seq, self.n_kv_heads, self.head_dim).transpose(1, 2)

        pos = torch.arange(seq, device=x.device)
        cos, sin = rope_angles(pos, self.head_dim, self.rope_theta, x.dtype)
        q = apply_rope(q, cos, sin)
        k = apply_rope(k, cos, sin)

        rep = self.n_heads // self.n_kv_heads
        k = k.repeat_interleave(rep, dim=1)
        v = v.repeat_interleave(rep, dim=1)

        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        causal = torch.triu(torch.ones(seq, seq, dtype=torch.bool, device=x.device), diagonal=1)
        scores = scores.masked_fill(causal, float("-inf"))
        attn = F.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(bsz, seq, self.n_heads * self.head_dim)
        return self.o_proj(out)


class Mlp(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.gate_proj = nn.Linear(cfg.d_model, cfg.d_mlp, bias=False)
        self.up_proj = nn.Linear(cfg.d_model, cfg.d_mlp, bias=False)
        self.down_proj = nn.Linear(cfg.d_mlp, cfg.d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.down_proj(F.silu(self.gate_proj(x)) * self.up_proj(x))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.input_norm = RMSNorm(cfg.d_model, cfg.norm_eps)
        self.attn = Attention(cfg)
        self.post_attn_norm = RMSNorm(cfg.d_model, cfg.norm_eps)
        self.mlp = Mlp(cfg)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.input_norm(x))
        x = x + self.mlp(self.post_attn_norm(x))
        return x


class MicroLM(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.embed = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.layers = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.n_layers))
        self.final_norm = RMSNorm(cfg.d_model, cfg.norm_eps)
        self.lm_head = nn.Linear(cfg.d_model, cfg.vocab_size, bias=False)
        self.apply(self._init_weights)
        if cfg.tie_embeddings:
            self.lm_head.weight = self.embed.weight

    @staticmethod
    def _init_weights(module: nn.Module) -> None:
        if isinstance(module, nn.Linear):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.Embedding):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)

    def hidden_states(self, ids: torch.Tensor) -> torch.Tensor:
        """Final-norm hidden states, shape (batch, seq, d_model)."""
        if ids.shape[-1] > self.cfg.max_seq_len:
            raise ValueError(f"sequence length {ids.shape[-1]} exceeds max {self.cfg.max_seq_len}")
        x = self.embed(ids)
        for layer in self.layers:
            x = layer(x)
        return self.final_norm(x)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        return self.lm_head(self.hidden_states(ids))

    def pooled_hidden(self, ids: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
        """Mean-pool hidden states over (optionally masked) positions."""
        h = self.hidden_states(ids)
        if mask is None:
            return h.mean(dim=1)
        m = mask.to(h.dtype)[..., None]
        return (h * m).sum(dim=1) / m.sum(dim=1).clamp_min(1.0)

    def num_parameters(self) -> int:
        seen = set()
        total = 0
        for p in self.parameters():
            if id(p) not in seen:
                seen.add(id(p))
                total += p.numel()
        return total


def sequence_loss(logits: torch.Tensor, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Masked next-token cross entropy.

    ``mask`` flags target positions in ``ids`` (same shape); the logit at
    position t predicts the id at t+1, so both are shifted accordingly.
    """
    tgt = ids[:, 1:]
    m = mask[:, 1:].to(logits.dtype)
    lp = F.log_softmax(logits[:, :-1], dim=-1)
    nll = -lp.gather(-1, tgt[..., None]).squeeze(-1)
    denom = m.sum().clamp_min(1.0)
    return (nll * m).sum() / denom


@dataclass
class GenerationParams:
    max_new_tokens: int = 64
    temperature: float = 0.0
    top_k: int = 1
    seed: int = 0


@torch.no_grad()
def generate(model: MicroLM, prompt_ids: list[int], params: GenerationParams) -> list[int]:
    """Generate continuation ids; stops at EOS or the length budget.

    ``temperature == 0`` or ``top_k == 1`` is greedy argmax and fully
    deterministic; otherwise sampling is restricted to the top-k logits and
    driven by a generator seeded from ``params.seed``.
    """
    model.eval()
    ids = list(prompt_ids)
    gen = torch.Generator().manual_seed(params.seed)
    device = next(model.parameters()).device
    for _ in range(params.max_new_tokens):
        window = ids[-model.cfg.max_seq_len:]
        logits = model(torch.tensor([window], dtype=torch.long, device=device))[0, -1]
        if params.temperature <= 0.0 or params.top_k == 1:
            nxt = int(torch.argmax(logits).item())
        else:
            k = min(max(params.top_k, 1), logits.shape[-1])
            vals, idx = torch.topk(logits, k)
            probs = F.softmax(vals / params.temperature, dim=-1)
            nxt = int(idx[torch.multinomial(probs, 1, generator=gen)].item())
        ids.append(nxt)
        if nxt == EOS_ID:
            break
    return ids[len(prompt_ids):]
