"""Adaptive spatio-temporal graph forecaster for multi-station demand.

The network learns its own station graph two ways at once: a static
coupling from a node-embedding product, and a per-window coupling from a
learned Mahalanobis similarity of the raw demand histories. Spectral
graph convolutions (Chebyshev basis) run between two gated temporal
convolutions inside each ST block; a bilinear second-order pooling turns
node features into a graph vector for the output MLP.

Everything runs in float64 on CPU so gradient checks against central
finite differences are meaningful.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..pipeline.dataset import DOW_CARDINALITY, TOD_CARDINALITY

_EPS_DIST = 1e-12
DTYPE = torch.float64


def _randn(*shape) -> torch.Tensor:
    return torch.randn(*shape, dtype=DTYPE)


@dataclass
class TrainConfig:
    n_stations: int = 12
    t_window: int = 8
    learning_rate: float = 0.001
    batch_size: int = 64
    epochs: int = 60
    k_s: int = 3  # Chebyshev terms, order 0 included
    n_e: int = 10  # node embedding dimension
    hidden: int = 16  # ST block channel width (also attention d_k)
    k_t: int = 2  # temporal kernel width
    n_blocks: int = 2
    z_prime: int = 8  # pooling output side
    mlp_hidden: int = 64
    embed_dim: int = 4  # per covariate lookup width
    seed: int = 0
    variant: str = "full"  # full | noWA | noTA | fc
    curve_metric: str = "loss"

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.epochs, self.k_s,
               self.n_e, self.hidden, self.k_t, self.n_blocks) <= 0:
            raise ValueError("config values must be positive")
        shrink = self.n_blocks * 2 * (self.k_t - 1)
        if self.t_window - shrink < 1:
            raise ValueError(
                f"t_window={self.t_window} too short: {self.n_blocks} blocks "
                f"with k_t={self.k_t} remove {shrink} slots"
            )

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# --- graph construction -----------------------------------------------------

def build_time_invariant_adjacency(e: torch.Tensor) -> torch.Tensor:
    """Row-stochastic static adjacency from node embeddings.

    Softmax normalizes each row of E E^T; the trailing ReLU is a no-op on
    softmax output and is kept to mirror the construction exactly.
    """
    return torch.relu(torch.softmax(e @ e.T, dim=-1))


def build_time_varying_adjacency(
    p_window: torch.Tensor, m: torch.Tensor, sigma: torch.Tensor | float
) -> torch.Tensor:
    """Row-stochastic similarity adjacency from demand windows.

    p_window: [..., N, T] demand histories. Distances use the generalized
    Mahalanobis form sqrt(d M M^T d^T); rows are normalized Gaussian-kernel
    weights exp(-d / (2 sigma^2)) / sum.
    """
    a = m @ m.T
    diff = p_window.unsqueeze(-3) - p_window.unsqueeze(-2)  # [..., N, N, T]
    d_sq = torch.einsum("...ijt,ts,...ijs->...ij", diff, a, diff)
    d = torch.sqrt(torch.clamp(d_sq, min=0.0) + _EPS_DIST)
    sigma_t = sigma if isinstance(sigma, torch.Tensor) else torch.as_tensor(
        sigma, dtype=p_window.dtype)
    return torch.softmax(-d / (2.0 * sigma_t ** 2), dim=-1)


def combine_adjacency(w_ti: torch.Tensor, w_tv: torch.Tensor) -> torch.Tensor:
    """Sum the two couplings, then symmetrize so the Laplacian is real."""
    w = w_ti + w_tv
    return 0.5 * (w + w.transpose(-1, -2))


def _power_iteration_lmax(l: torch.Tensor, iters: int = 3000,
                          tol: float = 1e-14) -> torch.Tensor:
    """Dominant eigenvalue by power iteration with Rayleigh quotient.

    tol == 0 disables early stopping: a fixed iteration count keeps the
    computation a smooth function of l, which finite-difference gradient
    checks rely on.
    """
    n = l.shape[-1]
    # fixed pseudo-random start; the all-ones vector can be exactly the
    # nullspace of L for regular graphs
    v0 = torch.cos(0.7 * torch.arange(n, dtype=l.dtype) + 0.3) + 1.1
    v = (v0 / v0.norm()).expand(l.shape[:-2] + (n,)).clone()
    lam = torch.zeros(l.shape[:-2], dtype=l.dtype)
    for _ in range(iters):
        w = torch.einsum("...ij,...j->...i", l, v)
        norm = w.norm(dim=-1, keepdim=True)
        if torch.any(norm.detach() < 1e-30):
            break
        v = w / norm
        new_lam = torch.einsum("...i,...ij,...j->...", v, l, v)
        if tol > 0 and torch.all((new_lam.detach() - lam.detach()).abs() <= tol):
            lam = new_lam
            break
        lam = new_lam
    return lam


def normalized_laplacian(w: torch.Tensor, power_iters: int = 3000,
                         power_tol: float = 1e-14) -> torch.Tensor:
    """Rescaled symmetric-normalized Laplacian with spectrum in [-1, 1].

    L = I - D^{-1/2} W D^{-1/2}; the output is 2 L / lambda_max - I with
    lambda_max from power iteration. Raises on zero-degree rows.
    """
    deg = w.sum(dim=-1)
    if torch.any(deg.detach() <= 0):
        raise ValueError("zero-degree row: adjacency has an isolated node")
    dinv = deg.rsqrt()
    norm_w = dinv.unsqueeze(-1) * w * dinv.unsqueeze(-2)
    n = w.shape[-1]
    eye = torch.eye(n, dtype=w.dtype).expand_as(w)
    lap = eye - norm_w
    lam = _power_iteration_lmax(lap, iters=power_iters, tol=power_tol)
    lam = torch.clamp(lam, min=1e-12)
    return 2.0 * lap / lam[..., None, None] - eye


# --- layers ------------------------------------------------------------------

def chebyshev_conv(x: torch.Tensor, l_tilde: torch.Tensor,
                   theta: torch.Tensor) -> torch.Tensor:
    """Spectral graph convolution, orders 0..K_s-1 of the Chebyshev basis.

    x: [B, C_in, N, T]; l_tilde: [B, N, N] or [N, N];
    theta: [K_s, C_in, C_out]. The order-0 term (identity) is included.
    """
    if l_tilde.dim() == 2:
        l_tilde = l_tilde.unsqueeze(0).expand(x.shape[0], -1, -1)
    k_s = theta.shape[0]
    t_prev2 = x
    out = torch.einsum("bcnt,cd->bdnt", t_prev2, theta[0])
    if k_s == 1:
        return out
    t_prev1 = torch.einsum("bij,bcjt->bcit", l_tilde, x)
    out = out + torch.einsum("bcnt,cd->bdnt", t_prev1, theta[1])
    for k in range(2, k_s):
        t_cur = 2.0 * torch.einsum("bij,bcjt->bcit", l_tilde, t_prev1) - t_prev2
        out = out + torch.einsum("bcnt,cd->bdnt", t_cur, theta[k])
        t_prev2, t_prev1 = t_prev1, t_cur
    return out


def gated_temporal_conv(
    x: torch.Tensor,
    kernel_b: torch.Tensor,
    kernel_c: torch.Tensor,
    bias_b: torch.Tensor,
    bias_c: torch.Tensor,
    residual: bool = True,
) -> torch.Tensor:
    """GLU along the time axis with valid (no-padding) convolution.

    x: [B, C_in, N, T]; kernels: [C_out, C_in, K_t]; output time length is
    T - K_t + 1. When channel counts match, the tail-aligned input is added
    as a residual.
    """
    b, c_in, n, t = x.shape
    k_t = kernel_b.shape[-1]
    if t < k_t:
        raise ValueError(f"time axis {t} shorter than kernel width {k_t}")
    flat = x.permute(0, 2, 1, 3).reshape(b * n, c_in, t)
    lin = torch.nn.functional.conv1d(flat, kernel_b, bias_b)
    gate = torch.nn.functional.conv1d(flat, kernel_c, bias_c)
    out = lin * torch.sigmoid(gate)
    t_out = t - k_t + 1
    out = out.reshape(b, n, -1, t_out).permute(0, 2, 1, 3)
    if residual and out.shape[1] == c_in:
        out = out + x[:, :, :, k_t - 1:]
    return out


def temporal_attention(
    x: torch.Tensor, w_q: torch.Tensor, w_k: torch.Tensor
) -> torch.Tensor:
    """Scaled dot-product reweighting of time steps.

    x: [B, C, N, T]. Queries/keys are learned projections of the per-station
    time slices; values are the unprojected input, so a single time step is
    passed through unchanged. Attention weight rows sum to 1.
    """
    d_k = w_q.shape[1]
    xt = x.permute(0, 2, 3, 1)  # [B, N, T, C]
    q = xt @ w_q
    k = xt @ w_k
    weights = torch.softmax(q @ k.transpose(-1, -2) / math.sqrt(d_k), dim=-1)
    out = weights @ xt
    return out.permute(0, 3, 1, 2)


def second_order_pool(x: torch.Tensor, z_map: torch.Tensor) -> torch.Tensor:
    """Bilinear second-order readout.

    x: [..., N_nodes, z] node-feature matrices; z_map: [z', z]. Returns the
    flattened z' x z' Gram matrix of the mapped features, which is symmetric
    positive semidefinite by construction.
    """
    mapped = x @ z_map.transpose(-1, -2)  # [..., N, z']
    gram = mapped.transpose(-1, -2) @ mapped  # [..., z', z']
    return gram.reshape(*gram.shape[:-2], -1)


# --- model -------------------------------------------------------------------

class STBlock(nn.Module):
    """Gated temporal conv (+ attention) -> graph conv -> gated temporal conv."""

    def __init__(self, c_in: int, c_mid: int, c_out: int, k_t: int, k_s: int,
                 use_attention: bool):
        super().__init__()
        def conv_pair(ci, co):
            scale = 1.0 / math.sqrt(ci * k_t)
            kb = nn.Parameter(_randn(co, ci, k_t) * scale)
            kc = nn.Parameter(_randn(co, ci, k_t) * scale)
            zeros = lambda: nn.Parameter(torch.zeros(co, dtype=DTYPE))
            return kb, kc, zeros(), zeros()

        self.kb1, self.kc1, self.bb1, self.bc1 = conv_pair(c_in, c_mid)
        self.kb2, self.kc2, self.bb2, self.bc2 = conv_pair(c_mid, c_out)
        self.theta = nn.Parameter(_randn(k_s, c_mid, c_mid) / math.sqrt(k_s * c_mid))
        self.use_attention = use_attention
        if use_attention:
            self.w_q = nn.Parameter(_randn(c_mid, c_mid) / math.sqrt(c_mid))
            self.w_k = nn.Parameter(_randn(c_mid, c_mid) / math.sqrt(c_mid))

    def forward(self, x: torch.Tensor, l_tilde: torch.Tensor) -> torch.Tensor:
        h = gated_temporal_conv(x, self.kb1, self.kc1, self.bb1, self.bc1)
        if self.use_attention:
            h = temporal_attention(h, self.w_q, self.w_k)
        h = torch.relu(chebyshev_conv(h, l_tilde, self.theta))
        return gated_temporal_conv(h, self.kb2, self.kc2, self.bb2, self.bc2)


class DemandForecaster(nn.Module):
    """Full forecaster; config.variant selects the ablations.

    noWA swaps the learned adjacency for a fixed historical-similarity
    matrix (pass it via `fixed_similarity`), noTA removes temporal
    attention, fc replaces second-order pooling with flatten + dense.
    """

    def __init__(self, config: TrainConfig,
                 fixed_similarity: np.ndarray | None = None):
        super().__init__()
        torch.manual_seed(config.seed)
        self.config = config
        n, t = config.n_stations, config.t_window
        var = config.variant
        if var not in ("full", "noWA", "noTA", "fc"):
            raise ValueError(f"unknown variant {var!r}")
        self.adaptive_graph = var != "noWA"
        use_attn = var != "noTA"
        self.second_order = var != "fc"

        self.embed_tod = nn.Parameter(_randn(TOD_CARDINALITY, config.embed_dim) * 0.1)
        self.embed_dow = nn.Parameter(_randn(DOW_CARDINALITY, config.embed_dim) * 0.1)

        if self.adaptive_graph:
            self.node_embed = nn.Parameter(_randn(n, config.n_e) * 0.1)
            self.mahalanobis = nn.Parameter(
                torch.eye(t, dtype=DTYPE) + 0.01 * _randn(t, t))
            # sigma kept positive through softplus
            self.sigma_raw = nn.Parameter(
                torch.tensor(0.5413248546129181, dtype=DTYPE))
        else:
            if fixed_similarity is None:
                raise ValueError("noWA variant needs a fixed_similarity matrix")
            sim = torch.as_tensor(fixed_similarity, dtype=DTYPE)
            if sim.shape != (n, n):
                raise ValueError("fixed_similarity must be n_stations square")
            self.register_buffer("fixed_w", 0.5 * (sim + sim.T))

        c_in = 1 + 2 * config.embed_dim
        h = config.hidden
        self.blocks = nn.ModuleList()
        for b in range(config.n_blocks):
            self.blocks.append(STBlock(
                c_in if b == 0 else h, h, h, config.k_t, config.k_s, use_attn))

        t_out = t - config.n_blocks * 2 * (config.k_t - 1)
        z = h * t_out
        zp = config.z_prime
        if self.second_order:
            self.z_map = nn.Parameter(_randn(zp, z) / math.sqrt(z))
            head_in = zp * zp
        else:
            self.flat_map = nn.Parameter(_randn(n * z, zp * zp) / math.sqrt(n * z))
            self.flat_bias = nn.Parameter(torch.zeros(zp * zp, dtype=DTYPE))
            head_in = zp * zp
        self.mlp_w1 = nn.Parameter(_randn(head_in, config.mlp_hidden) / math.sqrt(head_in))
        self.mlp_b1 = nn.Parameter(torch.zeros(config.mlp_hidden, dtype=DTYPE))
        self.mlp_w2 = nn.Parameter(_randn(config.mlp_hidden, n) / math.sqrt(config.mlp_hidden))
        self.mlp_b2 = nn.Parameter(torch.zeros(n, dtype=DTYPE))

    @property
    def sigma(self) -> torch.Tensor:
        return torch.nn.functional.softplus(self.sigma_raw)

    def adjacency(self, demand_window: torch.Tensor) -> torch.Tensor:
        """[B, N, N] combined adjacency for a [B, N, T] demand window."""
        if not self.adaptive_graph:
            return self.fixed_w.unsqueeze(0).expand(demand_window.shape[0], -1, -1)
        w_ti = build_time_invariant_adjacency(self.node_embed)
        w_tv = build_time_varying_adjacency(
            demand_window, self.mahalanobis, self.sigma)
        return combine_adjacency(w_ti.unsqueeze(0), w_tv)

    def _embed_features(self, features: torch.Tensor) -> torch.Tensor:
        demand = features[:, 0:1]  # [B,1,N,T]
        tod_idx = features[:, 1].round().long().clamp(0, TOD_CARDINALITY - 1)
        dow_idx = features[:, 2].round().long().clamp(0, DOW_CARDINALITY - 1)
        tod = self.embed_tod[tod_idx].permute(0, 3, 1, 2)
        dow = self.embed_dow[dow_idx].permute(0, 3, 1, 2)
        extra = features[:, 3:] if features.shape[1] > 3 else None
        parts = [demand, tod, dow] + ([extra] if extra is not None else [])
        return torch.cat(parts, dim=1)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        """features: [B, C, N, T] (or unbatched [C, N, T]) -> [B, N].

        Outputs are clamped to [0, 1] in eval mode only; training uses the
        raw head output so gradients stay informative.
        """
        squeeze = features.dim() == 3
        if squeeze:
            features = features.unsqueeze(0)
        if features.shape[2] != self.config.n_stations:
            raise ValueError(
                f"expected {self.config.n_stations} stations, got {features.shape[2]}")
        if features.shape[3] != self.config.t_window:
            raise ValueError(
                f"expected window {self.config.t_window}, got {features.shape[3]}")
        features = features.to(torch.float64)

        # fixed-count power iteration: smooth in the parameters and cheap
        l_tilde = normalized_laplacian(self.adjacency(features[:, 0]),
                                       power_iters=60, power_tol=0.0)
        x = self._embed_features(features)
        for block in self.blocks:
            x = block(x, l_tilde)

        b, c, n, t_out = x.shape
        if self.second_order:
            node_feat = x.permute(0, 2, 1, 3).reshape(b, n, c * t_out)
            h = second_order_pool(node_feat, self.z_map)
        else:
            h = x.permute(0, 2, 1, 3).reshape(b, n * c * t_out) @ self.flat_map
            h = h + self.flat_bias
        h = torch.relu(h @ self.mlp_w1 + self.mlp_b1)
        out = h @ self.mlp_w2 + self.mlp_b2
        if not self.training:
            out = out.clamp(0.0, 1.0)
        return out.squeeze(0) if squeeze else out

    def parameter_audit(self) -> list[tuple[str, tuple[int, ...], int]]:
        """Shape audit: (name, shape, count) per tensor."""
        return [
            (name, tuple(p.shape), p.numel())
            for name, p in self.named_parameters()
        ]


def loss_fn(model: DemandForecaster, features: torch.Tensor,
            truths: torch.Tensor) -> torch.Tensor:
    """Mean over samples of the per-sample station sum of squared error."""
    pred = model(features)
    if pred.dim() == 1:
        pred = pred.unsqueeze(0)
        truths = truths.reshape(1, -1)
    return ((pred - truths) ** 2).sum(dim=1).mean()


def grad(model: DemandForecaster, features: torch.Tensor,
         truths: torch.Tensor) -> dict[str, torch.Tensor]:
    """Reverse-mode gradients of the batch loss for every parameter."""
    model.zero_grad(set_to_none=True)
    value = loss_fn(model, features, truths)
    if not torch.isfinite(value):
        raise FloatingPointError("non-finite loss; check inputs and parameters")
    value.backward()
    out = {}
    for name, p in model.named_parameters():
        g = p.grad
        if g is not None and not torch.all(torch.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {name}")
        out[name] = (g.detach().clone() if g is not None
                     else torch.zeros_like(p))
    return out


def baseline_ha(features: torch.Tensor | np.ndarray) -> np.ndarray:
    """Historical average: per-station mean of the demand window."""
    arr = features.detach().cpu().numpy() if isinstance(features, torch.Tensor) \
        else np.asarray(features)
    if arr.ndim == 3:
        arr = arr[None]
    return arr[:, 0].mean(axis=-1)


def historical_similarity(series: np.ndarray, kernel_scale: float | None = None
                          ) -> np.ndarray:
    """Fixed Gaussian-kernel similarity of historical station series
    (row-normalized), for the noWA ablation."""
    s = np.asarray(series, dtype=float)
    d = np.sqrt(((s[:, None, :] - s[None, :, :]) ** 2).sum(-1))
    if kernel_scale is None:
        off = d[~np.eye(d.shape[0], dtype=bool)]
        kernel_scale = float(np.median(off)) or 1.0
    w = np.exp(-d / (2.0 * kernel_scale ** 2))
    return w / w.sum(axis=1, keepdims=True)


def ablation_variant(kind: str):
    """Constructor for an ablated model; see DemandForecaster.

    noWA needs fixed_similarity from historical_similarity(train series).
    """
    if kind not in ("noWA", "noTA", "fc"):
        raise ValueError(f"unknown ablation {kind!r}")

    def make(config: TrainConfig, fixed_similarity: np.ndarray | None = None):
        cfg = TrainConfig(**{**config.to_dict(), "variant": kind})
        return DemandForecaster(cfg, fixed_similarity=fixed_similarity)

    return make
