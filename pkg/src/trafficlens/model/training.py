"""Window construction, training loop, and direct multi-horizon inference."""

from __future__ import annotations

import numpy as np
import torch

from ..data.types import SLOTS_PER_DAY, SpeedPanel, RoadNetwork
from ..errors import PredictionSet
from .config import ModelConfig
from .network import Forecaster
from .state import ModelState


def build_windows(panel: SpeedPanel, config: ModelConfig | None = None) -> np.ndarray:
    """Start indices of every (12 in, 12 out) window that fits the panel."""
    total = (config.input_steps if config else 12) + (config.output_steps if config else 12)
    last = panel.num_steps - total
    if last < 0:
        return np.empty(0, dtype=int)
    return np.arange(last + 1)


def _time_feature_table(panel: SpeedPanel) -> np.ndarray:
    """(T, 9) time features per panel step: sin/cos slot plus dow one-hot."""
    steps = np.arange(panel.num_steps)
    slot0 = panel.slot_at(0)
    dow0 = panel.dow_at(0)
    abs_slot = slot0 + steps
    slots = abs_slot % SLOTS_PER_DAY
    dows = (dow0 + abs_slot // SLOTS_PER_DAY) % 7
    feats = np.zeros((panel.num_steps, 9))
    angle = 2.0 * np.pi * slots / SLOTS_PER_DAY
    feats[:, 0] = np.sin(angle)
    feats[:, 1] = np.cos(angle)
    feats[steps, 2 + dows] = 1.0
    return feats


class _Featurizer:
    """Precomputed z-speeds and time features for one panel."""

    def __init__(self, panel: SpeedPanel, state: ModelState):
        if panel.roads != state.network.roads:
            raise ValueError("panel roads differ from the trained graph")
        if panel.unit != state.unit:
            raise ValueError(f"unit mismatch: panel {panel.unit} vs model {state.unit}")
        self.z = (panel.values - state.norm_mean[None, :]) / state.norm_std[None, :]
        self.time = _time_feature_table(panel)
        self.n = panel.num_roads

    def encoder_batch(self, starts: np.ndarray, steps: int = 12) -> torch.Tensor:
        idx = starts[:, None] + np.arange(steps)[None, :]  # (B, 12)
        z = self.z[idx]  # (B, 12, N)
        feats = np.concatenate(
            [
                z.transpose(0, 2, 1)[..., None],
                np.broadcast_to(self.time[idx][:, None, :, :], (len(starts), self.n, steps, 9)),
            ],
            axis=-1,
        )
        return torch.from_numpy(np.ascontiguousarray(feats))

    def decoder_batch(self, starts: np.ndarray, steps: int = 12) -> torch.Tensor:
        """Decoder query tokens: target-step time features only.

        Decoding is direct (non-token-fed): every speed signal must flow
        through the attention pathways, which keeps the recorded spatial
        and temporal weights causally meaningful.
        """
        idx = starts[:, None] + 12 + np.arange(steps)[None, :]
        feats = np.concatenate(
            [
                np.zeros((len(starts), self.n, steps, 1)),
                np.broadcast_to(self.time[idx][:, None, :, :], (len(starts), self.n, steps, 9)),
            ],
            axis=-1,
        )
        return torch.from_numpy(np.ascontiguousarray(feats))


def _forward_loss(
    model: Forecaster,
    feat: _Featurizer,
    adj_mask: torch.Tensor,
    starts: np.ndarray,
) -> torch.Tensor:
    enc = feat.encoder_batch(starts)
    target_idx = starts[:, None] + 12 + np.arange(12)[None, :]
    target_z = torch.from_numpy(np.ascontiguousarray(feat.z[target_idx].transpose(0, 2, 1)))
    memory, _, _ = model.encode(enc, adj_mask)
    out, _, _ = model.decode(feat.decoder_batch(starts), memory)
    return (out - target_z).abs().mean()


def _decode_windows(
    model: Forecaster,
    feat: _Featurizer,
    adj_mask: torch.Tensor,
    starts: np.ndarray,
    enforcement: dict[int, int] | None = None,
    head_average: bool = False,
    record: bool = False,
):
    """One full forward pass per batch; returns z-space (B, N, 12) outputs.

    With ``record``, also returns the last encoder layer's spatial weights
    and the last decoder layer's cross-temporal weights.
    """
    enc = feat.encoder_batch(starts)
    memory, sa_w, _ = model.encode(enc, adj_mask, enforcement, head_average)
    out, _, cross_w = model.decode(feat.decoder_batch(starts), memory, enforcement, head_average)
    produced = out.numpy() if not out.requires_grad else out.detach().numpy()
    if not record:
        return produced, None, None
    return produced, sa_w, cross_w


def train(
    train_panel: SpeedPanel,
    val_panel: SpeedPanel,
    graph: RoadNetwork,
    config: ModelConfig,
) -> ModelState:
    """Fit the forecaster with MAE loss, early-stopped on validation MAE.

    Direct 12-step decoding in training and validation alike; deterministic
    for a fixed config seed.
    """
    if train_panel.roads != graph.roads or val_panel.roads != graph.roads:
        raise ValueError("panel road order must match the graph road order")
    if np.isnan(train_panel.values).any() or np.isnan(val_panel.values).any():
        raise ValueError("panels contain missing values; run fill_missing first")

    mean = train_panel.values.mean(axis=0)
    std = np.maximum(train_panel.values.std(axis=0), 1e-6)
    torch.manual_seed(config.seed)
    model = Forecaster(config).to(torch.float64)
    state = ModelState(
        config=config,
        network=graph,
        norm_mean=mean,
        norm_std=std,
        params={k: v.detach().numpy().copy() for k, v in model.state_dict().items()},
        trained=False,
        unit=train_panel.unit,
    )
    if config.epochs == 0:
        return state

    train_starts = build_windows(train_panel, config)
    val_starts = build_windows(val_panel, config)
    if len(train_starts) == 0 or len(val_starts) == 0:
        raise ValueError("train and val splits must each fit at least one 24-step window")

    feat_train = _Featurizer(train_panel, state)
    feat_val = _Featurizer(val_panel, state)
    adj_mask = state.adj_mask()
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    best_val, best_params, best_epoch = np.inf, None, -1
    history: dict = {"train_loss": [], "val_mae": []}
    since_best = 0
    for epoch in range(config.epochs):
        model.train()
        perm = rng.permutation(len(train_starts))
        losses = []
        for lo in range(0, len(perm), config.batch_size):
            batch = train_starts[perm[lo : lo + config.batch_size]]
            opt.zero_grad()
            loss = _forward_loss(model, feat_train, adj_mask, batch)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged at epoch {epoch}: loss={float(loss.detach())}; "
                    f"lr={config.learning_rate}, batch={lo // config.batch_size}"
                )
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
        model.eval()
        with torch.no_grad():
            errs = []
            for lo in range(0, len(val_starts), 256):
                batch = val_starts[lo : lo + 256]
                z_pred, _, _ = _decode_windows(model, feat_val, adj_mask, batch)
                pred = z_pred * std[None, :, None] + mean[None, :, None]
                idx = batch[:, None] + 12 + np.arange(12)[None, :]
                actual = val_panel.values[idx].transpose(0, 2, 1)
                errs.append(np.abs(pred - actual).mean())
            val_mae = float(np.mean(errs))
        history["train_loss"].append(float(np.mean(losses)))
        history["val_mae"].append(val_mae)
        if val_mae < best_val:
            best_val, best_epoch, since_best = val_mae, epoch, 0
            best_params = {k: v.detach().numpy().copy() for k, v in model.state_dict().items()}
        else:
            since_best += 1
            if since_best > config.patience:
                break

    history["best_epoch"] = best_epoch
    history["best_val_mae"] = best_val
    return ModelState(
        config=config,
        network=graph,
        norm_mean=mean,
        norm_std=std,
        params=best_params,
        trained=True,
        unit=train_panel.unit,
        history=history,
    )


def predict(
    state: ModelState,
    panel: SpeedPanel,
    starts: np.ndarray | None = None,
    enforcement: dict[str, str] | None = None,
    head_average: bool = False,
    batch_size: int = 64,
) -> PredictionSet:
    """12-step predictions for every window, de-normalized to panel units.

    ``enforcement`` maps target road id to reference road id; the targets'
    attention rows are rebuilt from the reference's rows in every window.
    """
    if not state.trained:
        raise ValueError("model state is untrained")
    if starts is None:
        starts = build_windows(panel, state.config)
    if len(starts) == 0:
        raise ValueError("no 24-step windows fit the panel")
    enf_idx = None
    if enforcement:
        road_idx = state.network.index
        for r in list(enforcement) + list(enforcement.values()):
            if r not in road_idx:
                raise ValueError(f"road {r} absent from the trained graph")
        enf_idx = {road_idx[t]: road_idx[r] for t, r in enforcement.items()}

    model = state.build_module()
    feat = _Featurizer(panel, state)
    adj_mask = state.adj_mask()
    chunks = []
    with torch.no_grad():
        for lo in range(0, len(starts), batch_size):
            batch = np.asarray(starts[lo : lo + batch_size])
            z_pred, _, _ = _decode_windows(model, feat, adj_mask, batch, enf_idx, head_average)
            chunks.append(z_pred * state.norm_std[None, :, None] + state.norm_mean[None, :, None])
    values = np.concatenate(chunks, axis=0).transpose(0, 2, 1)  # (W, 12, N)
    return PredictionSet(
        roads=panel.roads,
        output_start=np.asarray(starts) + 12,
        values=values,
        unit=panel.unit,
    )


def historical_average_predictions(
    train_panel: SpeedPanel, eval_panel: SpeedPanel, starts: np.ndarray | None = None
) -> PredictionSet:
    """Baseline: predict the training-range (day-of-week, slot) mean speed."""
    if train_panel.roads != eval_panel.roads:
        raise ValueError("panels must share the road set")
    if starts is None:
        starts = build_windows(eval_panel)
    n = train_panel.num_roads
    table = np.zeros((7 * SLOTS_PER_DAY, n))
    steps = np.arange(train_panel.num_steps)
    slot0, dow0 = train_panel.slot_at(0), train_panel.dow_at(0)
    abs_slot = slot0 + steps
    bucket = ((dow0 + abs_slot // SLOTS_PER_DAY) % 7) * SLOTS_PER_DAY + abs_slot % SLOTS_PER_DAY
    for j in range(n):
        sums = np.bincount(bucket, weights=train_panel.values[:, j], minlength=7 * SLOTS_PER_DAY)
        counts = np.bincount(bucket, minlength=7 * SLOTS_PER_DAY)
        slot_sums = np.bincount(bucket % SLOTS_PER_DAY, weights=train_panel.values[:, j], minlength=SLOTS_PER_DAY)
        slot_counts = np.bincount(bucket % SLOTS_PER_DAY, minlength=SLOTS_PER_DAY)
        global_mean = train_panel.values[:, j].mean()
        slot_mean = np.where(slot_counts > 0, slot_sums / np.maximum(slot_counts, 1), global_mean)
        table[:, j] = np.where(
            counts > 0, sums / np.maximum(counts, 1), np.tile(slot_mean, 7)[: len(counts)]
        )

    e_steps = np.arange(eval_panel.num_steps)
    e_abs = eval_panel.slot_at(0) + e_steps
    e_bucket = ((eval_panel.dow_at(0) + e_abs // SLOTS_PER_DAY) % 7) * SLOTS_PER_DAY + e_abs % SLOTS_PER_DAY
    out_idx = np.asarray(starts)[:, None] + 12 + np.arange(12)[None, :]
    values = table[e_bucket[out_idx]]  # (W, 12, N)
    return PredictionSet(
        roads=eval_panel.roads,
        output_start=np.asarray(starts) + 12,
        values=values,
        unit=eval_panel.unit,
    )


def historical_average_mae(
    train_panel: SpeedPanel, eval_panel: SpeedPanel, horizon: int = 15
) -> float:
    """Baseline MAE at one horizon, via the error-analytics module."""
    from ..errors import compute_errors

    preds = historical_average_predictions(train_panel, eval_panel)
    table = compute_errors(preds, eval_panel, horizons=(horizon,))
    return float(np.nanmean(table.mae[:, 0]))
