"""CNN-GRU and dense denoising autoencoders on top of the autodiff engine.

The CNN-GRU encoder stacks three (conv -> leaky-ReLU -> clamped max-pool)
levels, collapses everything but the temporal axis, and runs a GRU whose
final hidden state is the latent vector.  The decoder tiles the latent
across the collapsed temporal axis, runs a second GRU, and mirrors the
convolution stack with upsample + conv pairs that restore the input shape
exactly.  Kernels and pools are clamped per level to the current spatial
extent, so the 4x4 / 5x5 defaults stay usable on inputs as narrow as p x 1.

The dense denoising autoencoder is the flat-input baseline: an
input -> 500 -> 500 -> 2000 -> latent encoder with a mirrored decoder, with
additive Gaussian input corruption (scaled by per-feature std) during
training only.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError, FormatError, ShapeError
from . import tensor as T

_LRELU_ALPHA_DAE = 0.1
_MAGIC = b"TPAE"
_VERSION = 1


@dataclass(frozen=True)
class CnnGruConfig:
    filters: tuple = (16, 32, 64)
    kernel: tuple = (4, 4)
    pool: tuple = (5, 5)
    latent_dim: int = 10
    lrelu_alpha: float = 0.1
    lr: float = 0.001
    batch_size: int = 256
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(int(f) for f in self.filters))
        object.__setattr__(self, "kernel", tuple(int(k) for k in self.kernel))
        object.__setattr__(self, "pool", tuple(int(p) for p in self.pool))
        values = self.filters + self.kernel + self.pool + (
            self.latent_dim, self.batch_size, self.epochs,
        )
        if any(v < 1 for v in values) or self.lr <= 0 or self.lrelu_alpha < 0:
            raise ConfigError("CnnGruConfig values must be positive")


@dataclass(frozen=True)
class DenseDaeConfig:
    hidden_dims: tuple = (500, 500, 2000)
    latent_dim: int = 5
    noise_std: float = 0.2
    lr: float = 0.001
    batch_size: int = 256
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if any(h < 1 for h in self.hidden_dims) or self.latent_dim < 1:
            raise ConfigError("layer widths must be positive")
        if self.noise_std < 0 or self.lr <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("bad DenseDaeConfig values")


@dataclass
class ModelParams:
    """Named parameter set plus the architecture plan needed to run it."""

    architecture: str  # "cnn_gru" | "dense_dae"
    params: dict
    config: object
    meta: dict

    def gru_params(self, prefix: str) -> T.GruParams:
        return T.GruParams(**{
            name: self.params[f"{prefix}.{name}"]
            for name in ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")
        })


def _register_gru(params, prefix, rng, input_dim, state_dim):
    gp = T.init_gru_params(rng, input_dim, state_dim)
    for name, t in gp.tensors().items():
        params[f"{prefix}.{name}"] = t


def build_cnn_gru(input_shape, cfg: CnnGruConfig | None = None) -> ModelParams:
    """Build the symmetric CNN-GRU autoencoder for (rows, cols, channels) inputs.

    Per level the kernel and pool extents are clamped to the running spatial
    shape; the resulting effective sizes are recorded in ``meta['plan']``.
    """
    cfg = cfg or CnnGruConfig()
    if len(input_shape) == 2:
        rows, cols = (int(s) for s in input_shape)
        channels = 1
    else:
        rows, cols, channels = (int(s) for s in input_shape)
    if rows < 1 or cols < 1 or channels < 1:
        raise ConfigError(f"bad input shape {input_shape}")

    rng = np.random.default_rng(cfg.seed)
    params = {}
    plan = []
    h, w, c = rows, cols, channels
    for li, filters in enumerate(cfg.filters):
        kh, kw = min(cfg.kernel[0], h), min(cfg.kernel[1], w)
        ph, pw = min(cfg.pool[0], h), min(cfg.pool[1], w)
        out_h, out_w = -(-h // ph), -(-w // pw)
        if out_h < 1 or out_w < 1:
            raise ConfigError(f"encoder level {li}: pooling collapses the input")
        plan.append({
            "in_ch": c, "filters": filters, "kernel": (kh, kw),
            "pool": (ph, pw), "prepool": (h, w),
        })
        fan_in = c * kh * kw
        fan_out = filters * kh * kw
        params[f"enc{li}.kernel"] = T.Tensor(
            T.glorot_uniform(rng, (filters, c, kh, kw), fan_in, fan_out),
            requires_grad=True,
        )
        params[f"enc{li}.bias"] = T.Tensor(np.zeros(filters), requires_grad=True)
        c, h, w = filters, out_h, out_w

    seq_dim = c * w  # everything but the temporal (row) axis collapses
    _register_gru(params, "enc_gru", rng, seq_dim, cfg.latent_dim)
    _register_gru(params, "dec_gru", rng, cfg.latent_dim, seq_dim)

    for li in reversed(range(len(cfg.filters))):
        level = plan[li]
        out_ch = plan[li - 1]["filters"] if li > 0 else channels
        kh, kw = level["kernel"]
        fan_in = level["filters"] * kh * kw
        fan_out = out_ch * kh * kw
        params[f"dec{li}.kernel"] = T.Tensor(
            T.glorot_uniform(rng, (out_ch, level["filters"], kh, kw), fan_in, fan_out),
            requires_grad=True,
        )
        params[f"dec{li}.bias"] = T.Tensor(np.zeros(out_ch), requires_grad=True)

    meta = {
        "input_shape": (rows, cols, channels),
        "plan": plan,
        "seq_len": h,
        "seq_dim": seq_dim,
        "final_ch": c,
        "final_w": w,
    }
    return ModelParams("cnn_gru", params, cfg, meta)


def build_dense_dae(input_dim: int, cfg: DenseDaeConfig | None = None) -> ModelParams:
    """Dense denoising autoencoder with a mirrored decoder."""
    cfg = cfg or DenseDaeConfig()
    input_dim = int(input_dim)
    if input_dim < 1:
        raise ConfigError(f"input_dim must be >= 1, got {input_dim}")
    rng = np.random.default_rng(cfg.seed)
    params = {}
    dims = (input_dim,) + cfg.hidden_dims + (cfg.latent_dim,)
    for li, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        params[f"enc{li}.weight"] = T.Tensor(
            T.glorot_uniform(rng, (d_in, d_out), d_in, d_out), requires_grad=True
        )
        params[f"enc{li}.bias"] = T.Tensor(np.zeros(d_out), requires_grad=True)
    rev = dims[::-1]
    for li, (d_in, d_out) in enumerate(zip(rev[:-1], rev[1:])):
        params[f"dec{li}.weight"] = T.Tensor(
            T.glorot_uniform(rng, (d_in, d_out), d_in, d_out), requires_grad=True
        )
        params[f"dec{li}.bias"] = T.Tensor(np.zeros(d_out), requires_grad=True)
    meta = {"input_dim": input_dim, "n_layers": len(dims) - 1}
    return ModelParams("dense_dae", params, cfg, meta)


def _cnn_gru_encode_t(model: ModelParams, x: T.Tensor) -> T.Tensor:
    cfg = model.config
    out = x
    for li, level in enumerate(model.meta["plan"]):
        out = T.conv2d(out, model.params[f"enc{li}.kernel"], model.params[f"enc{li}.bias"])
        out = T.leaky_relu(out, cfg.lrelu_alpha)
        out = T.maxpool2d(out, level["pool"])
    batch = out.shape[0]
    seq_len, seq_dim = model.meta["seq_len"], model.meta["seq_dim"]
    out = T.transpose(out, (0, 2, 1, 3))               # [B, H, C, W]
    out = T.reshape(out, (batch, seq_len, seq_dim))    # temporal axis kept
    return T.gru(out, model.gru_params("enc_gru"))


def _cnn_gru_decode_t(model: ModelParams, z: T.Tensor) -> T.Tensor:
    cfg = model.config
    plan = model.meta["plan"]
    seq_len, seq_dim = model.meta["seq_len"], model.meta["seq_dim"]
    batch = z.shape[0]
    out = T.repeat_time(z, seq_len)
    out = T.gru(out, model.gru_params("dec_gru"), return_sequences=True)
    out = T.reshape(out, (batch, seq_len, model.meta["final_ch"], model.meta["final_w"]))
    out = T.transpose(out, (0, 2, 1, 3))               # [B, C, H, W]
    for li in reversed(range(len(plan))):
        level = plan[li]
        out = T.upsample2d(out, level["pool"], target=level["prepool"])
        out = T.conv2d(out, model.params[f"dec{li}.kernel"], model.params[f"dec{li}.bias"])
        if li > 0:
            out = T.leaky_relu(out, cfg.lrelu_alpha)
    return out


def _dense_encode_t(model: ModelParams, x: T.Tensor) -> T.Tensor:
    n_layers = model.meta["n_layers"]
    out = x
    for li in range(n_layers):
        out = T.add(T.matmul(out, model.params[f"enc{li}.weight"]),
                    model.params[f"enc{li}.bias"])
        if li < n_layers - 1:
            out = T.leaky_relu(out, _LRELU_ALPHA_DAE)
    return out


def _dense_decode_t(model: ModelParams, z: T.Tensor) -> T.Tensor:
    n_layers = model.meta["n_layers"]
    out = z
    for li in range(n_layers):
        out = T.add(T.matmul(out, model.params[f"dec{li}.weight"]),
                    model.params[f"dec{li}.bias"])
        if li < n_layers - 1:
            out = T.leaky_relu(out, _LRELU_ALPHA_DAE)
    return out


def _to_nchw(model: ModelParams, samples: np.ndarray) -> np.ndarray:
    rows, cols, channels = model.meta["input_shape"]
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 3 and channels == 1 and x.shape[1:] == (rows, cols):
        x = x[:, :, :, None]
    if x.ndim != 4 or x.shape[1:] != (rows, cols, channels):
        raise ShapeError(
            f"samples of shape {x.shape} do not match model input {(rows, cols, channels)}"
        )
    return np.transpose(x, (0, 3, 1, 2))


def _forward_loss(model: ModelParams, batch_in: np.ndarray, target: np.ndarray) -> T.Tensor:
    x = T.Tensor(batch_in)
    if model.architecture == "cnn_gru":
        z = _cnn_gru_encode_t(model, x)
        recon = _cnn_gru_decode_t(model, z)
    else:
        z = _dense_encode_t(model, x)
        recon = _dense_decode_t(model, z)
    return T.mse_loss(recon, T.Tensor(target))


def train(model: ModelParams, data, cfg=None):
    """Train in place with Adam; returns (model, per-epoch mean loss list).

    ``data`` is (N, rows, cols[, channels]) for the CNN-GRU model and (N, D)
    for the dense one.  The batch size is clamped to N.  The whole
    trajectory is a pure function of (initial params, data, config seed).
    """
    cfg = cfg or model.config
    if model.architecture == "cnn_gru":
        x_all = _to_nchw(model, data)
    else:
        x_all = np.asarray(data, dtype=np.float64)
        if x_all.ndim != 2 or x_all.shape[1] != model.meta["input_dim"]:
            raise ShapeError(
                f"data of shape {x_all.shape} does not match input_dim {model.meta['input_dim']}"
            )
    n = x_all.shape[0]
    batch_size = min(cfg.batch_size, n)
    rng = np.random.default_rng([cfg.seed, 1])
    state = T.AdamState.for_params(model.params, lr=cfg.lr)

    corrupt = model.architecture == "dense_dae" and cfg.noise_std > 0
    if corrupt:
        feature_std = x_all.std(axis=0)

    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            target = x_all[idx]
            batch_in = target
            if corrupt:
                noise = rng.normal(0.0, 1.0, target.shape) * (cfg.noise_std * feature_std)
                batch_in = target + noise
            for p in model.params.values():
                p.zero_grad()
            loss = _forward_loss(model, batch_in, target)
            loss.backward()
            grads = {name: p.grad for name, p in model.params.items()}
            T.adam_step(model.params, grads, state)
            total += float(loss.data) * idx.size
        mean_loss = total / n
        if not np.isfinite(mean_loss):
            raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
        history.append(mean_loss)
    return model, history


def encode(model: ModelParams, samples, batch_size: int = 512) -> np.ndarray:
    """Deterministic latent codes, N x latent_dim; no corruption noise."""
    if model.architecture == "cnn_gru":
        x_all = _to_nchw(model, samples)
    else:
        x_all = np.asarray(samples, dtype=np.float64)
        if x_all.ndim != 2 or x_all.shape[1] != model.meta["input_dim"]:
            raise ShapeError(
                f"samples of shape {x_all.shape} do not match input_dim {model.meta['input_dim']}"
            )
    outs = []
    for start in range(0, x_all.shape[0], batch_size):
        x = T.Tensor(x_all[start:start + batch_size])
        if model.architecture == "cnn_gru":
            outs.append(_cnn_gru_encode_t(model, x).data)
        else:
            outs.append(_dense_encode_t(model, x).data)
    return np.concatenate(outs, axis=0)


def reconstruct(model: ModelParams, samples) -> np.ndarray:
    """Full encode/decode pass, returned in the input layout."""
    if model.architecture == "cnn_gru":
        squeeze = np.asarray(samples).ndim == 3
        x = T.Tensor(_to_nchw(model, samples))
        out = _cnn_gru_decode_t(model, _cnn_gru_encode_t(model, x)).data
        out = np.transpose(out, (0, 2, 3, 1))
        return out[:, :, :, 0] if squeeze else out
    x = T.Tensor(np.asarray(samples, dtype=np.float64))
    return _dense_decode_t(model, _dense_encode_t(model, x)).data


_CONFIG_TYPES = {"cnn_gru": CnnGruConfig, "dense_dae": DenseDaeConfig}


def save_model(model: ModelParams, path) -> None:
    """Versioned checkpoint: JSON header plus named float64 little-endian blobs."""
    header = {
        "architecture": model.architecture,
        "config": asdict(model.config),
        "meta": model.meta,
        "params": [
            {"name": name, "shape": list(t.data.shape)}
            for name, t in model.params.items()
        ],
    }
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(blob)))
        fh.write(blob)
        for t in model.params.values():
            fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def load_model(path) -> ModelParams:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != _MAGIC:
        raise FormatError(f"{path}: not a model checkpoint")
    version, blob_len = struct.unpack_from("<II", raw, 4)
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[12:12 + blob_len].decode())
    cfg_cls = _CONFIG_TYPES[header["architecture"]]
    cfg_kw = dict(header["config"])
    for key in ("filters", "kernel", "pool", "hidden_dims"):
        if key in cfg_kw:
            cfg_kw[key] = tuple(cfg_kw[key])
    cfg = cfg_cls(**cfg_kw)
    meta = header["meta"]
    if "input_shape" in meta:
        meta["input_shape"] = tuple(meta["input_shape"])
    for level in meta.get("plan", []):
        for key in ("kernel", "pool", "prepool"):
            level[key] = tuple(level[key])
    params = {}
    off = 12 + blob_len
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape)
        off += 8 * count
        params[entry["name"]] = T.Tensor(arr.copy(), requires_grad=True)
    return ModelParams(header["architecture"], params, cfg, meta)


def write_loss_history(history, path) -> None:
    """Loss-history CSV with one ``epoch,mean_loss`` row per epoch."""
    with open(path, "w") as fh:
        fh.write("epoch,mean_loss\n")
        for epoch, loss in enumerate(history):
            fh.write(f"{epoch},{loss!r}\n")
