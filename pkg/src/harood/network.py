"""Two-stage network: per-variant encoder-decoder pairs, an embedding head
on the concatenated reconstructions, and a small activity classifier.

Branch weights are shared: the same encoder/decoder/head instances process
anchor, positive and negative samples. Checkpoints use a self-describing
binary format (ordered named float32 tensors with a shape table) so weights
survive round trips bit-exactly without pickling.
"""

from __future__ import annotations

import struct
from collections import OrderedDict

import numpy as np
import torch
from torch import nn

from .config import ModelConfig

MACRO, MICRO = "macro", "micro"


class Encoder(nn.Module):
    """Strided conv stack; the latent is the final (linear) feature map.

    GELU between stages keeps every loss C2-smooth, which the central
    finite-difference gradient audit relies on.
    """

    def __init__(self, channels=(8, 16, 32), in_channels=1, strides=None, kernel_size=3):
        super().__init__()
        strides = strides or (2,) * len(channels)
        if len(strides) != len(channels):
            raise ValueError("strides must match channels")
        layers = []
        prev = in_channels
        for i, (ch, st) in enumerate(zip(channels, strides)):
            layers.append(
                nn.Conv2d(prev, ch, kernel_size, stride=st, padding=kernel_size // 2)
            )
            if i < len(channels) - 1:
                layers.append(nn.GELU())
            prev = ch
        self.net = nn.Sequential(*layers)

    def forward(self, x):
        return self.net(x)


class Decoder(nn.Module):
    """Mirror of the encoder: upsample + conv per stage, linear final layer."""

    def __init__(self, channels=(8, 16, 32), out_channels=1, strides=None, kernel_size=3):
        super().__init__()
        strides = strides or (2,) * len(channels)
        rev_ch = list(channels[::-1])
        rev_st = list(strides[::-1])
        layers = []
        prev = rev_ch[0]
        targets = rev_ch[1:] + [out_channels]
        for i, (ch, st) in enumerate(zip(targets, rev_st)):
            if st > 1:
                layers.append(nn.Upsample(scale_factor=st, mode="nearest"))
            layers.append(
                nn.Conv2d(prev, ch, kernel_size, stride=1, padding=kernel_size // 2)
            )
            if i < len(targets) - 1:
                layers.append(nn.GELU())
            prev = ch
        self.net = nn.Sequential(*layers)

    def forward(self, z):
        return self.net(z)


class EmbeddingHead(nn.Module):
    """Conv block over the 2-channel reconstruction stack -> 1-D embedding."""

    def __init__(self, channels=(8, 16), embed_dim=64, in_channels=2):
        super().__init__()
        layers = []
        prev = in_channels
        for ch in channels:
            layers.append(nn.Conv2d(prev, ch, 3, stride=2, padding=1))
            layers.append(nn.GELU())
            prev = ch
        self.conv = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.fc = nn.Linear(prev, embed_dim)

    def forward(self, x):
        h = self.pool(self.conv(x)).flatten(1)
        return self.fc(h)


class ActivityClassifier(nn.Module):
    """Stage-2 head: embedding -> 3 activity logits."""

    def __init__(self, embed_dim=64, hidden=32, n_classes=3):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(embed_dim, hidden), nn.GELU(), nn.Linear(hidden, n_classes)
        )

    def forward(self, e):
        return self.net(e)


class HaroodNet(nn.Module):
    """Stage-1 network: macro/micro encoder-decoder pairs + embedding head."""

    def __init__(self, config: ModelConfig | None = None):
        super().__init__()
        config = config or ModelConfig()
        self.config = config
        self.enc_macro = Encoder(config.encoder_channels)
        self.dec_macro = Decoder(config.encoder_channels)
        self.enc_micro = Encoder(config.encoder_channels)
        self.dec_micro = Decoder(config.encoder_channels)
        self.head = EmbeddingHead(config.head_channels, config.embed_dim)

    def _pair(self, variant: str):
        if variant == MACRO:
            return self.enc_macro, self.dec_macro
        if variant == MICRO:
            return self.enc_micro, self.dec_micro
        raise ValueError(f"variant must be 'macro' or 'micro', got {variant!r}")

    def encode(self, x, variant: str):
        enc, _ = self._pair(variant)
        return enc(x)

    def reconstruct(self, x, variant: str):
        enc, dec = self._pair(variant)
        out = dec(enc(x))
        if out.shape != x.shape:
            raise ValueError(
                f"decoder produced {tuple(out.shape)} for input {tuple(x.shape)}"
            )
        return out

    def embed_pair(self, x_macro, x_micro):
        """Reconstruct both variants and embed their concatenation.

        Returns (recon_macro, recon_micro, embedding).
        """
        rec_ma = self.reconstruct(x_macro, MACRO)
        rec_mi = self.reconstruct(x_micro, MICRO)
        emb = self.head(torch.cat([rec_ma, rec_mi], dim=1))
        return rec_ma, rec_mi, emb

    def embed(self, x_macro, x_micro):
        return self.embed_pair(x_macro, x_micro)[2]

    def contrastive_embed(self, x_macro, x_micro):
        """Concatenated flattened encoder latents; touches encoders only."""
        z_ma = self.encode(x_macro, MACRO).flatten(1)
        z_mi = self.encode(x_micro, MICRO).flatten(1)
        return torch.cat([z_ma, z_mi], dim=1)

    def parameter_groups(self) -> dict[str, list[str]]:
        """Parameter names by role: encoders, decoders, embedding head."""
        groups = {"encoder": [], "decoder": [], "head": []}
        for name, _ in self.named_parameters():
            if name.startswith("enc_"):
                groups["encoder"].append(name)
            elif name.startswith("dec_"):
                groups["decoder"].append(name)
            else:
                groups["head"].append(name)
        return groups


def loss_gradients(loss: torch.Tensor, module: nn.Module) -> "OrderedDict[str, torch.Tensor]":
    """Gradients of a scalar loss for every parameter of a module.

    Parameters outside the loss's graph get exact-zero gradients, which makes
    the routing of each loss term directly assertable.
    """
    names, params = zip(*module.named_parameters())
    grads = torch.autograd.grad(loss, params, allow_unused=True, retain_graph=True)
    out = OrderedDict()
    for name, param, grad in zip(names, params, grads):
        out[name] = torch.zeros_like(param) if grad is None else grad
    return out


# ---------------------------------------------------------------------------
# Checkpoint format: magic, version, tensor count, then per tensor a
# length-prefixed name, a shape table and little-endian float32 data.

CHECKPOINT_MAGIC = b"HRWT"
CHECKPOINT_VERSION = 1


class CheckpointFormatError(Exception):
    pass


def save_checkpoint(path, tensors: "OrderedDict[str, np.ndarray] | dict") -> None:
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(tensors)))
        for name, tensor in tensors.items():
            arr = np.asarray(
                tensor.detach().cpu().numpy() if isinstance(tensor, torch.Tensor) else tensor,
                dtype="<f4",
            )
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr).tobytes())


def load_checkpoint(path) -> "OrderedDict[str, np.ndarray]":
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError("not a checkpoint file (bad magic)")
    version, count = struct.unpack_from("<II", data, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    pos = 12
    tensors: OrderedDict[str, np.ndarray] = OrderedDict()
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos : pos + name_len].decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<B", data, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", data, pos)
            pos += 4 * ndim
            n_items = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(data, dtype="<f4", count=n_items, offset=pos)
            pos += 4 * n_items
            tensors[name] = arr.reshape(shape).copy()
    except (struct.error, ValueError) as exc:
        raise CheckpointFormatError(f"truncated or corrupt checkpoint: {exc}") from None
    if pos != len(data):
        raise CheckpointFormatError("trailing bytes after last tensor")
    return tensors


def module_tensors(module: nn.Module, prefix: str = "") -> "OrderedDict[str, np.ndarray]":
    out = OrderedDict()
    for name, param in module.state_dict().items():
        out[prefix + name] = param.detach().cpu().numpy().astype(np.float32)
    return out


def load_module_tensors(module: nn.Module, tensors: dict, prefix: str = "") -> None:
    state = OrderedDict()
    for name, param in module.state_dict().items():
        key = prefix + name
        if key not in tensors:
            raise CheckpointFormatError(f"checkpoint missing tensor {key!r}")
        arr = tensors[key]
        if tuple(arr.shape) != tuple(param.shape):
            raise CheckpointFormatError(
                f"tensor {key!r} has shape {arr.shape}, expected {tuple(param.shape)}"
            )
        state[name] = torch.from_numpy(np.ascontiguousarray(arr))
    module.load_state_dict(state)
