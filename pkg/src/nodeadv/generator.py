"""Perturbation generators.

The main generator integrates a learned convolutional vector field with the
explicit Euler method:

    v(0) = x,   v_{k+1} = v_k + h * F(v_k, k * h),   h = T / N,

and emits the displacement G(x) = v(T) - x, which the training loop clips to
the perturbation budget. The field is one stateless 6-layer dilated CNN (time
appended as an extra constant channel) evaluated at every step with shared
weights and normalization statistics. A compact feed-forward conv generator
is included as the conventional GAN baseline.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
import torch.nn as nn

from .core import ImageBatch

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class VectorFieldConfig:
    """Six 3x3 conv layers; dilations [1,3,3,3,3,1] give a receptive field of 29."""

    in_channels: int = 3
    layer_channels: tuple = (32, 64, 64, 64, 32)
    kernel_size: int = 3
    dilations: tuple = (1, 3, 3, 3, 3, 1)

    def __post_init__(self):
        if len(self.dilations) != len(self.layer_channels) + 1:
            raise ValueError(
                f"need one dilation per conv layer: {len(self.layer_channels) + 1} layers, "
                f"got {len(self.dilations)} dilations"
            )
        if self.kernel_size % 2 != 1:
            raise ValueError("kernel size must be odd to preserve spatial dimensions")

    @property
    def out_channels(self) -> int:
        return self.in_channels


@dataclass(frozen=True)
class NodeConfig:
    """Integration horizon T, step count N, and the (fixed) solver choice."""

    horizon_T: float = 0.05
    steps_N: int = 5
    solver: str = "euler"

    def __post_init__(self):
        if self.horizon_T <= 0:
            raise ValueError(f"horizon_T must be positive, got {self.horizon_T}")
        if self.steps_N < 1:
            raise ValueError(f"steps_N must be >= 1, got {self.steps_N}")
        if self.solver != "euler":
            raise ValueError("only the explicit Euler solver is supported")

    @property
    def step_size(self) -> float:
        return self.horizon_T / self.steps_N


def receptive_field(config: VectorFieldConfig) -> int:
    """1 + sum over layers of (kernel - 1) * dilation."""
    k = config.kernel_size
    return 1 + sum((k - 1) * d for d in config.dilations)


class VectorField(nn.Module):
    """dh/dt network: time channel + five Conv-BN-ReLU blocks + one bare conv."""

    def __init__(self, config: VectorFieldConfig):
        super().__init__()
        self.config = config
        chans = [config.in_channels + 1, *config.layer_channels, config.out_channels]
        convs, bns = [], []
        for i, dil in enumerate(config.dilations):
            pad = dil * (config.kernel_size - 1) // 2
            convs.append(nn.Conv2d(chans[i], chans[i + 1], config.kernel_size, padding=pad, dilation=dil))
            if i < len(config.dilations) - 1:
                bns.append(nn.BatchNorm2d(chans[i + 1]))
        self.convs = nn.ModuleList(convs)
        self.bns = nn.ModuleList(bns)

    def forward(self, h: torch.Tensor, t: float) -> torch.Tensor:
        if h.shape[1] != self.config.in_channels:
            raise ValueError(
                f"field configured for {self.config.in_channels} channels, input has {h.shape[1]}"
            )
        tc = h.new_full((h.shape[0], 1, h.shape[2], h.shape[3]), float(t))
        z = torch.cat([h, tc], dim=1)
        for conv, bn in zip(self.convs[:-1], self.bns):
            z = torch.relu(bn(conv(z)))
        return self.convs[-1](z)


def euler_integrate(field, x0: torch.Tensor, cfg: NodeConfig) -> torch.Tensor:
    """Integrate dv/dt = field(v, t) from 0 to T with N explicit Euler steps."""
    h = cfg.step_size
    v = x0
    for k in range(cfg.steps_N):
        dv = field(v, k * h)
        if not bool(torch.isfinite(dv).all()):
            raise FloatingPointError(f"non-finite vector field output at Euler step {k}")
        v = v + h * dv
    return v


class NodeGenerator(nn.Module):
    """ODE-driven perturbation generator: forward(x) = v(T) - x, unclipped."""

    kind = "node"

    def __init__(self, field_config: VectorFieldConfig, node_config: NodeConfig | None = None):
        super().__init__()
        self.field = VectorField(field_config)
        self.node_config = node_config or NodeConfig()

    @property
    def in_channels(self) -> int:
        return self.field.config.in_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return euler_integrate(self.field, x, self.node_config) - x


def generate_raw(generator: nn.Module, x: ImageBatch) -> torch.Tensor:
    """Unclipped perturbation G(x) for an image batch."""
    return generator(x.data)


class _ResBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.bn1 = nn.BatchNorm2d(channels)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.bn2 = nn.BatchNorm2d(channels)

    def forward(self, z):
        out = torch.relu(self.bn1(self.conv1(z)))
        return z + self.bn2(self.conv2(out))


class ConvGenerator(nn.Module):
    """Conventional encoder-bottleneck-decoder perturbation generator."""

    kind = "conv"

    def __init__(self, in_channels: int, base_channels: int = 16, n_blocks: int = 2):
        super().__init__()
        self.in_channels = in_channels
        self.base_channels = base_channels
        self.n_blocks = n_blocks
        c = base_channels
        self.encoder = nn.Sequential(
            nn.Conv2d(in_channels, c, 3, padding=1), nn.BatchNorm2d(c), nn.ReLU(),
            nn.Conv2d(c, 2 * c, 3, stride=2, padding=1), nn.BatchNorm2d(2 * c), nn.ReLU(),
            nn.Conv2d(2 * c, 4 * c, 3, stride=2, padding=1), nn.BatchNorm2d(4 * c), nn.ReLU(),
        )
        self.blocks = nn.Sequential(*[_ResBlock(4 * c) for _ in range(n_blocks)])
        self.decoder = nn.Sequential(
            nn.ConvTranspose2d(4 * c, 2 * c, 4, stride=2, padding=1), nn.BatchNorm2d(2 * c), nn.ReLU(),
            nn.ConvTranspose2d(2 * c, c, 4, stride=2, padding=1), nn.BatchNorm2d(c), nn.ReLU(),
            nn.Conv2d(c, in_channels, 3, padding=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.blocks(self.encoder(x)))


def save_generator(path, generator: nn.Module, eps_train: float):
    """Serialize a generator (architecture + weights + training budget) losslessly."""
    record = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": generator.kind,
        "eps_train": float(eps_train),
        "state_dict": generator.state_dict(),
    }
    if generator.kind == "node":
        record["field_config"] = asdict(generator.field.config)
        record["node_config"] = asdict(generator.node_config)
    else:
        record["conv_config"] = {
            "in_channels": generator.in_channels,
            "base_channels": generator.base_channels,
            "n_blocks": generator.n_blocks,
        }
    torch.save(record, path)


def load_generator(path) -> tuple[nn.Module, float]:
    """Restore a generator checkpoint; returns (generator, eps_train)."""
    record = torch.load(path, weights_only=False)
    version = record.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported generator checkpoint version: {version}")
    if record["kind"] == "node":
        fc = record["field_config"]
        fc["layer_channels"] = tuple(fc["layer_channels"])
        fc["dilations"] = tuple(fc["dilations"])
        gen = NodeGenerator(VectorFieldConfig(**fc), NodeConfig(**record["node_config"]))
    elif record["kind"] == "conv":
        gen = ConvGenerator(**record["conv_config"])
    else:
        raise ValueError(f"unknown generator kind {record['kind']!r}")
    gen.load_state_dict(record["state_dict"])
    for name, tensor in gen.state_dict().items():
        if tensor.is_floating_point() and not bool(torch.isfinite(tensor).all()):
            raise ValueError(f"non-finite weights in checkpoint parameter {name}")
    gen.eval()
    return gen, record["eps_train"]
