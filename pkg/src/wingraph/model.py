"""Toy windowed segmentation model.

Structure: a 1x1 stem lifts the 3-channel image to C feature channels;
each stage runs a few plain window self-attention blocks and, when
enabled, one graph relation block; a boundary-attention gate (when
enabled) reweighs the final features; a 1x1 classifier produces per-pixel
logits.  Spatial size never changes, no convolution carries a bias, and
every weight is drawn deterministically from the config seed.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .boundary import BAParams, ba_apply, ba_param_count
from .graph import GraphConfig, _VARIANTS
from .relation import (
    FusionType,
    GlobalRelationParams,
    LocalRelationParams,
    graph_transformer_block,
    gt_param_count,
)
from .tensor import (
    Parameter,
    Tensor,
    add,
    conv2d,
    matmul,
    reshape,
    scalar_mul,
    softmax_rows,
    stack,
    take,
    transpose,
)
from .windows import WindowGrid, merge, partition

DATASET_KINDS = ("stripes", "blobs", "checker")


class ConfigError(ValueError):
    """A segmenter configuration violates a named constraint."""


@dataclass
class SegmenterConfig:
    """Everything needed to build, train and evaluate one model.

    ``stages`` lists (attention blocks, M, N) per stage; M x N is that
    stage's window grid.  The enable flags switch the graph block and the
    boundary gate independently so ablation grids can toggle them.
    """

    C: int = 16
    H: int = 8
    W: int = 8
    stages: tuple[tuple[int, int, int], ...] = ((2, 2, 2), (2, 2, 2))
    num_classes: int = 3
    fusion: FusionType = FusionType.GR_THEN_LR
    r_gr: int = 16
    r_lr: int = 16
    r_ba: int = 16
    theta_coefficient: float = 0.25
    graph_depth: int = 1
    relation_variant: str = "softmax"
    enable_gt: bool = True
    enable_ba: bool = True
    seed: int = 0
    dataset: str = "stripes"
    dataset_size: int = 4
    steps: int = 500
    lr: float = 0.2

    def validate(self) -> None:
        if self.C < 1:
            raise ConfigError(f"C must be positive, got {self.C}")
        if self.H < 1 or self.W < 1:
            raise ConfigError(f"H and W must be positive, got {self.H}x{self.W}")
        if not self.stages:
            raise ConfigError("stages must not be empty")
        for idx, stage in enumerate(self.stages):
            if len(stage) != 3:
                raise ConfigError(f"stage {idx} must be (blocks, M, N), got {stage!r}")
            blocks, m, n = stage
            if blocks < 1:
                raise ConfigError(f"stage {idx}: block count must be >= 1, got {blocks}")
            if m < 1 or self.H % m != 0:
                raise ConfigError(f"stage {idx}: M={m} does not divide H={self.H}")
            if n < 1 or self.W % n != 0:
                raise ConfigError(f"stage {idx}: N={n} does not divide W={self.W}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if not isinstance(self.fusion, FusionType):
            raise ConfigError(f"fusion must be a FusionType, got {self.fusion!r}")
        if self.enable_gt:
            if self.r_gr < 1 or self.C % self.r_gr != 0:
                raise ConfigError(f"r_gr={self.r_gr} does not divide C={self.C}")
            if self.r_lr < 1 or self.C % self.r_lr != 0:
                raise ConfigError(f"r_lr={self.r_lr} does not divide C={self.C}")
        if self.enable_ba and (self.r_ba < 1 or self.C % self.r_ba != 0):
            raise ConfigError(f"r_ba={self.r_ba} does not divide C={self.C}")
        if self.graph_depth < 1:
            raise ConfigError(f"graph_depth must be >= 1, got {self.graph_depth}")
        if not np.isfinite(self.theta_coefficient):
            raise ConfigError(f"theta_coefficient must be finite, got {self.theta_coefficient}")
        if self.relation_variant not in _VARIANTS:
            raise ConfigError(f"relation_variant must be one of {_VARIANTS}, got {self.relation_variant!r}")
        if self.dataset not in DATASET_KINDS:
            raise ConfigError(f"dataset must be one of {DATASET_KINDS}, got {self.dataset!r}")
        if self.dataset_size < 1:
            raise ConfigError(f"dataset_size must be >= 1, got {self.dataset_size}")
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")

    def graph_config(self) -> GraphConfig:
        return GraphConfig(variant=self.relation_variant,
                           theta_coefficient=self.theta_coefficient)


class WindowAttention:
    """Plain scaled dot-product self-attention inside each window."""

    def __init__(self, c: int, rng: np.random.Generator, prefix: str):
        self.c = c
        scale = 1.0 / c
        self.wq = Parameter(rng.normal(0.0, scale, (c, c)), f"{prefix}.wq")
        self.wk = Parameter(rng.normal(0.0, scale, (c, c)), f"{prefix}.wk")
        self.wv = Parameter(rng.normal(0.0, scale, (c, c)), f"{prefix}.wv")

    def forward(self, x: Tensor, grid: WindowGrid) -> Tensor:
        wins = partition(x, grid)
        pixels = grid.h_w * grid.w_w
        inv_sqrt_c = self.c ** -0.5
        outs = []
        for i in range(grid.num_nodes):
            tokens = transpose(reshape(take(wins, i), (self.c, pixels)))
            q = matmul(tokens, self.wq)
            k = matmul(tokens, self.wk)
            v = matmul(tokens, self.wv)
            att = softmax_rows(scalar_mul(matmul(q, transpose(k)), inv_sqrt_c))
            outs.append(reshape(transpose(matmul(att, v)), (self.c, grid.h_w, grid.w_w)))
        return add(x, merge(stack(outs), grid))

    def named_parameters(self) -> list[Parameter]:
        return [self.wq, self.wk, self.wv]


@dataclass
class _Stage:
    grid: WindowGrid
    attention: list[WindowAttention]
    gr: GlobalRelationParams | None = None
    lr: LocalRelationParams | None = None


class Segmenter:
    """The assembled model; build via :func:`build_model`."""

    def __init__(self, config: SegmenterConfig):
        config.validate()
        self.config = config
        rng = np.random.default_rng(config.seed)
        c = config.C

        self.stem = Parameter(rng.normal(0.0, 3 ** -0.5, (c, 3, 1, 1)), "stem")
        self.stages: list[_Stage] = []
        for s, (blocks, m, n) in enumerate(config.stages):
            grid = WindowGrid(c, config.H, config.W, m, n)
            attn = [WindowAttention(c, rng, f"stage{s}.attn{b}") for b in range(blocks)]
            stage = _Stage(grid, attn)
            if config.enable_gt:
                stage.gr = GlobalRelationParams.create(c, grid, config.r_gr, config.graph_depth,
                                                       rng, f"stage{s}.gt.gr")
                stage.lr = LocalRelationParams.create(c, config.r_lr, config.graph_depth,
                                                      rng, f"stage{s}.gt.lr")
            self.stages.append(stage)
        self.ba = BAParams.create(c, config.r_ba, rng, "ba") if config.enable_ba else None
        self.head = Parameter(rng.normal(0.0, c ** -0.5, (config.num_classes, c, 1, 1)), "head")

        self._params: "OrderedDict[str, Parameter]" = OrderedDict()
        for p in self._collect_parameters():
            if p.name in self._params:
                raise ConfigError(f"duplicate parameter name {p.name!r}")
            self._params[p.name] = p

    def _collect_parameters(self) -> list[Parameter]:
        params = [self.stem]
        for stage in self.stages:
            for block in stage.attention:
                params.extend(block.named_parameters())
            if stage.gr is not None:
                params.extend(stage.gr.named_parameters())
            if stage.lr is not None:
                params.extend(stage.lr.named_parameters())
        if self.ba is not None:
            params.extend(self.ba.named_parameters())
        params.append(self.head)
        return params

    def parameters(self) -> "OrderedDict[str, Parameter]":
        return self._params

    def param_count(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def forward(self, image: Tensor) -> Tensor:
        """Map a [3, H, W] image to [num_classes, H, W] logits."""
        cfg = self.config
        if image.shape != (3, cfg.H, cfg.W):
            raise ValueError(f"forward expects [3,{cfg.H},{cfg.W}] images, got {list(image.shape)}")
        h = conv2d(image, self.stem)
        gcfg = cfg.graph_config()
        for stage in self.stages:
            for block in stage.attention:
                h = block.forward(h, stage.grid)
            if stage.gr is not None:
                h = graph_transformer_block(h, stage.grid, stage.gr, stage.lr, cfg.fusion, gcfg)
        if self.ba is not None:
            h = ba_apply(h, self.ba)
        return conv2d(h, self.head)

    def predict(self, image: Tensor) -> np.ndarray:
        """Hard per-pixel class decisions."""
        return self.forward(image).data.argmax(axis=0)


def build_model(config: SegmenterConfig) -> Segmenter:
    """Validate the config and deterministically initialise a model."""
    return Segmenter(config)


def attention_param_count(c: int) -> int:
    return 3 * c * c


def baseline_param_count(config: SegmenterConfig) -> int:
    """Closed form with the graph block and boundary gate disabled:
    stem (3C) + 3C^2 per attention block + classifier (C * num_classes)."""
    total = 3 * config.C
    for blocks, _, _ in config.stages:
        total += blocks * attention_param_count(config.C)
    total += config.C * config.num_classes
    return total


def model_param_count(config: SegmenterConfig) -> int:
    """Closed-form count for any enable-flag combination."""
    total = baseline_param_count(config)
    if config.enable_gt:
        for _, m, n in config.stages:
            grid = WindowGrid(config.C, config.H, config.W, m, n)
            total += gt_param_count(config.C, grid, config.r_gr, config.r_lr, config.graph_depth)
    if config.enable_ba:
        total += ba_param_count(config.C, config.r_ba)
    return total
