"""Low-rank editors: W_l + U V^T with every base weight frozen.

Direct low-rank editing trains both factors from a small random start. Rewriting fixes
V to key directions whitened by the second moment of layer-(l-1) features and trains
U alone. On conv layers the product acts as a pair of 1x1 convolutions read at the
center tap of the layer's kernel, which equals adding U V^T to that tap.
"""

import logging
from abc import abstractmethod
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg

from ..exceptions.errors import ContractError
from ..network import Conv2D, Dense, Network
from ..shiftlab.datasets import EditDataset, LabeledData
from ..tensorcore import ParamGroup, Tensor, center_tap_sample, conv2d, mse
from .base import BaseEditor
from .enums import EditMethod
from .schema import EditConfig, EditTrace, LowRankUpdate

logger = logging.getLogger(__name__)

FeatureSource = Union[LabeledData, np.ndarray]


def lowrank_forward(layer: Union[Dense, Conv2D], h: Tensor, U: Tensor, V: Tensor) -> Tensor:
    """Output of ``layer`` with U V^T added to its weight, without materializing the sum."""
    base = layer.forward(h)
    if isinstance(layer, Conv2D):
        r = U.shape[1]
        z = center_tap_sample(h, layer.kernel_size, layer.stride, layer.pad)
        z = conv2d(z, V.T.reshape(r, V.shape[0], 1, 1))
        z = conv2d(z, U.reshape(U.shape[0], r, 1, 1))
        return base + z
    return base + (h @ V) @ U.T


def feature_rows(features: np.ndarray) -> np.ndarray:
    """One row per feature vector: per-position channel vectors for [N, C, H, W] maps."""
    if features.ndim == 4:
        return features.transpose(0, 2, 3, 1).reshape(-1, features.shape[1])
    return features.reshape(len(features), -1)


def second_moment(features: np.ndarray, center: bool = False) -> np.ndarray:
    """Uncentered second moment E[k k^T] of the feature rows; covariance when ``center``."""
    rows = feature_rows(features)
    if center:
        rows = rows - rows.mean(axis=0)
    return rows.T @ rows / len(rows)


def pair_keys(features: np.ndarray) -> np.ndarray:
    """Per-sample key vectors; conv positions are averaged."""
    if features.ndim == 4:
        return features.mean(axis=(2, 3))
    return features.reshape(len(features), -1)


def rewrite_directions(sigma: np.ndarray, keys: np.ndarray, rank: int = 1) -> np.ndarray:
    """Unit-norm, mutually orthogonal columns V [n_in, rank] spanning sigma^+ K.

    K holds the mean key k* and the leading ``rank - 1`` principal directions of the
    keys around it. Each column of V has a positive inner product with its key.
    """
    k_star = keys.mean(axis=0)
    if not np.any(k_star):
        raise ContractError("mean key vector is zero; rewriting has no direction to follow")
    columns = [k_star]
    if rank > 1:
        _, s, vt = np.linalg.svd(keys - k_star, full_matrices=False)
        tol = 1e-10 * max(s[0] if s.size else 0.0, np.linalg.norm(k_star))
        available = int(np.sum(s > tol))
        if available < rank - 1:
            raise ContractError(
                f"rank {rank} needs {rank - 1} key directions besides the mean, found {available}"
            )
        columns.extend(vt[: rank - 1])
    K = np.stack(columns, axis=1)
    solved, _, _, _ = linalg.lstsq(sigma, K)
    Q, R = np.linalg.qr(solved)
    diag = np.abs(np.diag(R))
    if np.any(diag <= 1e-12 * max(diag.max(), 1e-300)):
        raise ContractError("whitened key directions are linearly dependent")
    signs = np.sign(np.sum(Q * K, axis=0))
    signs[signs == 0] = 1.0
    return Q * signs


class LowRankEditor(BaseEditor):
    """Trains low-rank factors of layer l against the collision MSE at its feature depth.

    Layer (l-1) features of both sides of every pair are computed once and stay fixed.
    """

    def __init__(
        self,
        net: Network,
        pairs: EditDataset,
        cfg: EditConfig,
        monitor: Optional[LabeledData] = None,
    ):
        super().__init__(net, cfg, monitor)
        self.check_editable(cfg.layer)
        if len(pairs.train) == 0 or len(pairs.val) == 0:
            raise ContractError("low-rank editing needs nonempty train and val pairs")
        self.layer = self.net.layer(cfg.layer)
        n_out, n_in = self.layer.weight.shape[:2]
        if cfg.rank > min(n_out, n_in):
            raise ContractError(
                f"rank {cfg.rank} exceeds min(n_out={n_out}, n_in={n_in}) at layer {cfg.layer}"
            )
        self.net.set_trainable([])
        self.start = cfg.layer - 1
        self.depth = self.net.feature_depth(cfg.layer)
        self.h = self.net.features(0, self.start, pairs.train.x)
        self.h_prime = self.net.features(0, self.start, pairs.train.x_prime)
        rng = np.random.default_rng([cfg.seed, cfg.layer])
        self.U, self.V = self.init_factors(rng, n_out, n_in)
        self.params = [
            ParamGroup(f"lowrank.{name}", t) for name, t in (("U", self.U), ("V", self.V)) if t.requires_grad
        ]
        self.prepare_evaluators(pairs.val.edited(), self.start, head=self.head)

    @abstractmethod
    def init_factors(self, rng: np.random.Generator, n_out: int, n_in: int) -> Tuple[Tensor, Tensor]:
        """Initial (U [n_out, r], V [n_in, r]); trainable factors require grad."""

    def perturbed(self, h: Tensor) -> Tensor:
        return lowrank_forward(self.layer, h, self.U, self.V)

    def head(self, h: Tensor) -> Tensor:
        return self.net.forward_range(self.cfg.layer, self.net.L, self.perturbed(h))

    @property
    def train_size(self) -> int:
        return len(self.h)

    def batch_loss(self, indices: np.ndarray) -> Tensor:
        a = self.net.forward_range(self.cfg.layer, self.depth, self.perturbed(Tensor(self.h[indices])))
        b = self.net.forward_range(
            self.cfg.layer, self.depth, self.perturbed(Tensor(self.h_prime[indices]))
        )
        return mse(a, b)

    def update(self) -> LowRankUpdate:
        return LowRankUpdate(self.cfg.layer, self.U.data.copy(), self.V.data.copy())

    def finish(self) -> Network:
        self.update().apply_to(self.net)
        return super().finish()


class DirectLowRankEditor(LowRankEditor):
    method = EditMethod.DIRECT_LOWRANK

    def init_factors(self, rng: np.random.Generator, n_out: int, n_in: int) -> Tuple[Tensor, Tensor]:
        scale, r = self.cfg.init_scale, self.cfg.rank
        U = Tensor(rng.normal(0.0, scale, size=(n_out, r)), requires_grad=True, name="U")
        V = Tensor(rng.normal(0.0, scale, size=(n_in, r)), requires_grad=True, name="V")
        return U, V


class RewriteEditor(LowRankEditor):
    method = EditMethod.REWRITE

    def __init__(
        self,
        net: Network,
        pairs: EditDataset,
        feature_source: FeatureSource,
        cfg: EditConfig,
        monitor: Optional[LabeledData] = None,
    ):
        images = feature_source.images if isinstance(feature_source, LabeledData) else feature_source
        if len(images) == 0:
            raise ContractError("rewriting needs a nonempty feature source")
        self.source_images = np.asarray(images, dtype=np.float64)
        super().__init__(net, pairs, cfg, monitor)

    def init_factors(self, rng: np.random.Generator, n_out: int, n_in: int) -> Tuple[Tensor, Tensor]:
        cfg = self.cfg
        source = self.net.features(0, self.start, self.source_images)
        sigma = second_moment(source, center=cfg.center_features)
        keys = pair_keys(self.h_prime)
        V = rewrite_directions(sigma, keys, cfg.rank)
        U = rng.normal(0.0, cfg.init_scale, size=(n_out, cfg.rank))
        logger.debug(
            "rewrite layer %d: %d key directions, second moment over %d rows",
            cfg.layer,
            cfg.rank,
            len(feature_rows(source)),
        )
        return Tensor(U, requires_grad=True, name="U"), Tensor(V, name="V")


def edit_direct_lowrank(
    net: Network, pairs: EditDataset, cfg: EditConfig, monitor: Optional[LabeledData] = None
) -> Tuple[Network, EditTrace, LowRankUpdate]:
    """SGD on rank-``cfg.rank`` factors (U, V) of a perturbation to W_l."""
    editor = DirectLowRankEditor(net, pairs, cfg, monitor)
    trace = editor.run()
    update = editor.update()
    return editor.finish(), trace, update


def edit_rewrite(
    net: Network,
    pairs: EditDataset,
    feature_source: FeatureSource,
    cfg: EditConfig,
    monitor: Optional[LabeledData] = None,
) -> Tuple[Network, EditTrace, LowRankUpdate]:
    """Rank-r associative-memory rewrite of W_l with V fixed from whitened keys."""
    editor = RewriteEditor(net, pairs, feature_source, cfg, monitor)
    trace = editor.run()
    update = editor.update()
    return editor.finish(), trace, update
