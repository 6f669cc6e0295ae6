"""Pixel-to-pixel transform: a small MLP fitted per sample at inference time.

The network maps (standardized guide bands, pixel-center coordinates) to a
per-pixel value. Its loss is the sum over LR pixels of the absolute
difference between the source and the block-average of the prediction,
plus ``lam * sum(theta ** 2)``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .jbu import guide_stats, standardize_guide
from .raster import DimensionError, PatchRecord, as_guide, as_map, coord_grid, downsample_avg

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int, loss: float):
        super().__init__(f"P2P loss became non-finite ({loss}) at iteration {iteration}")
        self.iteration = iteration
        self.loss = loss


@dataclass
class P2pNet:
    layer_dims: list
    weights: list  # weights[l] has shape (layer_dims[l], layer_dims[l + 1])
    biases: list
    activation: str = "relu"

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def with_flat(self, theta) -> "P2pNet":
        theta = np.asarray(theta, dtype=np.float64)
        ws, bs, i = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(theta[i:i + w.size].reshape(w.shape))
            i += w.size
            bs.append(theta[i:i + b.size].reshape(b.shape))
            i += b.size
        return P2pNet(list(self.layer_dims), ws, bs, self.activation)

    def sq_norm(self) -> float:
        return float(sum(np.sum(p * p) for p in self.params()))


@dataclass
class P2pConfig:
    lam: float = 1e-4
    step_size: float = 1e-3
    max_iters: int = 2000
    plateau_window: int = 100
    plateau_tol: float = 1e-5
    seed: int = 0
    hidden: tuple = (32, 32)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.plateau_tol < 0:
            raise ValueError("plateau_tol must be >= 0")
        if self.plateau_window < 1:
            raise ValueError("plateau_window must be >= 1")


def net_init(layer_dims, seed: int = 0) -> P2pNet:
    """Glorot-uniform weights, zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"need at least two positive layer sizes, got {layer_dims!r}")
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        ws.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return P2pNet(dims, ws, bs)


def _forward(net: P2pNet, x: np.ndarray):
    acts = [x]
    pre = []
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return a[:, 0], acts, pre


def net_forward(net: P2pNet, features) -> np.ndarray:
    """Per-pixel predictions for an (N, n_in) feature matrix."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None]
    if x.shape[1] != net.layer_dims[0]:
        raise ValueError(f"features have {x.shape[1]} columns, network expects {net.layer_dims[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite features")
    return _forward(net, x)[0]


def _backward(net: P2pNet, acts, pre, dout: np.ndarray):
    dws, dbs = [None] * len(net.weights), [None] * len(net.weights)
    delta = dout[:, None]
    for i in range(len(net.weights) - 1, -1, -1):
        if i < len(net.weights) - 1:
            delta = delta * (pre[i] > 0)
        dws[i] = acts[i].T @ delta
        dbs[i] = delta.sum(axis=0)
        if i:
            delta = delta @ net.weights[i].T
    return dws, dbs


def p2p_features(guide, mean=None, std=None) -> np.ndarray:
    """(H*W, C+2) matrix: standardized guide bands then (row, col) coordinates."""
    g = as_guide(guide)
    if mean is None or std is None:
        mean, std = guide_stats(g)
    g = standardize_guide(g, mean, std)
    C, H, W = g.shape
    grid = coord_grid(H, W)
    return np.ascontiguousarray(np.concatenate([g, grid]).reshape(C + 2, H * W).T)


def _data_term(net, feats, source, alpha, H, W):
    pred, acts, pre = _forward(net, feats)
    hr = pred.reshape(H, W)
    resid = source - downsample_avg(hr, alpha)
    return hr, resid, acts, pre


def _record_parts(record: PatchRecord):
    s = as_map(record.source).astype(np.float64)
    return s, record.alpha, record.height, record.width


def p2p_loss(net: P2pNet, record: PatchRecord, config: P2pConfig, features=None) -> float:
    s, alpha, H, W = _record_parts(record)
    feats = p2p_features(record.guide) if features is None else features
    _, resid, _, _ = _data_term(net, feats, s, alpha, H, W)
    return float(np.sum(np.abs(resid)) + config.lam * net.sq_norm())


def _loss_and_grad(net, feats, s, alpha, H, W, lam):
    hr, resid, acts, pre = _data_term(net, feats, s, alpha, H, W)
    loss = float(np.sum(np.abs(resid)) + lam * net.sq_norm())
    # d|S - pool(hr)| / d hr: -sign(resid) spread evenly over each block
    dhr = np.repeat(np.repeat(-np.sign(resid), alpha, axis=0), alpha, axis=1) / alpha ** 2
    dws, dbs = _backward(net, acts, pre, dhr.ravel())
    grad = P2pNet(
        list(net.layer_dims),
        [dw + 2 * lam * w for dw, w in zip(dws, net.weights)],
        [db + 2 * lam * b for db, b in zip(dbs, net.biases)],
        net.activation,
    )
    return loss, grad, hr


def p2p_grad(net: P2pNet, record: PatchRecord, config: P2pConfig, features=None) -> P2pNet:
    """Exact gradient of ``p2p_loss``, returned in the shape of ``net``."""
    s, alpha, H, W = _record_parts(record)
    feats = p2p_features(record.guide) if features is None else features
    return _loss_and_grad(net, feats, s, alpha, H, W, config.lam)[1]


@dataclass
class FitDiagnostics:
    iterations: int
    final_loss: float
    loss_curve: list = field(repr=False)
    stopped_on_plateau: bool
    source_offset: float
    source_scale: float
    config: dict
    features: str = "z-scored guide bands + pixel-center coordinates"


def _source_scaling(s: np.ndarray) -> tuple[float, float]:
    mu = float(s.mean())
    sd = float(s.std())
    if sd == 0:
        sd = abs(mu) if mu != 0 else 1.0
    return mu, sd


def p2p_fit_predict(record: PatchRecord, config: P2pConfig | None = None):
    """Fit a fresh network to one record and return (prediction, diagnostics)."""
    pred, diag = fit_predict(record.source, record.guide, record.alpha, config)
    log.debug("P2P %s: %d iterations, final loss %.6g", record.id, diag.iterations, diag.final_loss)
    return pred, diag


def fit_predict(source, guide, alpha: int, config: P2pConfig | None = None):
    """Array-level fit: ``source`` is h x w, ``guide`` C x alpha*h x alpha*w.

    The fit runs on the source rescaled to zero mean and unit std; the loss
    curve is in those units and the prediction is mapped back.
    """
    config = config or P2pConfig()
    s_raw = as_map(source).astype(np.float64)
    alpha = int(alpha)
    H, W = s_raw.shape[0] * alpha, s_raw.shape[1] * alpha
    mu, sd = _source_scaling(s_raw)
    s = (s_raw - mu) / sd
    feats = p2p_features(guide)
    if feats.shape[0] != H * W:
        raise DimensionError(f"guide has {feats.shape[0]} pixels, expected {H}x{W}")
    net = net_init([feats.shape[1], *config.hidden, 1], config.seed)

    theta = net.flat()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    curve = []
    best = np.inf
    ref_best = np.inf
    last_gain = 0
    on_plateau = False
    hr = None
    for it in range(config.max_iters):
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grad, hr = _loss_and_grad(net, feats, s, alpha, H, W, config.lam)
        if not np.isfinite(loss):
            raise DivergenceError(it, loss)
        curve.append(loss)
        best = min(best, loss)
        if it == 0 or best < ref_best * (1 - config.plateau_tol):
            ref_best = best
            last_gain = it
        elif it - last_gain >= config.plateau_window:
            on_plateau = True
            break
        if it == config.max_iters - 1:
            break
        g = grad.flat()
        t = it + 1
        m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
        mhat = m / (1 - ADAM_BETA1 ** t)
        vhat = v / (1 - ADAM_BETA2 ** t)
        theta = theta - config.step_size * mhat / (np.sqrt(vhat) + ADAM_EPS)
        net = net.with_flat(theta)

    pred = mu + sd * hr
    diag = FitDiagnostics(
        iterations=len(curve),
        final_loss=curve[-1],
        loss_curve=curve,
        stopped_on_plateau=on_plateau,
        source_offset=mu,
        source_scale=sd,
        config=asdict(config),
    )
    return pred, diag
