"""Time series to network mappings.

``map_qg`` builds one quantile-graph layer, ``map_contemporaneous`` links the
quantile sequences of two layers and ``map_mqg`` combines them into a
multilayer quantile graph. ``map_mhvg_baseline`` builds a multilayer
horizontal visibility graph used only as a runtime and feature baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import MappingError, MultivariateSeries, SeriesTooShortError, compute_quantiles, quantile_sequence
from .mnet import MultilayerNetwork

DEFAULT_ETA = 50


def auto_eta(T: int) -> int:
    return max(1, int(round(2 * T ** (1 / 3))))


@dataclass(frozen=True)
class MappingConfig:
    """``eta`` is a positive int or ``"auto"`` (``round(2 * T**(1/3))``).

    ``lag`` shifts the second layer's quantile sequence when linking layers;
    0 gives the contemporaneous graph.
    """

    eta: int | str = DEFAULT_ETA
    lag: int = 0

    def resolve_eta(self, T: int) -> int:
        if self.eta == "auto":
            return auto_eta(T)
        if isinstance(self.eta, str) or int(self.eta) != self.eta or self.eta < 1:
            raise MappingError(f"eta must be a positive integer or 'auto', got {self.eta!r}")
        return int(self.eta)


def _transition_counts(q_seq: np.ndarray, eta: int) -> np.ndarray:
    flat = (q_seq[:-1] - 1) * eta + (q_seq[1:] - 1)
    return np.bincount(flat, minlength=eta * eta).reshape(eta, eta)


def map_qg(ts, eta: int, net: MultilayerNetwork | None = None, layer: int = 1):
    """Map a univariate series onto one quantile-graph layer.

    Returns ``(net, q_seq)``; a fresh single-layer network is created when
    ``net`` is None. ``q_seq`` holds the 1-based bin of every observation.
    """
    values = np.asarray(getattr(ts, "values", ts), dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise SeriesTooShortError(f"need a 1-D series with T >= 2, got shape {values.shape}")
    binning = compute_quantiles(values, eta)
    q_seq = quantile_sequence(values, binning)
    if net is None:
        net = MultilayerNetwork(1, eta)
    elif net.eta != eta:
        raise MappingError(f"network has eta={net.eta}, mapping requested eta={eta}")
    net.add_intra_counts(layer, _transition_counts(q_seq, eta))
    net.set_q_seq(layer, q_seq)
    return net, q_seq


def map_contemporaneous(net: MultilayerNetwork, layer_a: int, layer_b: int,
                        q_seq_a, q_seq_b, lag: int = 0) -> MultilayerNetwork:
    """Count same-timestamp bin co-occurrences as inter-layer edge weights.

    With ``lag > 0`` bin ``q_seq_a[t]`` is paired with ``q_seq_b[t + lag]``.
    """
    qa = np.asarray(q_seq_a, dtype=np.int64)
    qb = np.asarray(q_seq_b, dtype=np.int64)
    if qa.shape != qb.shape or qa.ndim != 1:
        raise MappingError(f"quantile sequences differ in length: {qa.shape} vs {qb.shape}")
    if lag < 0 or lag >= max(qa.size, 1):
        raise MappingError(f"lag must lie in [0, T), got {lag}")
    if lag:
        qa, qb = qa[:-lag], qb[lag:]
    eta = net.eta
    if qa.size and (min(qa.min(), qb.min()) < 1 or max(qa.max(), qb.max()) > eta):
        raise MappingError(f"quantile indices must lie in 1..{eta}")
    counts = np.bincount((qa - 1) * eta + (qb - 1), minlength=eta * eta).reshape(eta, eta)
    net.add_inter_counts(layer_a, layer_b, counts)
    return net


def map_mqg(mts, config: MappingConfig | int = DEFAULT_ETA) -> MultilayerNetwork:
    """Multilayer quantile graph of an ``m``-component series.

    Every component is binned on its own quantiles; each of the
    ``m(m-1)/2`` layer pairs is linked by its contemporaneous graph.
    """
    if not isinstance(config, MappingConfig):
        config = MappingConfig(eta=config)
    if not isinstance(mts, MultivariateSeries):
        mts = MultivariateSeries(mts)
    eta = config.resolve_eta(mts.T)
    net = MultilayerNetwork(mts.m, eta)
    q_seqs = []
    for a in range(mts.m):
        _, q = map_qg(mts.data[a], eta, net, layer=a + 1)
        q_seqs.append(q)
    for a in range(mts.m - 1):
        for b in range(a + 1, mts.m):
            map_contemporaneous(net, a + 1, b + 1, q_seqs[a], q_seqs[b], lag=config.lag)
    return net.freeze()


# -- horizontal visibility baseline -----------------------------------------


@numba.njit(cache=True)
def _hvg_edges(y):
    # stack-based O(T) construction; returns 0-based (i, j) with i < j
    n = y.size
    src = np.empty(2 * n, dtype=np.int64)
    dst = np.empty(2 * n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    k = 0
    for j in range(n):
        while top > 0 and y[stack[top - 1]] < y[j]:
            src[k] = stack[top - 1]
            dst[k] = j
            k += 1
            top -= 1
        if top > 0:
            src[k] = stack[top - 1]
            dst[k] = j
            k += 1
            if y[stack[top - 1]] == y[j]:
                top -= 1
        stack[top] = j
        top += 1
    return src[:k], dst[:k]


@numba.njit(cache=True)
def _cross_hvg_edges(ya, yb):
    # left endpoint t in series a, right endpoint s > t in series b; the
    # intermediate values come from b and must lie below both endpoints
    n = ya.size
    cap = 4 * n
    src = np.empty(cap, dtype=np.int64)
    dst = np.empty(cap, dtype=np.int64)
    k = 0
    for t in range(n):
        level = ya[t]
        running = -np.inf
        for s in range(t + 1, n):
            if running < yb[s]:
                if k == cap:
                    cap *= 2
                    src2 = np.empty(cap, dtype=np.int64)
                    dst2 = np.empty(cap, dtype=np.int64)
                    src2[:k] = src[:k]
                    dst2[:k] = dst[:k]
                    src = src2
                    dst = dst2
                src[k] = t
                dst[k] = s
                k += 1
            if yb[s] > running:
                running = yb[s]
            if running >= level:
                break
    return src[:k], dst[:k]


def hvg_edges(y) -> tuple[np.ndarray, np.ndarray]:
    """0-based horizontal-visibility edges ``(i, j)``, ``i < j``."""
    return _hvg_edges(np.ascontiguousarray(y, dtype=float))


def cross_hvg_edges(ya, yb) -> tuple[np.ndarray, np.ndarray]:
    """0-based cross-visibility edges ``(t in a, s in b)`` over both sweeps.

    Pairs ``t < s`` see each other across ``b``'s intermediate values, pairs
    ``s < t`` across ``a``'s; contemporaneous pairs always connect.
    """
    ya = np.ascontiguousarray(ya, dtype=float)
    yb = np.ascontiguousarray(yb, dtype=float)
    fwd_a, fwd_b = _cross_hvg_edges(ya, yb)
    bwd_b, bwd_a = _cross_hvg_edges(yb, ya)
    same = np.arange(ya.size, dtype=np.int64)
    return np.concatenate([fwd_a, bwd_a, same]), np.concatenate([fwd_b, bwd_b, same])


def map_mhvg_baseline(mts) -> MultilayerNetwork:
    """Multilayer horizontal visibility graph with one node per timestamp.

    Intra layers hold each component's HVG; every layer pair is linked by
    cross-horizontal visibility. All edges are unweighted and undirected.
    """
    if not isinstance(mts, MultivariateSeries):
        mts = MultivariateSeries(mts)
    if mts.T < 2:
        raise SeriesTooShortError(f"need T >= 2, got {mts.T}")
    net = MultilayerNetwork(mts.m, mts.T, directed_intra=False)
    for a in range(mts.m):
        i, j = hvg_edges(mts.data[a])
        net.add_edges(a + 1, a + 1, i + 1, j + 1)
    for a in range(mts.m - 1):
        for b in range(a + 1, mts.m):
            i, j = cross_hvg_edges(mts.data[a], mts.data[b])
            net.add_edges(a + 1, b + 1, i + 1, j + 1)
    return net.freeze()


def warm_up() -> None:
    """Trigger JIT compilation so timing runs exclude it."""
    y = np.array([1.0, 3.0, 2.0, 4.0])
    frozen = y.copy()
    frozen.setflags(write=False)
    # numba specialises separately on read-only inputs (series data is frozen)
    for a in (y, frozen):
        hvg_edges(a)
        cross_hvg_edges(a, a)


MAPPERS = {"mqg": map_mqg, "mhvg": lambda mts, config=None: map_mhvg_baseline(mts)}
