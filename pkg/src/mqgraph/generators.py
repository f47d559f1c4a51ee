"""Seeded simulators for the six bivariate benchmark processes.

Kinds: independent and correlated white noise (``iBWN``, ``cBWN``), weak and
strong VAR(1) (``wVAR``, ``sVAR``) and weak and strong diagonal VGARCH(1,1)
with constant conditional correlation (``wVGARCH``, ``sVGARCH``).

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``. The
per-instance seed is the first 64-bit word of
``SeedSequence(base_seed, spawn_key=(model_index, instance_index))``, so a
dataset is reproducible regardless of generation order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import MappingError, MultivariateSeries

MODEL_KINDS = ("iBWN", "cBWN", "wVAR", "sVAR", "wVGARCH", "sVGARCH")

_SIGMA_WEAK = np.array([[1.00, 0.10], [0.10, 1.50]])
_SIGMA_STRONG = np.array([[1.00, 0.86], [0.86, 1.50]])


@dataclass(frozen=True)
class ModelParams:
    intercept: np.ndarray | None = None
    ar_matrix: np.ndarray | None = None
    omega: np.ndarray | None = None
    arch: np.ndarray | None = None
    garch: np.ndarray | None = None
    noise_cov: np.ndarray = _SIGMA_WEAK


MODEL_PARAMS: dict[str, ModelParams] = {
    "iBWN": ModelParams(noise_cov=np.eye(2)),
    "cBWN": ModelParams(noise_cov=_SIGMA_STRONG),
    "wVAR": ModelParams(
        intercept=np.array([2.50, 0.50]),
        ar_matrix=np.array([[0.20, 0.10], [0.02, 0.10]]),
        noise_cov=_SIGMA_WEAK,
    ),
    "sVAR": ModelParams(
        intercept=np.array([0.0, 0.0]),
        ar_matrix=np.array([[0.70, 0.02], [0.30, 0.80]]),
        noise_cov=_SIGMA_STRONG,
    ),
    "wVGARCH": ModelParams(
        omega=np.array([0.05, 0.02]),
        arch=np.diag([0.10, 0.05]),
        garch=np.diag([0.85, 0.88]),
        noise_cov=_SIGMA_WEAK,
    ),
    "sVGARCH": ModelParams(
        omega=np.array([0.05, 0.02]),
        arch=np.diag([0.10, 0.05]),
        garch=np.diag([0.85, 0.88]),
        noise_cov=_SIGMA_STRONG,
    ),
}


def default_burn_in(kind: str) -> int:
    return 0 if kind.endswith("BWN") else 500


@dataclass(frozen=True)
class MdgpSpec:
    kind: str
    T: int
    seed: int = 0
    burn_in: int | None = None
    params: ModelParams | None = None

    def resolved_params(self) -> ModelParams:
        if self.kind not in MODEL_PARAMS:
            raise MappingError(f"unknown process kind {self.kind!r}; expected one of {MODEL_KINDS}")
        return self.params if self.params is not None else MODEL_PARAMS[self.kind]

    def resolved_burn_in(self) -> int:
        return default_burn_in(self.kind) if self.burn_in is None else int(self.burn_in)


def _cholesky(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T) or np.any(np.diag(cov) <= 0):
        raise MappingError(f"noise covariance must be symmetric with positive diagonal, got {cov.tolist()}")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise MappingError(f"noise covariance is not positive definite: {cov.tolist()}") from None


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _simulate_var(params: ModelParams, innov: np.ndarray) -> np.ndarray:
    phi0 = np.asarray(params.intercept, dtype=float)
    phi = np.asarray(params.ar_matrix, dtype=float)
    mean = np.linalg.solve(np.eye(2) - phi, phi0)
    a, b, c, d = phi.ravel()
    c0, c1 = phi0
    n = innov.shape[0]
    out = np.empty((n, 2))
    y0, y1 = mean
    e = innov.tolist()
    for t in range(n):
        y0, y1 = c0 + a * y0 + b * y1 + e[t][0], c1 + c * y0 + d * y1 + e[t][1]
        out[t, 0] = y0
        out[t, 1] = y1
    return out


def _simulate_vgarch(params: ModelParams, z: np.ndarray) -> np.ndarray:
    # z are correlated N(0, R) draws with unit variances
    w0, w1 = np.asarray(params.omega, dtype=float)
    a0, a1 = np.diag(params.arch)
    b0, b1 = np.diag(params.garch)
    h0 = w0 / (1.0 - a0 - b0)
    h1 = w1 / (1.0 - a1 - b1)
    e0 = e1 = 0.0
    n = z.shape[0]
    out = np.empty((n, 2))
    zz = z.tolist()
    for t in range(n):
        if t:
            h0 = w0 + a0 * e0 * e0 + b0 * h0
            h1 = w1 + a1 * e1 * e1 + b1 * h1
        e0 = h0**0.5 * zz[t][0]
        e1 = h1**0.5 * zz[t][1]
        out[t, 0] = e0
        out[t, 1] = e1
    return out


def generate(spec: MdgpSpec) -> MultivariateSeries:
    """Simulate one bivariate series of length ``spec.T``."""
    params = spec.resolved_params()
    if spec.T < 2:
        raise MappingError(f"T must be at least 2, got {spec.T}")
    burn = spec.resolved_burn_in()
    if burn < 0:
        raise MappingError(f"burn_in must be non-negative, got {burn}")
    rng = _rng(spec.seed)
    n = spec.T + burn

    if spec.kind.endswith("VGARCH"):
        cov = np.asarray(params.noise_cov, dtype=float)
        _cholesky(cov)
        sd = np.sqrt(np.diag(cov))
        corr = cov / np.outer(sd, sd)
        z = rng.standard_normal((n, 2)) @ _cholesky(corr).T
        out = _simulate_vgarch(params, z)
    else:
        innov = rng.standard_normal((n, 2)) @ _cholesky(params.noise_cov).T
        if spec.kind.endswith("VAR"):
            out = _simulate_var(params, innov)
        else:
            out = innov
    return MultivariateSeries(out[burn:].T)


@dataclass(frozen=True)
class LabeledSeries:
    instance_id: str
    label: str
    seed: int
    series: MultivariateSeries


def instance_seed(base_seed: int, model_index: int, instance_index: int) -> int:
    """A 64-bit integer summarising the per-instance stream, for manifests."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(model_index, instance_index))
    return int(ss.generate_state(1, np.uint64)[0])


def generate_instance(kind: str, instance_index: int, T: int, base_seed: int,
                      burn_in: int | None = None) -> LabeledSeries:
    model_index = MODEL_KINDS.index(kind)
    spec = MdgpSpec(kind, T, seed=instance_seed(base_seed, model_index, instance_index), burn_in=burn_in)
    series = generate(spec)
    return LabeledSeries(f"{kind}_{instance_index:04d}", kind, spec.seed, series)


def generate_dataset(n_per_model: int, T: int, base_seed: int = 0,
                     models=MODEL_KINDS, burn_in: int | None = None) -> list[LabeledSeries]:
    """``n_per_model`` labelled instances of each process kind.

    Instance ``j`` of kind ``k`` is seeded with :func:`instance_seed` of
    ``(base_seed, MODEL_KINDS.index(k), j)``, independent of ``models``.
    """
    if n_per_model < 1:
        raise MappingError(f"n_per_model must be >= 1, got {n_per_model}")
    out = []
    for kind in models:
        if kind not in MODEL_KINDS:
            raise MappingError(f"unknown process kind {kind!r}")
        for j in range(n_per_model):
            out.append(generate_instance(kind, j, T, base_seed, burn_in))
    return out


def with_params(spec: MdgpSpec, **overrides) -> MdgpSpec:
    """Copy of ``spec`` whose model parameters have some fields overridden."""
    base = spec.resolved_params()
    return replace(spec, params=replace(base, **{k: np.asarray(v, dtype=float) for k, v in overrides.items()}))
