"""Per-instance work units shared by the analysis helpers and the CLI."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor

from .features import feature_vector
from .mappers import MappingConfig, map_mhvg_baseline, map_mqg, warm_up


def map_series(series, mapper: str = "mqg", eta=50):
    if mapper == "mqg":
        return map_mqg(series, MappingConfig(eta=eta))
    if mapper == "mhvg":
        return map_mhvg_baseline(series)
    raise ValueError(f"unknown mapper {mapper!r}; expected 'mqg' or 'mhvg'")


def _extract_one(args):
    instance_id, label, series, mapper, eta = args
    return instance_id, label, feature_vector(map_series(series, mapper, eta))


def _parallel_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def map_and_extract(dataset, mapper: str = "mqg", eta=50, jobs: int = 1):
    """``[(instance_id, label, features)]`` for each LabeledSeries, in order."""
    items = [(ls.instance_id, ls.label, ls.series, mapper, eta) for ls in dataset]
    return _parallel_map(_extract_one, items, jobs)


def time_mapping(series, mapper: str, eta=50) -> float:
    """Wall-clock seconds spent inside one mapping call."""
    start = time.perf_counter()
    map_series(series, mapper, eta)
    return time.perf_counter() - start


def _time_one(args):
    instance_id, label, series, mappers, eta = args
    warm_up()
    return [(instance_id, label, m, time_mapping(series, m, eta)) for m in mappers]


def benchmark(dataset, mappers=("mqg", "mhvg"), eta=50, jobs: int = 1):
    """Timing records ``(instance_id, label, mapper, seconds)``."""
    warm_up()
    items = [(ls.instance_id, ls.label, ls.series, tuple(mappers), eta) for ls in dataset]
    return [rec for chunk in _parallel_map(_time_one, items, jobs) for rec in chunk]
