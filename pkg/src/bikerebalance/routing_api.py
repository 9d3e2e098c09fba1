"""Openrouteservice matrix client with a local response cache.

Every network response is cached on disk, keyed by the sorted batch
coordinates. Without an API key the client is offline and only serves cached
batches.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .distance import MAX_BLOCK_POINTS, MatrixBlock
from .model import Station

log = logging.getLogger(__name__)

API_KEY_ENV = "ROUTING_API_KEY"
DEFAULT_ENDPOINT = "https://api.openrouteservice.org/v2/matrix/{profile}"


class RoutingApiError(RuntimeError):
    pass


class NetworkError(RoutingApiError):
    pass


class QuotaExceeded(RoutingApiError):
    pass


class UncachedOffline(RoutingApiError):
    pass


@dataclass
class ApiConfig:
    cache_dir: Path
    endpoint: str = DEFAULT_ENDPOINT
    profile: str = "driving-car"
    api_key: Optional[str] = None
    timeout_s: float = 60.0
    # (url, json_body, headers, timeout) -> (status_code, parsed_json); swapped out in tests
    transport: Optional[Callable] = field(default=None, repr=False)

    @classmethod
    def from_env(cls, cache_dir, **kw) -> "ApiConfig":
        return cls(cache_dir=Path(cache_dir), api_key=os.environ.get(API_KEY_ENV) or None, **kw)

    @property
    def offline(self) -> bool:
        return not self.api_key


def _requests_transport(url, body, headers, timeout):
    import requests

    try:
        resp = requests.post(url, json=body, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise NetworkError(str(exc)) from exc
    try:
        payload = resp.json()
    except ValueError:
        payload = None
    return resp.status_code, payload


_key_locks: dict = {}
_key_locks_guard = threading.Lock()


def _lock_for(key: str) -> threading.Lock:
    with _key_locks_guard:
        return _key_locks.setdefault(key, threading.Lock())


def cache_key(coords: Sequence[Sequence[float]], profile: str) -> str:
    blob = json.dumps({"profile": profile, "coords": [list(map(float, c)) for c in sorted(coords)]})
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def fetch_block(points: Sequence[Station], config: ApiConfig) -> MatrixBlock:
    """Square distance block over ``points`` (rows and columns in the given order)."""
    if len(points) > MAX_BLOCK_POINTS:
        raise ValueError(f"batch of {len(points)} points exceeds the {MAX_BLOCK_POINTS}-point API limit")
    if not points:
        raise ValueError("empty batch")
    # the request always uses sorted coordinates so permuted batches share a cache entry
    order = sorted(range(len(points)), key=lambda k: (points[k].longitude, points[k].latitude))
    coords = [[points[k].longitude, points[k].latitude] for k in order]
    key = cache_key(coords, config.profile)
    path = Path(config.cache_dir) / f"{key}.json"

    with _lock_for(key):
        if path.exists():
            doc = json.loads(path.read_text(encoding="utf-8"))
            sorted_d = doc["distances"]
        elif config.offline:
            raise UncachedOffline(f"batch {key} is not cached and no {API_KEY_ENV} is set")
        else:
            sorted_d = _request(coords, config)
            _write_atomic(
                path,
                json.dumps({"profile": config.profile, "coords": coords, "distances": sorted_d}),
            )

    pos = {k: r for r, k in enumerate(order)}
    m = len(points)
    values = [[sorted_d[pos[a]][pos[b]] for b in range(m)] for a in range(m)]
    ids = [p.id for p in points]
    return MatrixBlock(ids, ids, values, profile=config.profile)


def _request(coords, config: ApiConfig):
    url = config.endpoint.format(profile=config.profile)
    body = {"locations": coords, "metrics": ["distance"], "units": "m"}
    headers = {"Authorization": config.api_key, "Content-Type": "application/json"}
    transport = config.transport or _requests_transport
    log.info("requesting %dx%d distance block", len(coords), len(coords))
    status, payload = transport(url, body, headers, config.timeout_s)
    if status == 429:
        raise QuotaExceeded("routing API quota exceeded (HTTP 429)")
    if status != 200 or not isinstance(payload, dict) or "distances" not in payload:
        raise NetworkError(f"routing API returned HTTP {status}")
    dist = payload["distances"]
    if len(dist) != len(coords) or any(len(r) != len(coords) for r in dist):
        raise NetworkError("routing API returned a matrix of the wrong shape")
    if any(v is None for r in dist for v in r):
        raise NetworkError("routing API could not route between some points")
    return [[round(float(v), 1) for v in r] for r in dist]
