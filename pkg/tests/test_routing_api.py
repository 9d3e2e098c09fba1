import threading

import pytest

from bikerebalance.model import Station
from bikerebalance.routing_api import (
    ApiConfig,
    NetworkError,
    QuotaExceeded,
    UncachedOffline,
    fetch_block,
)


def _points(k):
    return [Station(i, f"p{i}", 139.70 + 0.003 * ((i * 7) % k), 35.63 + 0.002 * i, 10) for i in range(k)]


class FakeApi:
    """Answers like the matrix endpoint: d = 1000 * |index difference| + 10 * source index."""

    def __init__(self, status=200):
        self.calls = 0
        self.status = status
        self.lock = threading.Lock()

    def __call__(self, url, body, headers, timeout):
        with self.lock:
            self.calls += 1
        assert headers["Authorization"] == "secret"
        assert body["metrics"] == ["distance"]
        locs = body["locations"]
        assert locs == sorted(locs)
        if self.status != 200:
            return self.status, {"error": "nope"}
        k = len(locs)
        return 200, {"distances": [[0.0 if a == b else 1000.0 * abs(a - b) + 10 * a for b in range(k)] for a in range(k)]}


def _config(tmp_path, api, key="secret"):
    return ApiConfig(cache_dir=tmp_path / "cache", api_key=key, transport=api)


def test_batch_over_limit_rejected(tmp_path):
    with pytest.raises(ValueError):
        fetch_block(_points(51), _config(tmp_path, FakeApi()))


def test_second_identical_request_served_from_cache(tmp_path):
    api = FakeApi()
    cfg = _config(tmp_path, api)
    pts = _points(12)
    first = fetch_block(pts, cfg)
    second = fetch_block(pts, cfg)
    assert api.calls == 1
    assert first.values.tolist() == second.values.tolist()
    assert first.row_ids == tuple(range(12))


def test_cache_survives_permuted_batch(tmp_path):
    api = FakeApi()
    cfg = _config(tmp_path, api)
    pts = _points(8)
    a = fetch_block(pts, cfg)
    b = fetch_block(list(reversed(pts)), cfg)
    assert api.calls == 1
    for r, i in enumerate(b.row_ids):
        for c, j in enumerate(b.col_ids):
            assert b.values[r, c] == a.values[a.row_ids.index(i), a.col_ids.index(j)]


def test_block_keeps_asymmetry(tmp_path):
    blk = fetch_block(_points(5), _config(tmp_path, FakeApi()))
    assert (blk.values != blk.values.T).any()


def test_offline_uncached(tmp_path):
    with pytest.raises(UncachedOffline):
        fetch_block(_points(4), _config(tmp_path, FakeApi(), key=None))


def test_offline_serves_cache(tmp_path):
    api = FakeApi()
    pts = _points(4)
    online = fetch_block(pts, _config(tmp_path, api))
    offline = fetch_block(pts, _config(tmp_path, None, key=None))
    assert offline.values.tolist() == online.values.tolist()


def test_quota_and_network_errors(tmp_path):
    with pytest.raises(QuotaExceeded):
        fetch_block(_points(3), _config(tmp_path, FakeApi(status=429)))
    with pytest.raises(NetworkError):
        fetch_block(_points(3), _config(tmp_path, FakeApi(status=500)))
    assert not list((tmp_path / "cache").glob("*.json"))


def test_api_key_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ROUTING_API_KEY", "secret")
    assert not ApiConfig.from_env(tmp_path).offline
    monkeypatch.delenv("ROUTING_API_KEY")
    assert ApiConfig.from_env(tmp_path).offline


def test_concurrent_disjoint_batches(tmp_path):
    api = FakeApi()
    cfg = _config(tmp_path, api)
    batches = [_points(6)[:3], _points(6)[3:], _points(6)[:3]]
    out = [None] * len(batches)

    def run(k):
        out[k] = fetch_block(batches[k], cfg)

    threads = [threading.Thread(target=run, args=(k,)) for k in range(len(batches))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert api.calls == 2
    assert out[0].values.tolist() == out[2].values.tolist()
