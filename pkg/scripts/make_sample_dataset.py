"""Regenerate the bundled Minato-ku sample dataset.

The real port list and routed distances are not redistributable, so this
writes a synthetic stand-in with the same shape: 150 ports inside an outline
of Minato-ku, the depot at Roppongi First Building in row 0, 11 metro-adjacent
and 23 school/company-adjacent ports, and an asymmetric road-distance matrix
(great-circle distance times a detour factor, with a different factor each
way). The matrix is also split into the 15 square 50-point blocks a
50x50-limited matrix API would return, so the stitch path can be replayed.

    python scripts/make_sample_dataset.py [--out src/bikerebalance/data]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from bikerebalance.distance import (
    MatrixBlock,
    haversine_m,
    plan_batches,
    save_block,
    save_matrix,
    write_stations,
)
from bikerebalance.model import DEPOT_LATITUDE, DEPOT_LONGITUDE, DistanceMatrix, Station, Tag

# rough outline of mainland Minato-ku (lon, lat)
OUTLINE = [
    (139.7130, 35.6620), (139.7165, 35.6700), (139.7270, 35.6805), (139.7440, 35.6790),
    (139.7590, 35.6700), (139.7680, 35.6610), (139.7660, 35.6400), (139.7580, 35.6260),
    (139.7400, 35.6270), (139.7230, 35.6370), (139.7160, 35.6500),
]
N_STATIONS = 150
N_METRO = 11
N_SCHOOL = 23
SEED = 20230130


def inside(lon, lat, poly=OUTLINE):
    hit = False
    j = len(poly) - 1
    for i in range(len(poly)):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if (yi > lat) != (yj > lat) and lon < (xj - xi) * (lat - yi) / (yj - yi) + xi:
            hit = not hit
        j = i
    return hit


def make_stations(rng):
    lons = [p[0] for p in OUTLINE]
    lats = [p[1] for p in OUTLINE]
    pts = []
    while len(pts) < N_STATIONS - 1:
        lon = round(rng.uniform(min(lons), max(lons)), 6)
        lat = round(rng.uniform(min(lats), max(lats)), 6)
        if inside(lon, lat):
            pts.append((lon, lat))
    caps = rng.choice([8, 10, 12, 14, 15, 16, 18, 20, 22, 24, 26, 30, 35, 40],
                      size=N_STATIONS - 1,
                      p=[.04, .12, .12, .10, .10, .10, .09, .09, .06, .05, .05, .04, .02, .02])
    special = rng.permutation(np.arange(1, N_STATIONS))[: N_METRO + N_SCHOOL]
    tags = {int(i): Tag.METRO for i in special[:N_METRO]}
    tags.update({int(i): Tag.SCHOOL for i in special[N_METRO:]})

    stations = [Station(0, "Roppongi First Building", DEPOT_LONGITUDE, DEPOT_LATITUDE, 30, Tag.REGULAR)]
    for k, ((lon, lat), cap) in enumerate(zip(pts, caps), start=1):
        stations.append(Station(k, f"Minato Port {k:03d}", lon, lat, int(cap), tags.get(k, Tag.REGULAR)))
    return stations


def make_matrix(stations, rng):
    n = len(stations)
    sym = rng.uniform(1.25, 1.55, size=(n, n))
    sym = np.triu(sym) + np.triu(sym, 1).T
    one_way = rng.uniform(0.0, 0.25, size=(n, n))
    access = rng.uniform(0.0, 120.0, size=(n, n))
    d = np.zeros((n, n))
    for i, a in enumerate(stations):
        for j, b in enumerate(stations):
            if i != j:
                h = haversine_m(a.longitude, a.latitude, b.longitude, b.latitude)
                d[i, j] = round(h * (sym[i, j] + one_way[i, j]) + access[i, j], 1)
    return DistanceMatrix(d)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "src/bikerebalance/data")
    args = ap.parse_args()
    out = Path(args.out)
    rng = np.random.default_rng(SEED)

    stations = make_stations(rng)
    matrix = make_matrix(stations, rng)
    out.mkdir(parents=True, exist_ok=True)
    write_stations(stations, out / "stations.csv")
    save_matrix(matrix, out / "matrix.txt")

    blocks_dir = out / "blocks"
    blocks_dir.mkdir(exist_ok=True)
    for old in blocks_dir.glob("*.json"):
        old.unlink()
    arr = matrix.array
    for k, batch in enumerate(plan_batches(range(len(stations)), 50)):
        block = MatrixBlock(batch, batch, arr[np.ix_(batch, batch)], profile="synthetic-driving-car")
        save_block(block, blocks_dir / f"block_{k:02d}.json")
    print(f"wrote {len(stations)} stations, {matrix.n}x{matrix.n} matrix and blocks to {out}")


if __name__ == "__main__":
    main()
