import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bikerebalance.cli import bundled
from bikerebalance.distance import (
    CoverageGap,
    DimensionMismatch,
    MatrixBlock,
    MatrixFormatError,
    StitchReport,
    dumps_matrix,
    load_blocks,
    load_matrix,
    loads_matrix,
    plan_batches,
    read_stations,
    save_matrix,
    stitch,
    write_stations,
)
from bikerebalance.model import DistanceMatrix, Tag


def test_stitch_minimal_asymmetric():
    blocks = [MatrixBlock([0], [0, 1], [[0, 100]]), MatrixBlock([1], [0, 1], [[120, 0]])]
    m = stitch(blocks, 2)
    assert m.array.tolist() == [[0, 100], [120, 0]]


def test_stitch_reports_coverage_gap():
    full = np.ones((10, 10))
    blocks = []
    for i in range(10):
        cols = [j for j in range(10) if (i, j) != (3, 7)]
        blocks.append(MatrixBlock([i], cols, full[i, cols][None, :]))
    with pytest.raises(CoverageGap) as exc:
        stitch(blocks, 10)
    assert exc.value.cell == (3, 7)


def test_stitch_last_write_wins():
    a = MatrixBlock([0, 1], [0, 1], [[0, 100], [120, 0]])
    b = MatrixBlock([0], [1], [[90]])
    rep = StitchReport()
    m = stitch([a, b], 2, rep)
    assert m[0, 1] == 90
    assert m[1, 0] == 120  # never mirrored
    assert rep.overwrites == 1 and rep.conflicts == 1


def test_stitch_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        stitch([MatrixBlock([0, 2], [0, 2], [[0, 1], [1, 0]])], 2)


def test_stitch_forces_zero_diagonal():
    m = stitch([MatrixBlock([0, 1], [0, 1], [[5, 1], [2, 7]])], 2)
    assert m[0, 0] == 0 and m[1, 1] == 0


def test_block_limits():
    with pytest.raises(ValueError):
        MatrixBlock(range(51), [0], np.zeros((51, 1)))
    with pytest.raises(ValueError):
        MatrixBlock([0], [1], [[-1.0]])
    with pytest.raises(ValueError):
        MatrixBlock([0], [1, 2], [[1.0]])


def test_matrix_round_trip_3x3(tmp_path):
    m = DistanceMatrix([[0, 1.5, 2], [3.25, 0, 4], [1e-7, 123456.7, 0]])
    p = tmp_path / "m.txt"
    save_matrix(m, p)
    assert load_matrix(p) == m


finite = st.floats(0, 1e7, allow_nan=False, allow_infinity=False)


@settings(max_examples=60)
@given(arrays(np.float64, st.tuples(st.integers(1, 6)).map(lambda t: (t[0], t[0])), elements=finite))
def test_matrix_round_trip_exact(a):
    np.fill_diagonal(a, 0)
    m = DistanceMatrix(a)
    back = loads_matrix(dumps_matrix(m))
    assert back.array.tobytes() == m.array.tobytes()


def test_matrix_format_uses_one_decimal():
    text = dumps_matrix(DistanceMatrix([[0, 100], [120.4, 0]]))
    assert text == "n=2\n0.0,100.0\n120.4,0.0\n"


@pytest.mark.parametrize(
    "text",
    [
        "",
        "\n\n",
        "n=3\n0,1,2\n1,0,2\n",
        "rows=2\n0,1\n1,0\n",
        "n=2\n0,1,5\n1,0\n",
        "n=2\n0,x\n1,0\n",
        "n=2\n0,-1\n1,0\n",
    ],
)
def test_malformed_matrix(text):
    with pytest.raises(MatrixFormatError):
        loads_matrix(text)


def test_header_150_but_149_rows(tmp_path):
    rows = [",".join(["0.0"] * 150)] * 149
    p = tmp_path / "m.txt"
    p.write_text("n=150\n" + "\n".join(rows) + "\n")
    with pytest.raises(MatrixFormatError):
        load_matrix(p)


@pytest.mark.parametrize("n, size", [(150, 50), (7, 4), (10, 50), (101, 50), (33, 10)])
def test_plan_batches_cover_every_pair(n, size):
    batches = plan_batches(range(n), size)
    assert all(len(b) <= size for b in batches)
    covered = set()
    for b in batches:
        covered.update(itertools.product(b, b))
    assert covered == set(itertools.product(range(n), range(n)))


def test_plan_batches_150_needs_fifteen_requests():
    assert len(plan_batches(range(150), 50)) == 15


def test_bundled_blocks_stitch_to_bundled_matrix():
    blocks = load_blocks(bundled("blocks"))
    assert len(blocks) == 15
    m = stitch(blocks, 150)
    assert m.array.tobytes() == load_matrix(bundled("matrix.txt")).array.tobytes()


def test_bundled_dataset_shape(stations, matrix):
    assert len(stations) == 150 == matrix.n
    depot = stations[0]
    assert (depot.longitude, depot.latitude) == (139.741476, 35.66241)
    tags = [s.tag for s in stations]
    assert tags.count(Tag.METRO) == 11 and tags.count(Tag.SCHOOL) == 23
    # asymmetric on purpose
    assert not np.array_equal(matrix.array, matrix.array.T)


def test_station_csv_round_trip(tmp_path, stations):
    p = tmp_path / "s.csv"
    write_stations(stations, p)
    assert read_stations(p) == stations
    assert p.read_text().splitlines()[0] == "id,name,longitude,latitude,capacity,tag"


def test_station_csv_rejects_bad_tag(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("id,name,longitude,latitude,capacity,tag\n0,a,139.7,35.6,10,bus\n")
    with pytest.raises(ValueError):
        read_stations(p)
