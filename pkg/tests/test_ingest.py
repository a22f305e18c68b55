import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from korm.errors import EncodingError, ParseError, RangeError, ShapeError
from korm.ingest import ColumnKind, DatasetSchema, chunk_stream, encode_char, iter_chunks, load_dataset

from conftest import data_path


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_encode_char():
    assert encode_char("M") == 77.0
    with pytest.raises(EncodingError):
        encode_char("MF")


def test_abalone_shape(abalone):
    # the bundled copy has 4174 rows (three fewer than the UCI original)
    assert abalone.shape == (4174, 8)
    assert set(np.unique(abalone[:, 0])) == {ord("M"), ord("F"), ord("I")}


def test_tae_shape(tae):
    assert tae.shape == (151, 5)


def test_load_is_deterministic():
    schema = DatasetSchema.parse(data_path("tae.schema"), True)
    a = load_dataset(data_path("tae.csv"), schema)
    b = load_dataset(data_path("tae.csv"), schema)
    assert np.array_equal(a, b)


def test_schema_parse_inline_and_aliases():
    s = DatasetSchema.parse("char,num,skip,numeric")
    assert s.kinds == (ColumnKind.CHAR, ColumnKind.NUMERIC, ColumnKind.SKIP, ColumnKind.NUMERIC)
    assert s.dimension == 3


def test_schema_needs_a_kept_column():
    with pytest.raises(ShapeError):
        DatasetSchema((ColumnKind.SKIP,))


def test_schema_unknown_kind():
    with pytest.raises(ParseError):
        DatasetSchema.parse("numeric,float64")


def test_mixed_row_parsing(tmp_path):
    p = _write(tmp_path, "s,a,b\nM,1.5,9\nF,-2,9\n")
    pts = load_dataset(p, DatasetSchema.parse("char,numeric,skip", True))
    assert pts.tolist() == [[77.0, 1.5], [70.0, -2.0]]


def test_parse_error_carries_position(tmp_path):
    p = _write(tmp_path, "1,2\n3,x\n")
    with pytest.raises(ParseError) as info:
        load_dataset(p, DatasetSchema.parse("numeric,numeric"))
    assert info.value.details["row"] == 2 and info.value.details["column"] == 2


def test_encoding_error_carries_position(tmp_path):
    p = _write(tmp_path, "M,1\nMF,2\n")
    with pytest.raises(EncodingError) as info:
        load_dataset(p, DatasetSchema.parse("char,numeric"))
    assert info.value.details["row"] == 2


def test_ragged_rows(tmp_path):
    p = _write(tmp_path, "1,2\n3\n")
    with pytest.raises(ShapeError):
        load_dataset(p, DatasetSchema.parse("numeric,numeric"))


def test_missing_cell_is_an_error(tmp_path):
    p = _write(tmp_path, "1,2\n3,\n")
    with pytest.raises(ParseError):
        load_dataset(p, DatasetSchema.parse("numeric,numeric"))


def test_empty_file(tmp_path):
    p = _write(tmp_path, "")
    with pytest.raises(ShapeError):
        load_dataset(p, DatasetSchema.parse("numeric"))


@pytest.mark.parametrize("n,num,sizes", [(10, 4, [4, 4, 2]), (4, 4, [4]), (0, 4, [])])
def test_chunk_sizes(n, num, sizes):
    pts = np.arange(2 * n, dtype=float).reshape(n, 2)
    chunks = chunk_stream(pts, num)
    assert [len(c) for c in chunks] == sizes
    assert [c.index for c in chunks] == list(range(1, len(sizes) + 1))


def test_chunk_size_floor():
    with pytest.raises(RangeError):
        chunk_stream(np.zeros((3, 1)), 1)


@given(st.integers(0, 200), st.integers(2, 50), st.booleans())
def test_chunks_round_trip(n, num, lazy):
    pts = np.arange(n * 3, dtype=float).reshape(n, 3)
    source = (row for row in pts) if lazy else pts
    chunks = list(iter_chunks(source, num))
    joined = np.vstack([c.points for c in chunks]) if chunks else np.zeros((0, 3))
    assert np.array_equal(joined, pts)
    assert all(len(c) == num for c in chunks[:-1])
    assert all(c.start == (c.index - 1) * num for c in chunks)
    assert all((c.weights == 1).all() for c in chunks)
