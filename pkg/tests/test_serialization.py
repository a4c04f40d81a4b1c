import numpy as np
import pytest

from chunglu_cutoff.data.profiles import two_class_profile
from chunglu_cutoff.graphs.generator import sample_digraph
from chunglu_cutoff.graphs.serialization import HEADER, deserialize, serialize
from chunglu_cutoff.utils.errors import GraphFormatError


def test_round_trip_complete_graph(tmp_path, k4):
    path = serialize(k4.with_provenance(seed=123, profile_digest=bytes(range(32))), tmp_path / "k4.cldg")
    back = deserialize(path)
    assert back.identical(k4.with_provenance(seed=123, profile_digest=bytes(range(32))))
    assert path.read_bytes()[:4] == b"CLDG"


def test_file_size_matches_layout(tmp_path, three_vertex):
    path = serialize(three_vertex, tmp_path / "g.cldg")
    n, m = three_vertex.n, three_vertex.edge_count
    assert path.stat().st_size == HEADER.itemsize + 2 * (8 * (n + 1) + 4 * m)


def test_round_trip_sampled_graph(tmp_path):
    profile = two_class_profile(20_000, 3.0, 1.5, 0.3)
    g = sample_digraph(profile, 99)
    back = deserialize(serialize(g, tmp_path / "big.cldg"))
    assert back.content_digest() == g.content_digest()
    assert back.profile_digest == profile.digest()
    assert back.seed == 99


def _corrupt(path, offset, value):
    data = bytearray(path.read_bytes())
    data[offset] = value
    path.write_bytes(bytes(data))


def test_bad_magic(tmp_path, k4):
    path = serialize(k4, tmp_path / "g.cldg")
    _corrupt(path, 0, ord("X"))
    with pytest.raises(GraphFormatError) as info:
        deserialize(path)
    assert info.value.reason == "bad magic"


def test_unsupported_version(tmp_path, k4):
    path = serialize(k4, tmp_path / "g.cldg")
    _corrupt(path, 4, 7)
    with pytest.raises(GraphFormatError) as info:
        deserialize(path)
    assert info.value.reason == "unsupported version"


@pytest.mark.parametrize("keep", [10, HEADER.itemsize + 5, -3])
def test_truncated(tmp_path, k4, keep):
    path = serialize(k4, tmp_path / "g.cldg")
    path.write_bytes(path.read_bytes()[:keep])
    with pytest.raises(GraphFormatError) as info:
        deserialize(path)
    assert info.value.reason == "truncated"


def test_trailing_bytes(tmp_path, k4):
    path = serialize(k4, tmp_path / "g.cldg")
    path.write_bytes(path.read_bytes() + b"\0\0")
    with pytest.raises(GraphFormatError) as info:
        deserialize(path)
    assert info.value.reason == "corrupt"


def test_offsets_must_match_edge_count(tmp_path, k4):
    path = serialize(k4, tmp_path / "g.cldg")
    data = bytearray(path.read_bytes())
    last_offset = HEADER.itemsize + 8 * k4.n
    data[last_offset:last_offset + 8] = np.array([5], dtype="<u8").tobytes()
    path.write_bytes(bytes(data))
    with pytest.raises(GraphFormatError) as info:
        deserialize(path)
    assert info.value.reason == "corrupt"
