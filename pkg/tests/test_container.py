import io

import pytest

from pprsearch import container
from pprsearch.grouped_index import build_grouped, push_targets
from pprsearch.sampler_search import build_sampler_index

from conftest import random_graph

ALPHA = 0.2


@pytest.fixture
def g():
    return random_graph(60, 3)


class TestRoundTrip:
    def test_grouped(self, g):
        idx = build_grouped(g, ALPHA, [1, 5, 9], 0.02)
        kind, alpha, sections = container.loads(container.dumps("grouped", g, ALPHA, {"kw": idx}), g)
        assert (kind, alpha) == ("grouped", ALPHA)
        assert sections["kw"] == idx
        assert sections["kw"].stats == idx.stats

    def test_sampling(self, g):
        a = build_sampler_index(g, ALPHA, [2, 3], 0.05)
        b = build_sampler_index(g, ALPHA, [7], 0.01)
        _, _, sections = container.loads(container.dumps("sampling", g, ALPHA, {"a": a, "b": b}), g)
        for name, idx in (("a", a), ("b", b)):
            got = sections[name]
            assert got == idx
            for v in idx.samplers:
                assert got.samplers[v].prob.tolist() == idx.samplers[v].prob.tolist()

    def test_reverse(self, g):
        vectors = push_targets(g, ALPHA, [4, 8], 0.03)
        _, _, sections = container.loads(container.dumps("reverse", g, ALPHA, {"x": (0.03, vectors)}), g)
        r_max, got = sections["x"]
        assert r_max == 0.03
        assert [(y.target, y.p, y.r, y.r_max_achieved) for y in got] == \
               [(y.target, y.p, y.r, y.r_max_achieved) for y in vectors]

    def test_byte_identical(self, g):
        a = container.dumps("grouped", g, ALPHA, {"kw": build_grouped(g, ALPHA, [1, 5], 0.02)})
        b = container.dumps("grouped", g, ALPHA, {"kw": build_grouped(g, ALPHA, [5, 1], 0.02)})
        assert a == b

    def test_file_helpers(self, g, tmp_path):
        idx = build_grouped(g, ALPHA, [1], 0.1)
        path = tmp_path / "i.bin"
        size = container.save(path, "grouped", g, ALPHA, {"k": idx})
        assert size == path.stat().st_size
        assert container.load(path, g)[2]["k"] == idx
        assert container.read_from(io.BytesIO(path.read_bytes()), g)[2]["k"] == idx


class TestRejects:
    def _data(self, g):
        return container.dumps("grouped", g, ALPHA, {"kw": build_grouped(g, ALPHA, [1, 5], 0.02)})

    def test_corruption(self, g):
        data = bytearray(self._data(g))
        data[len(data) // 2] ^= 0xFF
        with pytest.raises(container.ContainerError, match="checksum"):
            container.loads(bytes(data), g)

    def test_magic(self, g):
        data = b"XXXXXX" + self._data(g)[6:]
        with pytest.raises(container.ContainerError, match="magic"):
            container.loads(data, g)

    def test_version(self, g):
        data = bytearray(self._data(g))
        data[6] = 99
        with pytest.raises(container.ContainerError, match="version"):
            container.loads(bytes(data), g)

    def test_truncated(self):
        with pytest.raises(container.ContainerError):
            container.loads(b"PPRIDX")

    def test_other_graph(self, g):
        with pytest.raises(container.ContainerError, match="different graph"):
            container.loads(self._data(g), random_graph(60, 4))

    def test_wrong_section_type(self, g):
        with pytest.raises(TypeError):
            container.dumps("sampling", g, ALPHA, {"kw": build_grouped(g, ALPHA, [1], 0.1)})
