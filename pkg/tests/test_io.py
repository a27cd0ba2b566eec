import json

import numpy as np
import pytest

from wha import BUILTINS, fp2, kz2
from wha.coaction import Coaction, regular_coaction, source_coaction
from wha.hayashi import BUILTIN_FUSION, FusionData, vecz2
from wha.io import (
    SCHEMA,
    SchemaError,
    coaction_to_dict,
    decode_complex,
    dumps,
    encode_complex,
    load,
    loads,
    resolve,
    save,
    to_dict,
)
from wha.linalg import err
from wha.weakhopf import WeakHopf


def _objects():
    out = {}
    for name, f in sorted(BUILTINS.items()):
        G = f()
        out[name] = G
        out[name + ".algebra"] = G.algebra
        out[name + "/regular"] = regular_coaction(G)
        out[name + "/source"] = source_coaction(G)
    for name, f in sorted(BUILTIN_FUSION.items()):
        out[name] = f()
    return out


OBJECTS = _objects()


@pytest.mark.parametrize("key", sorted(OBJECTS))
def test_byte_identical_roundtrip(key, tmp_path):
    p = tmp_path / "x.json"
    save(OBJECTS[key], p)
    first = p.read_bytes()
    save(load(p), p)
    assert p.read_bytes() == first


def test_complex_encoding():
    a = np.array([[1 + 2j, -0.5]])
    enc = encode_complex(a)
    assert enc == [[[1.0, 2.0], [-0.5, 0.0]]]
    assert np.array_equal(decode_complex(enc), a)
    with pytest.raises(SchemaError):
        decode_complex([[1.0, 2.0, 3.0]])
    with pytest.raises(SchemaError):
        decode_complex(enc, (2, 1))


def test_document_header():
    doc = json.loads(dumps(fp2()))
    assert doc["schema"] == SCHEMA == "wha/1" and doc["kind"] == "weakhopf"


def test_values_survive():
    G = loads(dumps(fp2()))
    assert isinstance(G, WeakHopf) and G.is_valid()
    assert err(G.comult, fp2().comult) == 0


def test_fusion_survives():
    Fd = loads(dumps(vecz2(True)))
    assert isinstance(Fd, FusionData)
    assert Fd.f(1, 1, 1, 1, 0, 0) == pytest.approx(-1)


class TestGroupoidReference:
    def test_builtin_reference(self):
        doc = coaction_to_dict(regular_coaction(fp2()), "builtin:fp2")
        C = loads(json.dumps(doc))
        assert isinstance(C, Coaction) and C.is_valid()

    def test_relative_path(self, tmp_path):
        save(kz2(), tmp_path / "g.json")
        (tmp_path / "c.json").write_text(json.dumps(coaction_to_dict(regular_coaction(kz2()), "g.json")))
        C = load(tmp_path / "c.json")
        assert err(C.parent.comult, kz2().comult) == 0

    def test_fpn_bound(self):
        doc = coaction_to_dict(regular_coaction(fp2()), "builtin:fp5")
        with pytest.raises(SchemaError, match="n <= 4"):
            loads(json.dumps(doc))


class TestResolve:
    def test_builtins(self):
        assert isinstance(resolve("builtin:fp2"), WeakHopf)
        assert isinstance(resolve("builtin:kz2/source"), Coaction)
        assert isinstance(resolve("builtin:vecz2-fusion"), FusionData)

    @pytest.mark.parametrize("ref", ["builtin:fp5", "builtin:nope", "builtin:fp2/left", "builtin:fpx"])
    def test_unknown(self, ref):
        with pytest.raises(SchemaError):
            resolve(ref)

    def test_file(self, tmp_path):
        save(fp2(), tmp_path / "g.json")
        assert isinstance(resolve(str(tmp_path / "g.json")), WeakHopf)


class TestSchemaErrors:
    def test_not_json(self):
        with pytest.raises(SchemaError):
            loads("{not json")

    def test_wrong_schema(self):
        doc = to_dict(fp2())
        doc["schema"] = "wha/0"
        with pytest.raises(SchemaError):
            loads(json.dumps(doc))

    def test_unknown_kind(self):
        doc = to_dict(fp2())
        doc["kind"] = "monoid"
        with pytest.raises(SchemaError):
            loads(json.dumps(doc))

    def test_missing_field(self):
        doc = to_dict(fp2())
        del doc["comult"]
        with pytest.raises(SchemaError):
            loads(json.dumps(doc))

    def test_wrong_shape(self):
        doc = to_dict(fp2())
        doc["counit"] = doc["counit"][:3]
        with pytest.raises(SchemaError):
            loads(json.dumps(doc))

    def test_fusion_bad_label(self):
        doc = to_dict(vecz2())
        doc["unit"] = "7"
        with pytest.raises(SchemaError):
            loads(json.dumps(doc))

    def test_not_serializable(self):
        with pytest.raises(TypeError):
            to_dict(object())
