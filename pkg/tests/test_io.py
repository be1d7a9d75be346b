import json

import numpy as np
import pytest

from lagrecover.errors import InvalidInstance
from lagrecover.instances import random_lattice_instance
from lagrecover.io import (
    decode_block,
    dumps,
    encode_block,
    instance_digest,
    instance_from_dict,
    instance_to_dict,
    instances_equal,
    load_instance,
    save_instance,
)
from lagrecover.model import Instance, VertexList
from lagrecover.pev import FleetParams, generate_fleet


def _cases(ex1):
    v = VertexList(points_=[[0.1, 0.2], [1.0 / 3.0, 2.0]], cost=[np.pi, -np.e])
    return [
        ex1,
        random_lattice_instance(3, m=2),
        Instance([v], [[[1.0, 2.0]]], [0.7], {"name": "vl"}),
        generate_fleet(FleetParams(n_pevs=3, seed=1, n_steps=6)),
        generate_fleet(FleetParams(n_pevs=2, seed=2, v2g=True)),
    ]


def test_round_trip_exact(ex1, tmp_path):
    for k, inst in enumerate(_cases(ex1)):
        path = tmp_path / f"{k}.json"
        save_instance(inst, path)
        back = load_instance(path)
        assert instances_equal(inst, back)
        assert instance_digest(inst) == instance_digest(back)
        for a, b in zip(inst.subsystems, back.subsystems):
            assert np.array_equal(a.cost, b.cost)


def test_same_seed_byte_identical(tmp_path):
    for k in range(2):
        save_instance(generate_fleet(FleetParams(n_pevs=10, seed=5)), tmp_path / f"{k}.json")
    assert (tmp_path / "0.json").read_bytes() == (tmp_path / "1.json").read_bytes()


def test_sparse_block_encoding():
    H = np.zeros((48, 24))
    H[np.arange(24), np.arange(24)] = 3.5
    enc = encode_block(H)
    assert isinstance(enc, dict) and len(enc["entries"]) == 24
    assert np.array_equal(decode_block(enc, 48, 24), H)
    small = np.array([[1.0, 2.0]])
    assert encode_block(small) == [[1.0, 2.0]]


def test_digest_ignores_meta(ex1):
    other = Instance(ex1.subsystems, ex1.coupling, ex1.resource, {"name": "renamed"})
    assert instance_digest(other) == instance_digest(ex1)
    assert not instances_equal(other, ex1)
    assert instance_digest(ex1.with_resource([11.0])) != instance_digest(ex1)


def test_bad_documents(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InvalidInstance):
        load_instance(p)
    with pytest.raises(InvalidInstance):
        instance_from_dict({"resource": [1]})
    with pytest.raises(InvalidInstance):
        instance_from_dict({"resource": [1], "subsystems": [{"kind": "blob"}]})
    with pytest.raises(InvalidInstance):
        instance_from_dict({"resource": [1], "subsystems": [{"kind": "vertices", "points": [[0]], "cost": [1]}]})


def test_format_header(ex1):
    doc = json.loads(dumps(ex1))
    assert doc["format"] == "lagrecover-instance" and doc["version"] == 1
    assert instance_to_dict(ex1)["subsystems"][1]["H"] == [[5.0, 1.0]]
