import json
import struct

import numpy as np
import pytest

from ccmarl import checkpoint
from ccmarl.ppo import PolicySet, Sharing


@pytest.mark.parametrize("sharing", list(Sharing))
def test_roundtrip_is_byte_exact(sharing, tmp_path):
    policy = PolicySet.init(1, sharing, np.random.default_rng(0))
    data = checkpoint.save(tmp_path / "a.ckpt", policy, {"iteration": 3})
    loaded, meta = checkpoint.load(tmp_path / "a.ckpt")
    assert meta == {"iteration": 3}
    assert loaded.sharing is Sharing.parse(sharing)
    assert list(loaded.params) == list(policy.params)
    for k in policy.params:
        np.testing.assert_array_equal(loaded.params[k], policy.params[k])
        assert loaded.params[k].dtype == np.float32
    assert checkpoint.dumps(loaded, meta) == data


def test_header_layout():
    policy = PolicySet.init(2, "fully-shared", np.random.default_rng(0))
    data = checkpoint.dumps(policy)
    assert data[:8] == b"CCMARLCK"
    version, hlen = struct.unpack_from("<II", data, 8)
    header = json.loads(data[16:16 + hlen])
    assert version == header["format_version"] == 1
    assert header["n"] == 2 and header["sharing"] == "fully-shared"
    shapes = {t["name"]: t["shape"] for t in header["tensors"]}
    assert shapes["enc0.W1"] == [64, 648]
    assert shapes["pi0.W"] == [973, 64]
    payload = sum(int(np.prod(s)) for s in shapes.values()) * 4
    assert len(data) == 16 + hlen + payload
    # payload is little-endian float32 in header order
    first = np.frombuffer(data, "<f4", count=4, offset=16 + hlen)
    np.testing.assert_array_equal(first, policy.params["enc0.W1"].reshape(-1)[:4])


def test_corrupt_inputs_are_rejected(tmp_path):
    data = checkpoint.dumps(PolicySet.init(1, "independent", np.random.default_rng(0)))
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.loads(b"NOTACKPT" + data[8:])
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.loads(data[:-4])
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.loads(data + b"\0")
    bad = bytearray(data)
    struct.pack_into("<I", bad, 8, 99)
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.loads(bytes(bad))
    with pytest.raises(FileNotFoundError):
        checkpoint.load(tmp_path / "missing.ckpt")
