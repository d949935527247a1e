import numpy as np
import pytest

from nrs import ArchSpec, build_network
from nrs.checkpoint import (Checkpoint, CheckpointError, load_checkpoint,
                            save_checkpoint)


def trained_net(**kw):
    net = build_network(ArchSpec(d=4, n_outputs=3, task="classification",
                                 n_mul=2, n_h=2, seed=3, **kw))
    X = np.random.default_rng(0).standard_normal((8, 4))
    net.forward(X)  # moves running statistics
    return net, X


@pytest.mark.parametrize("kw", [{}, {"arch": "mlp3"},
                                {"expansion": "dense_frozen"}])
def test_round_trip_bit_exact(tmp_path, kw):
    net, X = trained_net(**kw)
    stats = (np.arange(4.0), np.ones(4))
    save_checkpoint(tmp_path / "a.ckpt",
                    Checkpoint(net, (0.0, 1.0, 2.0), stats, {"lr": 0.1},
                               {"epoch": 3}))
    ck = load_checkpoint(tmp_path / "a.ckpt")
    assert ck.classes == (0.0, 1.0, 2.0)
    assert ck.extra["epoch"] == 3 and ck.optimizer["lr"] == 0.1
    np.testing.assert_array_equal(ck.norm_stats[0], stats[0])
    a, b = net.named_params(), ck.net.named_params()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert np.array_equal(net.predict(X), ck.net.predict(X))


def test_same_state_same_bytes(tmp_path):
    net, _ = trained_net()
    save_checkpoint(tmp_path / "a.ckpt", Checkpoint(net))
    save_checkpoint(tmp_path / "b.ckpt", Checkpoint(net))
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_rejects_garbage(tmp_path):
    (tmp_path / "x.ckpt").write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "x.ckpt")


def test_rejects_truncated(tmp_path):
    net, _ = trained_net()
    save_checkpoint(tmp_path / "a.ckpt", Checkpoint(net))
    data = (tmp_path / "a.ckpt").read_bytes()
    (tmp_path / "a.ckpt").write_bytes(data[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "a.ckpt")
