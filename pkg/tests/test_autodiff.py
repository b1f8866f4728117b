import numpy as np
import pytest

from radar_recon import autodiff as ad
from radar_recon.autodiff import Tensor, grad_check
from radar_recon.errors import UsageError


def rand(*shape, seed=0, name=None):
    return Tensor(np.random.default_rng(seed).normal(size=shape), True, name)


def test_mul_grad():
    x, w = Tensor(3.0), Tensor(2.0, True)
    (x * w).backward()
    assert w.grad == 3.0


def test_sum_identity_grad():
    x = rand(3, 4)
    x.sum().backward()
    assert np.array_equal(x.grad, np.ones((3, 4)))


def test_backward_twice_is_usage_error():
    x = rand(2)
    y = (x * x).sum()
    y.backward()
    with pytest.raises(UsageError):
        y.backward()
    with pytest.raises(UsageError):
        Tensor(1.0).backward()


def test_grad_accumulates_over_reuse():
    x = Tensor(np.array([1.0, 2.0]), True)
    (x * x + x).sum().backward()
    assert np.allclose(x.grad, [3.0, 5.0])


def test_no_grad():
    x = rand(3)
    with ad.no_grad():
        y = x * 2
    assert not y.requires_grad


def test_broadcast_grad():
    a, b = rand(4, 3, seed=1), rand(3, seed=2)
    (a * b).sum().backward()
    assert np.allclose(b.grad, a.data.sum(axis=0))


def test_smooth_l1_branches():
    v = ad.smooth_l1(Tensor(np.array([0.4, 2.0, -2.0, 0.5])))
    assert v.data.tolist() == [0.5 * 0.4 ** 2, 1.5, 1.5, 0.0]
    assert v.data[0] == pytest.approx(0.08, abs=1e-16)


def test_smooth_l1_continuous():
    v = ad.smooth_l1(Tensor(np.array([0.4, 2.0, 0.5])), continuous=True)
    assert np.allclose(v.data, [0.16, 1.75, 0.25])


def test_modulus_zero_grad():
    re, im = Tensor(np.array([0.0, 3.0]), True), Tensor(np.array([0.0, 4.0]), True)
    ad.modulus(re, im).sum().backward()
    assert np.allclose(re.grad, [0.0, 0.6]) and np.allclose(im.grad, [0.0, 0.8])


def test_softmax_rows():
    s = ad.softmax(rand(5, 7, seed=3), axis=-1)
    assert np.allclose(s.data.sum(axis=-1), 1.0, atol=1e-12)


def test_instance_norm_stats():
    x = Tensor(10 * np.random.default_rng(4).normal(size=(2, 3, 8, 6)) + 5)
    y = ad.instance_norm(x).data
    assert np.abs(y.mean(axis=(2, 3))).max() < 1e-9
    assert np.abs(y.var(axis=(2, 3)) - 1).max() < 1e-6


def test_conv2d_matches_direct():
    x, w = rand(1, 2, 5, 4, seed=5), rand(3, 2, 3, 3, seed=6)
    out = ad.conv2d(x, w).data
    xp = np.pad(x.data, ((0, 0), (0, 0), (1, 1), (1, 1)))
    ref = np.zeros((1, 3, 5, 4))
    for o in range(3):
        for i in range(5):
            for j in range(4):
                ref[0, o, i, j] = np.sum(xp[0, :, i:i + 3, j:j + 3] * w.data[o])
    assert np.allclose(out, ref)


def test_conv_transpose_shape_and_adjoint():
    # transpose conv is the adjoint of a stride-2 conv: <T x, y> = <x, T* y>
    x, w = rand(1, 2, 3, 4, seed=7), rand(2, 3, 3, 3, seed=8)
    y = ad.conv_transpose2d(x, w)
    assert y.shape == (1, 3, 6, 8)
    g = np.random.default_rng(9).normal(size=y.shape)
    (y * Tensor(g)).sum().backward()
    assert np.sum(x.grad * x.data) == pytest.approx(np.sum(g * y.data))


def test_avg_pool():
    x = Tensor(np.arange(16.0).reshape(1, 1, 4, 4))
    assert np.array_equal(ad.avg_pool2d(x).data[0, 0], [[2.5, 4.5], [10.5, 12.5]])


@pytest.mark.parametrize("name,fn,shapes,tol", [
    ("conv", lambda x, w, b: ad.conv2d(x, w, b), [(2, 3, 6, 4), (4, 3, 3, 3), (4,)], 1e-6),
    ("tconv", lambda x, w, b: ad.conv_transpose2d(x, w, b), [(2, 3, 3, 2), (3, 4, 3, 3), (4,)], 1e-6),
    ("norm", lambda x, g, b: ad.instance_norm(x, g, b), [(2, 3, 4, 4), (3,), (3,)], 1e-5),
    ("matmul", lambda a, b, c: (a @ b) + c, [(2, 3, 4), (4, 5), (5,)], 1e-6),
])
def test_layer_grad_check(name, fn, shapes, tol):
    ts = [rand(*s, seed=i + 10, name=f"{name}{i}") for i, s in enumerate(shapes)]
    g = np.random.default_rng(99).normal(size=fn(*ts).shape)
    report = grad_check(lambda: (fn(*ts) * Tensor(g)).sum(), ts)
    assert max(report.values()) < tol, report


def test_elementwise_grad_check():
    a, b = rand(3, 4, seed=20, name="a"), rand(3, 4, seed=21, name="b")
    b.data = np.abs(b.data) + 0.5

    def f():
        x = ad.leaky_relu(a, 0.1) * ad.sqrt(b) + ad.exp(a * 0.3) / b
        y = ad.smooth_l1(a, 0.5) + ad.modulus(a, b) + ad.softmax(a, axis=1)
        return (x + y - ad.tabs(b)).mean() + ad.concat([a, b], axis=0)[1:4].sum()

    assert max(grad_check(f, [a, b]).values()) < 1e-6


def test_attention_grad_check():
    from radar_recon.model import ModelConfig, build_model, channel_attention
    m = build_model(ModelConfig(1, 1, base_width=2, depth=1), seed=0)
    f = rand(1, 4, 2, 2, seed=30, name="f")
    ps = [m.params[k] for k in m.params if k.startswith("attn")] + [f]
    rep = grad_check(lambda: (channel_attention(m, f) ** 2).sum(), ps)
    assert max(rep.values()) < 1e-5, rep
