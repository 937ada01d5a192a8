import numpy as np
import pytest

from ccmarl import nn


def rel_err(a, b):
    a, b = np.asarray(a, np.float64), np.asarray(b, np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


def numeric_grad(f, arr, h=1e-3):
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = arr[i]
        arr[i] = old + h
        up = f()
        arr[i] = old - h
        down = f()
        arr[i] = old
        g[i] = (up - down) / (2 * h)
    return g


@pytest.fixture
def small_net():
    rng = np.random.default_rng(7)
    enc = nn.init_encoder(rng, 24, hidden=10, dtype=np.float64)
    for k in ("b1", "b2"):
        enc[k] = rng.normal(0, 0.3, enc[k].shape)
    pi = nn.init_linear(rng, 9, 10, gain=1.0, dtype=np.float64)
    vf = nn.init_linear(rng, 1, 10, dtype=np.float64)
    x = (rng.random((5, 24)) < 0.3).astype(np.float64)
    mask = rng.random((5, 9)) < 0.6
    mask[:, 0] = True
    return enc, pi, vf, x, mask, rng


def test_encoder_zero_weights_give_zero():
    p = {k: np.zeros_like(v) for k, v in nn.init_encoder(np.random.default_rng(0), 12, 8).items()}
    assert not nn.encoder_forward(p, np.ones(12, np.float32)).any()


def test_dead_relu_ignores_first_layer():
    p = nn.init_encoder(np.random.default_rng(0), 12, 8)
    p["W2"][:] = 0
    x = np.ones(12, np.float32)
    a = nn.encoder_forward(p, x)
    p["W1"] *= 2
    np.testing.assert_array_equal(a, nn.encoder_forward(p, x))


def test_encoder_shape_error():
    p = nn.init_encoder(np.random.default_rng(0), 12, 8)
    with pytest.raises(nn.ShapeError):
        nn.encoder_forward(p, np.zeros(13))


def test_sparse_forward_matches_dense():
    rng = np.random.default_rng(3)
    p = nn.init_encoder(rng, 40, 16)
    x = (rng.random(40) < 0.25).astype(np.float32)
    np.testing.assert_allclose(nn.encoder_forward_sparse(p, np.flatnonzero(x)), nn.encoder_forward(p, x),
                               rtol=1e-5, atol=1e-6)


def test_forward_is_deterministic():
    p = nn.init_encoder(np.random.default_rng(5), 30, 8)
    x = np.random.default_rng(6).random((4, 30)).astype(np.float32)
    np.testing.assert_array_equal(nn.encoder_forward(p, x), nn.encoder_forward(p, x))


def _full_loss(enc, pi, vf, x, mask, actions, targets, c_ent):
    cache = {}
    h = nn.encoder_forward(enc, x, cache)
    logits = nn.linear_forward(pi, h)
    v = nn.linear_forward(vf, h)[:, 0]
    dist = nn.MaskedCategorical(logits, mask)
    return float(-dist.log_prob(actions).sum() + 0.5 * ((v - targets) ** 2).sum() - c_ent * dist.entropy().sum())


def _full_grads(enc, pi, vf, x, mask, actions, targets, c_ent):
    cache = {}
    h = nn.encoder_forward(enc, x, cache)
    logits = nn.linear_forward(pi, h)
    v = nn.linear_forward(vf, h)[:, 0]
    logp = nn.masked_logprobs(logits, mask)
    p = np.exp(logp)
    onehot = np.zeros_like(p)
    onehot[np.arange(len(actions)), actions] = 1
    d_logits = p - onehot
    # d(-H)/dlogits = p * (logp + H)
    safe = np.where(p > 0, logp, 0.0)
    H = -(p * safe).sum(1, keepdims=True)
    d_logits += c_ent * p * (safe + H)
    g_pi, dh_pi = nn.linear_backward(pi, h, d_logits)
    dv = (v - targets)[:, None]
    g_vf, dh_vf = nn.linear_backward(vf, h, dv)
    g_enc = nn.encoder_backward(enc, cache, dh_pi + dh_vf)
    return g_enc, g_pi, g_vf


def test_gradients_match_finite_differences(small_net):
    enc, pi, vf, x, mask, rng = small_net
    actions = np.array([np.flatnonzero(m)[-1] for m in mask])
    targets = rng.normal(size=5)
    g_enc, g_pi, g_vf = _full_grads(enc, pi, vf, x, mask, actions, targets, 0.05)

    def f():
        return _full_loss(enc, pi, vf, x, mask, actions, targets, 0.05)

    for params, grads in ((enc, g_enc), (pi, g_pi), (vf, g_vf)):
        for k in params:
            assert rel_err(grads[k], numeric_grad(f, params[k])) < 1e-4, k


def test_masked_actions_get_zero_gradient(small_net):
    enc, pi, vf, x, mask, rng = small_net
    actions = np.array([np.flatnonzero(m)[0] for m in mask])
    _, g_pi, _ = _full_grads(enc, pi, vf, x, mask, actions, np.zeros(5), 0.1)
    # a head row whose action is masked in every sample receives no gradient
    for a in range(mask.shape[1]):
        if not mask[:, a].any():
            assert not g_pi["W"][a].any()
            assert g_pi["b"][a] == 0


# ----------------------------------------------------------------------------- masked categorical
def test_uniform_logits_give_minus_log_k():
    mask = np.array([1, 0, 1, 1, 0], bool)
    lp = nn.masked_logprobs(np.zeros(5), mask)
    np.testing.assert_allclose(lp[mask], -np.log(3))
    assert np.all(np.isneginf(lp[~mask]))


def test_single_legal_action_is_certain():
    d = nn.MaskedCategorical(np.random.default_rng(0).normal(size=6), np.eye(6, dtype=bool)[2])
    assert d.probs[2] == 1.0
    assert d.entropy() == 0.0
    assert d.sample(np.random.default_rng(1)) == 2


def test_shift_invariance():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=10)
    mask = rng.random(10) < 0.5
    mask[0] = True
    np.testing.assert_allclose(nn.MaskedCategorical(logits, mask).probs,
                               nn.MaskedCategorical(logits + 123.4, mask).probs, atol=1e-12)


def test_masked_probabilities_exactly_zero_and_sum_to_one():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(20, 30)).astype(np.float32) * 5
    mask = rng.random((20, 30)) < 0.3
    mask[:, 5] = True
    p = nn.MaskedCategorical(logits, mask).probs
    assert np.all(p[~mask] == 0)
    np.testing.assert_allclose(p.sum(1), 1, atol=1e-6)


def test_uniform_entropy_is_log_k():
    mask = np.zeros(8, bool)
    mask[:5] = True
    assert nn.MaskedCategorical(np.zeros(8), mask).entropy() == pytest.approx(np.log(5))


def test_all_masked_rejected():
    with pytest.raises(ValueError):
        nn.masked_logprobs(np.zeros(4), np.zeros(4, bool))


def test_sampling_frequencies_within_three_sigma():
    rng = np.random.default_rng(11)
    logits = np.array([0.5, -1.0, 2.0, 0.0, 1.0, 0.3])
    mask = np.array([1, 1, 1, 0, 1, 1], bool)
    d = nn.MaskedCategorical(logits, mask)
    draws = 100_000
    counts = np.bincount([d.sample(rng) for _ in range(draws)], minlength=6)
    expected = draws * d.probs
    sigma = np.sqrt(draws * d.probs * (1 - d.probs))
    assert counts[3] == 0
    assert np.all(np.abs(counts - expected) <= 3 * sigma + 1e-9)


def test_argmax_ignores_masked():
    d = nn.MaskedCategorical(np.array([5.0, 1.0, 2.0]), np.array([0, 1, 1], bool))
    assert d.argmax() == 2


# ----------------------------------------------------------------------------- adam
def test_zero_gradient_leaves_parameters():
    p = {"w": np.array([1.0, -2.0, 3.0])}
    opt = nn.Adam(lr=0.1)
    opt.step(p, {"w": np.zeros(3)})
    np.testing.assert_array_equal(p["w"], [1.0, -2.0, 3.0])


def test_first_step_moves_by_lr_against_sign():
    p = {"w": np.array([1.0, 1.0, 1.0, 1.0])}
    g = np.array([0.3, -5.0, 1e-2, -1e-3])
    nn.Adam(lr=0.01, eps=1e-12).step(p, {"w": g})
    np.testing.assert_allclose(p["w"] - 1.0, -0.01 * np.sign(g), rtol=1e-6)


def test_non_finite_gradient_raises():
    p = {"w": np.zeros(2)}
    with pytest.raises(nn.TrainingError):
        nn.Adam().step(p, {"w": np.array([0.0, np.nan])})
    assert not p["w"].any()


def test_untouched_tensors_keep_their_state():
    p = {"a": np.ones(2), "b": np.ones(2)}
    opt = nn.Adam(lr=0.1)
    opt.step(p, {"a": np.ones(2)})
    opt.step(p, {"a": np.ones(2)})
    assert opt.t == {"a": 2}
    np.testing.assert_array_equal(p["b"], 1.0)


def test_quadratic_bowl_converges():
    rng = np.random.default_rng(0)
    a = np.diag(rng.uniform(0.5, 3.0, 5))
    target = rng.normal(size=5)
    p = {"w": np.zeros(5)}
    opt = nn.Adam(lr=0.01)
    for _ in range(5000):
        opt.step(p, {"w": a @ (p["w"] - target)})
    assert np.max(np.abs(p["w"] - target)) < 1e-3


def test_init_is_orthogonal_with_small_policy_gain():
    rng = np.random.default_rng(0)
    enc = nn.init_encoder(rng, 100, 16, dtype=np.float64)
    w = enc["W1"]
    np.testing.assert_allclose(w @ w.T, 2.0 * np.eye(16), atol=1e-10)
    head = nn.init_linear(rng, 50, 16, gain=0.01, dtype=np.float64)
    np.testing.assert_allclose(head["W"].T @ head["W"], 1e-4 * np.eye(16), atol=1e-12)
