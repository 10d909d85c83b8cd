import numpy as np
import pytest

from convexattn.features import PatchSpec, rff_init
from convexattn.model import (
    ModelBundle,
    ModelFormatError,
    attend,
    attention_scores,
    attention_weights,
    batch_class_scores,
    class_scores,
    deserialize,
    param_count,
    predict,
    serialize,
    with_weights,
)
from convexattn.numutil import RngStream
from convexattn.projections import simplex_project


def make_bundle(K=4, C=4, T=10, P=10, m=3, seed=0, loss_kind="hinge"):
    spec = PatchSpec(channels=C, frames=T, patches=P)
    root = RngStream(seed)
    rff = rff_init(spec, m, 1.0, root.derive(1))
    A = root.derive(2).gauss(K * P * m, 0.0, 0.2).reshape(K, P, m)
    return ModelBundle(
        rff=rff,
        weights=A,
        spec=spec,
        n_classes=K,
        norm_mean=np.zeros(C),
        norm_std=np.ones(C),
        loss_kind=loss_kind,
    )


def test_scores_zero_weights():
    Q = np.random.default_rng(0).normal(size=(5, 3))
    assert np.array_equal(attention_scores(Q, np.zeros((2, 5, 3))), np.zeros((2, 5)))


def test_scores_self_inner_product():
    rng = np.random.default_rng(1)
    Q = rng.normal(size=(4, 3))
    A = np.broadcast_to(Q, (2, 4, 3)).copy()
    s = attention_scores(Q, A)
    expect = np.sum(Q * Q, axis=1) / np.sqrt(3)
    assert np.allclose(s, np.stack([expect, expect]))


def test_scores_triple_loop_oracle():
    rng = np.random.default_rng(2)
    Q = rng.normal(size=(2, 3))
    A = rng.normal(size=(2, 2, 3))
    s = attention_scores(Q, A)
    for k in range(2):
        for p in range(2):
            ref = sum(Q[p, j] * A[k, p, j] for j in range(3)) / np.sqrt(3)
            assert abs(s[k, p] - ref) <= 1e-12


def test_attention_weights_uniform_row():
    s = np.full((1, 5), 3.7)
    assert np.allclose(attention_weights(s), np.full((1, 5), 0.2))


def test_attention_weights_match_projection():
    s = np.array([[2.0, 0.0]])
    assert np.allclose(attention_weights(s), [[1.0, 0.0]])


def test_attention_shift_invariance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        s = rng.uniform(-3, 3, size=8)
        c = rng.uniform(-5, 5)
        assert np.max(np.abs(simplex_project(s + c) - simplex_project(s))) <= 1e-12


def test_attend_one_hot_selects_patch():
    rng = np.random.default_rng(4)
    Q = rng.normal(size=(6, 3))
    alpha = np.zeros((2, 6))
    alpha[0, 2] = 1.0
    alpha[1] = 1.0 / 6
    out = attend(Q, alpha)
    assert np.allclose(out[0], Q[2])
    assert np.allclose(out[1], Q.mean(axis=0))


def test_attend_convex_combination_bound():
    rng = np.random.default_rng(5)
    for _ in range(50):
        Q = rng.normal(size=(7, 4))
        alpha = attention_weights(rng.normal(size=(3, 7)))
        out = attend(Q, alpha)
        lo, hi = Q.min(axis=0), Q.max(axis=0)
        assert np.all(out >= lo - 1e-12) and np.all(out <= hi + 1e-12)


def test_class_scores_zero_weights():
    Q = np.random.default_rng(6).normal(size=(5, 3))
    assert np.allclose(class_scores(Q, np.zeros((4, 5, 3))), np.zeros(4))


def test_class_scores_identity():
    # f_k equals sqrt(m) <alpha_k, s_k>
    rng = np.random.default_rng(7)
    Q = rng.normal(size=(2, 3))
    A = rng.normal(size=(2, 2, 3))
    s = attention_scores(Q, A)
    alpha = attention_weights(s)
    f = class_scores(Q, A)
    assert np.max(np.abs(f - np.sqrt(3) * np.sum(alpha * s, axis=1))) <= 1e-12


def test_batch_class_scores_matches_single():
    rng = np.random.default_rng(8)
    Q = rng.normal(size=(9, 5, 3))
    A = rng.normal(size=(4, 5, 3))
    f, alpha, s = batch_class_scores(Q, A)
    for i in range(9):
        assert np.allclose(f[i], class_scores(Q[i], A), atol=1e-12)


def test_predict_tie_breaks_low():
    bundle = make_bundle()
    zero = with_weights(bundle, np.zeros_like(bundle.weights))
    label, f = predict(np.zeros((4, 10)), zero)
    assert label == 0
    assert np.allclose(f, 0.0)


def test_predict_constructed_dominance():
    bundle = make_bundle()
    X = np.random.default_rng(9).normal(size=(4, 10))
    from convexattn.model import features_for

    Q = features_for(X, bundle)
    A = np.zeros((4, 10, 3))
    A[2] = Q  # class 2 aligns perfectly on every patch
    label, _ = predict(X, with_weights(bundle, A))
    assert label == 2


def test_predict_rejects_bad_dims():
    with pytest.raises(ValueError):
        predict(np.zeros((4, 12)), make_bundle())


def test_param_counts():
    assert param_count(make_bundle(K=4, P=10, m=3)) == (120, 4 * 3 + 3)
    assert param_count(make_bundle(K=4, T=30, P=30, m=3))[0] == 360
    # 6 features per frame: fixed part 6*3 + 3 = 21, total 141
    b = make_bundle(K=4, C=6, T=10, P=10, m=3)
    trainable, fixed = param_count(b)
    assert (trainable, fixed) == (120, 21)
    assert trainable + fixed == 141


def test_serialize_round_trip_64():
    bundle = make_bundle(seed=13, loss_kind="squared")
    again = deserialize(serialize(bundle))
    assert np.array_equal(again.weights, bundle.weights)
    assert np.array_equal(again.rff.W, bundle.rff.W)
    assert again.loss_kind == "squared"
    X = np.random.default_rng(10).normal(size=(4, 10))
    l1, f1 = predict(X, bundle)
    l2, f2 = predict(X, again)
    assert l1 == l2 and np.array_equal(f1, f2)


def test_serialize_32_label_parity():
    bundle = make_bundle(seed=14)
    again = deserialize(serialize(bundle, precision=32))
    rng = np.random.default_rng(11)
    flips = sum(
        predict(X, bundle)[0] != predict(X, again)[0]
        for X in rng.normal(size=(400, 4, 10))
    )
    assert flips == 0


def test_export_size_budget():
    # tuned tap sizing stays under the 7 KiB storage budget
    tap = make_bundle(K=4, C=4, T=10, P=10, m=9)
    swipe = make_bundle(K=4, C=4, T=30, P=30, m=3)
    assert len(serialize(tap, precision=32)) <= 7168
    assert len(serialize(swipe, precision=32)) <= 7168


def test_deserialize_diagnostics():
    data = serialize(make_bundle())
    with pytest.raises(ModelFormatError, match="magic"):
        deserialize(b"XXXX" + data[4:])
    with pytest.raises(ModelFormatError, match="version"):
        deserialize(data[:4] + b"\x63\x00" + data[6:])
    with pytest.raises(ModelFormatError, match="truncated"):
        deserialize(data[:-8])
    with pytest.raises(ModelFormatError, match="truncated"):
        deserialize(data[:10])
    bad_dim = bytearray(data)
    bad_dim[8:12] = (2**31 - 1).to_bytes(4, "little")  # K field
    with pytest.raises(ModelFormatError, match="overflow"):
        deserialize(bytes(bad_dim))


def test_score_scaling_identity():
    # s(cA) = c * s(A); attention itself need not be scale-invariant
    rng = np.random.default_rng(12)
    Q = rng.normal(size=(5, 3))
    A = rng.normal(size=(2, 5, 3))
    for c in (0.5, 2.0, 7.3):
        assert np.allclose(attention_scores(Q, c * A), c * attention_scores(Q, A))
