import math

import numpy as np
import pytest

from app.data_sources.dataset import Batch
from app.domain.errors import DimensionMismatchError, InvalidLabelError
from app.domain.losses import (
    combined_loss,
    combined_value,
    loss_cdstc,
    loss_ce,
    loss_cpc,
    loss_dstc,
    loss_pc,
    softmax_cross_entropy,
)
from app.domain.model import DstcModel, forward_all
from app.domain.nn_layers import LinearLayer, Mlp
from app.schemas.training import LossWeights, PointwiseMetric, Subnet


def linear(weight, bias=None) -> Mlp:
    weight = np.asarray(weight, dtype=float)
    bias = np.zeros(weight.shape[1]) if bias is None else np.asarray(bias, dtype=float)
    return Mlp(layers=[LinearLayer(weight=weight, bias=bias)])


def fixed_model(t_xy=None, t_yx=None, c_weight=None, e_y=None) -> DstcModel:
    eye = np.eye(2)
    c_weight = np.zeros((2, 2)) if c_weight is None else c_weight
    return DstcModel(
        e_x=linear(eye),
        e_y=linear(eye if e_y is None else e_y),
        c_x=linear(c_weight),
        c_y=linear(c_weight),
        t_xy=linear(eye if t_xy is None else t_xy),
        t_yx=linear(eye if t_yx is None else t_yx),
    )


def one_sample(x, y, label=0, classes=2) -> Batch:
    return Batch(x=np.array([x], dtype=float), y=np.array([y], dtype=float), labels=np.array([label]), num_classes=classes)


class TestSoftmaxCrossEntropy:
    def test_uniform_logits(self):
        labels = np.eye(4)[[0, 1, 2]]
        loss, _ = softmax_cross_entropy(np.zeros((3, 4)), labels)
        assert loss == pytest.approx(math.log(4), abs=1e-12)

    def test_confident_logits(self):
        logits = np.array([[40.0, 0.0, 0.0]])
        loss, _ = softmax_cross_entropy(logits, np.array([[1.0, 0.0, 0.0]]))
        assert loss <= 1e-12

    def test_matches_unstabilized_oracle(self):
        rng = np.random.default_rng(0)
        logits = rng.standard_normal((5, 3))
        labels = np.eye(3)[rng.integers(0, 3, size=5)]
        probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        oracle = -np.mean(np.sum(labels * np.log(probs), axis=1))
        loss, grad = softmax_cross_entropy(logits, labels)
        assert loss == pytest.approx(oracle, abs=1e-10)
        np.testing.assert_allclose(grad, (probs - labels) / 5, atol=1e-12)

    def test_large_logits_stay_finite(self):
        loss, grad = softmax_cross_entropy(np.array([[1000.0, -1000.0]]), np.array([[0.0, 1.0]]))
        assert loss == pytest.approx(2000.0)
        assert np.all(np.isfinite(grad))

    def test_rejects_non_one_hot(self):
        with pytest.raises(InvalidLabelError):
            softmax_cross_entropy(np.zeros((1, 2)), np.array([[0.5, 0.5]]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            softmax_cross_entropy(np.zeros((1, 2)), np.zeros((1, 3)))


class TestClassificationLosses:
    def test_uniform_ce_sums_both_modalities(self):
        model = fixed_model()
        batch = Batch(x=np.ones((2, 2)), y=np.ones((2, 2)), labels=np.array([0, 1]), num_classes=2)
        value, _ = loss_ce(model, batch)
        assert value == pytest.approx(2 * math.log(2), abs=1e-12)

    def test_ce_is_sum_of_paths(self, model, batch):
        bundle = forward_all(model, batch)
        value, _ = loss_ce(model, batch, bundle=bundle)
        x_part, _ = softmax_cross_entropy(bundle.logits_x, batch.one_hot)
        y_part, _ = softmax_cross_entropy(bundle.logits_y, batch.one_hot)
        assert value == pytest.approx(x_part + y_part, abs=1e-12)

    def test_dstc_with_identity_translators_equals_ce(self):
        rng = np.random.default_rng(1)
        model = fixed_model(c_weight=rng.standard_normal((2, 2)))
        batch = Batch(x=rng.standard_normal((3, 2)), y=rng.standard_normal((3, 2)), labels=np.array([0, 1, 0]), num_classes=2)
        ce, _ = loss_ce(model, batch)
        dstc, _ = loss_dstc(model, batch)
        cdstc, _ = loss_cdstc(model, batch)
        # 항등 번역기 + 같은 분류기 가중치: 번역 경로 logits가 단일 모달 logits와 같음
        assert dstc == pytest.approx(ce, abs=1e-12)
        assert cdstc == pytest.approx(ce, abs=1e-12)

    def test_uniform_dstc_two_classes(self):
        value, _ = loss_dstc(fixed_model(), one_sample([1.0, 0.0], [0.0, 1.0]))
        assert value == pytest.approx(2 * math.log(2), abs=1e-12)

    def test_ce_gradients_skip_translators(self, model, batch):
        _, grads = loss_ce(model, batch)
        assert not np.any(grads[Subnet.T_XY]["0.weight"])
        assert np.any(grads[Subnet.C_X]["0.weight"])


class TestPointwiseLosses:
    def test_orthogonal_unit_vectors(self):
        # ex=(1,0), tyx=T_yx(ey)=(0,1); ey=(1,0)=txy
        model = fixed_model(t_yx=np.array([[0.0, 1.0], [1.0, 0.0]]))
        value, _ = loss_pc(model, one_sample([1.0, 0.0], [1.0, 0.0]))
        assert value == pytest.approx(2.0, abs=1e-12)

    def test_cosine_normalizes_first(self):
        # ex=(3,0), tyx=(0,4); ey=(3,0)=txy
        model = fixed_model(t_yx=np.array([[0.0, 4.0 / 3.0], [1.0, 0.0]]))
        value, _ = loss_pc(model, one_sample([3.0, 0.0], [3.0, 0.0]), PointwiseMetric.COSINE)
        assert value == pytest.approx(2.0, abs=1e-12)

    def test_aligned_translations_give_zero(self):
        value, _ = loss_pc(fixed_model(), one_sample([0.3, -0.2], [0.3, -0.2]))
        assert value == pytest.approx(0.0, abs=1e-15)

    def test_identity_translators_zero_cycle(self):
        value, _ = loss_cpc(fixed_model(), one_sample([0.3, -0.2], [1.0, 4.0]))
        assert value == pytest.approx(0.0, abs=1e-15)

    def test_collapsed_round_trip(self):
        # t_xy가 0으로 보내므로 rtx=(0,0), ey=(0,0)이라 y 쪽 항은 0
        model = fixed_model(t_xy=np.zeros((2, 2)))
        value, _ = loss_cpc(model, one_sample([1.0, 0.0], [0.0, 0.0]))
        assert value == pytest.approx(1.0, abs=1e-12)


class TestCombinedLoss:
    def test_zero_weights_reduce_to_ce(self, model, batch):
        breakdown, _ = combined_loss(model, batch, LossWeights.zeros())
        assert breakdown.total == pytest.approx(breakdown.ce, abs=1e-12)

    def test_total_is_weighted_sum_of_components(self, model_factory, batch):
        weights = LossWeights(alpha=0.5, beta=2.0, gamma=3.0, delta=0.25)
        breakdown = combined_value(model_factory(), batch, weights)
        parts = {
            "ce": loss_ce(model_factory(), batch)[0],
            "pc": loss_pc(model_factory(), batch)[0],
            "dstc": loss_dstc(model_factory(), batch)[0],
            "cpc": loss_cpc(model_factory(), batch)[0],
            "cdstc": loss_cdstc(model_factory(), batch)[0],
        }
        for name, value in parts.items():
            assert getattr(breakdown, name) == pytest.approx(value, abs=1e-12)
        expected = parts["ce"] + 0.5 * parts["pc"] + 2.0 * parts["dstc"] + 3.0 * parts["cpc"] + 0.25 * parts["cdstc"]
        assert breakdown.total == pytest.approx(expected, abs=1e-12)

    def test_gradient_is_linear_in_weights(self, model_factory, batch):
        weights = LossWeights(alpha=2.0, beta=0.0, gamma=0.0, delta=0.0, ce_weight=0.0)
        _, combined = combined_loss(model_factory(), batch, weights)
        _, single = loss_pc(model_factory(), batch)
        np.testing.assert_allclose(combined[Subnet.E_X]["0.weight"], 2.0 * single[Subnet.E_X]["0.weight"], atol=1e-12)

    def test_zero_weight_terms_contribute_no_gradient(self, model, batch):
        _, grads = combined_loss(model, batch, LossWeights.zeros())
        assert not np.any(grads[Subnet.T_XY]["0.weight"])
        assert not np.any(grads[Subnet.T_YX]["0.weight"])


def swap_modalities(model: DstcModel) -> DstcModel:
    return DstcModel(
        e_x=model.e_y, e_y=model.e_x,
        c_x=model.c_y, c_y=model.c_x,
        t_xy=model.t_yx, t_yx=model.t_xy,
    )


class TestInvariances:
    @pytest.mark.parametrize("metric", [PointwiseMetric.EUCLIDEAN, PointwiseMetric.COSINE])
    def test_batch_order_does_not_change_losses(self, model_factory, batch, metric):
        order = np.random.default_rng(5).permutation(batch.size)
        shuffled = Batch(x=batch.x[order], y=batch.y[order], labels=batch.labels[order], num_classes=batch.num_classes)
        weights = LossWeights(pointwise_metric=metric)
        a = combined_value(model_factory(), batch, weights)
        b = combined_value(model_factory(), shuffled, weights)
        for name in ("ce", "pc", "dstc", "cpc", "cdstc", "total"):
            assert getattr(b, name) == pytest.approx(getattr(a, name), abs=1e-12)

    @pytest.mark.parametrize("metric", [PointwiseMetric.EUCLIDEAN, PointwiseMetric.COSINE])
    def test_swapping_modalities_does_not_change_losses(self, model_factory, batch, metric):
        swapped = Batch(x=batch.y, y=batch.x, labels=batch.labels, num_classes=batch.num_classes)
        weights = LossWeights(pointwise_metric=metric)
        a = combined_value(model_factory(), batch, weights)
        b = combined_value(swap_modalities(model_factory()), swapped, weights)
        for name in ("ce", "pc", "dstc", "cpc", "cdstc", "total"):
            assert getattr(b, name) == pytest.approx(getattr(a, name), abs=1e-12)

    @pytest.mark.parametrize("scale", [0.01, 3.7, 250.0])
    def test_cosine_pc_ignores_embedding_scale(self, scale):
        rng = np.random.default_rng(8)
        data = Batch(x=rng.standard_normal((5, 2)), y=rng.standard_normal((5, 2)), labels=np.zeros(5, dtype=int), num_classes=2)

        def with_x_scale(s: float) -> DstcModel:
            base = fixed_model()
            return DstcModel(e_x=linear(s * np.eye(2)), e_y=base.e_y, c_x=base.c_x, c_y=base.c_y, t_xy=base.t_xy, t_yx=base.t_yx)

        reference, _ = loss_pc(with_x_scale(1.0), data, PointwiseMetric.COSINE)
        scaled, _ = loss_pc(with_x_scale(scale), data, PointwiseMetric.COSINE)
        assert scaled == pytest.approx(reference, abs=1e-12)
        euclidean, _ = loss_pc(with_x_scale(scale), data, PointwiseMetric.EUCLIDEAN)
        assert euclidean != pytest.approx(loss_pc(with_x_scale(1.0), data)[0], abs=1e-6)
