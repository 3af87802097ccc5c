import numpy as np
import pytest

import gramqubo as gq
from gramqubo.annealer import AnnealConfig
from gramqubo.data import RawImage, Dataset, SubsampleSpec, load_digits_csv, subsample
from gramqubo.features import ConvSpec, FrozenConv
from gramqubo.surrogate import mean_cross_entropy, one_hot, softmax_probs
from gramqubo.trainer import (
    HistoryEntry,
    TrainConfig,
    _RunState,
    loss_increase_fraction,
    predict,
    train_classical,
    train_qubo,
)


@pytest.fixture(scope="module")
def tiny_digits(digits_csv):
    images, labels = load_digits_csv(digits_csv)
    return subsample(images, labels, SubsampleSpec(6, 3, seed=5), 10, name="digits")


@pytest.fixture(scope="module")
def small_conv():
    return gq.init_frozen_conv(ConvSpec(), 17)


def fast_cfg(**kw):
    base = dict(
        iterations=3,
        bits=3,
        seed=11,
        eval_every=2,
        anneal=AnnealConfig(num_sweeps=15, num_reads=1),
    )
    base.update(kw)
    return TrainConfig(**base)


class TestTrainQubo:
    def test_history_shape_and_eval_every(self, tiny_digits, small_conv):
        rec = train_qubo(tiny_digits, small_conv, fast_cfg(iterations=5, eval_every=2))
        assert len(rec.history) == 5
        assert [h.iteration for h in rec.history] == [1, 2, 3, 4, 5]
        evaluated = [h.test_accuracy is not None for h in rec.history]
        assert evaluated == [False, True, False, True, True]  # multiples of 2 plus final

    def test_deterministic(self, tiny_digits, small_conv):
        a = train_qubo(tiny_digits, small_conv, fast_cfg())
        b = train_qubo(tiny_digits, small_conv, fast_cfg())
        assert np.array_equal(a.final_weights.W_aug, b.final_weights.W_aug)
        for ha, hb in zip(a.history, b.history):
            assert ha.loss == hb.loss and ha.train_accuracy == hb.train_accuracy

    def test_update_bounded_by_delta_max(self, tiny_digits, small_conv):
        cfg = fast_cfg(iterations=1, delta_max=0.5)
        W0 = _RunState(tiny_digits, small_conv, cfg).init_weights()
        rec = train_qubo(tiny_digits, small_conv, cfg)
        step = np.abs(rec.final_weights.W_aug - W0)
        assert step.max() <= 0.5 + 1e-12

    def test_weight_init_matches_documented_scheme(self, tiny_digits, small_conv):
        cfg = fast_cfg()
        W0 = _RunState(tiny_digits, small_conv, cfg).init_weights()
        assert not W0[-1].any()  # biases start at zero
        assert np.abs(W0[:-1]).max() < 0.1  # std 0.01 draws

    def test_continuous_minimizer_never_increases_loss_on_convex_instance(self):
        """With the annealer swapped for the exact surrogate minimizer the
        first step must descend on a separable two-feature problem."""
        spec = ConvSpec(input_h=4, input_w=4, kernel=3, pool=2, filters=2)
        wa = np.zeros((3, 3))
        wa[0, 0] = 1.0  # fires on the top-left corner
        wb = np.zeros((3, 3))
        wb[2, 2] = 1.0  # fires on the bottom-right corner
        conv = FrozenConv(weights=np.stack([wa, wb]), biases=np.zeros(2), spec=spec, init_seed=0)

        def image(cls, level):
            px = np.zeros((4, 4))
            if cls == 0:
                px[:2, :2] = level
            else:
                px[2:, 2:] = level
            return RawImage(px)

        levels = [0.7, 0.85, 1.0]
        images = [image(0, v) for v in levels] + [image(1, v) for v in levels]
        labels = np.array([0] * 3 + [1] * 3)
        ds = Dataset(images, labels, images, labels, num_classes=2, name="synthetic")

        cfg = fast_cfg(iterations=1, lam=0.001)
        run = _RunState(ds, conv, cfg)
        W0 = run.init_weights()
        loss0 = mean_cross_entropy(softmax_probs(run.X_train, W0), run.Y, W0, cfg.lam)

        solver = lambda G_lambda, g, t, c: np.linalg.solve(G_lambda, -g)
        rec = train_qubo(ds, conv, cfg, update_solver=solver)
        assert rec.history[0].loss <= loss0 + 1e-12

    def test_timings_present(self, tiny_digits, small_conv):
        rec = train_qubo(tiny_digits, small_conv, fast_cfg())
        for key in ("features", "gram", "train", "total", "anneal"):
            assert key in rec.timings


class TestTrainClassical:
    def test_zero_learning_rate_freezes_weights(self, tiny_digits, small_conv):
        cfg = fast_cfg(iterations=4, learning_rate=0.0)
        W0 = _RunState(tiny_digits, small_conv, cfg).init_weights()
        rec = train_classical(tiny_digits, small_conv, cfg)
        assert np.array_equal(rec.final_weights.W_aug, W0)
        losses = {h.loss for h in rec.history}
        assert len(losses) == 1

    def test_small_lr_is_monotone(self, tiny_digits, small_conv):
        """Full-batch descent on the (convex) frozen-feature objective is
        non-increasing once the step is small enough; halve until it is."""
        lr = 0.2
        for _ in range(6):
            rec = train_classical(
                tiny_digits, small_conv, fast_cfg(iterations=40, learning_rate=lr)
            )
            losses = np.array([h.loss for h in rec.history])
            if np.all(np.diff(losses) <= 1e-12):
                return
            lr /= 2
        pytest.fail("no monotone learning rate found down to lr=%g" % lr)

    def test_deterministic(self, tiny_digits, small_conv):
        a = train_classical(tiny_digits, small_conv, fast_cfg(iterations=5))
        b = train_classical(tiny_digits, small_conv, fast_cfg(iterations=5))
        assert np.array_equal(a.final_weights.W_aug, b.final_weights.W_aug)


class TestPredict:
    def test_tie_breaks_to_lowest_class(self):
        X = np.array([[1.0, 1.0]])
        W = np.zeros((2, 4))
        assert predict(X, W)[0] == 0

    def test_dominant_logit_wins(self):
        X = np.eye(3)
        W = 5.0 * np.eye(3)
        np.testing.assert_array_equal(predict(X, W), [0, 1, 2])

    def test_agrees_with_softmax_argmax(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(30, 6))
        W = rng.normal(size=(6, 5))
        np.testing.assert_array_equal(
            predict(X, W), np.argmax(softmax_probs(X, W), axis=1)
        )


class TestLossIncreaseFraction:
    def _hist(self, losses):
        return [HistoryEntry(i + 1, v, 0.0, None) for i, v in enumerate(losses)]

    def test_strictly_decreasing(self):
        assert loss_increase_fraction(self._hist([3.0, 2.0, 1.0])) == 0.0

    def test_strictly_increasing(self):
        assert loss_increase_fraction(self._hist([1.0, 2.0, 3.0])) == 1.0

    def test_mixed(self):
        assert loss_increase_fraction(self._hist([2.0, 1.0, 1.5, 1.2])) == pytest.approx(1 / 3)

    def test_too_short(self):
        with pytest.raises(ValueError):
            loss_increase_fraction(self._hist([1.0]))
