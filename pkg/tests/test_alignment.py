import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from deskteach.align import (
    AlignmentEncoderConfig,
    AlignmentModel,
    Embedding,
    PairLabel,
    classify_pair,
    downsample,
    downsample_indices,
    eval_metrics,
    pair_loss,
    train_alignment,
)
from deskteach.sim import generate_demo, make_world


def small_config() -> AlignmentEncoderConfig:
    return AlignmentEncoderConfig(
        frame_feature_dim=32, encoder_layers=2, attention_heads=4,
        embedding_dim=32, downsample_T=6,
    )


@pytest.fixture(scope="module")
def demo_pool():
    world, catalog = make_world(0, 8)
    specs = catalog[:2]
    human = {s.skill_id: [generate_demo(world, s, "human", i, 0.05) for i in range(3)] for s in specs}
    robot = {s.skill_id: [generate_demo(world, s, "robot", i, 0.05) for i in range(3)] for s in specs}
    return specs, human, robot


def toy_pairs(demo_pool) -> list[PairLabel]:
    specs, human, robot = demo_pool
    a, b = specs[0].skill_id, specs[1].skill_id
    pairs = []
    for i in range(3):
        pairs.append(PairLabel(human[a][i], robot[a][i], 1))
        pairs.append(PairLabel(human[b][i], robot[b][i], 1))
        pairs.append(PairLabel(human[a][i], robot[b][i], -1))
        pairs.append(PairLabel(human[b][i], robot[a][i], -1))
    return pairs


class TestDownsample:
    def test_identity_when_lengths_match(self, demo_pool):
        _, human, _ = demo_pool
        demo = next(iter(human.values()))[0]
        out = downsample(demo, demo.T)
        assert np.array_equal(out.frames, demo.frames)

    def test_short_demo_repeats_and_keeps_endpoints(self):
        idx = downsample_indices(2, 100)
        assert idx[0] == 0 and idx[-1] == 1
        assert set(idx.tolist()) == {0, 1}

    def test_indices_match_independent_formula(self):
        # Oracle: per-position rounding of i*(T-1)/(target-1), computed scalar-wise.
        T, target = 350, 100
        expected = [round(i * (T - 1) / (target - 1)) for i in range(target)]
        assert downsample_indices(T, target).tolist() == expected

    def test_preserves_endpoints_generally(self):
        for T in (2, 5, 57, 350):
            for target in (2, 10, 100):
                idx = downsample_indices(T, target)
                assert len(idx) == target
                assert idx[0] == 0 and idx[-1] == T - 1

    def test_rejects_bad_lengths(self, demo_pool):
        _, human, _ = demo_pool
        demo = next(iter(human.values()))[0]
        with pytest.raises(ValueError):
            downsample(demo, 1)


class TestPairLoss:
    def test_identical_positive_is_zero(self):
        e = torch.tensor([0.3, -1.2, 0.5], dtype=torch.float64)
        assert abs(float(pair_loss(e, e, 1, 0.5))) < 1e-9

    def test_negative_below_margin_is_zero(self):
        e_h = torch.tensor([1.0, 0.0], dtype=torch.float64)
        e_r = torch.tensor([0.3, np.sqrt(1 - 0.09)], dtype=torch.float64)
        assert abs(float(pair_loss(e_h, e_r, -1, 0.5))) < 1e-9

    def test_negative_above_margin_pays_excess(self):
        e_h = torch.tensor([1.0, 0.0], dtype=torch.float64)
        e_r = torch.tensor([0.9, np.sqrt(1 - 0.81)], dtype=torch.float64)
        assert abs(float(pair_loss(e_h, e_r, -1, 0.5)) - 0.4) < 1e-9

    def test_zero_norm_rejected(self):
        e = torch.tensor([1.0, 0.0])
        with pytest.raises(ValueError):
            pair_loss(e, torch.zeros(2), 1, 0.5)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10**6), y=st.sampled_from([1, -1]),
           alpha=st.floats(0.01, 100), beta=st.floats(0.01, 100))
    def test_scale_invariance(self, seed, y, alpha, beta):
        rng = np.random.default_rng(seed)
        e_h = torch.tensor(rng.normal(size=5))
        e_r = torch.tensor(rng.normal(size=5))
        base = float(pair_loss(e_h, e_r, y, 0.5))
        scaled = float(pair_loss(alpha * e_h, beta * e_r, y, 0.5))
        assert abs(base - scaled) < 1e-8

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), y=st.sampled_from([1, -1]))
    def test_nonnegative(self, seed, y):
        rng = np.random.default_rng(seed)
        e_h = torch.tensor(rng.normal(size=4))
        e_r = torch.tensor(rng.normal(size=4))
        assert float(pair_loss(e_h, e_r, y, 0.5)) >= 0.0

    def test_gradient_matches_central_differences(self):
        # 64-bit check away from the hinge kink (|cos - margin| > 1e-3).
        margin = 0.5
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 10:
            h = rng.normal(size=6)
            r = rng.normal(size=6)
            cos = h @ r / (np.linalg.norm(h) * np.linalg.norm(r))
            if abs(cos - margin) <= 1e-3:
                continue
            for y in (1, -1):
                e_h = torch.tensor(h, requires_grad=True)
                e_r = torch.tensor(r, requires_grad=True)
                loss = pair_loss(e_h, e_r, y, margin)
                loss.backward()
                for var, point in ((e_h, h), (e_r, r)):
                    analytic = var.grad.numpy()
                    fd = _fd_grad(point, h, r, var is e_h, y, margin)
                    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-7)
                    assert np.all(np.abs(analytic - fd) / denom < 1e-4)
            checked += 1


def _fd_grad(point, h, r, is_h, y, margin, eps=1e-6):
    grad = np.zeros_like(point)
    for i in range(point.size):
        vals = []
        for sign in (1, -1):
            p = point.copy()
            p[i] += sign * eps
            hh = p if is_h else h
            rr = r if is_h else p
            vals.append(float(pair_loss(torch.tensor(hh), torch.tensor(rr), y, margin)))
        grad[i] = (vals[0] - vals[1]) / (2 * eps)
    return grad


class TestClassifyAndMetrics:
    def test_identical_same(self):
        e = Embedding(np.array([1.0, 2.0, 3.0]), "human")
        v = classify_pair(e, Embedding(np.array([1.0, 2.0, 3.0]), "robot"), 0.7)
        assert v.label == "same" and abs(v.score - 1.0) < 1e-6

    def test_orthogonal_different(self):
        e_h = Embedding(np.array([1.0, 0.0]), "human")
        e_r = Embedding(np.array([0.0, 1.0]), "robot")
        v = classify_pair(e_h, e_r, 0.7)
        assert v.label == "different" and abs(v.score) < 1e-9

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            e_h = Embedding(rng.normal(size=4), "human")
            e_r = Embedding(rng.normal(size=4), "robot")
            verdicts = [classify_pair(e_h, e_r, t).label for t in (0.1, 0.5, 0.9)]
            # Raising the threshold never flips different -> same.
            for lo, hi in zip(verdicts, verdicts[1:]):
                assert not (lo == "different" and hi == "same")

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        e_h = Embedding(rng.normal(size=4), "human")
        e_r = Embedding(rng.normal(size=4), "robot")
        assert classify_pair(e_h, e_r, 0.7).score == pytest.approx(classify_pair(e_r, e_h, 0.7).score)

    def test_perfect_metrics(self):
        p, r, f1, acc = eval_metrics([True, False], [True, False])
        assert (p, r, f1, acc) == (1.0, 1.0, 1.0, 1.0)

    def test_worked_confusion_example(self):
        # TP=2, FP=1, FN=1, TN=0
        preds = [True, True, True, False]
        labs = [True, True, False, True]
        p, r, f1, acc = eval_metrics(preds, labs)
        assert p == pytest.approx(2 / 3) and r == pytest.approx(2 / 3)
        assert f1 == pytest.approx(2 / 3) and acc == pytest.approx(0.5)

    def test_against_bruteforce_oracle(self):
        rng = np.random.default_rng(3)
        preds = rng.integers(0, 2, 200).astype(bool).tolist()
        labs = rng.integers(0, 2, 200).astype(bool).tolist()
        tp = sum(1 for p, l in zip(preds, labs) if p and l)
        fp = sum(1 for p, l in zip(preds, labs) if p and not l)
        fn = sum(1 for p, l in zip(preds, labs) if not p and l)
        tn = sum(1 for p, l in zip(preds, labs) if not p and not l)
        p, r, f1, acc = eval_metrics(preds, labs)
        assert p == pytest.approx(tp / (tp + fp))
        assert r == pytest.approx(tp / (tp + fn))
        assert f1 == pytest.approx(2 * p * r / (p + r))
        assert acc == pytest.approx((tp + tn) / 200)

    def test_random_predictions_near_half_accuracy(self):
        rng = np.random.default_rng(5)
        labs = ([True] * 500) + ([False] * 500)
        preds = rng.integers(0, 2, 1000).astype(bool).tolist()
        _, _, _, acc = eval_metrics(preds, labs)
        assert abs(acc - 0.5) < 0.1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            eval_metrics([], [])


class TestEncodersAndTraining:
    def test_pairlabel_validates_label(self, demo_pool):
        specs, human, robot = demo_pool
        a, b = specs[0].skill_id, specs[1].skill_id
        with pytest.raises(ValueError):
            PairLabel(human[a][0], robot[b][0], 1)
        with pytest.raises(ValueError):
            PairLabel(robot[a][0], robot[a][0], 1)

    def test_encode_deterministic_and_checked(self, demo_pool):
        specs, human, robot = demo_pool
        torch.manual_seed(0)
        model = AlignmentModel(small_config())
        demo = human[specs[0].skill_id][0]
        v1 = model.encode(demo).vector
        v2 = model.encode(demo).vector
        assert np.array_equal(v1, v2)
        with pytest.raises(ValueError):
            model.encode(demo, embodiment="robot")

    def test_single_class_dataset_rejected(self, demo_pool):
        specs, human, robot = demo_pool
        a = specs[0].skill_id
        only_pos = [PairLabel(human[a][i], robot[a][i], 1) for i in range(2)]
        with pytest.raises(ValueError):
            train_alignment(only_pos, small_config(), seed=0, steps=2)

    def test_training_reduces_loss_and_is_deterministic(self, demo_pool):
        pairs = toy_pairs(demo_pool)
        model, log = train_alignment(pairs, small_config(), seed=0, steps=200)
        assert log.final_mean < log.initial_mean
        _, log2 = train_alignment(pairs, small_config(), seed=0, steps=12)
        _, log3 = train_alignment(pairs, small_config(), seed=0, steps=12)
        assert log2.losses == log3.losses

    def test_checkpoint_round_trip_bit_exact(self, demo_pool, tmp_path):
        specs, human, _ = demo_pool
        torch.manual_seed(1)
        model = AlignmentModel(small_config())
        model.save(tmp_path / "ck")
        loaded = AlignmentModel.load(tmp_path / "ck")
        demo = human[specs[0].skill_id][0]
        assert np.array_equal(model.encode(demo).vector, loaded.encode(demo).vector)
