import numpy as np
import pytest
import torch

from deskteach.policy import (
    ActConfig,
    ActLoraPolicy,
    GmmPolicy,
    GmmPolicyConfig,
    LoraLinear,
    adapter_hash,
    base_hash,
    chunk_loss,
    finetune_full,
    finetune_skill,
    grad_check,
    gmm_predict,
    params_hash,
    predict_chunk,
    pretrain,
    train_gmm_baseline,
)
from deskteach.seeding import rng_for
from deskteach.sim import Demonstration, generate_demo, make_world


def toy_config(**over) -> ActConfig:
    kwargs = dict(chunk_size=5, encoder_layers=2, decoder_layers=2, vae_encoder_layers=2,
                  attention_heads=4, latent_dim=8, obs_feature_dim=32, ffn_dim=64)
    kwargs.update(over)
    return ActConfig(**kwargs)


def synth_demo(skill_id="s", T=12, seed=0, constant_action=None) -> Demonstration:
    rng = np.random.default_rng(seed)
    frames = rng.integers(0, 256, (T, 64, 64, 3), dtype=np.uint8)
    proprio = rng.uniform(0, 1, (T, 3)).astype(np.float32)
    if constant_action is None:
        actions = rng.uniform(-1, 1, (T, 3)).astype(np.float32)
    else:
        actions = np.tile(np.asarray(constant_action, dtype=np.float32), (T, 1))
    return Demonstration("robot", frames, proprio, actions, skill_id)


@pytest.fixture(scope="module")
def world_and_demos():
    world, catalog = make_world(0, 8)
    specs = catalog[:2]
    demos = {s.skill_id: [generate_demo(world, s, "robot", i, 0.05) for i in range(3)]
             for s in specs}
    return world, catalog, demos


class TestLora:
    def test_zero_init_identity(self):
        torch.manual_seed(0)
        layer = LoraLinear(16, 12, rank=4)
        layer.add_adapter("skill")
        x = torch.randn(7, 16)
        base = layer.base(x)
        layer.active = "skill"
        adapted = layer(x)
        assert torch.equal(base, adapted)  # max abs diff exactly 0

    def test_delta_matches_direct_arithmetic(self):
        torch.manual_seed(1)
        layer = LoraLinear(10, 6, rank=3)
        layer.add_adapter("k")
        with torch.no_grad():
            layer.lora_B["k"].normal_()
        x = torch.randn(5, 10)
        layer.active = None
        base = layer(x)
        layer.active = "k"
        adapted = layer(x)
        a = layer.lora_A["k"].detach().numpy()
        b = layer.lora_B["k"].detach().numpy()
        expected = (layer.alpha / layer.rank) * (x.numpy() @ a.T @ b.T)
        np.testing.assert_allclose((adapted - base).detach().numpy(), expected, atol=1e-6)

    def test_fresh_adapter_model_forward_identity(self):
        torch.manual_seed(2)
        model = ActLoraPolicy(toy_config())
        model.eval()
        obs = torch.rand(2, 3, 64, 64)
        prop = torch.rand(2, 3)
        with torch.no_grad():
            model.set_active_adapter(None)
            base_out, _, _ = model(obs, prop, None)
            model.add_adapter("new")
            model.set_active_adapter("new")
            adapted_out, _, _ = model(obs, prop, None)
        assert torch.equal(base_out, adapted_out)

    def test_unknown_adapter_rejected(self):
        model = ActLoraPolicy(toy_config())
        with pytest.raises(KeyError):
            predict_chunk(model, "ghost", np.zeros((64, 64, 3), np.uint8), np.zeros(3))


class TestPredictChunk:
    def test_shapes_across_configs(self):
        for chunk, adim, dim in ((5, 3, 32), (9, 3, 16), (2, 3, 32)):
            torch.manual_seed(3)
            model = ActLoraPolicy(toy_config(chunk_size=chunk, obs_feature_dim=dim,
                                             attention_heads=4))
            model.add_adapter("s")
            out = predict_chunk(model, "s", np.zeros((64, 64, 3), np.uint8), np.zeros(3))
            assert out.shape == (chunk, adim)
            assert np.all(out >= -1.0) and np.all(out <= 1.0)

    def test_deterministic(self):
        torch.manual_seed(4)
        model = ActLoraPolicy(toy_config())
        model.add_adapter("s")
        obs = (np.random.default_rng(0).uniform(0, 255, (64, 64, 3))).astype(np.uint8)
        prop = np.array([0.5, 0.5, 0.0], np.float32)
        a = predict_chunk(model, "s", obs, prop)
        b = predict_chunk(model, "s", obs, prop)
        assert np.array_equal(a, b)


class TestTraining:
    def test_pretrain_reduces_loss_and_is_deterministic(self):
        demos = {"a": [synth_demo("a", seed=1)], "b": [synth_demo("b", seed=2)]}
        model1, log1 = pretrain(demos, toy_config(), seed=5, steps=30, batch_size=4)
        assert log1.final_mean < log1.initial_mean
        model2, log2 = pretrain(demos, toy_config(), seed=5, steps=30, batch_size=4)
        assert params_hash(model1) == params_hash(model2)
        assert log1.losses == log2.losses

    def test_inconsistent_action_dim_rejected(self):
        good = synth_demo("a", seed=1)
        bad = Demonstration("robot", good.frames, good.proprio,
                            np.zeros((good.T, 2), np.float32), "a")
        from deskteach.policy.train import ChunkDataset
        with pytest.raises(ValueError):
            ChunkDataset([good, bad], 5)

    def test_finetune_freezes_base_and_prior_adapters(self, world_and_demos):
        world, catalog, demos = world_and_demos
        model, _ = pretrain(demos, toy_config(), seed=6, steps=10, batch_size=4)
        old = sorted(demos)[0]
        b0, a0 = base_hash(model), adapter_hash(model, old)
        new_demos = [synth_demo("new", seed=7)]
        model2, _ = finetune_skill(model, "new-skill", new_demos, seed=8, steps=10, batch_size=4)
        assert base_hash(model2) == b0
        assert adapter_hash(model2, old) == a0
        assert adapter_hash(model2, "new-skill") != ""
        # original store untouched (clone semantics)
        assert base_hash(model) == b0 and not model.has_adapter("new-skill")

    def test_old_skill_chunks_bit_identical_after_finetune(self, world_and_demos):
        world, catalog, demos = world_and_demos
        model, _ = pretrain(demos, toy_config(), seed=9, steps=10, batch_size=4)
        old = sorted(demos)[0]
        obs, prop = demos[old][0].frames[0], demos[old][0].proprio[0]
        before = predict_chunk(model, old, obs, prop)
        model2, _ = finetune_skill(model, "new-skill", [synth_demo("n", seed=3)],
                                   seed=10, steps=10, batch_size=4)
        after = predict_chunk(model2, old, obs, prop)
        assert np.array_equal(before, after)

    def test_finetune_full_changes_base(self, world_and_demos):
        world, catalog, demos = world_and_demos
        model, _ = pretrain(demos, toy_config(), seed=11, steps=10, batch_size=4)
        b0 = base_hash(model)
        model2, _ = finetune_full(model, "new-skill", [synth_demo("n", seed=4)],
                                  seed=12, steps=10, batch_size=4)
        assert base_hash(model2) != b0

    def test_refinetuning_existing_adapter_rejected(self, world_and_demos):
        world, catalog, demos = world_and_demos
        model, _ = pretrain(demos, toy_config(), seed=13, steps=5, batch_size=4)
        with pytest.raises(ValueError):
            finetune_skill(model, sorted(demos)[0], [synth_demo()], seed=1, steps=2)

    def test_frozen_params_receive_no_gradient(self, world_and_demos):
        world, catalog, demos = world_and_demos
        model, _ = pretrain(demos, toy_config(), seed=14, steps=5, batch_size=4)
        import copy
        from deskteach.policy.train import ChunkDataset
        m = copy.deepcopy(model)
        m.add_adapter("probe")
        m.set_active_adapter("probe")
        new_names = set(m.adapter_param_names("probe"))
        for name, p in m.named_parameters():
            p.requires_grad = name in new_names
        ds = ChunkDataset([synth_demo("probe", seed=5)], m.config.chunk_size)
        batch = ds.batch(rng_for("t", 0), 4)
        loss, _, _ = chunk_loss(m, *batch, torch.Generator().manual_seed(0))
        loss.backward()
        for name, p in m.named_parameters():
            if name not in new_names:
                assert p.grad is None, f"{name} unexpectedly received gradient"

    def test_checkpoint_round_trip(self, world_and_demos, tmp_path):
        world, catalog, demos = world_and_demos
        model, _ = pretrain(demos, toy_config(), seed=15, steps=5, batch_size=4)
        model.save(tmp_path / "ck")
        loaded = ActLoraPolicy.load(tmp_path / "ck")
        assert params_hash(loaded) == params_hash(model)
        assert loaded.adapter_ids == model.adapter_ids


class TestGradChecks:
    def test_chunk_loss_gradients(self):
        torch.manual_seed(20)
        model = ActLoraPolicy(toy_config()).double()
        model.add_adapter("s")
        model.set_active_adapter("s")
        model.train()
        rng = np.random.default_rng(0)
        obs = torch.tensor(rng.uniform(0, 1, (2, 3, 64, 64)))
        prop = torch.tensor(rng.uniform(0, 1, (2, 3)))
        acts = torch.tensor(rng.uniform(-0.9, 0.9, (2, 5, 3)))
        pad = torch.ones(2, 5, dtype=torch.float64)

        def loss_fn():
            gen = torch.Generator().manual_seed(99)  # same latent noise every call
            loss, _, _ = chunk_loss(model, obs, prop, acts, pad, gen)
            return loss

        names = dict(list(model.named_parameters())[:8])
        names.update({n: p for n, p in model.named_parameters() if "lora" in n and p.numel() > 0})
        report = grad_check(loss_fn, names, max_coords_per_block=4)
        assert report.ok(1e-4), str(report)

    def test_kl_gradient_zero_at_prior(self):
        mu = torch.zeros(4, 8, dtype=torch.float64, requires_grad=True)
        logvar = torch.zeros(4, 8, dtype=torch.float64, requires_grad=True)
        kl = (-0.5 * (1 + logvar - mu.pow(2) - logvar.exp())).sum(-1).mean()
        kl.backward()
        assert torch.all(mu.grad == 0)
        assert float(kl) == 0.0

    def test_gmm_nll_gradients(self):
        torch.manual_seed(21)
        cfg = GmmPolicyConfig(components=2, encoder_layers=1, attention_heads=4,
                              history=1, d_model=32, ffn_dim=64)
        model = GmmPolicy(cfg).double()
        model.train()
        rng = np.random.default_rng(1)
        obs = torch.tensor(rng.uniform(0, 1, (2, 1, 3, 64, 64)))
        prop = torch.tensor(rng.uniform(0, 1, (2, 1, 3)))
        text = torch.tensor(rng.normal(size=(2, 64)))
        acts = torch.tensor(rng.uniform(-0.9, 0.9, (2, 3)))

        def loss_fn():
            return model.nll(obs, prop, text, acts)

        names = dict(list(model.named_parameters())[-6:])
        report = grad_check(loss_fn, names, max_coords_per_block=4)
        assert report.ok(1e-4), str(report)


class TestGmm:
    def test_constant_action_converges_to_mean(self):
        cfg = GmmPolicyConfig(components=1, encoder_layers=1, attention_heads=4,
                              history=1, d_model=32, ffn_dim=64)
        const = [0.25, -0.5, 0.75]
        demos = [synth_demo("c", T=10, seed=s, constant_action=const) for s in range(2)]
        text = np.zeros(64, np.float32)
        model, log = train_gmm_baseline({"c": (text, demos)}, cfg, seed=0,
                                        steps=300, lr=3e-3, batch_size=4)
        assert log.final_mean < log.initial_mean
        obs = torch.tensor(demos[0].frames[:1].astype(np.float32) / 255).permute(0, 3, 1, 2)[None]
        prop = torch.tensor(demos[0].proprio[:1])[None]
        with torch.no_grad():
            _, means, _ = model.mixture(obs, prop, torch.tensor(text)[None])
        np.testing.assert_allclose(means[0, 0].numpy(), const, atol=1e-2)

    def test_sampling_seed_deterministic(self):
        cfg = GmmPolicyConfig(components=3, encoder_layers=1, attention_heads=4,
                              history=1, d_model=32, ffn_dim=64)
        torch.manual_seed(22)
        model = GmmPolicy(cfg)
        obs = np.zeros((1, 64, 64, 3), np.float32)
        prop = np.zeros((1, 3), np.float32)
        text = np.zeros(64, np.float32)
        a = gmm_predict(model, text, obs, prop, rng_for("s", 1))
        b = gmm_predict(model, text, obs, prop, rng_for("s", 1))
        assert np.array_equal(a, b)
        assert np.all(np.abs(a) <= 1.0)

    def test_bad_component_count_rejected(self):
        with pytest.raises(ValueError):
            GmmPolicyConfig(components=0)
