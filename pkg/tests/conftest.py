import pytest

from deskteach.harness import ExperimentConfig, prepare_agent
from deskteach.torchutil import configure_torch_cpu

configure_torch_cpu()


def tiny_config(**over) -> ExperimentConfig:
    """Seconds-scale budgets for integration tests that need a live agent."""
    kwargs = dict(
        catalog_size=8,
        n_pretrain_skills=2,
        n_fewshot_skills=1,
        demos_per_pretrain=6,
        demos_per_fewshot=3,
        rollouts_per_skill=2,
        pretrain_steps=40,
        finetune_steps=30,
        gmm_pretrain_steps=40,
        gmm_finetune_steps=30,
        align_steps=30,
        align_tasks=4,
        align_demos_per_task=4,
        align_splits=2,
        align_pos_pairs_per_task=6,
        demos_required=2,
        act=dict(encoder_layers=2, decoder_layers=2, vae_encoder_layers=2,
                 attention_heads=4, obs_feature_dim=32, ffn_dim=64, latent_dim=8),
        gmm=dict(encoder_layers=1, attention_heads=4, d_model=32, ffn_dim=64, history=1),
        align=dict(frame_feature_dim=32, encoder_layers=2, attention_heads=4,
                   embedding_dim=32, downsample_T=6),
    )
    kwargs.update(over)
    return ExperimentConfig(**kwargs)


@pytest.fixture(scope="session")
def tiny_agent_factory():
    """One tiny trained (act, aligner) pair shared across integration tests;
    each test gets a fresh agent (fresh library/jobs) over the same weights."""
    config = tiny_config()
    base_agent = prepare_agent(config)

    def make(**config_over):
        cfg = tiny_config(**config_over)
        return prepare_agent(cfg, act_model=base_agent.act_model,
                             aligner=base_agent.library.aligner)

    return make
