"""A full teaching episode: dialogue -> enactment -> demonstrations -> new skill.

Builds a small agent (policy + alignment + library over the simulator),
then runs two scripted episodes: the first plan contains an unknown task,
so the machine asks for an enactment, finds no matching skill, collects
robot demonstrations, and finetunes a new adapter; the second run of the
same plan asks nothing at all.

Run:  python3 scripts/06_dialogue_episode.py   (~3 minutes on one CPU core)
"""

from deskteach.harness import ExperimentConfig, make_scripted_user, prepare_agent, run_episode

config = ExperimentConfig(
    catalog_size=8, n_pretrain_skills=2, n_fewshot_skills=1,
    demos_per_pretrain=10, demos_per_fewshot=3, demos_required=3,
    pretrain_steps=300, finetune_steps=200, align_steps=150,
    act=dict(encoder_layers=2, decoder_layers=2, vae_encoder_layers=2,
             attention_heads=4, obs_feature_dim=32, ffn_dim=64, latent_dim=8),
    align=dict(frame_feature_dim=32, encoder_layers=2, attention_heads=4,
               embedding_dim=32, downsample_T=6),
)
print("training a small agent (policy + alignment encoders)...")
agent = prepare_agent(config)
known = agent.world.catalog[0].description
unknown = [s for s in agent.world.catalog if s.difficulty_tag == "fewshot"][0].description
plan = f"{known} then {unknown}"
print(f"plan: {plan!r}")
print(f"library before: {len(agent.library)} skills\n")

log = run_episode(agent, make_scripted_user("teach-one-skill", plan, agent))
for speaker, text in log.transcript:
    print(f"  {speaker:5s}| {text}")
print(f"\nepisode 1: {log.status}, finetunes={log.finetunes}, "
      f"library now {len(agent.library)} skills")

log2 = run_episode(agent, make_scripted_user("teach-one-skill", plan, agent))
print(f"episode 2: {log2.status}, questions asked={log2.questions_asked}, "
      f"finetunes={log2.finetunes}")
print("tasks:", [(task, ok) for task, _, ok in log2.outcomes])
