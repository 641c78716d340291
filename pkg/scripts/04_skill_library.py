"""The queryable skill library: two search spaces and persistence.

A skill is (description, reference robot trajectory, adapter id) with a
semantic embedding of the description and a skill embedding of the
trajectory. "Do I know this?" is answered by cosine argmax in either
space; an exact semantic match (cosine >= 0.999) is the membership
shortcut the dialogue machine uses first.

Run:  python3 scripts/04_skill_library.py   (~1 minute on one CPU core)
"""

import tempfile

from deskteach.align import AlignmentEncoderConfig, PairLabel, train_alignment
from deskteach.library import LibraryConfig, SkillLibrary
from deskteach.sim import generate_demo, make_world

world, catalog = make_world(seed=0, skill_catalog_size=8)
known = catalog[:4]

# A quickly-trained alignment model embeds reference trajectories; real
# runs reuse the encoders from `deskteach run-alignment` checkpoints.
pairs = []
for t, spec in enumerate(known):
    for i in range(4):
        pairs.append(PairLabel(generate_demo(world, spec, "human", i, 0.05),
                               generate_demo(world, spec, "robot", i, 0.05), +1))
        other = known[(t + 1) % len(known)]
        pairs.append(PairLabel(generate_demo(world, spec, "human", i, 0.05),
                               generate_demo(world, other, "robot", i, 0.05), -1))
aligner, _ = train_alignment(pairs, AlignmentEncoderConfig.desk_profile(), seed=0, steps=300)

adapters = {spec.skill_id for spec in known}  # stand-in for the policy store
library = SkillLibrary(LibraryConfig(), aligner=aligner, adapter_registry=adapters)
for spec in known:
    library.add_skill(spec.skill_id, spec.description,
                      generate_demo(world, spec, "robot", 0, 0.0), adapter_id=spec.skill_id)
print(f"library holds {len(library)} skills")

# Semantic space: exact descriptions score 1.0; near-paraphrases score high;
# unrelated text falls below the proposal threshold.
for query in (known[0].description,
              known[0].description.replace("the", "a"),
              "assemble the bookshelf"):
    res = library.search_semantic(query)
    print(f"  semantic {query!r:55s} -> {res.best_skill} score={res.score:.3f} "
          f"proposal={res.above_threshold}")
print("  exact-match shortcut:", library.exact_match(known[1].description))

# Skill space: a human enactment of a known skill retrieves it.
enactment = generate_demo(world, known[2], "human", 77, 0.05)
res = library.search_skill(enactment)
print(f"  enactment of {known[2].skill_id} -> {res.best_skill} score={res.score:.3f}")

# Persistence round-trips records bit-exactly.
with tempfile.TemporaryDirectory() as tmp:
    library.persist(tmp)
    loaded = SkillLibrary.load(tmp, aligner=aligner)
    res2 = loaded.search_semantic(known[0].description)
    print(f"\nafter round trip: {len(loaded)} skills, "
          f"same search result: {res2.best_skill == known[0].skill_id}")
