"""Cross-embodiment demonstrations and the on-disk format.

Generates a (human, robot) demonstration pair from one latent expert
trajectory, writes the robot demo in the directory format every module
shares, and shows validation catching a corrupted blob.

Run:  python3 scripts/02_demonstrations.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from deskteach.sim import generate_demo, make_world, read_demo, validate_demo_dir, write_demo

world, catalog = make_world(seed=0, skill_catalog_size=8)
spec = catalog[0]

# Both embodiments render the same latent trajectory: same length, same
# motion, different appearance. The human copy has no proprio or actions.
robot = generate_demo(world, spec, "robot", episode_seed=5, noise_scale=0.05)
human = generate_demo(world, spec, "human", episode_seed=5, noise_scale=0.05)
print(f"robot demo: T={robot.T}, frames {robot.frames.shape}, actions {robot.actions.shape}")
print(f"human demo: T={human.T}, frames {human.frames.shape}, actions {human.actions}")
assert robot.T == human.T

with tempfile.TemporaryDirectory() as tmp:
    # One directory per demo: manifest.json plus little-endian float32 blobs;
    # frames are stored normalized to [0, 1].
    path = write_demo(robot, Path(tmp) / "demo")
    print("\non disk:", sorted(p.name for p in path.iterdir()))
    print("manifest:", json.dumps(json.loads((path / "manifest.json").read_text()), indent=1)[:240], "...")

    loaded = read_demo(path)
    print("round trip bit-exact:", np.array_equal(loaded.frames, robot.frames))

    # The validator pinpoints the file that violates the contract.
    blob = path / "actions.f32"
    blob.write_bytes(blob.read_bytes()[:-8])
    print("after corrupting actions.f32:", validate_demo_dir(path))
