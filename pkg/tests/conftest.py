import math

import numpy as np

from tactilesim.kinematics import JointAngles


def sample_workspace_poses(rng: np.random.Generator, count: int) -> list[JointAngles]:
    """Random interior-workspace poses: base angle in [-pi/2, pi/2], shoulder
    in [0, pi/2], elbow within +-(pi/2 - 0.05) of the shoulder so the arm
    stays clear of the fold/extension singularities."""
    t1 = rng.uniform(-math.pi / 2, math.pi / 2, count)
    t2 = rng.uniform(0.0, math.pi / 2, count)
    t3 = rng.uniform(t2 - math.pi / 2 + 0.05, t2 + math.pi / 2 - 0.05)
    return [JointAngles(float(a), float(b), float(c)) for a, b, c in zip(t1, t2, t3)]
