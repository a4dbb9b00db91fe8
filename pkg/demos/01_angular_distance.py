"""
Angular distance between voiceprints
====================================

Speaker embeddings are compared by direction only. The angular distance is
the angle between two vectors, scaled to [0, 1].
"""

import numpy as np

from voiceind import Voiceprint, angular_distance, distance_matrix, generate_population

# Two voiceprints pointing the same way are at distance 0, whatever their length
a = Voiceprint("a", [1.0, 0.0, 0.0])
b = Voiceprint("b", [5.0, 0.0, 0.0])
print("same direction:", angular_distance(a, b))

# Orthogonal vectors sit at 1/2, opposite vectors at 1
print("orthogonal:   ", angular_distance(a, Voiceprint("c", [0.0, 2.0, 0.0])))
print("opposite:     ", angular_distance(a, Voiceprint("d", [-3.0, 0.0, 0.0])))

# Very small angles stay accurate: arccos of the cosine would lose them
tiny = Voiceprint("t", [1.0, 1e-9, 0.0])
print("1e-9 rad apart:", angular_distance(a, tiny), "expected", 1e-9 / np.pi)

# In 512 dimensions, random speakers are almost orthogonal to each other
pop = generate_population(speakers=40, dim=512, seed=0)
dm = distance_matrix(pop)
off = dm[~np.eye(len(pop), dtype=bool)]
print(f"40 random speakers: mean pairwise distance {off.mean():.4f}, min {off.min():.4f}, max {off.max():.4f}")
