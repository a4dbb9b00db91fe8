"""
Perturbing one voiceprint, then auditing the mechanism
======================================================

The mechanism releases a record of a candidate database, picking candidate
c with probability proportional to exp(-eps * d(x, c)).
"""

import numpy as np

from voiceind import build_distribution, make_rng, perturb
from voiceind.audit import verify_voice_ind
from voiceind.population import generate_population

db = generate_population(speakers=8, dim=16, seed=1)
x0 = db.records[0]

# The whole output distribution is available in closed form
for eps in (0.0, 5.0, 50.0):
    dist = build_distribution(x0, db, eps)
    print(f"eps={eps:>4}: P(self)={dist.probability_of(x0.id):.3f}  max other={np.sort(dist.probabilities)[-2]:.3f}")

# Drawing is one uniform per call, from a seeded generator
rng = make_rng(7)
print("ten draws at eps=5:", [perturb(x0, db, 5.0, rng).id for _ in range(10)])

# The audit walks every (x, x', output) triple and reports the largest
# log-ratio per unit distance. Normalization can push it above eps, never
# above 2 * eps.
for eps in (0.5, 2.0):
    rep = verify_voice_ind(db, eps)
    print()
    print(rep.format_text())
