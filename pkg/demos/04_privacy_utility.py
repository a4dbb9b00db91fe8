"""
Privacy against utility
=======================

A cosine nearest-neighbour attacker tries to name the speaker behind each
released voiceprint. Larger eps means less noise: lower MSE and easier
re-identification. Larger databases hide speakers better.
"""

from voiceind.audit import run_experiment_grid, summarize
from voiceind.population import generate_population

population = generate_population(speakers=40, dim=512, seed=5)
eps_grid = [1.0, 10.0, 100.0, 1000.0, 10000.0]
n_grid = [10, 20, 40]
rows = run_experiment_grid(population, n_grid, eps_grid, trials=20, seed=5, timing=False)
cells = summarize(rows)

print("attack accuracy (mean over 20 trials)")
print("n    " + "".join(f"{e:>10g}" for e in eps_grid))
for n in n_grid:
    print(f"{n:<5}" + "".join(f"{cells[(n, e)].acc_mean:>10.3f}" for e in eps_grid))

print()
print("MSE per coordinate")
print("n    " + "".join(f"{e:>10g}" for e in eps_grid))
for n in n_grid:
    print(f"{n:<5}" + "".join(f"{cells[(n, e)].mse_mean:>10.2e}" for e in eps_grid))

# With eps = 1 the attacker is close to chance, 1/n
for n in n_grid:
    print(f"n={n}: eps=1 accuracy {cells[(n, 1.0)].acc_mean:.3f} vs chance {1 / n:.3f}")
