"""Harris Hawks Optimization on the classic benchmark functions.

A population of hawks stalks the best-known solution (the rabbit); a
linearly decaying escaping energy switches the population from exploration
to four besiege-style exploitation moves, including Levy-flight rapid
dives. All three benchmarks have global minimum 0.
"""

import numpy as np

from densehawk import hho

SETUPS = [
    ("sphere", 10, (-10.0, 10.0), 500),
    ("rastrigin", 5, (-5.12, 5.12), 500),
    ("rosenbrock", 8, (-5.0, 10.0), 500),
]

for name, dim, (lo, hi), iters in SETUPS:
    space = hho.SearchSpace(np.full(dim, lo), np.full(dim, hi))
    params = hho.HHOParams(n_hawks=30, max_iters=iters, seed=1)
    best_x, best_f, trace = hho.optimize(hho.benchmark_objective(name), space, params)
    milestones = {0, iters // 4, iters // 2, iters - 1}
    print(f"\n{name} (dim {dim}, {iters} iterations)")
    for t in sorted(milestones):
        print(f"  iter {t:>4d}: best so far {trace.best_fitness[t]:.3e}")
    print(f"  final best fitness {best_f:.3e} at |x| <= {np.abs(best_x).max():.3e}")

# The escaping-energy schedule behind the phase switch: |E| >= 1 explores,
# |E| < 1 triggers the besiege variants.
print("\nescaping energy envelope 2*(1 - t/T) for T = 10:")
print([round(hho.escaping_energy(1.0, t, 10), 2) for t in range(10)])
