"""Harris Hawks Optimization over bounded continuous domains.

The canonical formulation: a population of hawks stalks the best solution
found so far (the rabbit). Each hawk redraws an initial energy E0 in (-1, 1)
every iteration; the escaping energy E = 2*E0*(1 - t/T) decays linearly and
selects the phase. |E| >= 1 explores (random-peer perturbation or a
rabbit-minus-population-mean move), |E| < 1 exploits with four besiege
variants selected by |E| and a uniform draw r: soft besiege, hard besiege,
and their progressive-rapid-dive versions, where dive candidates take
Mantegna Levy-flight steps and are adopted only if they strictly improve on
the hawk's current fitness. Every rule is its own function so each branch
is unit-testable in isolation.

Positions are hard-clamped into [LB, UB] before every evaluation and after
every update. Non-finite objective values count as +inf, so failed
evaluations degrade the search instead of crashing it.

Determinism: all draws for hawk i at iteration t come from a generator
seeded by SeedSequence(seed, spawn_key=(t, i)), so serial and parallel
evaluation produce identical traces. Within one iteration every hawk moves
using the previous evaluation sweep's rabbit and population mean.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D vectors of equal length")
        if not np.all(self.lower < self.upper):
            raise ValueError("every lower bound must be strictly below its upper bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


@dataclass
class Hawk:
    position: np.ndarray
    fitness: float | None = None


@dataclass
class HHOParams:
    n_hawks: int = 30
    max_iters: int = 500
    levy_beta: float = 1.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_hawks < 2:
            raise ValueError("n_hawks must be >= 2")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 1.0 < self.levy_beta <= 2.0:
            raise ValueError("levy_beta must be in (1, 2]")


@dataclass
class ConvergenceTrace:
    best_fitness: list[float] = field(default_factory=list)
    mean_fitness: list[float] = field(default_factory=list)
    best_position: list[np.ndarray] = field(default_factory=list)

    def append(self, best: float, mean: float, position: np.ndarray) -> None:
        self.best_fitness.append(best)
        self.mean_fitness.append(mean)
        self.best_position.append(position.copy())

    def __len__(self) -> int:
        return len(self.best_fitness)

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iter,best_fitness,mean_fitness\n")
            for i, (b, m) in enumerate(zip(self.best_fitness, self.mean_fitness)):
                fh.write(f"{i},{repr(float(b))},{repr(float(m))}\n")


def init_population(space: SearchSpace, params: HHOParams) -> list[Hawk]:
    """n_hawks positions uniform in the box, fitness unevaluated."""
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    span = space.upper - space.lower
    return [
        Hawk(space.lower + rng.random(space.dim) * span)
        for _ in range(params.n_hawks)
    ]


def escaping_energy(e0: float, t: int, max_iters: int) -> float:
    """E = 2*E0*(1 - t/T): magnitude decays linearly to zero."""
    if not 0 <= t < max_iters:
        raise ValueError("t must satisfy 0 <= t < max_iters")
    return 2.0 * e0 * (1.0 - t / max_iters)


def mantegna_sigma(beta: float) -> float:
    num = math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = math.gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return (num / den) ** (1.0 / beta)


def levy_flight(dim: int, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Heavy-tailed step: 0.01 * sigma*u / |v|^(1/beta), u and v standard
    normal, sigma the Mantegna constant for the tail index beta."""
    if not 1.0 < beta <= 2.0:
        raise ValueError("beta must be in (1, 2]")
    u = rng.standard_normal(dim) * mantegna_sigma(beta)
    v = rng.standard_normal(dim)
    return 0.01 * u / np.abs(v) ** (1.0 / beta)


# --- movement rules, one function per canonical update -----------------------


def exploration_perch(x: np.ndarray, x_rand: np.ndarray, r1: float, r2: float) -> np.ndarray:
    """Perch relative to a random peer."""
    return x_rand - r1 * np.abs(x_rand - 2.0 * r2 * x)


def exploration_roam(
    rabbit: np.ndarray, population_mean: np.ndarray, space: SearchSpace, r3: float, r4: float
) -> np.ndarray:
    """Roam between the rabbit-minus-mean direction and a random box point."""
    return (rabbit - population_mean) - r3 * (space.lower + r4 * (space.upper - space.lower))


def soft_besiege(x: np.ndarray, rabbit: np.ndarray, energy: float, jump: float) -> np.ndarray:
    return (rabbit - x) - energy * np.abs(jump * rabbit - x)


def hard_besiege(x: np.ndarray, rabbit: np.ndarray, energy: float) -> np.ndarray:
    return rabbit - energy * np.abs(rabbit - x)


def dive_base(anchor: np.ndarray, rabbit: np.ndarray, energy: float, jump: float) -> np.ndarray:
    """First rapid-dive candidate; anchor is the hawk (soft) or the
    population mean (hard)."""
    return rabbit - energy * np.abs(jump * rabbit - anchor)


def update_position(
    hawk: Hawk,
    rabbit: Hawk,
    population: list[Hawk],
    population_mean: np.ndarray,
    energy: float,
    space: SearchSpace,
    rng: np.random.Generator,
    objective: Callable[[np.ndarray], float],
    levy_beta: float = 1.5,
) -> np.ndarray:
    """One hawk's move for the current iteration; returns the new position,
    clamped into the box.

    Rapid-dive branches evaluate their candidates through ``objective`` and
    keep the hawk in place unless a candidate strictly beats the hawk's
    current fitness, so ``hawk.fitness`` must already be evaluated.
    """
    x = hawk.position
    if abs(energy) >= 1.0:
        q = rng.random()
        if q >= 0.5:
            peer = population[int(rng.integers(len(population)))].position
            new = exploration_perch(x, peer, rng.random(), rng.random())
        else:
            new = exploration_roam(rabbit.position, population_mean, space, rng.random(), rng.random())
        return space.clamp(new)

    r = rng.random()
    if r >= 0.5:
        if abs(energy) >= 0.5:
            jump = 2.0 * (1.0 - rng.random())
            new = soft_besiege(x, rabbit.position, energy, jump)
        else:
            new = hard_besiege(x, rabbit.position, energy)
        return space.clamp(new)

    # progressive rapid dives
    if hawk.fitness is None:
        raise ValueError("rapid-dive update requires an evaluated hawk")
    jump = 2.0 * (1.0 - rng.random())
    anchor = x if abs(energy) >= 0.5 else population_mean
    y = space.clamp(dive_base(anchor, rabbit.position, energy, jump))
    if _finite_or_inf(objective(y)) < hawk.fitness:
        return y
    z = space.clamp(y + rng.random(space.dim) * levy_flight(space.dim, levy_beta, rng))
    if _finite_or_inf(objective(z)) < hawk.fitness:
        return z
    return x.copy()


def _finite_or_inf(value: float) -> float:
    value = float(value)
    return value if math.isfinite(value) else math.inf


def _update_rng(seed: int, t: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t, i)))


def optimize(
    objective: Callable[[np.ndarray], float],
    space: SearchSpace,
    params: HHOParams,
    callback: Callable[[int, float, float, np.ndarray], None] | None = None,
    eval_observer: Callable[[int, int, np.ndarray, float], None] | None = None,
    jobs: int = 1,
) -> tuple[np.ndarray, float, ConvergenceTrace]:
    """Run the full search; returns (best position, best fitness, trace).

    ``callback(t, best_fitness, mean_fitness, best_position)`` fires once
    per iteration; ``eval_observer(t, hawk_index, position, fitness)`` fires
    once per objective evaluation (dive candidates report the index of the
    diving hawk). Identical positions are evaluated once and memoized,
    which is sound because the objective is required to be deterministic.
    With ``jobs > 1`` the per-iteration evaluation sweep runs in a thread
    pool; results are gathered before any update, so traces are identical
    to the serial ones.
    """
    hawks = init_population(space, params)
    trace = ConvergenceTrace()
    memo: dict[bytes, float] = {}
    best_position: np.ndarray | None = None
    best_fitness = math.inf

    def record(t: int, i: int, x: np.ndarray, fitness: float) -> float:
        nonlocal best_position, best_fitness
        memo[x.tobytes()] = fitness
        if fitness < best_fitness:
            best_fitness = fitness
            best_position = x.copy()
        if eval_observer is not None:
            eval_observer(t, i, x, fitness)
        return fitness

    def evaluate(t: int, i: int, x: np.ndarray) -> float:
        cached = memo.get(x.tobytes())
        if cached is not None:
            return cached
        return record(t, i, x, _finite_or_inf(objective(x)))

    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for t in range(params.max_iters):
            stale = [(i, h) for i, h in enumerate(hawks) if h.fitness is None]
            todo = [(i, h) for i, h in stale if h.position.tobytes() not in memo]
            if pool is not None and len(todo) > 1:
                results = list(pool.map(lambda ih: _finite_or_inf(objective(ih[1].position)), todo))
                for (i, h), fitness in zip(todo, results):
                    if h.position.tobytes() not in memo:
                        record(t, i, h.position, fitness)
            for i, h in stale:
                h.fitness = evaluate(t, i, h.position)
            if t == 0 and all(math.isinf(h.fitness) for h in hawks):
                raise RuntimeError(
                    "every objective evaluation in the initial population was non-finite"
                )

            rabbit = Hawk(best_position.copy(), best_fitness)
            snapshot = [Hawk(h.position.copy(), h.fitness) for h in hawks]
            population_mean = np.mean([h.position for h in snapshot], axis=0)
            mean_fitness = float(np.mean([h.fitness for h in hawks]))

            for i, hawk in enumerate(hawks):
                rng = _update_rng(params.seed, t, i)
                e0 = 2.0 * rng.random() - 1.0
                energy = escaping_energy(e0, t, params.max_iters)
                new_position = update_position(
                    Hawk(snapshot[i].position, snapshot[i].fitness),
                    rabbit,
                    snapshot,
                    population_mean,
                    energy,
                    space,
                    rng,
                    lambda x, _t=t, _i=i: evaluate(_t, _i, x),
                    params.levy_beta,
                )
                if not np.array_equal(new_position, hawk.position):
                    hawk.fitness = None
                hawk.position = new_position

            trace.append(best_fitness, mean_fitness, best_position)
            if callback is not None:
                callback(t, best_fitness, mean_fitness, best_position.copy())
    finally:
        if pool is not None:
            pool.shutdown()
    return best_position.copy(), best_fitness, trace


# ---------------------------------------------------------------------------
# benchmark objectives


def _sphere(x: np.ndarray) -> float:
    return float(np.sum(x * x))


def _rastrigin(x: np.ndarray) -> float:
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def _rosenbrock(x: np.ndarray) -> float:
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


_BENCHMARKS = {"sphere": _sphere, "rastrigin": _rastrigin, "rosenbrock": _rosenbrock}


def benchmark_objective(name: str) -> Callable[[np.ndarray], float]:
    """Standard test functions; all have global minimum value 0."""
    try:
        return _BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(_BENCHMARKS)}") from None
