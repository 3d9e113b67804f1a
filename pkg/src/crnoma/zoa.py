"""Zebra optimization: a population search in a box with two move phases.

Each iteration moves every zebra toward the pioneer (foraging), then
applies either a shrinking random perturbation or a move relative to an
attacked zebra (defense).  A move is kept only if it improves the zebra's
fitness, so the best fitness never decreases.  Fitness is maximized.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

OMEGA_MODES = ("random", 1, 2)


@dataclass
class ZoaConfig:
    population_size: int = 20
    max_iterations: int = 100
    dimension: int = 1
    lower: float | np.ndarray = 0.0
    upper: float | np.ndarray = 1.0
    defense_R: float = 0.1
    # stop once the best fitness gained <= epsilon for `patience` straight
    # iterations; patience=None disables early stopping
    epsilon: float = 1e-9
    patience: int | None = 2
    rng_seed: int = 0
    omega: str | int = "random"
    # zebra used by the second defense mode: "best" or a "random" member
    attacked: str = "best"

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        lo, hi = self.bounds()
        if np.any(lo >= hi):
            raise ValueError("lower bound must be below upper bound in every dimension")
        if not self.defense_R > 0:
            raise ValueError("defense_R must be > 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be >= 1 or None")
        if self.omega not in OMEGA_MODES:
            raise ValueError(f"omega must be one of {OMEGA_MODES}")
        if self.attacked not in ("best", "random"):
            raise ValueError("attacked must be 'best' or 'random'")

    def bounds(self):
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dimension,))
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dimension,))
        return lo, hi


@dataclass
class Candidate:
    position: np.ndarray
    fitness: float = float("nan")


@dataclass
class ZoaResult:
    best: Candidate
    trace: list[float] = field(default_factory=list)  # best fitness, index 0 = initial population
    iterations: int = 0
    stopped_early: bool = False
    evaluations: int = 0


# --- move rules ------------------------------------------------------------

def forage_step(x, best, r, omega):
    return x + r * (best - omega * x)


def defense_perturb_step(x, r, iteration, max_iterations, defense_R):
    return x + defense_R * (2.0 * r - 1.0) * (1.0 - iteration / max_iterations) * x


def defense_attack_step(x, attacked, r, omega):
    return x + r * (attacked - omega * x)


def draw_omega(rng, shape, mode):
    if mode == "random":
        return rng.integers(1, 3, size=shape).astype(float)
    return np.full(shape, float(mode))


def forage_update(candidate: Candidate, best: Candidate, rng, config: ZoaConfig) -> Candidate:
    x = np.asarray(candidate.position, dtype=float)
    r = rng.random(x.shape)
    omega = draw_omega(rng, x.shape, config.omega)
    lo, hi = config.bounds()
    return Candidate(np.clip(forage_step(x, best.position, r, omega), lo, hi))


def defense_update(candidate: Candidate, best: Candidate, iteration: int, config: ZoaConfig, rng) -> Candidate:
    """One defense move; ``best`` plays the attacked zebra."""
    x = np.asarray(candidate.position, dtype=float)
    lo, hi = config.bounds()
    if rng.random() <= 0.5:
        new = defense_perturb_step(x, rng.random(x.shape), iteration, config.max_iterations, config.defense_R)
    else:
        r = rng.random(x.shape)
        omega = draw_omega(rng, x.shape, config.omega)
        new = defense_attack_step(x, best.position, r, omega)
    return Candidate(np.clip(new, lo, hi))


# --- driver ----------------------------------------------------------------

def optimize(objective, config: ZoaConfig, initial=None, vectorized=False, rng=None) -> ZoaResult:
    """Maximize ``objective`` over the box of ``config``.

    ``objective`` maps a position to a float, or the whole ``(pop, dim)``
    population to a fitness vector when ``vectorized``.  Rows of ``initial``
    replace the first population members (useful to seed known solutions).
    """
    rng = np.random.default_rng(config.rng_seed) if rng is None else rng
    pop_n, dim, t_max = config.population_size, config.dimension, config.max_iterations
    lo, hi = config.bounds()

    def evaluate(pop):
        if vectorized:
            return np.asarray(objective(pop), dtype=float)
        return np.array([float(objective(row)) for row in pop])

    pop = lo + (hi - lo) * rng.random((pop_n, dim))
    if initial is not None:
        seeds = np.atleast_2d(np.asarray(initial, dtype=float))[:pop_n]
        pop[: len(seeds)] = np.clip(seeds, lo, hi)
    fit = evaluate(pop)
    n_evals = pop_n

    i_best = int(np.argmax(fit))
    best_x, best_f = pop[i_best].copy(), float(fit[i_best])
    trace = [best_f]
    stalls = 0
    stopped_early = False
    t = 0

    for t in range(1, t_max + 1):
        prev_best = best_f

        # foraging toward the pioneer zebra
        r = rng.random((pop_n, dim))
        omega = draw_omega(rng, (pop_n, dim), config.omega)
        trial = np.clip(forage_step(pop, best_x, r, omega), lo, hi)
        trial_fit = evaluate(trial)
        n_evals += pop_n
        keep = trial_fit > fit
        pop[keep], fit[keep] = trial[keep], trial_fit[keep]
        i_best = int(np.argmax(fit))
        if fit[i_best] > best_f:
            best_x, best_f = pop[i_best].copy(), float(fit[i_best])

        # defense: perturbation (guard <= 0.5) or move against the attacked zebra
        guard = rng.random(pop_n) <= 0.5
        r = rng.random((pop_n, dim))
        omega = draw_omega(rng, (pop_n, dim), config.omega)
        if config.attacked == "best":
            attacked = np.broadcast_to(best_x, pop.shape)
        else:
            attacked = pop[rng.integers(0, pop_n, size=pop_n)]
        perturbed = defense_perturb_step(pop, r, t, t_max, config.defense_R)
        chased = defense_attack_step(pop, attacked, r, omega)
        trial = np.clip(np.where(guard[:, None], perturbed, chased), lo, hi)
        trial_fit = evaluate(trial)
        n_evals += pop_n
        keep = trial_fit > fit
        pop[keep], fit[keep] = trial[keep], trial_fit[keep]
        i_best = int(np.argmax(fit))
        if fit[i_best] > best_f:
            best_x, best_f = pop[i_best].copy(), float(fit[i_best])

        trace.append(best_f)
        if best_f - prev_best <= config.epsilon:
            stalls += 1
            if config.patience is not None and stalls >= config.patience:
                stopped_early = True
                break
        else:
            stalls = 0

    return ZoaResult(Candidate(best_x, best_f), trace, t, stopped_early, n_evals)


def write_trace_csv(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "best_fitness"])
        for i, f in enumerate(trace):
            writer.writerow([i, repr(float(f))])
