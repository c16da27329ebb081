from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import itertools
import logging
import warnings
import numpy as np
from .exceptions import InvalidInputError
from .intensity import ChangePointConfig, IntensityFamily
from .objective import FitOptions, Hyperparams, SegmentFit, fit_segments
from .series import ExceedanceData

logger = logging.getLogger(__name__)

MUTATION_MODES = ("shift", "rate")
CROSSOVER_MODES = ("balanced", "union")


@dataclass(frozen=True)
class GAConfig:
    """Settings of the genetic search

    population_size : chromosomes per generation (k)
    generations : number of generations (r)
    init_prob : inclusion probability of each interior time at start
    mutation_probs : weights of the shifts (-1, 0, +1), normalised to 1
    crossover_keep_prob : survival probability of each point of the union;
      in "balanced" mode it is rescaled by (J_mother + J_father) / |union|
    crossover_mode : "balanced" keeps the expected child size at the
      parents' mean, "union" keeps every point with crossover_keep_prob
    jump_prob : probability that a child gains a random free interior time
      or loses a random change-point, each half of the time
    seed : non-negative seed of the main stream and all substreams
    max_duplicate_retries : redraws before a duplicate child is accepted
    elitism : copy each generation's best unchanged into the next
    mutation_mode : "shift" draws a shift per point from mutation_probs,
      "rate" moves each point by +-1 with probability mutation_rate
    patience : stop after this many generations without a new overall best
    """
    population_size: int = 50
    generations: int = 50
    init_prob: float = 0.06
    mutation_probs: Tuple[float, float, float] = (0.4, 0.3, 0.4)
    crossover_keep_prob: float = 0.5
    seed: int = 0
    max_duplicate_retries: int = 20
    elitism: bool = True
    mutation_mode: str = "shift"
    mutation_rate: float = 0.03
    patience: Optional[int] = None
    crossover_mode: str = "balanced"
    jump_prob: float = 0.2

    def __post_init__(self):
        for name in ("population_size", "generations",
                     "max_duplicate_retries"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be a positive integer")
        if int(self.seed) < 0:
            raise InvalidInputError(f"seed must be >= 0, got {self.seed}")
        for name in ("init_prob", "crossover_keep_prob", "mutation_rate",
                     "jump_prob"):
            val = float(getattr(self, name))
            if not 0.0 <= val <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1]")
        probs = np.asarray(self.mutation_probs, dtype=np.float64)
        if probs.shape != (3,) or (probs < 0).any() or probs.sum() <= 0:
            raise InvalidInputError(
                "mutation_probs must be three non-negative weights, got "
                f"{self.mutation_probs}")
        object.__setattr__(
            self, "mutation_probs",
            tuple(float(p) for p in probs / probs.sum()))
        if self.mutation_mode not in MUTATION_MODES:
            raise InvalidInputError(
                f"mutation_mode must be one of {MUTATION_MODES}")
        if self.crossover_mode not in CROSSOVER_MODES:
            raise InvalidInputError(
                f"crossover_mode must be one of {CROSSOVER_MODES}")
        if self.patience is not None and int(self.patience) < 1:
            raise InvalidInputError("patience must be a positive integer")


@dataclass(frozen=True)
class Evaluation:
    """Fitness of one chromosome; `score` is minimised"""
    score: float
    objective: Any
    fit: Optional[SegmentFit] = None


@dataclass
class GAHistory:
    """Per-generation bests and the overall optimum of a GA run"""
    best_configs: List[ChangePointConfig] = field(default_factory=list)
    best_evaluations: List[Evaluation] = field(default_factory=list)
    best_config: Optional[ChangePointConfig] = None
    best_evaluation: Optional[Evaluation] = None
    best_generation: int = -1
    evaluations: int = 0
    cache_hits: int = 0

    def record(self, generation: int, config: ChangePointConfig,
               evaluation: Evaluation) -> bool:
        """Append a generation's best, returns True on a new overall best"""
        self.best_configs.append(config)
        self.best_evaluations.append(evaluation)
        if (self.best_evaluation is None
                or evaluation.score < self.best_evaluation.score):
            self.best_config = config
            self.best_evaluation = evaluation
            self.best_generation = generation
            return True
        return False

    @property
    def generations(self) -> int:
        return len(self.best_configs)

    @property
    def bmdl_trace(self) -> List[float]:
        return [ev.score for ev in self.best_evaluations]

    @property
    def running_best(self) -> List[float]:
        return np.minimum.accumulate(self.bmdl_trace).tolist()

    @property
    def j_trace(self) -> List[int]:
        return [c.J for c in self.best_configs]

    @property
    def cp_frequency(self) -> Counter:
        """How often each time is a change-point of a generation's best"""
        return Counter(t for c in self.best_configs for t in c.tau)

    @property
    def best_value(self) -> float:
        return self.best_evaluation.score

    @property
    def best_objective(self):
        return self.best_evaluation.objective

    @property
    def best_fit(self) -> Optional[SegmentFit]:
        return self.best_evaluation.fit


def _draw_chromosome(T: int, p: float, rng: np.random.Generator):
    mask = rng.random(T - 2) < p
    return ChangePointConfig(tuple(np.arange(2, T)[mask].tolist()), T)


def init_population(T: int, cfg: GAConfig, rng: np.random.Generator
                    ) -> List[ChangePointConfig]:
    """Random initial generation

    Every interior time 2..T-1 is a change-point independently with
      probability `cfg.init_prob`, so J ~ Binomial(T-2, p).
    """
    T = int(T)
    if T < 3:
        raise InvalidInputError(f"T must be >= 3, got {T}")
    population, seen = [], set()
    for _ in range(cfg.population_size):
        for _ in range(cfg.max_duplicate_retries + 1):
            chrom = _draw_chromosome(T, cfg.init_prob, rng)
            if chrom not in seen:
                break
        else:
            logger.debug("accepting duplicate initial chromosome %s",
                         chrom.tau)
        population.append(chrom)
        seen.add(chrom)
    return population


def _score(value) -> float:
    return float(getattr(value, "score", value))


def rank_select(fitness: Sequence, rng: np.random.Generator
                ) -> Tuple[int, int]:
    """Draw a (mother, father) pair with probabilities proportional to rank

    The lowest score gets rank k and the highest rank 1; equal scores give
      the earlier index the higher rank. The father is drawn from the other
      k-1 members with renormalised ranks. A single-member population
      pairs with itself.

    Parameters:
    -----------
    fitness : Sequence
        Scores (floats or objects with a `score` attribute), lower is better

    rng : np.random.Generator
        The main random stream
    """
    scores = np.array([_score(v) for v in fitness], dtype=np.float64)
    k = scores.size
    if k == 0:
        raise InvalidInputError("empty population")
    if np.isnan(scores).any():
        raise InvalidInputError("fitness values must not be NaN")
    if k == 1:
        return 0, 0
    ranks = np.empty(k, dtype=np.float64)
    ranks[np.argsort(scores, kind="stable")] = np.arange(k, 0, -1)
    mother = int(rng.choice(k, p=ranks / ranks.sum()))
    rest = np.delete(np.arange(k), mother)
    father = int(rest[rng.choice(k - 1, p=ranks[rest] / ranks[rest].sum())])
    return mother, father


def crossover(mother: ChangePointConfig, father: ChangePointConfig,
              cfg: GAConfig, rng: np.random.Generator) -> ChangePointConfig:
    """Union of both parents' change-points, each kept independently

    In "union" mode the survival probability is `cfg.crossover_keep_prob`.
      In "balanced" mode it is min(1, keep_prob * (J_m + J_f) / |union|),
      so with keep_prob 0.5 the expected child size is the parents' mean.
    """
    if mother.horizon != father.horizon:
        raise InvalidInputError("parents have different horizons")
    union = np.union1d(mother.tau, father.tau).astype(np.int64)
    p = cfg.crossover_keep_prob
    if cfg.crossover_mode == "balanced" and union.size:
        p = min(1.0, p * (mother.J + father.J) / union.size)
    keep = rng.random(union.size) < p
    return ChangePointConfig(tuple(union[keep].tolist()), mother.horizon)


def mutate(child: ChangePointConfig, cfg: GAConfig,
           rng: np.random.Generator) -> ChangePointConfig:
    """Shift each change-point by -1, 0 or +1

    Shifted points are clamped to 2..T-1 and points that collide merge.
    """
    if child.J == 0:
        return child
    T = child.horizon
    tau = np.asarray(child.tau, dtype=np.int64)
    if cfg.mutation_mode == "shift":
        shifts = rng.choice(
            np.array([-1, 0, 1]), size=tau.size, p=cfg.mutation_probs)
    else:
        hit = rng.random(tau.size) < cfg.mutation_rate
        shifts = np.where(hit, rng.choice(np.array([-1, 1]), size=tau.size),
                          0)
    moved = np.unique(np.clip(tau + shifts, 2, T - 1))
    return ChangePointConfig(tuple(moved.tolist()), T)


def jump(child: ChangePointConfig, cfg: GAConfig,
         rng: np.random.Generator) -> ChangePointConfig:
    """Birth or death of one change-point with probability `cfg.jump_prob`

    A birth adds a uniformly drawn interior time that is not yet a
      change-point, a death removes a uniformly chosen one; both are equally
      likely. A birth on a full chromosome or a death on an empty one
      leaves the child unchanged.
    """
    if cfg.jump_prob == 0.0 or rng.random() >= cfg.jump_prob:
        return child
    T = child.horizon
    tau = np.asarray(child.tau, dtype=np.int64)
    if rng.random() < 0.5:
        free = np.setdiff1d(np.arange(2, T), tau)
        if free.size == 0:
            return child
        tau = np.union1d(tau, [int(rng.choice(free))])
    else:
        if tau.size == 0:
            return child
        tau = np.delete(tau, int(rng.integers(tau.size)))
    return ChangePointConfig(tuple(tau.tolist()), T)


FitnessFn = Callable[[ChangePointConfig, np.random.Generator], Evaluation]


class _Evaluator:
    """Cached fitness evaluation with per-chromosome random substreams"""

    def __init__(self, fitness_fn: FitnessFn, seed: int, workers: int):
        self.fitness_fn = fitness_fn
        self.seed = seed
        self.workers = max(1, int(workers))
        self.cache: Dict[ChangePointConfig, Evaluation] = {}
        self.hits = 0

    def _job(self, item):
        (config, (generation, index)) = item
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(generation, index))
        ev = self.fitness_fn(config, np.random.default_rng(ss))
        score = ev.score if np.isfinite(ev.score) else np.inf
        return config, Evaluation(score, ev.objective, ev.fit)

    def __call__(self, population, generation, executor=None):
        todo = {}
        for i, chrom in enumerate(population):
            if chrom in self.cache or chrom in todo:
                self.hits += 1
            else:
                todo[chrom] = (generation, i)
        if executor is None:
            results = map(self._job, todo.items())
        else:
            results = executor.map(self._job, todo.items())
        for chrom, ev in results:
            self.cache[chrom] = ev
        return [self.cache[chrom] for chrom in population]


def _next_generation(population, scores, best, cfg, rng):
    children = [population[best]] if cfg.elitism else []
    seen = set(children)
    while len(children) < len(population):
        for _ in range(cfg.max_duplicate_retries + 1):
            mother, father = rank_select(scores, rng)
            child = crossover(
                population[mother], population[father], cfg, rng)
            child = jump(mutate(child, cfg, rng), cfg, rng)
            if child not in seen:
                break
        else:
            logger.debug("accepting duplicate child %s after %d retries",
                         child.tau, cfg.max_duplicate_retries)
        children.append(child)
        seen.add(child)
    return children


def evolve(horizon: int, fitness_fn: FitnessFn, cfg: GAConfig = GAConfig(),
           workers: int = 1) -> GAHistory:
    """Generation loop shared by the Bayesian and the frequentist GA

    Parameters:
    -----------
    horizon : int
        Series length T (>= 3)

    fitness_fn : Callable[[ChangePointConfig, np.random.Generator],
                          Evaluation]
        Scores a chromosome; the generator is a substream keyed by
          (seed, generation, index of first appearance)

    cfg : GAConfig
        GA settings

    workers : int
        Threads evaluating new chromosomes of a generation concurrently.
          The result does not depend on it.

    Returns:
    --------
    GAHistory
    """
    rng = np.random.default_rng(cfg.seed)
    population = init_population(horizon, cfg, rng)
    evaluate = _Evaluator(fitness_fn, cfg.seed, workers)
    history = GAHistory()
    executor = (ThreadPoolExecutor(max_workers=evaluate.workers)
                if evaluate.workers > 1 else None)
    stale = 0
    try:
        for generation in range(cfg.generations):
            evals = evaluate(population, generation, executor)
            scores = [ev.score for ev in evals]
            best = int(np.argmin(scores))
            improved = history.record(
                generation, population[best], evals[best])
            stale = 0 if improved else stale + 1
            logger.info("generation %d: best %.6g with J=%d",
                        generation, scores[best], population[best].J)
            if cfg.patience is not None and stale >= cfg.patience:
                logger.info("no improvement for %d generations, stopping",
                            stale)
                break
            if generation + 1 < cfg.generations:
                population = _next_generation(
                    population, scores, best, cfg, rng)
    finally:
        if executor is not None:
            executor.shutdown()
    history.evaluations = len(evaluate.cache)
    history.cache_hits = evaluate.hits
    logger.debug("%d fitness evaluations, %d cache hits",
                 history.evaluations, history.cache_hits)
    return history


def run_ga(data: ExceedanceData,
           family: IntensityFamily,
           hyper: Hyperparams = Hyperparams(),
           cfg: GAConfig = GAConfig(),
           workers: int = 1,
           opts: FitOptions = FitOptions()) -> GAHistory:
    """Bayesian-MDL change-point search on exceedance data

    Example:
    --------
        import cpdetect as cp
        series = cp.gen_lognormal_series(cp.get_setting("1cp"), rng=7)
        data = cp.extract_exceedances(series, cp.mean_threshold(series))
        hist = cp.run_ga(data, "W", cfg=cp.GAConfig(seed=7))
        hist.best_config.tau
    """
    family = IntensityFamily.parse(family)
    if data.n == 0:
        warnings.warn(
            "no exceedances above the threshold; every regime is fitted to "
            "an empty event stream", RuntimeWarning)

    def fitness(config, rng):
        fit, value = fit_segments(family, config, data, hyper, opts, rng)
        return Evaluation(value.bmdl, value, fit)

    return evolve(data.horizon, fitness, cfg, workers)


def exhaustive_search(data: ExceedanceData,
                      family: IntensityFamily,
                      hyper: Hyperparams = Hyperparams(),
                      max_changes: int = 2,
                      opts: FitOptions = FitOptions(),
                      seed: int = 0
                      ) -> Tuple[ChangePointConfig, Evaluation]:
    """Fit every configuration with at most `max_changes` change-points and
        return the one with the lowest Bayesian-MDL"""
    family = IntensityFamily.parse(family)
    T = data.horizon
    best = None
    configs = itertools.chain.from_iterable(
        itertools.combinations(range(2, T), J)
        for J in range(int(max_changes) + 1))
    for i, tau in enumerate(configs):
        config = ChangePointConfig(tau, T)
        rng = np.random.default_rng([seed, i])
        fit, value = fit_segments(family, config, data, hyper, opts, rng)
        if best is None or value.bmdl < best[1].score:
            best = (config, Evaluation(value.bmdl, value, fit))
    return best
