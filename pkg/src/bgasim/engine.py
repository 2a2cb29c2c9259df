"""Broadcast gossip dynamics: single steps, running statistics, and epsilon-stopped trials.

The hot loop lives in a numba kernel that consumes pre-drawn broadcaster
indices in chunks. The pure-Python ``StateVector``/``broadcast_step`` path
implements the same update and serves as the reference in tests.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .errors import InvalidParameter
from .graph import Graph

REBASE_EVERY = 4096
DEFAULT_MAX_STEPS = 10**7

_CHUNK_MIN = 256
_CHUNK_MAX = 1 << 20


@dataclass(frozen=True)
class SimConfig:
    q: float
    epsilon: float = 1e-4
    L: float = 1.0
    max_steps: int | None = None
    master_seed: int = 0
    trials: int = 1000
    resample_x0: bool = True

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise InvalidParameter(f"q must lie in (0, 1], got {self.q}")
        if not self.epsilon > 0.0:
            raise InvalidParameter(f"epsilon must be positive, got {self.epsilon}")
        if not self.L > 0.0:
            raise InvalidParameter(f"L must be positive, got {self.L}")
        if self.trials < 1:
            raise InvalidParameter(f"trials must be >= 1, got {self.trials}")
        if self.max_steps is not None and self.max_steps < 1:
            raise InvalidParameter(f"max_steps must be >= 1, got {self.max_steps}")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidParameter("master_seed must be a 64-bit unsigned integer")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrialResult:
    beta: float
    stop_time: int
    hit_cap: bool
    max_step_increment: float
    final_disagreement: float
    violations: int = 0
    final_state: np.ndarray | None = field(default=None, repr=False, compare=False)


class StateVector:
    """Node values with running mean and squared-deviation caches.

    The caches hold sums of ``x - shift`` and ``(x - shift)**2``; the shift is
    moved to the current mean on every rebase so the disagreement never comes
    from subtracting two large, nearly equal numbers.
    """

    def __init__(self, x, L: float = 1.0):
        self.x = np.array(x, dtype=float)
        if self.x.ndim != 1 or self.x.size == 0:
            raise InvalidParameter("state must be a non-empty 1-d vector")
        self.L = float(L)
        self.n = self.x.size
        self.rebase()

    def rebase(self) -> None:
        self.shift = math.fsum(self.x) / self.n
        dev = self.x - self.shift
        self.s1 = math.fsum(dev)
        self.s2 = math.fsum(dev * dev)
        self.since_rebase = 0

    @property
    def cached_avg(self) -> float:
        return self.shift + self.s1 / self.n

    @property
    def cached_sq_dev(self) -> float:
        return max(self.s2 - self.s1 * self.s1 / self.n, 0.0)

    @property
    def d(self) -> float:
        return self.cached_sq_dev / self.n

    def average(self) -> float:
        return math.fsum(self.x) / self.n

    def copy(self) -> StateVector:
        return StateVector(self.x, self.L)


def disagreement(state) -> float:
    """Mean squared deviation from the current average, computed from scratch."""
    x = state.x if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    if x.min() == x.max():
        return 0.0
    mean = math.fsum(x) / x.size
    dev = x - mean
    return math.fsum(dev * dev) / x.size


def average_increment(state, g: Graph, v: int, q: float) -> float:
    """Change in the network average that a broadcast from ``v`` would cause."""
    x = state.x if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    xv = x[v]
    return q / g.n * math.fsum(xv - x[u] for u in g.out_adj[v])


def broadcast_step(state: StateVector, g: Graph, v: int, q: float) -> StateVector:
    """Apply one broadcast from ``v`` in place and return the state."""
    if not 0 <= v < g.n:
        raise InvalidParameter(f"broadcaster {v} outside [0, {g.n})")
    x = state.x
    xv = x[v]
    c = state.shift
    for u in g.out_adj[v]:
        old = x[u]
        new = (1.0 - q) * old + q * xv
        x[u] = new
        state.s1 += new - old
        state.s2 += (new - c) ** 2 - (old - c) ** 2
    state.since_rebase += 1
    if state.since_rebase >= REBASE_EVERY:
        state.rebase()
    return state


def step_bound(g: Graph, q: float, L: float = 1.0) -> float:
    """Deterministic cap ``q * deg_plus_max * L / N`` on any one-step change of the average."""
    return q * g.degrees.deg_plus_max * L / g.n


def default_max_steps(g: Graph, q: float) -> int:
    """``500 N ceil(N / (2q(1-q) lambda1))`` when the spectral gap applies, else 10**7."""
    from .spectral import spectral_gap

    if not (0.0 < q < 1.0 and g.is_symmetric()):
        return DEFAULT_MAX_STEPS
    s = spectral_gap(g)
    if s.multiplicity_zero != 1:
        return DEFAULT_MAX_STEPS
    return 500 * g.n * math.ceil(g.n / (2.0 * q * (1.0 - q) * s.lambda1))


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial, keyed by ``(master_seed, trial_index)``."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(master_seed, spawn_key=(trial_index,))))


def fixed_initial_condition(n: int, cfg: SimConfig) -> np.ndarray:
    """x(0) shared by all trials when ``resample_x0`` is off (root stream, no spawn key)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.master_seed)))
    return rng.random(n) * cfg.L


@numba.njit(cache=True, nogil=True)
def _exact_stats(x):
    n = x.size
    mean = 0.0
    lo = x[0]
    hi = x[0]
    for i in range(n):
        mean += x[i]
        lo = min(lo, x[i])
        hi = max(hi, x[i])
    if lo == hi:
        # exact consensus; the rounded mean could leave a spurious residue
        return lo, 0.0
    mean /= n
    s2 = 0.0
    for i in range(n):
        s2 += (x[i] - mean) * (x[i] - mean)
    return mean, s2


@numba.njit(cache=True, nogil=True)
def _advance(x, indptr, indices, q, eps, bound, max_steps, draws, fst, ist):
    """Run steps until d <= eps, the step cap, or the end of ``draws``.

    ``fst = [shift, s1, s2, max_inc]`` and ``ist = [t, since_rebase, violations]``
    carry state between chunks. Returns 1 on convergence, 2 on the cap, 0 when
    more draws are needed.
    """
    n = x.size
    shift, s1, s2, max_inc = fst[0], fst[1], fst[2], fst[3]
    t, since, viol = ist[0], ist[1], ist[2]
    status = 0
    k = 0
    while True:
        m = s1 / n
        if s2 / n - m * m <= eps:
            shift, s2 = _exact_stats(x)
            s1 = 0.0
            since = 0
            if s2 / n <= eps:
                status = 1
                break
        if t >= max_steps:
            status = 2
            break
        if k >= draws.size:
            break
        v = draws[k]
        k += 1
        xv = x[v]
        acc = 0.0
        for j in range(indptr[v], indptr[v + 1]):
            u = indices[j]
            old = x[u]
            new = (1.0 - q) * old + q * xv
            x[u] = new
            acc += xv - old
            s1 += new - old
            s2 += (new - shift) * (new - shift) - (old - shift) * (old - shift)
        inc = abs(q * acc / n)
        if inc > max_inc:
            max_inc = inc
        if inc > bound:
            viol += 1
        t += 1
        since += 1
        if since >= REBASE_EVERY:
            shift, s2 = _exact_stats(x)
            s1 = 0.0
            since = 0
    fst[0], fst[1], fst[2], fst[3] = shift, s1, s2, max_inc
    ist[0], ist[1], ist[2] = t, since, viol
    return status


def run_trial(g: Graph, cfg: SimConfig, trial_index: int = 0, x0=None,
              keep_state: bool = False) -> TrialResult:
    """One realization of the algorithm, stopped at the first t with d(t) <= epsilon.

    Draw order on the trial stream: the initial-condition block (only when
    ``x0`` is not given), then broadcaster indices. ``x0`` is the hook for a
    fixed initial condition.
    """
    rng = trial_rng(cfg.master_seed, trial_index)
    if x0 is None:
        x = rng.random(g.n) * cfg.L
    else:
        x = np.array(x0, dtype=float)
        if x.shape != (g.n,):
            raise InvalidParameter(f"x0 must have shape ({g.n},), got {x.shape}")
    mean0 = math.fsum(x) / g.n
    max_steps = cfg.max_steps if cfg.max_steps is not None else default_max_steps(g, cfg.q)
    indptr, indices = g.csr
    bound = step_bound(g, cfg.q, cfg.L)

    shift, s2 = _exact_stats(x)
    fst = np.array([shift, 0.0, s2, 0.0])
    ist = np.zeros(3, dtype=np.int64)
    empty = np.zeros(0, dtype=np.int64)
    chunk = _CHUNK_MIN
    status = _advance(x, indptr, indices, cfg.q, cfg.epsilon, bound, max_steps, empty, fst, ist)
    while status == 0:
        size = int(min(chunk, max_steps - ist[0]))
        draws = rng.integers(0, g.n, size=size, dtype=np.int64)
        status = _advance(x, indptr, indices, cfg.q, cfg.epsilon, bound, max_steps, draws, fst, ist)
        chunk = min(chunk * 2, _CHUNK_MAX)

    mean_t = math.fsum(x) / g.n
    return TrialResult(
        beta=(mean_t - mean0) ** 2,
        stop_time=int(ist[0]),
        hit_cap=status == 2,
        max_step_increment=float(fst[3]),
        final_disagreement=disagreement(x),
        violations=int(ist[2]),
        final_state=x if keep_state else None,
    )
