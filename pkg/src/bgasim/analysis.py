"""Monte Carlo bias estimation, closed-form bounds, and exact one-step oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .engine import SimConfig, TrialResult, default_max_steps, fixed_initial_condition, run_trial
from .engine import step_bound as _step_bound
from .errors import InvalidParameter, UnsupportedGraph
from .graph import Graph
from .spectral import SpectralSummary, rate_bound, spectral_gap

# fraction of capped trials above which an estimate is flagged
UNRELIABLE_CAP_FRACTION = 0.01


@dataclass(frozen=True)
class BiasEstimate:
    mean_beta: float
    std_error: float
    trials: int
    config_echo: dict
    hit_cap_fraction: float = 0.0
    mean_final_disagreement: float = 0.0
    max_step_increment: float = 0.0
    violations: int = 0
    results: tuple[TrialResult, ...] = field(default=(), repr=False, compare=False)

    @property
    def unreliable(self) -> bool:
        return self.hit_cap_fraction > UNRELIABLE_CAP_FRACTION

    def as_dict(self) -> dict:
        return {
            "mean_beta": self.mean_beta,
            "std_error": self.std_error,
            "trials": self.trials,
            "hit_cap_fraction": self.hit_cap_fraction,
            "unreliable": self.unreliable,
            "mean_final_disagreement": self.mean_final_disagreement,
            "max_step_increment": self.max_step_increment,
            "step_bound_violations": self.violations,
            "config": self.config_echo,
        }


@dataclass(frozen=True)
class BoundReport:
    family: str
    n: int
    q: float
    deg_max: int
    step_bound: float
    spectral: SpectralSummary | None = None
    rate_bound: float | None = None
    prop3_shape: float | None = None
    complete_closed_form: float | None = None
    tail: tuple[tuple[float, float], ...] = ()

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "q": self.q,
            "deg_max": self.deg_max,
            "step_bound": self.step_bound,
            "spectral": self.spectral.as_dict() if self.spectral else None,
            "rate_bound": self.rate_bound,
            "prop3_shape": self.prop3_shape,
            "complete_closed_form": self.complete_closed_form,
            "tail": [{"c": c, "bound": b} for c, b in self.tail],
        }


def _mean_and_se(values) -> tuple[float, float]:
    # fsum is exactly rounded, so the result does not depend on trial order
    m = len(values)
    mean = math.fsum(values) / m
    if m < 2:
        return mean, 0.0
    var = math.fsum((b - mean) ** 2 for b in values) / (m - 1)
    return mean, math.sqrt(var / m)


def sample_variance(x) -> float:
    """Unbiased (ddof=1) sample variance."""
    x = np.asarray(x, dtype=float)
    mean = math.fsum(x) / x.size
    return math.fsum((x - mean) ** 2) / (x.size - 1)


def aggregate(results, cfg: SimConfig, extra_echo: dict | None = None) -> BiasEstimate:
    results = tuple(results)
    mean, se = _mean_and_se([r.beta for r in results])
    m = len(results)
    echo = cfg.as_dict()
    echo.update(extra_echo or {})
    return BiasEstimate(
        mean_beta=mean,
        std_error=se,
        trials=m,
        config_echo=echo,
        hit_cap_fraction=sum(r.hit_cap for r in results) / m,
        mean_final_disagreement=math.fsum(r.final_disagreement for r in results) / m,
        max_step_increment=max(r.max_step_increment for r in results),
        violations=sum(r.violations for r in results),
        results=results,
    )


def estimate_bias(g: Graph, cfg: SimConfig, x0=None) -> BiasEstimate:
    """Average beta(T^eps) over ``cfg.trials`` independent trials.

    With ``cfg.resample_x0`` every trial draws its own x(0); otherwise all
    trials share ``x0`` (or a seeded draw if ``x0`` is None).
    """
    if cfg.max_steps is None:
        cfg = replace(cfg, max_steps=default_max_steps(g, cfg.q))
    echo = {"x0_mode": "resampled" if cfg.resample_x0 else "fixed"}
    if not cfg.resample_x0:
        if x0 is None:
            x0 = fixed_initial_condition(g.n, cfg)
        x0 = np.asarray(x0, dtype=float)
        echo["x0_sample_variance"] = sample_variance(x0) if g.n > 1 else 0.0
    elif x0 is not None:
        raise InvalidParameter("x0 given but cfg.resample_x0 is set")
    results = [run_trial(g, cfg, i, x0=x0) for i in range(cfg.trials)]
    return aggregate(results, cfg, echo)


def _increments(x, g: Graph, q: float) -> np.ndarray:
    """Average increment for every possible broadcaster, by enumeration of out-edges."""
    x = np.asarray(x, dtype=float)
    indptr, indices = g.csr
    owner = np.repeat(np.arange(g.n), np.diff(indptr))
    diffs = x[owner] - x[indices]
    return q / g.n * np.bincount(owner, weights=diffs, minlength=g.n)


def martingale_oracle(state, g: Graph, q: float) -> float:
    """Exact E[x_ave(t+1) - x_ave(t) | x(t)] over the N equally likely broadcasters."""
    x = getattr(state, "x", state)
    return math.fsum(_increments(x, g, q)) / g.n


def variance_oracle(state, g: Graph, q: float) -> tuple[float, float]:
    """Exact conditional second moment of the increment and its ``4 q^2 deg_max^2 d / N^2`` cap."""
    from .engine import disagreement

    x = np.asarray(getattr(state, "x", state), dtype=float)
    exact = math.fsum(_increments(x, g, q) ** 2) / g.n
    bound = 4.0 * q * q * g.degrees.deg_max ** 2 * disagreement(x) / g.n ** 2
    return exact, bound


def _check_q_open(q: float) -> None:
    if not 0.0 < q < 1.0:
        raise InvalidParameter(f"q must lie in (0, 1), got {q}")


def prop3_shape(g: Graph, q: float, summary: SpectralSummary | None = None) -> float:
    """``q/(1-q) * deg_max^2 / (N lambda1)``: the bias bound up to its unknown constant."""
    _check_q_open(q)
    summary = summary or spectral_gap(g)
    if summary.multiplicity_zero != 1:
        raise UnsupportedGraph("bias bound needs a connected graph")
    return q / (1.0 - q) * g.degrees.deg_max ** 2 / (g.n * summary.lambda1)


def tail_bound(g: Graph, q: float, c: float, summary: SpectralSummary | None = None) -> float:
    """Markov-inequality shape for Pr[beta > c]."""
    if not c > 0:
        raise InvalidParameter(f"c must be positive, got {c}")
    return prop3_shape(g, q, summary) / c


def complete_graph_bias(sample_var_x0: float, q: float, n: int) -> float:
    """Expected bias on the complete graph: ``Var * q/(2-q) * (N-1)/N``."""
    if not 0.0 < q <= 1.0:
        raise InvalidParameter(f"q must lie in (0, 1], got {q}")
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    if sample_var_x0 < 0:
        raise InvalidParameter("variance must be nonnegative")
    return sample_var_x0 * q / (2.0 - q) * (n - 1) / n


def fit_scaling(series) -> float:
    """Least-squares slope of log(mean_beta) against log(N)."""
    pts = [(float(n), float(b)) for n, b in series]
    if len(pts) < 4:
        raise InvalidParameter("scaling fit needs at least 4 points")
    ns = [n for n, _ in pts]
    if len(set(ns)) != len(ns):
        raise InvalidParameter("scaling fit needs distinct N values")
    if any(n <= 0 or b <= 0 or not math.isfinite(b) for n, b in pts):
        raise InvalidParameter("scaling fit needs positive N and mean_beta")
    slope, _ = np.polyfit(np.log(ns), np.log([b for _, b in pts]), 1)
    return float(slope)


def bound_report(g: Graph, q: float, L: float = 1.0, x0_var: float | None = None,
                 tail_cs=None) -> BoundReport:
    """Every closed-form quantity available for ``(g, q)``.

    Spectral quantities are omitted for non-symmetric or disconnected graphs,
    and the q/(1-q) quantities at q = 1. ``x0_var`` defaults to ``L**2/12``,
    the variance of the uniform initial distribution.
    """
    spectral = rate = shape = closed = None
    tail = ()
    if g.is_symmetric():
        spectral = spectral_gap(g)
        if spectral.multiplicity_zero == 1 and q < 1.0:
            rate = rate_bound(g, q, spectral)
            shape = prop3_shape(g, q, spectral)
            cs = tail_cs if tail_cs is not None else (1.0 / g.n,)
            tail = tuple((float(c), shape / c) for c in cs)
    if g.family == "complete":
        closed = complete_graph_bias(L * L / 12.0 if x0_var is None else x0_var, q, g.n)
    return BoundReport(
        family=g.family,
        n=g.n,
        q=q,
        deg_max=g.degrees.deg_max,
        step_bound=_step_bound(g, q, L),
        spectral=spectral,
        rate_bound=rate,
        prop3_shape=shape,
        complete_closed_form=closed,
        tail=tail,
    )
