"""Laplacian spectrum of symmetric graphs and the contraction-rate bound it implies."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidParameter, UnsupportedGraph
from .graph import Graph

ZERO_TOL = 1e-9


@dataclass(frozen=True)
class SpectralSummary:
    lambda1: float
    lambda_max: float
    multiplicity_zero: int

    def as_dict(self) -> dict:
        return asdict(self)


def laplacian(g: Graph) -> np.ndarray:
    """``L = D_out - A`` with ``A[v, u] = 1`` for each edge v -> u."""
    lap = np.zeros((g.n, g.n), dtype=np.int64)
    for v, nbrs in enumerate(g.out_adj):
        lap[v, v] = len(nbrs)
        lap[v, list(nbrs)] = -1
    assert not lap.sum(axis=1).any()
    return lap.astype(float)


def spectral_gap(g: Graph, tol: float = ZERO_TOL) -> SpectralSummary:
    """Smallest nonzero Laplacian eigenvalue by dense symmetric eigensolve.

    Eigenvalues below ``tol * lambda_max`` count as zero. A disconnected graph
    yields ``multiplicity_zero > 1`` rather than an error.
    """
    if not g.is_symmetric():
        raise UnsupportedGraph(
            f"spectral gap needs a symmetric graph; {g.family} graph is not symmetric")
    eig = np.linalg.eigvalsh(laplacian(g))
    lam_max = float(eig[-1])
    if lam_max <= 0.0:
        # edgeless graph
        return SpectralSummary(0.0, 0.0, g.n)
    nonzero = eig > tol * lam_max
    return SpectralSummary(float(eig[nonzero][0]), lam_max, int(np.count_nonzero(~nonzero)))


def rate_bound(g: Graph, q: float, summary: SpectralSummary | None = None) -> float:
    """Upper bound ``1 - 2q(1-q) lambda1 / N`` on the per-step contraction of E[d(t)]."""
    if not 0.0 < q < 1.0:
        raise InvalidParameter(f"rate bound needs q in (0, 1), got {q}")
    summary = summary or spectral_gap(g)
    if summary.multiplicity_zero != 1:
        raise UnsupportedGraph("rate bound needs a connected graph")
    return 1.0 - 2.0 * q * (1.0 - q) * summary.lambda1 / g.n
