"""Exact discrete-time Markov chain of a small TSP buffer.

Per slot: a Bernoulli RT arrival is offered first, then a Bernoulli NRT
arrival, then one PDU is served (RT first). The chain is observed at slot
boundaries. Its stationary distribution gives exact RT blocking and NRT loss
probabilities against which the simulator's queue mechanics are checked.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class OracleVariant(str, enum.Enum):
    ORIGINAL = "original"
    # enhanced buffer without the flow-control loop: no push-out, RT blocked when full
    ENHANCED_NO_FC = "enhanced-no-fc"


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleModel:
    n: int
    r: int
    p_rt: float
    p_nrt: float
    variant: OracleVariant = OracleVariant.ORIGINAL

    def __post_init__(self):
        object.__setattr__(self, "variant", OracleVariant(self.variant))
        if not 1 <= self.n <= 12:
            raise ValueError(f"oracle capacity must be in 1..12, got {self.n}")
        if not 1 <= self.r <= self.n:
            raise ValueError(f"need 1 <= r <= n, got r={self.r}, n={self.n}")
        for p in (self.p_rt, self.p_nrt):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"arrival probabilities must lie in [0, 1], got {p}")

    @property
    def push_out(self) -> bool:
        return self.variant is OracleVariant.ORIGINAL

    def states(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.r + 1) for j in range(self.n - i + 1)]


@dataclass
class OracleResult:
    model: OracleModel
    states: list[tuple[int, int]]
    stationary: np.ndarray
    transition: np.ndarray
    rt_block_prob: float | None
    nrt_drop_prob: float | None
    iterations: int
    residual: float


def slot_step(model: OracleModel, i: int, j: int, a_rt: bool, a_nrt: bool):
    """One slot from state (i, j): returns (i', j', rt_blocked, nrt_lost)."""
    rt_blocked = nrt_lost = 0
    if a_rt:
        if i == model.r:
            rt_blocked = 1
        elif i + j < model.n:
            i += 1
        elif model.push_out:
            j -= 1
            i += 1
            nrt_lost += 1
        else:
            rt_blocked = 1
    if a_nrt:
        if i + j == model.n:
            nrt_lost += 1
        else:
            j += 1
    if i:
        i -= 1
    elif j:
        j -= 1
    return i, j, rt_blocked, nrt_lost


def build(model: OracleModel):
    """Transition matrix plus expected per-slot RT blocks and NRT losses by state."""
    states = model.states()
    index = {s: k for k, s in enumerate(states)}
    m = len(states)
    P = np.zeros((m, m))
    blocks = np.zeros(m)
    losses = np.zeros(m)
    for k, (i, j) in enumerate(states):
        for a_rt in (False, True):
            for a_nrt in (False, True):
                prob = ((model.p_rt if a_rt else 1 - model.p_rt)
                        * (model.p_nrt if a_nrt else 1 - model.p_nrt))
                if prob == 0.0:
                    continue
                i2, j2, b, l = slot_step(model, i, j, a_rt, a_nrt)
                P[k, index[(i2, j2)]] += prob
                blocks[k] += prob * b
                losses[k] += prob * l
    return states, P, blocks, losses


def solve(model: OracleModel, tol: float = 1e-12, max_iter: int = 1_000_000) -> OracleResult:
    states, P, blocks, losses = build(model)
    rows = P.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > 1e-12:
        raise AssertionError(f"transition matrix rows do not sum to 1: {rows}")
    # lazy chain has the same stationary law and is aperiodic
    lazy = 0.5 * (P + np.eye(len(states)))
    pi = np.full(len(states), 1.0 / len(states))
    residual = math.inf
    # Plain steps first; after that the step matrix is squared each round so
    # that nearly deterministic chains (p close to 0 or 1, mixing times of
    # 1e5 slots and more) still converge. `it` counts iterations performed.
    step = lazy
    converged = False
    it = 0
    while it < max_iter:
        pi = pi @ step
        pi /= pi.sum()
        it += 1
        residual = float(np.max(np.abs(pi @ P - pi)))
        if residual < tol:
            converged = True
            break
        if it >= 256:
            step = step @ step
            step /= step.sum(axis=1, keepdims=True)
    if not converged:
        raise ConvergenceError(f"power iteration did not reach residual {tol} after {max_iter} "
                               f"iterations (residual {residual:.3e}) for {model}")
    rt = float(pi @ blocks) / model.p_rt if model.p_rt > 0 else None
    nrt = float(pi @ losses) / model.p_nrt if model.p_nrt > 0 else None
    return OracleResult(model, states, pi, P, rt, nrt, it, residual)


def batch_means_se(lost: np.ndarray, arrivals: np.ndarray) -> float:
    """Standard error of the ratio estimator sum(lost)/sum(arrivals) from batches."""
    b = len(arrivals)
    tot = arrivals.sum()
    if b < 2 or tot == 0:
        return 0.0
    p_hat = lost.sum() / tot
    resid = lost - p_hat * arrivals
    mean_a = tot / b
    return float(np.sqrt((resid ** 2).sum() / (b * (b - 1))) / mean_a)


@dataclass
class Comparison:
    """Simulated vs exact loss probability for one metric of one model.

    ``sigma_binomial`` treats every arrival as an independent trial;
    ``sigma_batch`` is the batch-means standard error, which also captures the
    positive autocorrelation of losses in a finite queue. The pass bound uses
    the larger of the two.
    """

    model: OracleModel
    metric: str
    exact: float | None
    simulated: float | None
    arrivals: int
    sigma_binomial: float
    sigma_batch: float
    n_sigma: float = 3.0

    @property
    def deviation(self) -> float:
        if self.exact is None or self.simulated is None:
            return 0.0
        return abs(self.simulated - self.exact)

    @property
    def bound(self) -> float:
        return self.n_sigma * max(self.sigma_binomial, self.sigma_batch) + 1e-12

    @property
    def z_binomial(self) -> float:
        return self.deviation / self.sigma_binomial if self.sigma_binomial > 0 else 0.0

    @property
    def passed(self) -> bool:
        if self.exact is None or self.arrivals == 0:
            return self.simulated is None or self.simulated == 0.0
        return self.deviation <= self.bound


def compare_with_sim(model: OracleModel, sim_slots: int, seed: int = 1,
                     n_sigma: float = 3.0, r_offset: int = 0) -> list[Comparison]:
    """Run the simulator's degenerate mode and compare with the exact chain.

    ``r_offset`` perturbs the simulated RT cap only; it exists to check that
    the comparison detects a wrong buffer. With one RT arrival and one service
    per slot the RT queue is empty at every slot boundary, so only a cap
    lowered to zero is visible.
    """
    from .engine import run_degenerate

    exact = solve(model)
    sim = run_degenerate(model, sim_slots, seed, rt_cap_offset=r_offset)
    batches = sim["batches"]
    out = []
    for metric, p, lost, arrivals, cols in (
            ("rt_block", exact.rt_block_prob, sim["rt_blocked"], sim["rt_arrivals"], (0, 1)),
            ("nrt_drop", exact.nrt_drop_prob, sim["nrt_lost"], sim["nrt_arrivals"], (2, 3))):
        simulated = lost / arrivals if arrivals else None
        if p is None or simulated is None:
            s_bin = s_bm = 0.0
        else:
            s_bin = math.sqrt(p * (1 - p) / arrivals)
            s_bm = batch_means_se(batches[:, cols[1]], batches[:, cols[0]])
        out.append(Comparison(model, metric, p, simulated, arrivals, s_bin, s_bm, n_sigma))
    return out


def default_grid(ns=(2, 4, 8), ps=(0.1, 0.5, 0.9),
                 variants=(OracleVariant.ORIGINAL, OracleVariant.ENHANCED_NO_FC)) -> list[OracleModel]:
    """Per capacity n: r in (1, n/2) x variants x (p_rt, p_nrt) in ps x ps.

    That is 2 x 2 x 9 models per n. For n = 2 both r choices equal 1; the
    duplicate cells are kept (they are simulated with different seeds).
    """
    grid = []
    for n in ns:
        for r in (1, max(1, n // 2)):
            for v in variants:
                for p_rt in ps:
                    for p_nrt in ps:
                        grid.append(OracleModel(n, r, p_rt, p_nrt, v))
    return grid


def grid_cells(grid: list[OracleModel]) -> int:
    """Number of (n, r choice, variant) cells; each cell holds one model per p pair."""
    return len(grid) // 9 if len(grid) % 9 == 0 else len(grid)
