"""FABRIK for closed-chain parallel mechanisms.

A mechanism is split into serial sub-chains that each start at their own fixed
base. Every iteration runs a forward and a backward reaching pass on each
sub-chain in index order. If the budget runs out before all leaves reach their
sub-targets, the target is taken to lie outside the workspace: it is replaced
by the centroid of the sub-chain end effectors and the loop restarts.
"""

from __future__ import annotations

import enum
from abc import ABC, abstractmethod

import numpy as np

from ._backend import reach
from .chain import SerialChain
from .model import SolveOutcome, SolverConfig, SubTargetSet, TargetPose


class DecompositionError(ValueError):
    """Raised when a mechanism yields no sub-chains."""


class SubTargetMismatchError(ValueError):
    """Raised when the number of sub-targets differs from the number of leaves."""


class Termination(enum.Enum):
    CONVERGED = "converged"
    CONTINUE = "continue"
    ITERATION_CAP_HIT = "iteration_cap_hit"


class MechanismModel(ABC):
    """What the solver needs to know about a parallel mechanism."""

    @abstractmethod
    def sub_chains(self) -> list[SerialChain]:
        """Fresh copies of the sub-chains in their home configuration."""

    @abstractmethod
    def sub_targets(self, pose: TargetPose) -> SubTargetSet:
        """Leaf targets, in sub-chain order then leaf order, for a reference-point pose."""

    @abstractmethod
    def extract_actuation(self, q: list[np.ndarray]):
        """Joint values recovered from solved joint positions."""

    def leaf_positions(self, q: list[np.ndarray]) -> np.ndarray:
        chains = self.sub_chains()
        return np.vstack([np.asarray(p)[c.leaves] for c, p in zip(chains, q)])

    def reference_point(self, q: list[np.ndarray]) -> np.ndarray:
        return self.leaf_positions(q).mean(axis=0)


def atp_revise(leaf_positions) -> np.ndarray:
    """Centroid of the end-effector positions, used as the projected target."""
    P = np.asarray(leaf_positions, dtype=float).reshape(-1, 3)
    if len(P) == 0:
        raise ValueError("cannot project a target from zero end effectors")
    return P.sum(axis=0) / len(P)


def check_termination(residuals, k: int, config: SolverConfig) -> Termination:
    """Decide whether iteration ``k`` (1-based) should run.

    Converged requires every residual within tolerance; the cap is hit once
    ``k`` exceeds the budget.
    """
    r = np.asarray(residuals, dtype=float)
    if r.size == 0 or r.max() <= config.tolerance:
        return Termination.CONVERGED
    if k > config.max_iter:
        return Termination.ITERATION_CAP_HIT
    return Termination.CONTINUE


def _split(sub: SubTargetSet, counts: list[int]):
    if len(sub) != sum(counts):
        raise SubTargetMismatchError(f"{len(sub)} sub-targets for {sum(counts)} end effectors")
    edges = np.cumsum([0] + counts)
    T = [np.ascontiguousarray(sub.positions[a:b]) for a, b in zip(edges[:-1], edges[1:])]
    A = [np.ascontiguousarray(sub.axes[a:b]) for a, b in zip(edges[:-1], edges[1:])]
    return T, A


def solve(mechanism: MechanismModel, target: TargetPose, config: SolverConfig | None = None,
          initial: list[np.ndarray] | None = None) -> SolveOutcome:
    """Solve the inverse kinematics of ``mechanism`` for ``target``.

    Args:
        mechanism: the parallel mechanism; it is not modified.
        target: desired pose of the mechanism's reference point.
        config: tolerance, iteration budget and projection rounds.
        initial: starting joint positions per sub-chain (default: home). Passing
            the previous solution gives warm starts along a trajectory.

    Returns:
        The outcome, including the solved joint positions of every sub-chain.
    """
    config = config or SolverConfig()
    chains = mechanism.sub_chains()
    if not chains:
        raise DecompositionError("mechanism decomposed into zero sub-chains")
    if initial is None:
        positions = [np.ascontiguousarray(c.positions, dtype=float).copy() for c in chains]
    else:
        if len(initial) != len(chains):
            raise DecompositionError(f"{len(initial)} initial configurations for {len(chains)} sub-chains")
        positions = [np.array(p, dtype=float, order="C") for p in initial]
        for c, p in zip(chains, positions):
            if p.shape != c.positions.shape:
                raise ValueError(f"initial configuration shape {p.shape} != {c.positions.shape}")
    kernels = [c.kernel for c in chains]
    counts = [len(c.leaves) for c in chains]

    sub = mechanism.sub_targets(target)
    T, A = _split(sub, counts)
    total = 0
    rounds = 0
    revised = None
    while True:
        k, converged, res = reach.iterate(kernels, positions, T, A, config.tolerance, config.max_iter)
        total += k
        if converged or rounds >= config.max_atp_rounds:
            break
        leaves = np.vstack([p[c.leaves] for c, p in zip(chains, positions)])
        revised = atp_revise(leaves)
        sub = mechanism.sub_targets(TargetPose(revised, target.orientation))
        T, A = _split(sub, counts)
        rounds += 1
    return SolveOutcome(
        converged=bool(converged),
        iterations=int(total),
        residuals=np.asarray(res, dtype=float),
        joint_positions=positions,
        atp_applied=revised is not None,
        revised_target=revised,
        atp_rounds=rounds,
        sub_targets=sub.positions,
    )
