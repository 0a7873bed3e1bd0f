"""Explicit-Euler gradient descent of particle configurations.

Each step moves every particle along the negative gradient of the interaction
energy, p_{k+1} = p_k - tau * grad(p_k).  A step that would make the
configuration infeasible (particle overlap or box contact) or increase the
energy is rejected and the step size halved; after 20 consecutive halvings the
flow reports itself blocked.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible
from .geometry import Configuration
from .shape_derivative import gradient
from .solve import ProblemSpec, minimize_membrane

__all__ = ["FlowState", "FlowTrajectory", "gradient_flow"]

MAX_HALVINGS = 20


@dataclass(frozen=True)
class FlowState:
    """One accepted configuration along the descent trajectory."""

    step: int
    config: Configuration
    energy: float
    grad_norm: float
    tau: float


@dataclass
class FlowTrajectory:
    """Accepted states plus the reason the flow stopped.

    ``reason`` is one of "converged" (gradient norm below tolerance),
    "budget" (step limit reached) or "blocked" (step size underflowed against
    feasibility or energy increase).
    """

    states: list
    reason: str

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.states])

    def write_csv(self, path) -> None:
        """Trajectory table: step, per-particle pose columns, energy,
        gradient norm and the step size used to reach the state."""
        n = len(self.states[0].config)
        header = ["k"]
        for i in range(n):
            header += [f"x1_{i}", f"x2_{i}", f"alpha3_{i}"]
        header += ["energy", "grad_norm", "tau"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for s in self.states:
                row = [s.step]
                for pose in s.config.poses:
                    row += [repr(float(pose.x1)), repr(float(pose.x2)), repr(float(pose.alpha3))]
                row += [repr(float(s.energy)), repr(float(s.grad_norm)), repr(float(s.tau))]
                writer.writerow(row)


def gradient_flow(
    spec: ProblemSpec,
    p0: Configuration,
    tau: float = 0.5,
    max_steps: int = 100,
    grad_tol: float = 1e-4,
) -> FlowTrajectory:
    """Run the descent from ``p0`` until the gradient norm drops below
    ``grad_tol``, the step budget runs out, or the step size collapses."""
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    solution = minimize_membrane(spec, p0)  # raises Infeasible for a bad start
    grad = gradient(spec, p0, solution)
    config = p0
    states = [FlowState(0, config, solution.energy, grad.norm, tau)]
    if grad.norm <= grad_tol:
        return FlowTrajectory(states, "converged")

    for k in range(1, max_steps + 1):
        halvings = 0
        while True:
            candidate = Configuration.from_array(config.as_array() - tau * grad.gradient)
            try:
                cand_solution = minimize_membrane(spec, candidate)
            except Infeasible:
                cand_solution = None
            if cand_solution is not None and cand_solution.energy <= states[-1].energy + 1e-10 * abs(
                states[-1].energy
            ):
                break
            halvings += 1
            if halvings > MAX_HALVINGS:
                return FlowTrajectory(states, "blocked")
            tau *= 0.5

        config = candidate
        solution = cand_solution
        grad = gradient(spec, config, solution)
        states.append(FlowState(k, config, solution.energy, grad.norm, tau))
        if grad.norm <= grad_tol:
            return FlowTrajectory(states, "converged")
    return FlowTrajectory(states, "budget")
