"""Edge-state preparation and quench evolution.

Two independent routes compute the same trajectories: expansion in the
biorthogonal eigenbasis (one decomposition, then phases), and repeated
application of an exact step propagator built from a norm-controlled,
scaled-and-squared truncated power series. The second serves as the oracle
for the first and takes over near exceptional points, where the eigenbasis
is too ill-conditioned to invert.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .lattice import LatticeConfig, build_hamiltonian
from .spectral import (
    DEFAULT_CONDITION_CEILING,
    Eigensystem,
    NearDefectiveError,
    eigendecompose,
    zero_mode_report,
)

__all__ = [
    "Edge",
    "NoEdgeStateError",
    "Trajectory",
    "QuenchSpec",
    "initial_edge_state",
    "evolve_spectral",
    "evolve_propagator",
    "run_quench",
    "DEFAULT_ZERO_MODE_TOL",
    "DEFAULT_STEP_TOL",
]

DEFAULT_ZERO_MODE_TOL = 1e-3
DEFAULT_STEP_TOL = 1e-12

_TAYLOR_MAX_TERMS = 48
_SCALE_TARGET = 0.5
_MAX_HALVINGS = 32


class Edge(Enum):
    LEFT = "left"
    RIGHT = "right"


class NoEdgeStateError(RuntimeError):
    """No near-zero modes to build an edge state from (e.g. v/w > 1)."""


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Complex amplitudes on a (time, site) grid, with derived densities."""

    times: np.ndarray
    states: np.ndarray

    @property
    def densities(self) -> np.ndarray:
        return np.abs(self.states) ** 2


@dataclass(frozen=True, eq=False)
class QuenchSpec:
    """A sudden v change: initial and final configs differ only in v."""

    initial_config: LatticeConfig
    final_config: LatticeConfig
    side: Edge
    times: np.ndarray

    def __post_init__(self) -> None:
        if replace(self.initial_config, v=0.0) != replace(self.final_config, v=0.0):
            raise ValueError("initial and final configs may differ only in v")
        times = np.asarray(self.times, dtype=float)
        if times.size == 0:
            raise ValueError("times must be nonempty")
        if times[0] < 0:
            raise ValueError("times must start at t >= 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)


def initial_edge_state(
    h_initial: np.ndarray,
    side: Edge,
    zero_mode_tol: float = DEFAULT_ZERO_MODE_TOL,
) -> np.ndarray:
    """Unit-norm edge state on the requested side of the chain.

    The two near-zero eigenvectors are numerically degenerate for small v/w,
    so any individual eigenvector is an arbitrary mixture of the left and
    right modes. Within their orthonormalized span this picks the unit vector
    with maximal weight on the outermost cell of the chosen side, which makes
    the selection deterministic; the global phase is fixed by making the
    largest-modulus amplitude real and positive.
    """
    es = eigendecompose(np.asarray(h_initial, dtype=complex))
    report = zero_mode_report(es)
    if report.min_abs_e >= zero_mode_tol:
        raise NoEdgeStateError(
            f"no zero modes: min |E| = {report.min_abs_e:.3e} >= {zero_mode_tol:g}"
        )
    i, j = report.indices
    q1 = es.right_vectors[:, i]
    q1 = q1 / np.linalg.norm(q1)
    q2 = es.right_vectors[:, j] - (q1.conj() @ es.right_vectors[:, j]) * q1
    norm2 = np.linalg.norm(q2)
    if norm2 == 0.0:
        raise NoEdgeStateError("zero-mode eigenvectors are parallel; span collapsed")
    span = np.column_stack([q1, q2 / norm2])

    n = span.shape[0]
    outer = (0, 1) if side is Edge.LEFT else (n - 2, n - 1)
    block = span[list(outer), :]
    # Weight on the outer cell is a 2x2 Hermitian form over the span.
    _, vecs = np.linalg.eigh(block.conj().T @ block)
    psi = span @ vecs[:, -1]
    k = int(np.argmax(np.abs(psi)))
    psi = psi * (abs(psi[k]) / psi[k])
    return psi / np.linalg.norm(psi)


def evolve_spectral(
    es: Eigensystem, psi0: np.ndarray, times: np.ndarray
) -> Trajectory:
    """Evolve by expanding psi0 in the biorthogonal basis.

    psi(t) = sum_n <phi_n|psi0> exp(-i E_n t) |psi_n>; the expansion
    coefficients are computed once and reused for every requested time.
    """
    if es.near_defective:
        raise NearDefectiveError(
            f"right-vector condition {es.condition:.3e} exceeds the ceiling; "
            "use evolve_propagator"
        )
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (es.dim,):
        raise ValueError(f"psi0 has shape {psi0.shape}, expected ({es.dim},)")
    times = np.asarray(times, dtype=float)
    coeff = es.left_vectors.conj().T @ psi0
    phases = np.exp(-1j * np.outer(es.eigenvalues, times))
    states = (es.right_vectors @ (coeff[:, np.newaxis] * phases)).T
    return Trajectory(times=times, states=states)


def _taylor_exp(b: np.ndarray, tol: float) -> np.ndarray | None:
    """Truncated power series for exp(b), or None if the tail bound fails."""
    dim = b.shape[0]
    norm_b = np.linalg.norm(b, 1)
    result = np.eye(dim, dtype=complex)
    term = np.eye(dim, dtype=complex)
    for k in range(1, _TAYLOR_MAX_TERMS + 1):
        term = term @ b / k
        result += term
        ratio = norm_b / (k + 1)
        if ratio < 1.0:
            # Geometric bound on the dropped tail.
            tail = np.linalg.norm(term, 1) * ratio / (1.0 - ratio)
            if tail <= tol:
                return result
    return None


def _step_propagator(
    h: np.ndarray, dt: float, tol: float, depth: int = 0
) -> np.ndarray:
    """exp(-i h dt) by argument scaling, truncated series, repeated squaring."""
    if depth > _MAX_HALVINGS:
        raise RuntimeError("propagator step halving failed to converge")
    a = -1j * dt * h
    norm_a = np.linalg.norm(a, 1)
    squarings = 0
    if norm_a > _SCALE_TARGET:
        squarings = int(np.ceil(np.log2(norm_a / _SCALE_TARGET)))
    # Budget for error growth under the squarings that follow.
    local_tol = tol / (4.0 * 2.0**squarings)
    p = _taylor_exp(a / 2.0**squarings, local_tol)
    if p is None:
        half = _step_propagator(h, dt / 2.0, tol, depth + 1)
        return half @ half
    for _ in range(squarings):
        p = p @ p
    return p


def evolve_propagator(
    h: np.ndarray,
    psi0: np.ndarray,
    times: np.ndarray,
    *,
    step_tol: float = DEFAULT_STEP_TOL,
) -> Trajectory:
    """March psi0 through exact step propagators between the sampled times.

    psi0 is the state at t = 0; the first sample follows after advancing by
    times[0]. Propagators are cached per distinct step size, so uniform grids
    cost a single matrix exponential.
    """
    h = np.asarray(h, dtype=complex)
    if not np.all(np.isfinite(h.view(float))):
        raise ValueError("matrix entries must be finite")
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (h.shape[0],):
        raise ValueError(f"psi0 has shape {psi.shape}, expected ({h.shape[0]},)")
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")

    cache: dict[float, np.ndarray] = {}
    states = np.empty((times.size, psi.shape[0]), dtype=complex)
    prev_t = 0.0
    for k, t in enumerate(times):
        dt = float(t - prev_t)
        if dt > 0.0:
            prop = cache.get(dt)
            if prop is None:
                prop = _step_propagator(h, dt, step_tol)
                cache[dt] = prop
            psi = prop @ psi
        states[k] = psi
        prev_t = float(t)
    return Trajectory(times=times, states=states)


def run_quench(
    spec: QuenchSpec,
    *,
    zero_mode_tol: float = DEFAULT_ZERO_MODE_TOL,
    condition_ceiling: float = DEFAULT_CONDITION_CEILING,
) -> Trajectory:
    """Build both Hamiltonians, prepare the edge state, evolve under the final one.

    The spectral route is preferred; when its eigenbasis is flagged as
    near-defective the step-propagator route takes over.
    """
    h_initial = build_hamiltonian(spec.initial_config)
    h_final = build_hamiltonian(spec.final_config)
    psi0 = initial_edge_state(h_initial, spec.side, zero_mode_tol)
    es = eigendecompose(h_final, condition_ceiling)
    if es.near_defective:
        return evolve_propagator(h_final, psi0, spec.times)
    return evolve_spectral(es, psi0, spec.times)
