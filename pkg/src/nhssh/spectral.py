"""Complex non-symmetric eigendecomposition with a biorthogonal left basis,
parameter-space spectrum sweeps, branch tracking, and exceptional-point location.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .lattice import LatticeConfig, build_hamiltonian
from .observables import (
    DEFAULT_SIDE_THRESHOLD,
    Side,
    center_of_mass,
    classify_side,
    reference_center,
)
from .parallel import thread_map

__all__ = [
    "NearDefectiveError",
    "Eigensystem",
    "eigendecompose",
    "SpectrumSweepRow",
    "spectrum_sweep",
    "EpKind",
    "EpResult",
    "ep_locate",
    "match_branches",
    "ZeroModeReport",
    "zero_mode_report",
    "DEFAULT_CONDITION_CEILING",
    "DEFAULT_EP_TOL",
]

DEFAULT_CONDITION_CEILING = 1e10
# At a few-hundred-site scale the post-merge imaginary parts decay smoothly
# through 1e-4..1e-6 over a wide v/w range; 1e-3 separates the collapse of the
# visible imaginary trail from those finite-size tails.
DEFAULT_EP_TOL = 1e-3


class NearDefectiveError(RuntimeError):
    """Eigenvector matrix too ill-conditioned for the biorthogonal route."""


@dataclass(frozen=True, eq=False)
class Eigensystem:
    """Right/left eigenpairs of a general complex matrix.

    Column n of ``right_vectors`` is the right eigenvector of eigenvalue
    ``eigenvalues[n]``; column n of ``left_vectors`` is the paired left
    eigenvector, built from the inverse of the right-vector matrix so that
    <phi_m|psi_n> = delta_mn and sum_n |psi_n><phi_n| = I hold by construction.
    Conditioning of that inverse is reported instead of being hidden.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    completeness_residual: float
    condition: float
    near_defective: bool

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def eigendecompose(
    h: np.ndarray, condition_ceiling: float = DEFAULT_CONDITION_CEILING
) -> Eigensystem:
    """Full dense eigendecomposition, sorted ascending by (Re E, Im E).

    The ``near_defective`` flag is set when the right-vector matrix condition
    number exceeds ``condition_ceiling``; callers evolving states must then
    fall back to the step-propagator route.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h.view(float))):
        raise ValueError("matrix entries must be finite")

    eigenvalues, right = np.linalg.eig(h)
    order = np.lexsort((eigenvalues.imag, eigenvalues.real))
    eigenvalues = eigenvalues[order]
    right = right[:, order]

    try:
        inverse = np.linalg.inv(right)
        condition = float(np.linalg.cond(right))
    except np.linalg.LinAlgError:
        # Exactly singular right-vector matrix (defective to machine precision).
        inverse = np.linalg.pinv(right)
        condition = float(np.inf)
    left = inverse.conj().T
    completeness = float(
        np.linalg.norm(right @ inverse - np.eye(h.shape[0]), ord=2)
    )
    return Eigensystem(
        eigenvalues=eigenvalues,
        right_vectors=right,
        left_vectors=left,
        completeness_residual=completeness,
        condition=condition,
        near_defective=not condition <= condition_ceiling,
    )


@dataclass(frozen=True)
class SpectrumSweepRow:
    """One eigenvalue record at one grid point of a v/w sweep."""

    v_over_w: float
    index: int
    re_e: float
    im_e: float
    com: float
    side: Side
    near_defective: bool = False
    branch: int | None = None


def spectrum_sweep(
    template: LatticeConfig,
    v_grid: "list[float] | np.ndarray",
    *,
    threshold: float = DEFAULT_SIDE_THRESHOLD,
    condition_ceiling: float = DEFAULT_CONDITION_CEILING,
    threads: int = 1,
) -> list[SpectrumSweepRow]:
    """Eigenvalues, centers of mass and side classes across a v/w grid.

    Grid entries are ratios v/w; the template's hoppings other than v are kept.
    Ill-conditioned grid points are tagged on their rows instead of aborting
    the sweep.
    """
    grid = [float(r) for r in v_grid]
    if not grid:
        raise ValueError("v_grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("v_grid must be strictly increasing")
    center = reference_center(template)

    def rows_at(ratio: float) -> list[SpectrumSweepRow]:
        config = template.with_v(ratio * template.w)
        es = eigendecompose(build_hamiltonian(config), condition_ceiling)
        rows = []
        for i, e in enumerate(es.eigenvalues):
            com = center_of_mass(es.right_vectors[:, i])
            rows.append(
                SpectrumSweepRow(
                    v_over_w=ratio,
                    index=i,
                    re_e=float(e.real),
                    im_e=float(e.imag),
                    com=com,
                    side=classify_side(com, center, threshold),
                    near_defective=es.near_defective,
                )
            )
        return rows

    blocks = thread_map(rows_at, grid, threads)
    return [row for block in blocks for row in block]


class EpKind(Enum):
    MERGED = "merged"
    ALWAYS_REAL = "always_real"
    NEVER_MERGES = "never_merges"


@dataclass(frozen=True)
class EpResult:
    """Outcome of scanning a sweep for the point where imaginary parts vanish."""

    kind: EpKind
    v_star: float | None = None


def _group_by_grid_point(
    sweep: list[SpectrumSweepRow],
) -> list[tuple[float, list[SpectrumSweepRow]]]:
    groups: list[tuple[float, list[SpectrumSweepRow]]] = []
    for row in sweep:
        if not groups or groups[-1][0] != row.v_over_w:
            groups.append((row.v_over_w, []))
        groups[-1][1].append(row)
    return groups


def ep_locate(sweep: list[SpectrumSweepRow], tol: float = DEFAULT_EP_TOL) -> EpResult:
    """First grid point, scanning upward in v/w, where max |Im E| drops below tol.

    Returns ALWAYS_REAL when already below tol at the first grid point, and
    NEVER_MERGES when no grid point qualifies.
    """
    groups = _group_by_grid_point(sweep)
    if not groups:
        raise ValueError("sweep is empty")
    for k, (ratio, rows) in enumerate(groups):
        if max(abs(row.im_e) for row in rows) < tol:
            if k == 0:
                return EpResult(EpKind.ALWAYS_REAL)
            return EpResult(EpKind.MERGED, v_star=ratio)
    return EpResult(EpKind.NEVER_MERGES)


def match_branches(sweep: list[SpectrumSweepRow]) -> list[SpectrumSweepRow]:
    """Assign continuity branch labels across grid points.

    Greedy nearest-neighbour matching in the complex eigenvalue plane between
    consecutive grid points; ties resolve by smallest index first, so the
    assignment is a deterministic bijection at every step.
    """
    groups = _group_by_grid_point(sweep)
    if not groups:
        return []
    dim = len(groups[0][1])
    if any(len(rows) != dim for _, rows in groups):
        raise ValueError("every grid point must carry the same eigenvalue count")

    labeled: list[SpectrumSweepRow] = [
        replace(row, branch=i) for i, row in enumerate(groups[0][1])
    ]
    prev_e = np.array([complex(r.re_e, r.im_e) for r in groups[0][1]])
    prev_branch = list(range(dim))

    for _, rows in groups[1:]:
        cur_e = np.array([complex(r.re_e, r.im_e) for r in rows])
        dist = np.abs(cur_e[np.newaxis, :] - prev_e[:, np.newaxis])
        i_idx, j_idx = np.divmod(np.arange(dim * dim), dim)
        order = np.lexsort((j_idx, i_idx, dist.ravel()))
        used_prev = np.zeros(dim, dtype=bool)
        used_cur = np.zeros(dim, dtype=bool)
        branch = [0] * dim
        assigned = 0
        for flat in order:
            i, j = int(i_idx[flat]), int(j_idx[flat])
            if used_prev[i] or used_cur[j]:
                continue
            used_prev[i] = used_cur[j] = True
            branch[j] = prev_branch[i]
            assigned += 1
            if assigned == dim:
                break
        labeled.extend(replace(row, branch=branch[j]) for j, row in enumerate(rows))
        prev_e = cur_e
        prev_branch = branch
    return labeled


@dataclass(frozen=True)
class ZeroModeReport:
    """The two smallest-|E| eigenvalues and their separation from the bulk."""

    min_abs_e: float
    gap_to_bulk: float
    indices: tuple[int, int]


def zero_mode_report(es: Eigensystem) -> ZeroModeReport:
    """Locate the near-zero pair: min_abs_e is the larger of the two smallest
    moduli, gap_to_bulk its distance to the third-smallest modulus."""
    if es.dim < 4:
        raise ValueError(f"need dimension >= 4, got {es.dim}")
    moduli = np.abs(es.eigenvalues)
    order = np.argsort(moduli, kind="stable")
    i0, i1, i2 = (int(order[k]) for k in range(3))
    return ZeroModeReport(
        min_abs_e=float(moduli[i1]),
        gap_to_bulk=float(moduli[i2] - moduli[i1]),
        indices=(i0, i1),
    )
