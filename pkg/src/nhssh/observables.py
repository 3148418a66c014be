"""Derived quantities: site densities, bipartite norms, reflection ratio,
center of mass, and localization-side classification."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .lattice import LatticeConfig

if TYPE_CHECKING:
    from .dynamics import Trajectory

__all__ = [
    "Side",
    "BipartiteSplit",
    "site_density",
    "bipartite_norms",
    "reflection_ratio",
    "center_of_mass",
    "classify_side",
    "default_split",
    "reference_center",
    "DEFAULT_SIDE_THRESHOLD",
]

DEFAULT_SIDE_THRESHOLD = 0.5


class Side(Enum):
    """Which side of the reference center a state's weight sits on."""

    LEFT = "left"
    RIGHT = "right"
    CENTER = "center"


@dataclass(frozen=True)
class BipartiteSplit:
    """Half-chain split: left = sites 1..split_site, right = the rest."""

    split_site: int


def default_split(config: LatticeConfig) -> BipartiteSplit:
    """Split at the center of the on-site block, or the chain midpoint without one."""
    if config.has_region:
        return BipartiteSplit((config.region_start + config.region_end) // 2)
    return BipartiteSplit(config.n_cells)


def reference_center(config: LatticeConfig) -> float:
    """Midpoint of the on-site block, falling back to the chain midpoint."""
    if config.has_region:
        return (config.region_start + config.region_end) / 2.0
    return (config.n_sites + 1) / 2.0


def site_density(psi: np.ndarray) -> np.ndarray:
    """Probability density |psi_s|^2 on each site."""
    return np.abs(np.asarray(psi)) ** 2


def bipartite_norms(psi: np.ndarray, split: BipartiteSplit) -> tuple[float, float]:
    """Squared norm on each side of the split; the two add up to ||psi||^2."""
    rho = site_density(psi)
    if not 1 <= split.split_site < rho.shape[0]:
        raise ValueError(
            f"split_site must lie in [1, {rho.shape[0] - 1}], got {split.split_site}"
        )
    rho_left = float(np.sum(rho[: split.split_site]))
    rho_right = float(np.sum(rho[split.split_site :]))
    return rho_left, rho_right


def center_of_mass(psi: np.ndarray) -> float:
    """Density-weighted mean site index (1-based), normalized by the total weight."""
    rho = site_density(psi)
    total = float(np.sum(rho))
    if total == 0.0:
        raise ValueError("center_of_mass is undefined for a zero-norm state")
    sites = np.arange(1, rho.shape[0] + 1)
    return float(np.dot(sites, rho) / total)


def classify_side(
    com: float, reference_center: float, threshold: float = DEFAULT_SIDE_THRESHOLD
) -> Side:
    """Classify a center of mass relative to a reference point.

    Center wins within the threshold window, otherwise left/right by sign.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    if abs(com - reference_center) < threshold:
        return Side.CENTER
    return Side.LEFT if com < reference_center else Side.RIGHT


def _time_index(times: np.ndarray, t_sample: float) -> int:
    hits = np.nonzero(np.isclose(times, t_sample, rtol=0.0, atol=1e-9))[0]
    if hits.size == 0:
        raise ValueError(f"t_sample={t_sample} is not on the trajectory time grid")
    return int(hits[0])


def reflection_ratio(
    traj_right: "Trajectory",
    traj_left: "Trajectory",
    split: BipartiteSplit,
    t_sample: float,
) -> float:
    """Ratio of right-reflected to left-reflected weight at one sampled time.

    Takes the right-half squared norm of the right-initialized trajectory over
    the left-half squared norm of the left-initialized trajectory.
    """
    idx_right = _time_index(np.asarray(traj_right.times), t_sample)
    idx_left = _time_index(np.asarray(traj_left.times), t_sample)
    _, rho_right = bipartite_norms(traj_right.states[idx_right], split)
    rho_left, _ = bipartite_norms(traj_left.states[idx_left], split)
    if rho_left == 0.0:
        raise ZeroDivisionError("left-half norm vanishes at t_sample")
    return rho_right / rho_left
