"""Chain configurations and the embedded non-Hermitian SSH Hamiltonian.

Sites are numbered 1..2N. Odd sites form sublattice A, even sites sublattice B,
so cell n owns sites (2n-1, 2n). An optional contiguous block of sites carries
complex on-site potentials: u = u_re - i*u_im on A sites and the conjugate
u* on B sites, i.e. alternating loss and gain.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "LatticeConfig",
    "build_hamiltonian",
    "perturbation_matrix",
    "edge_correction",
    "is_pt_symmetric",
    "DEFAULT_PT_TOL",
]

# Construction is exact arithmetic, so only rounding noise is expected here.
DEFAULT_PT_TOL = 1e-12


@dataclass(frozen=True)
class LatticeConfig:
    """Full physical specification of one chain instance.

    The intercell hopping ``w`` is the energy unit; scenario defaults fix
    w = 1 and sweep ``v`` so that v/w is the control parameter. The block of
    complex on-site potentials spans sites ``region_start``..``region_end``
    (1-based, inclusive); leaving both unset gives the plain Hermitian chain.
    """

    n_cells: int
    v: float
    w: float = 1.0
    region_start: int | None = None
    region_end: int | None = None
    u_re: float = 0.0
    u_im: float = 0.0

    def __post_init__(self) -> None:
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {self.n_cells}")
        if self.v < 0:
            raise ValueError(f"v must be >= 0, got {self.v}")
        if self.w <= 0:
            raise ValueError(f"w must be > 0, got {self.w}")
        if (self.region_start is None) != (self.region_end is None):
            raise ValueError("region_start and region_end must be set together")
        if self.region_start is not None and self.region_end is not None:
            if not 1 <= self.region_start <= self.region_end:
                raise ValueError(
                    "region_start must satisfy 1 <= region_start <= region_end, "
                    f"got region_start={self.region_start}, region_end={self.region_end}"
                )
            if self.region_end > self.n_sites:
                raise ValueError(
                    f"region_end must be <= 2*n_cells = {self.n_sites}, "
                    f"got region_end={self.region_end}"
                )

    @property
    def n_sites(self) -> int:
        return 2 * self.n_cells

    @property
    def has_region(self) -> bool:
        return self.region_start is not None

    def with_v(self, v: float) -> "LatticeConfig":
        return replace(self, v=v)

    def without_region(self) -> "LatticeConfig":
        return replace(self, region_start=None, region_end=None)


def _onsite_potential(config: LatticeConfig, site: int) -> complex:
    # Odd (A) sites take u = u_re - i*u_im, even (B) sites the conjugate.
    if site % 2 == 1:
        return complex(config.u_re, -config.u_im)
    return complex(config.u_re, config.u_im)


def build_hamiltonian(config: LatticeConfig) -> np.ndarray:
    """Dense Hamiltonian: real staggered hoppings plus the complex on-site block.

    Returns a (2N, 2N) complex matrix with v on intracell bonds (2n-1, 2n),
    w on intercell bonds (2n, 2n+1), and the block potentials on the diagonal.
    """
    n = config.n_sites
    h = np.zeros((n, n), dtype=complex)
    for cell in range(config.n_cells):
        a = 2 * cell
        h[a, a + 1] = h[a + 1, a] = config.v
        if cell + 1 < config.n_cells:
            h[a + 1, a + 2] = h[a + 2, a + 1] = config.w
    if config.has_region:
        for site in range(config.region_start, config.region_end + 1):
            h[site - 1, site - 1] = _onsite_potential(config, site)
    return h


def perturbation_matrix(config: LatticeConfig) -> np.ndarray:
    """Diagonal-only part of the Hamiltonian: the complex on-site block alone.

    build_hamiltonian(config) decomposes entrywise exactly into the pure-chain
    matrix (empty region) plus this matrix.
    """
    n = config.n_sites
    h = np.zeros((n, n), dtype=complex)
    if config.has_region:
        for site in range(config.region_start, config.region_end + 1):
            h[site - 1, site - 1] = _onsite_potential(config, site)
    return h


def edge_correction(config: LatticeConfig, edge_state: np.ndarray) -> complex:
    """First-order energy shift of a unit-norm state from the on-site block.

    Computes sum_s H'_ss |psi_s|^2, the expectation value of the diagonal
    perturbation in the given state.
    """
    psi = np.asarray(edge_state, dtype=complex)
    if psi.shape != (config.n_sites,):
        raise ValueError(
            f"edge_state has dimension {psi.shape}, expected ({config.n_sites},)"
        )
    diag = np.diagonal(perturbation_matrix(config))
    return complex(np.sum(diag * np.abs(psi) ** 2))


def is_pt_symmetric(config: LatticeConfig, tol: float = DEFAULT_PT_TOL) -> bool:
    """True when parity (site-order reversal) plus complex conjugation fixes H."""
    h = build_hamiltonian(config)
    transformed = np.conj(h)[::-1, ::-1]
    return float(np.max(np.abs(transformed - h))) < tol
