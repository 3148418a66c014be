"""Shared fixtures: flagship-scale configs and cached heavy computations."""

from __future__ import annotations

import numpy as np
import pytest

from nhssh.lattice import LatticeConfig, build_hamiltonian
from nhssh.spectral import eigendecompose


def flagship_config(v: float, region=(109, 112), u=(0.75, 0.75)) -> LatticeConfig:
    """220-site chain with the centered four-site block, at a given v (w = 1)."""
    return LatticeConfig(
        n_cells=110,
        v=v,
        region_start=region[0],
        region_end=region[1],
        u_re=u[0],
        u_im=u[1],
    )


@pytest.fixture(scope="session")
def flagship_initial():
    """Flagship chain at v/w = 0.25 with its eigensystem."""
    config = flagship_config(0.25)
    h = build_hamiltonian(config)
    return config, h, eigendecompose(h)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
