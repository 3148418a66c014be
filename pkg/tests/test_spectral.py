import numpy as np
import pytest

from nhssh.lattice import LatticeConfig, build_hamiltonian
from nhssh.spectral import (
    EpKind,
    NearDefectiveError,
    SpectrumSweepRow,
    eigendecompose,
    ep_locate,
    match_branches,
    spectrum_sweep,
    zero_mode_report,
)
from nhssh.observables import Side

from conftest import flagship_config


def dimer_config(v: float, u_re=0.75, u_im=0.75) -> LatticeConfig:
    return LatticeConfig(n_cells=1, v=v, region_start=1, region_end=2,
                         u_re=u_re, u_im=u_im)


def test_eigenvalues_sorted_by_real_then_imag():
    es = eigendecompose(build_hamiltonian(flagship_config(1.125)))
    keys = [(e.real, e.imag) for e in es.eigenvalues]
    assert keys == sorted(keys)


def test_right_eigenpair_residuals():
    h = build_hamiltonian(flagship_config(1.125))
    es = eigendecompose(h)
    h_norm = np.linalg.norm(h, 2)
    for k in range(es.dim):
        vec = es.right_vectors[:, k]
        residual = np.linalg.norm(h @ vec - es.eigenvalues[k] * vec)
        assert residual < 1e-8 * h_norm


def test_hermitian_limit_left_vectors_match_right():
    es = eigendecompose(build_hamiltonian(LatticeConfig(n_cells=8, v=0.6)))
    assert es.completeness_residual < 1e-10
    for k in range(es.dim):
        left = es.left_vectors[:, k]
        right = es.right_vectors[:, k]
        overlap = abs(left.conj() @ right) / (np.linalg.norm(left) * np.linalg.norm(right))
        assert overlap > 1 - 1e-10


def test_dimer_real_pair():
    es = eigendecompose(build_hamiltonian(dimer_config(1.0)))
    expected = [0.75 - np.sqrt(0.4375), 0.75 + np.sqrt(0.4375)]
    np.testing.assert_allclose(es.eigenvalues.real, expected, atol=1e-10)
    np.testing.assert_allclose(es.eigenvalues.imag, 0, atol=1e-10)


def test_dimer_conjugate_pair():
    es = eigendecompose(build_hamiltonian(dimer_config(0.5)))
    np.testing.assert_allclose(es.eigenvalues.real, [0.75, 0.75], atol=1e-10)
    np.testing.assert_allclose(
        sorted(es.eigenvalues.imag), [-np.sqrt(0.3125), np.sqrt(0.3125)], atol=1e-10
    )


@pytest.mark.parametrize("v", [1.125, 1.5])
def test_biorthonormality_and_completeness(v):
    es = eigendecompose(build_hamiltonian(flagship_config(v)))
    assert es.condition < 1e8
    gram = es.left_vectors.conj().T @ es.right_vectors
    assert np.max(np.abs(gram - np.eye(es.dim))) < 1e-8
    assert es.completeness_residual < 1e-8


def test_pt_spectrum_closed_under_conjugation():
    es = eigendecompose(build_hamiltonian(flagship_config(1.125)))
    for e in es.eigenvalues:
        assert np.min(np.abs(es.eigenvalues - np.conj(e))) < 1e-8


def test_pure_imaginary_potential_negation_closure():
    es = eigendecompose(build_hamiltonian(flagship_config(1.125, u=(0.0, 0.75))))
    for e in es.eigenvalues:
        assert np.min(np.abs(es.eigenvalues + e)) < 1e-8


def test_near_defective_flag_and_rejection():
    from nhssh.dynamics import evolve_spectral

    es = eigendecompose(build_hamiltonian(dimer_config(1.0)), condition_ceiling=1.0)
    assert es.near_defective
    with pytest.raises(NearDefectiveError):
        evolve_spectral(es, np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0]))


def test_sweep_empty_region_all_real():
    rows = spectrum_sweep(LatticeConfig(n_cells=6, v=0.5), [0.3, 0.6, 0.9])
    assert all(abs(r.im_e) < 1e-12 for r in rows)


def test_sweep_rows_ordering_and_determinism():
    template = LatticeConfig(n_cells=10, v=0.25, region_start=9, region_end=12,
                             u_re=0.75, u_im=0.75)
    grid = [0.5, 1.0, 1.5]
    rows_a = spectrum_sweep(template, grid)
    rows_b = spectrum_sweep(template, grid)
    assert rows_a == rows_b
    assert [(r.v_over_w, r.index) for r in rows_a] == [
        (v, i) for v in grid for i in range(20)
    ]


def test_sweep_rejects_bad_grid():
    template = LatticeConfig(n_cells=4, v=0.5)
    with pytest.raises(ValueError):
        spectrum_sweep(template, [])
    with pytest.raises(ValueError):
        spectrum_sweep(template, [0.5, 0.5])


def test_flagship_imaginary_trail_collapses_near_gap_closure():
    rows = spectrum_sweep(flagship_config(0.25), [0.9, 1.2])
    max_im = {}
    for r in rows:
        max_im[r.v_over_w] = max(max_im.get(r.v_over_w, 0.0), abs(r.im_e))
    assert max_im[0.9] > 0.05
    assert max_im[1.2] < 0.005


def test_small_imaginary_trail_collapses_well_below_closure():
    template = flagship_config(0.25, u=(0.75, 0.25))
    grid = [0.1 + 0.05 * k for k in range(19)]
    result = ep_locate(spectrum_sweep(template, grid))
    assert result.kind is EpKind.MERGED
    assert 0.4 < result.v_star < 0.9


def test_ep_dimer_first_grid_point_after_closed_form():
    grid = [0.1 + 0.01 * k for k in range(191)]
    rows = spectrum_sweep(dimer_config(0.5, u_re=0.0), grid)
    result = ep_locate(rows)
    expected = min(g for g in grid if g >= 0.75)
    assert result.kind is EpKind.MERGED
    assert result.v_star == expected


def test_ep_always_real_for_hermitian_chain():
    rows = spectrum_sweep(LatticeConfig(n_cells=5, v=0.5), [0.4, 0.8, 1.2])
    assert ep_locate(rows).kind is EpKind.ALWAYS_REAL


def test_ep_never_merges_for_broken_placement():
    template = flagship_config(0.25, region=(107, 110))
    grid = [1.0 + 0.05 * k for k in range(21)]
    assert ep_locate(spectrum_sweep(template, grid)).kind is EpKind.NEVER_MERGES


def test_ep_empty_sweep_rejected():
    with pytest.raises(ValueError):
        ep_locate([])


def _row(v, index, e, branch=None):
    return SpectrumSweepRow(v_over_w=v, index=index, re_e=e.real, im_e=e.imag,
                            com=1.0, side=Side.CENTER, branch=branch)


def test_match_branches_constant_spectrum():
    eigenvalues = [0.1 + 0.2j, 0.5, 0.9 - 0.1j]
    sweep = [_row(v, i, e) for v in (0.1, 0.2, 0.3) for i, e in enumerate(eigenvalues)]
    labeled = match_branches(sweep)
    for row in labeled:
        assert row.branch == row.index


def test_match_branches_bijection_and_determinism():
    grid = [0.5 + 0.05 * k for k in range(11)]
    rows = spectrum_sweep(dimer_config(0.5), grid)
    labeled_a = match_branches(rows)
    labeled_b = match_branches(rows)
    assert labeled_a == labeled_b
    for v in grid:
        branches = sorted(r.branch for r in labeled_a if r.v_over_w == v)
        assert branches == [0, 1]


def test_match_branches_requires_uniform_count():
    sweep = [_row(0.1, 0, 1.0 + 0j), _row(0.1, 1, 2.0 + 0j), _row(0.2, 0, 1.0 + 0j)]
    with pytest.raises(ValueError):
        match_branches(sweep)


def test_zero_mode_report_dimerized_limit():
    es = eigendecompose(build_hamiltonian(LatticeConfig(n_cells=3, v=0.0)))
    report = zero_mode_report(es)
    assert report.min_abs_e < 1e-12
    np.testing.assert_allclose(report.gap_to_bulk, 1.0, atol=1e-12)


def test_zero_mode_report_flagship(flagship_initial):
    _, _, es = flagship_initial
    report = zero_mode_report(es)
    assert report.min_abs_e < 1e-6
    # The block pulls one localized level into the gap at |E| ~ 0.083; the
    # chain without the block keeps the full gap to the bulk bands.
    np.testing.assert_allclose(report.gap_to_bulk, 0.08299, atol=2e-3)
    pure = eigendecompose(build_hamiltonian(LatticeConfig(n_cells=110, v=0.25)))
    assert zero_mode_report(pure).gap_to_bulk > 0.1


def test_zero_mode_report_absent_beyond_transition():
    es = eigendecompose(build_hamiltonian(flagship_config(1.5)))
    assert zero_mode_report(es).min_abs_e > 0.1


def test_zero_mode_report_needs_dimension_four():
    with pytest.raises(ValueError):
        zero_mode_report(eigendecompose(build_hamiltonian(dimer_config(0.5))))
