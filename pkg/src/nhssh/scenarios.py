"""Named experiment scenarios over the embedded non-Hermitian chain.

Maps scenario names to deterministic output files: spectrum and reshuffle
tables, light-cone CSVs with graymap heatmaps, bipartite-norm curves, and
reflection-ratio sweeps. Config files are flat ``key = value`` text with
``#`` comments; every key has a default, and the empty config runs the
flagship case (220 sites, block on sites 109-112 with potentials
(0.75, -+0.75i), initial v/w = 0.25).
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .dynamics import (
    DEFAULT_ZERO_MODE_TOL,
    Edge,
    QuenchSpec,
    Trajectory,
    evolve_propagator,
    evolve_spectral,
    initial_edge_state,
    run_quench,
)
from .lattice import LatticeConfig, build_hamiltonian
from .observables import (
    DEFAULT_SIDE_THRESHOLD,
    bipartite_norms,
    default_split,
    site_density,
)
from .parallel import thread_count, thread_map
from .spectral import DEFAULT_EP_TOL, eigendecompose, match_branches, spectrum_sweep

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "SCENARIOS",
    "parse_config",
    "apply_overrides",
    "scenario_lattice",
    "scenario_v_grid",
    "time_grid",
    "RatioRow",
    "compute_ratio_sweep",
    "ratio_crossing",
    "run_scenario",
]

SCENARIOS = ("spectrum", "lightcone", "bipartite", "ratio-sweep", "reshuffle")

# Per-scenario (start, stop, step) defaults for the v/w grid.
_GRID_DEFAULTS = {
    "spectrum": (0.1, 2.0, 0.01),
    "ratio-sweep": (1.0, 2.0, 0.025),
    "reshuffle": (1.125, 1.5, 0.375),
}

_CLAMP_PERCENTILE = 99.0
_PGM_MAXVAL = 65535


class ConfigError(ValueError):
    """Malformed, unknown, or out-of-range configuration input."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete scenario description; every field has a runnable default."""

    scenario: str = "spectrum"
    n_cells: int = 110
    w: float = 1.0
    region_start: int | None = 109
    region_end: int | None = 112
    u_re: float = 0.75
    u_im: float = 0.75
    v_initial: float = 0.25
    v_final: float = 1.5
    v_grid_start: float | None = None
    v_grid_stop: float | None = None
    v_grid_step: float | None = None
    side: str = "both"
    t_max: float = 500.0
    dt: float = 0.5
    # At the flagship geometry the first reflection off the block settles over
    # t in [100, 170] (in 1/w); sampling there, before the transmitted branch
    # re-crosses the block near t = 180, isolates one reflection event.
    t_sample: float = 120.0
    ep_tol: float = DEFAULT_EP_TOL
    zero_mode_tol: float = DEFAULT_ZERO_MODE_TOL
    threshold: float = DEFAULT_SIDE_THRESHOLD
    output_dir: str = "out"


_FIELD_NAMES = {f.name for f in fields(ScenarioConfig)}
_INT_KEYS = {"n_cells"}
_OPTIONAL_INT_KEYS = {"region_start", "region_end"}
_OPTIONAL_FLOAT_KEYS = {"v_grid_start", "v_grid_stop", "v_grid_step"}
_STR_KEYS = {"scenario", "side", "output_dir"}
_FLOAT_KEYS = _FIELD_NAMES - _INT_KEYS - _OPTIONAL_INT_KEYS - _OPTIONAL_FLOAT_KEYS - _STR_KEYS


def _coerce(key: str, raw: str, where: str):
    if key not in _FIELD_NAMES:
        raise ConfigError(f"{where}: unknown key {key!r}")
    raw = raw.strip()
    try:
        if key in _STR_KEYS:
            return raw
        if key in _OPTIONAL_INT_KEYS or key in _OPTIONAL_FLOAT_KEYS:
            if raw.lower() == "none":
                return None
            return int(raw) if key in _OPTIONAL_INT_KEYS else float(raw)
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{where}: invalid value {raw!r} for key {key!r}") from None


def _parse_assignment(line: str, where: str) -> tuple[str, object]:
    if "=" not in line:
        raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
    key, raw = line.split("=", 1)
    key = key.strip()
    return key, _coerce(key, raw, where)


def parse_config(text: str) -> ScenarioConfig:
    """Parse ``key = value`` lines (with ``#`` comments) into a validated config."""
    overrides: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, value = _parse_assignment(stripped, f"line {lineno}")
        overrides[key] = value
    cfg = ScenarioConfig(**overrides)
    validate_config(cfg)
    return cfg


def apply_overrides(cfg: ScenarioConfig, assignments: list[str]) -> ScenarioConfig:
    """Apply ``key=value`` strings (CLI --set arguments) on top of a config."""
    overrides: dict[str, object] = {}
    for raw in assignments:
        key, value = _parse_assignment(raw, f"--set {raw!r}")
        overrides[key] = value
    cfg = replace(cfg, **overrides)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ScenarioConfig) -> None:
    """Reject configs that cannot run; error messages name the offending key."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(
            f"scenario must be one of {', '.join(SCENARIOS)}, got {cfg.scenario!r}"
        )
    if cfg.side not in ("left", "right", "both"):
        raise ConfigError(f"side must be left, right, or both, got {cfg.side!r}")
    for key, value in (("v_initial", cfg.v_initial), ("v_final", cfg.v_final)):
        if value < 0:
            raise ConfigError(f"{key} must be >= 0, got {value}")
    for key, value in (
        ("dt", cfg.dt),
        ("t_max", cfg.t_max),
        ("ep_tol", cfg.ep_tol),
        ("zero_mode_tol", cfg.zero_mode_tol),
        ("threshold", cfg.threshold),
    ):
        if value <= 0:
            raise ConfigError(f"{key} must be > 0, got {value}")
    if cfg.t_sample < 0:
        raise ConfigError(f"t_sample must be >= 0, got {cfg.t_sample}")
    start, stop, step = _resolved_grid(cfg)
    if step <= 0:
        raise ConfigError(f"v_grid_step must be > 0, got {step}")
    if stop < start:
        raise ConfigError(
            f"v_grid_stop must be >= v_grid_start, got {start}..{stop}"
        )
    try:
        scenario_lattice(cfg, cfg.v_initial)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def scenario_lattice(cfg: ScenarioConfig, v_over_w: float) -> LatticeConfig:
    """Lattice at a given v/w ratio under this scenario's fixed parameters."""
    return LatticeConfig(
        n_cells=cfg.n_cells,
        v=v_over_w * cfg.w,
        w=cfg.w,
        region_start=cfg.region_start,
        region_end=cfg.region_end,
        u_re=cfg.u_re,
        u_im=cfg.u_im,
    )


def _resolved_grid(cfg: ScenarioConfig) -> tuple[float, float, float]:
    d_start, d_stop, d_step = _GRID_DEFAULTS.get(cfg.scenario, (1.0, 2.0, 0.025))
    return (
        cfg.v_grid_start if cfg.v_grid_start is not None else d_start,
        cfg.v_grid_stop if cfg.v_grid_stop is not None else d_stop,
        cfg.v_grid_step if cfg.v_grid_step is not None else d_step,
    )


def scenario_v_grid(cfg: ScenarioConfig) -> list[float]:
    """The v/w grid for sweep scenarios, built as start + k*step."""
    start, stop, step = _resolved_grid(cfg)
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


def time_grid(cfg: ScenarioConfig) -> np.ndarray:
    steps = int(np.floor(cfg.t_max / cfg.dt + 1e-9))
    return np.array([k * cfg.dt for k in range(steps + 1)])


def _sides(cfg: ScenarioConfig) -> list[Edge]:
    if cfg.side == "both":
        return [Edge.LEFT, Edge.RIGHT]
    return [Edge(cfg.side)]


# ---------------------------------------------------------------------------
# Output formatting
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    # 12 significant digits keeps golden files stable across reruns.
    return format(float(x), ".12g")


def _write_csv(path: Path, header: str, rows: list[list[str]]) -> Path:
    lines = [header]
    lines.extend(",".join(row) for row in rows)
    path.write_bytes(("\n".join(lines) + "\n").encode("ascii"))
    return path


def _write_heatmap(pgm_path: Path, sidecar_path: Path, traj: Trajectory) -> list[Path]:
    """Binary 16-bit graymap: rows are sites, columns time samples.

    Intensities are densities clamped to the trajectory's 99th percentile so
    gain spikes do not wash out the cone; the clamp is recorded in a sidecar.
    """
    densities = traj.densities
    image = densities.T
    rho_max = float(np.percentile(densities, _CLAMP_PERCENTILE))
    if rho_max > 0.0:
        pixels = np.round(np.clip(image / rho_max, 0.0, 1.0) * _PGM_MAXVAL)
    else:
        pixels = np.zeros_like(image)
    height, width = image.shape
    header = f"P5\n{width} {height}\n{_PGM_MAXVAL}\n".encode("ascii")
    pgm_path.write_bytes(header + pixels.astype(">u2").tobytes())
    sidecar = (
        f"heatmap: {pgm_path.name}\n"
        f"rows: sites 1..{height} (top to bottom)\n"
        f"columns: {width} time samples from t={_fmt(traj.times[0])}"
        f" to t={_fmt(traj.times[-1])}\n"
        f"intensity: site density clamped to [0, rho_max],"
        f" scaled to 0..{_PGM_MAXVAL}\n"
        f"rho_max: {_fmt(rho_max)} ({_fmt(_CLAMP_PERCENTILE)}th percentile"
        f" of the trajectory densities)\n"
    )
    sidecar_path.write_bytes(sidecar.encode("ascii"))
    return [pgm_path, sidecar_path]


# ---------------------------------------------------------------------------
# Scenario runners
# ---------------------------------------------------------------------------

def _run_single_quench(cfg: ScenarioConfig, side: Edge, times: np.ndarray) -> Trajectory:
    spec = QuenchSpec(
        initial_config=scenario_lattice(cfg, cfg.v_initial),
        final_config=scenario_lattice(cfg, cfg.v_final),
        side=side,
        times=times,
    )
    return run_quench(spec, zero_mode_tol=cfg.zero_mode_tol)


def _run_spectrum(cfg: ScenarioConfig, out: Path) -> list[Path]:
    rows = spectrum_sweep(
        scenario_lattice(cfg, cfg.v_initial),
        scenario_v_grid(cfg),
        threshold=cfg.threshold,
        threads=thread_count(),
    )
    labeled = match_branches(rows)
    csv_rows = [
        [_fmt(r.v_over_w), str(r.index), str(r.branch), _fmt(r.re_e), _fmt(r.im_e),
         _fmt(r.com), r.side.value]
        for r in labeled
    ]
    return [_write_csv(out / "spectrum.csv", "v_over_w,index,branch,re_e,im_e,com,side", csv_rows)]


def _run_reshuffle(cfg: ScenarioConfig, out: Path) -> list[Path]:
    rows = spectrum_sweep(
        scenario_lattice(cfg, cfg.v_initial),
        scenario_v_grid(cfg),
        threshold=cfg.threshold,
        threads=thread_count(),
    )
    csv_rows = [
        [_fmt(r.v_over_w), str(r.index), _fmt(r.re_e), _fmt(r.im_e), _fmt(r.com),
         r.side.value]
        for r in rows
    ]
    return [_write_csv(out / "reshuffle.csv", "v_over_w,index,re_e,im_e,com,side", csv_rows)]


def _run_lightcone(cfg: ScenarioConfig, out: Path) -> list[Path]:
    times = time_grid(cfg)
    outputs: list[Path] = []
    for side in _sides(cfg):
        traj = _run_single_quench(cfg, side, times)
        densities = site_density(traj.states)
        csv_rows = [
            [_fmt(t), str(site + 1), _fmt(densities[k, site])]
            for k, t in enumerate(traj.times)
            for site in range(densities.shape[1])
        ]
        name = f"lightcone_{side.value}"
        outputs.append(_write_csv(out / f"{name}.csv", "t,site,density", csv_rows))
        outputs.extend(
            _write_heatmap(out / f"{name}.pgm", out / f"{name}_clamp.txt", traj)
        )
    return outputs


def _run_bipartite(cfg: ScenarioConfig, out: Path) -> list[Path]:
    times = time_grid(cfg)
    split = default_split(scenario_lattice(cfg, cfg.v_initial))
    csv_rows: list[list[str]] = []
    for side in _sides(cfg):
        traj = _run_single_quench(cfg, side, times)
        for k, t in enumerate(traj.times):
            rho_left, rho_right = bipartite_norms(traj.states[k], split)
            csv_rows.append([_fmt(t), _fmt(rho_left), _fmt(rho_right), side.value])
    return [_write_csv(out / "bipartite.csv", "t,rho_left,rho_right,side_init", csv_rows)]


@dataclass(frozen=True)
class RatioRow:
    """Reflection bookkeeping at one final v/w: half-chain weights and their ratio."""

    v_over_w: float
    rho_right_init_right_half: float
    rho_left_init_left_half: float
    ratio: float


def compute_ratio_sweep(cfg: ScenarioConfig) -> list[RatioRow]:
    """Reflection ratio at t_sample for every final v/w on the sweep grid.

    Both edge states are prepared once from the initial Hamiltonian; each grid
    point then costs one eigendecomposition plus two evolutions.
    """
    lattice_initial = scenario_lattice(cfg, cfg.v_initial)
    h_initial = build_hamiltonian(lattice_initial)
    psi_left = initial_edge_state(h_initial, Edge.LEFT, cfg.zero_mode_tol)
    psi_right = initial_edge_state(h_initial, Edge.RIGHT, cfg.zero_mode_tol)
    split = default_split(lattice_initial)
    if cfg.t_sample > 0:
        times = np.array([0.0, cfg.t_sample])
    else:
        times = np.array([0.0])

    def at(ratio: float) -> RatioRow:
        h_final = build_hamiltonian(scenario_lattice(cfg, ratio))
        es = eigendecompose(h_final)
        if es.near_defective:
            traj_left = evolve_propagator(h_final, psi_left, times)
            traj_right = evolve_propagator(h_final, psi_right, times)
        else:
            traj_left = evolve_spectral(es, psi_left, times)
            traj_right = evolve_spectral(es, psi_right, times)
        rho_left_half, _ = bipartite_norms(traj_left.states[-1], split)
        _, rho_right_half = bipartite_norms(traj_right.states[-1], split)
        if rho_left_half == 0.0:
            raise ZeroDivisionError(
                f"left-half norm vanishes at v/w={ratio}, t={cfg.t_sample}"
            )
        return RatioRow(
            v_over_w=ratio,
            rho_right_init_right_half=rho_right_half,
            rho_left_init_left_half=rho_left_half,
            ratio=rho_right_half / rho_left_half,
        )

    return thread_map(at, scenario_v_grid(cfg), thread_count())


def ratio_crossing(v_values: list[float], ratios: list[float]) -> float | None:
    """v/w where the ratio curve crosses 1, linearly interpolated.

    Returns the first sign change of (ratio - 1); None when the curve stays
    on one side of 1 over the whole grid.
    """
    excess = [r - 1.0 for r in ratios]
    for k in range(1, len(excess)):
        a, b = excess[k - 1], excess[k]
        if a == 0.0:
            return v_values[k - 1]
        if a * b < 0.0:
            return v_values[k - 1] + (v_values[k] - v_values[k - 1]) * a / (a - b)
    if excess and excess[-1] == 0.0:
        return v_values[-1]
    return None


def _run_ratio_sweep(cfg: ScenarioConfig, out: Path) -> list[Path]:
    rows = compute_ratio_sweep(cfg)
    csv_rows = [
        [_fmt(r.v_over_w), _fmt(r.rho_right_init_right_half),
         _fmt(r.rho_left_init_left_half), _fmt(r.ratio)]
        for r in rows
    ]
    header = "v_over_w,rho_right_init_right_half,rho_left_init_left_half,ratio"
    return [_write_csv(out / "ratio_sweep.csv", header, csv_rows)]


_RUNNERS = {
    "spectrum": _run_spectrum,
    "lightcone": _run_lightcone,
    "bipartite": _run_bipartite,
    "ratio-sweep": _run_ratio_sweep,
    "reshuffle": _run_reshuffle,
}


def run_scenario(cfg: ScenarioConfig) -> list[Path]:
    """Run one scenario, returning the paths written (deterministic bytes)."""
    validate_config(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[cfg.scenario](cfg, out)
