"""Per-mode displacement loops and the pairwise geometric phase shift.

During one evolution interval tau every cavity mode is driven around a
loop in phase space; the per-mode displacement is

    beta_{L,K} = g / (sqrt(MN) omega) * (1 - e^{i omega tau})

and the per-mode geometric phase accumulated by a single interval is

    gamma_{L,K} = g^2 / (MN omega) * [tau - sin(omega tau)/omega].

A sigma_z echo (one sigma_z on every qubit between two intervals) cancels
the displacements and doubles the phases, leaving a pure pairwise qubit
coupling exp[sum_pairs i Gamma sigma_x sigma_x] with

    Gamma(dm, dn) = sum_modes 4 gamma_{L,K} cos(L dm + K dn).

Note the g^2 prefactor in gamma_{L,K}: it is fixed by direct integration
of the driven interaction Hamiltonian (see the brute-force checks in
:mod:`cavitycluster.oracle`), and Gamma above is the echoed pair
coefficient that those checks reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .lattice import LatticeConfig, Mode, enumerate_modes

__all__ = [
    "beta",
    "gamma_mode",
    "gamma_total",
    "pairwise_phase",
    "PhaseShiftTable",
    "build_phase_table",
    "GateTimeNotFoundError",
    "solve_gate_time",
    "sweep_delta",
    "sweep_tau",
    "HardwarePreset",
    "PRESETS",
    "FeasibilityReport",
    "feasibility_report",
]

_ZERO_MODE_TOL = 1e-12
# below this |omega*tau| the bracket tau - sin(omega tau)/omega is evaluated
# by its Taylor series; direct evaluation loses ~(omega tau)^-2 digits
_SERIES_THRESHOLD = 0.05


def beta(config: LatticeConfig, mode: Mode, tau: float) -> complex:
    """Per-mode displacement amplitude after one interval tau."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    g = config.g
    root = math.sqrt(config.n_sites)
    w = mode.omega
    if abs(w) < _ZERO_MODE_TOL:
        return -1j * g * tau / root
    return g / (root * w) * (1.0 - np.exp(1j * w * tau))


def _gamma_bracket(w: np.ndarray, tau: float) -> np.ndarray:
    """(1/w) * [tau - sin(w tau)/w], series-protected near w = 0.

    Direct evaluation loses roughly (w tau)^-2 digits to cancellation, so
    small arguments use the Taylor series
    (1/w^2)(w tau - sin(w tau)) = w tau^3/6 - w^3 tau^5/120 + ...
    """
    w = np.asarray(w, dtype=float)
    x = w * tau
    small = np.abs(x) < _SERIES_THRESHOLD
    x2 = x * x
    series = w * tau**3 * (1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0 - x2 * x2 * x2 / 362880.0)
    w_safe = np.where(small, 1.0, w)
    direct = (tau - np.sin(x) / w_safe) / w_safe
    return np.where(small, series, direct)


def gamma_mode(config: LatticeConfig, mode: Mode, tau: float) -> float:
    """Geometric phase contributed by one mode over a single interval."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return float(config.g**2 / config.n_sites * _gamma_bracket(np.float64(mode.omega), tau))


@lru_cache(maxsize=64)
def _mode_angle_arrays(config: LatticeConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    modes = enumerate_modes(config)
    L = np.array([m.L for m in modes])
    K = np.array([m.K for m in modes])
    W = np.array([m.omega for m in modes])
    return L, K, W


def _mode_arrays(config: LatticeConfig, tau: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(L, K, gamma) arrays over all modes in enumeration order."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    L, K, W = _mode_angle_arrays(config)
    gam = config.g**2 / config.n_sites * _gamma_bracket(W, tau)
    return L, K, gam


def gamma_total(config: LatticeConfig, tau: float) -> float:
    """Mode-summed geometric phase; compensated (exact) summation."""
    _, _, gam = _mode_arrays(config, tau)
    return math.fsum(gam)


def pairwise_phase(config: LatticeConfig, tau: float, dm: int, dn: int) -> float:
    """Echoed pairwise phase Gamma between sites separated by (dm, dn)."""
    if dm % config.M == 0 and dn % config.N == 0:
        raise ValueError("separation must be nonzero on the lattice")
    L, K, gam = _mode_arrays(config, tau)
    return math.fsum(4.0 * gam * np.cos(L * dm + K * dn))


def canonical_separation(config: LatticeConfig, dm: int, dn: int) -> tuple[int, int]:
    """Reduce a separation modulo lattice periodicity to |dm| <= M/2, |dn| <= N/2."""

    def _reduce(d: int, size: int) -> int:
        d %= size
        if d > size // 2:
            d -= size
        return d

    return _reduce(dm, config.M), _reduce(dn, config.N)


@dataclass(frozen=True)
class PhaseShiftTable:
    """Pairwise phases Gamma over canonical separations at a fixed tau."""

    config: LatticeConfig
    tau: float
    entries: dict[tuple[int, int], float]

    def gamma(self, dm: int, dn: int) -> float:
        dm, dn = canonical_separation(self.config, dm, dn)
        if (dm, dn) == (0, 0):
            raise ValueError("separation must be nonzero on the lattice")
        return self.entries[(dm, dn)]

    def max_beyond_nearest_neighbor(self) -> float:
        return max(
            abs(v) for (dm, dn), v in self.entries.items() if abs(dm) + abs(dn) >= 2
        )


def build_phase_table(config: LatticeConfig, tau: float) -> PhaseShiftTable:
    """Gamma over every canonical nonzero separation, deterministic order."""
    L, K, gam = _mode_arrays(config, tau)
    entries: dict[tuple[int, int], float] = {}
    for dm in range(-(config.M // 2), config.M // 2 + 1):
        for dn in range(-(config.N // 2), config.N // 2 + 1):
            if dm % config.M == 0 and dn % config.N == 0:
                continue
            entries[(dm, dn)] = math.fsum(4.0 * gam * np.cos(L * dm + K * dn))
    return PhaseShiftTable(config=config, tau=tau, entries=entries)


class GateTimeNotFoundError(RuntimeError):
    """No interaction time in the search window reaches the target phase."""

    def __init__(self, target: float, achieved_max: float, window: float):
        self.target = target
        self.achieved_max = achieved_max
        super().__init__(
            f"no tau in (0, {window:g}] reaches Gamma_nn = {target:g}; "
            f"max |Gamma_nn| achieved = {achieved_max:g}"
        )


def solve_gate_time(
    config: LatticeConfig,
    target: float = math.pi / 4,
    window: float = 20.0,
    grid_step: float = 0.01,
) -> float:
    """Smallest tau in (0, window] with Gamma_nn(tau) = target.

    Scans on a coarse grid, then bisects the first bracketing interval to
    1e-10 relative accuracy.
    """
    if target <= 0:
        raise ValueError("target phase must be positive")
    # on single-row (or single-column) lattices the (1,0) separation
    # aliases to zero; fall back to the valid nearest-neighbor direction
    sep = (1, 0) if config.M > 1 else (0, 1)
    if config.M == 1 and config.N == 1:
        raise ValueError("a 1x1 lattice has no pairs")

    def f(tau: float) -> float:
        return pairwise_phase(config, tau, *sep) - target

    taus = np.arange(grid_step, window + grid_step / 2, grid_step)
    vals = np.array([f(t) for t in taus])
    achieved = float(np.max(np.abs(vals + target)))
    idx = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    exact = np.nonzero(vals == 0.0)[0]
    if exact.size and (not idx.size or exact[0] <= idx[0]):
        return float(taus[exact[0]])
    if not idx.size:
        raise GateTimeNotFoundError(target, achieved, window)
    lo, hi = float(taus[idx[0]]), float(taus[idx[0] + 1])
    flo = f(lo)
    while (hi - lo) > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (flo < 0) == (fm < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep_delta(
    config: LatticeConfig, tau: float, delta_grid: list[float]
) -> list[tuple[float, float]]:
    """Rows (delta/g, Gamma_nn) over a detuning grid."""
    if len(delta_grid) == 0:
        raise ValueError("delta grid must be non-empty")
    rows = []
    for d in delta_grid:
        cfg = replace(config, delta=float(d))
        rows.append((float(d), pairwise_phase(cfg, tau, 1, 0)))
    return rows


def sweep_tau(
    config: LatticeConfig,
    tau_grid: list[float],
    separations: list[tuple[int, int]],
) -> list[tuple[float, dict[tuple[int, int], float]]]:
    """Rows (g tau, {separation: Gamma}) over an interaction-time grid."""
    if len(tau_grid) == 0 or len(separations) == 0:
        raise ValueError("tau grid and separation list must be non-empty")
    rows = []
    for tau in tau_grid:
        L, K, gam = _mode_arrays(config, float(tau))
        row = {
            (dm, dn): math.fsum(4.0 * gam * np.cos(L * dm + K * dn))
            for dm, dn in separations
        }
        rows.append((float(tau), row))
    return rows


@dataclass(frozen=True)
class HardwarePreset:
    """Physical parameter set for feasibility arithmetic.

    Frequencies are angular (rad/s), times in seconds.  Omega is the
    classical drive Rabi frequency; the strong-driving regime needs
    2*Omega >> g, checked as a ratio >= 10 when Omega is given.
    """

    name: str
    g_phys: float
    J_phys: float
    T_cavity: float
    T_qubit: float
    Omega: float | None = None

    def __post_init__(self) -> None:
        if self.T_cavity <= 0 or self.T_qubit <= 0:
            raise ValueError("coherence times must be positive")
        if self.g_phys <= 0:
            raise ValueError("coupling must be positive")


# Cooper-pair boxes / quantum dots in circuit cavities, and Raman-coupled
# atoms in microtoroid arrays (effective coupling after the Raman process).
PRESETS: dict[str, HardwarePreset] = {
    "cpb": HardwarePreset(
        name="cpb",
        g_phys=2 * math.pi * 50e6,
        J_phys=2 * math.pi * 5e6,
        T_cavity=20e-6,
        T_qubit=1e-6,
    ),
    "qdot": HardwarePreset(
        name="qdot",
        g_phys=2 * math.pi * 125e6,
        J_phys=2 * math.pi * 12.5e6,
        T_cavity=50e-6,
        T_qubit=1e-6,
    ),
    "toroid": HardwarePreset(
        name="toroid",
        g_phys=1e8,
        J_phys=1e7,
        T_cavity=25e-6,
        T_qubit=6e-6,
    ),
}


@dataclass(frozen=True)
class FeasibilityReport:
    preset: str
    gate_time_g_units: float
    gate_time_seconds: float
    ratio_cavity: float
    ratio_qubit: float
    strong_driving_ok: bool | None


def feasibility_report(preset: HardwarePreset, config: LatticeConfig) -> FeasibilityReport:
    """Gate time in physical units and coherence-time ratios for a preset."""
    gtau = solve_gate_time(config)
    t_phys = gtau / preset.g_phys
    ok: bool | None = None
    if preset.Omega is not None:
        ok = 2.0 * preset.Omega / preset.g_phys >= 10.0
    return FeasibilityReport(
        preset=preset.name,
        gate_time_g_units=gtau,
        gate_time_seconds=t_phys,
        ratio_cavity=t_phys / preset.T_cavity,
        ratio_qubit=t_phys / preset.T_qubit,
        strong_driving_ok=ok,
    )
