"""Shot-level simulator of the post-selected cross-phase measurement.

A shot is one acquisition window holding one coherent signal pulse. The
pulse carries N ~ Poisson(mu) photons; each is independently transmitted
(probability T) or scattered, and each transmitted photon fires the
detector with probability eta. A background click happens with
probability p_bg per shot regardless of the light. The probe phase trace
is linear in the photon fates,

    phase(t) = n_T phi_T1(t) + n_S phi_S1(t) + noise,

with per-photon shapes derived from the theory modules and i.i.d.
Gaussian noise per sample. Everything downstream (post-selection
averaging, backgrounds, systematics injection) consumes these shots.

Poisson conditioning is the one subtlety: clicking selects shots with
more transmitted photons, so the click/no-click trace difference is not
phi_T1 but kappa * phi_T1 with

    kappa = E[n_T | click] - E[n_T | no click]
          = lam eta / P(click),      lam = mu T,

which follows from thinning (n_T is Poisson(lam), independent of n_S)
and the tilted mean E[n_T | no detection] = lam (1 - eta). kappa -> 1
as eta -> 0: detecting one photon then raises the inferred transmitted
number by exactly one. Both the closed form and a brute-force
enumeration over the Poisson support are provided and must agree.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .errors import ConfigError
from .excitation import excited_population
from .medium import MediumSpec, conversion_factor
from .oracle import max_step, weak_excitation_trace
from .pulse import PulseSpec, gaussian_field, transmission_probability

__all__ = [
    "ShotConfig",
    "ShotRecord",
    "CycleData",
    "PerPhotonShapes",
    "DetectionCalibration",
    "MODES",
    "bin_average",
    "fine_signal",
    "derive_shapes",
    "calibrate_detection",
    "kappa_closed_form",
    "kappa_enumeration",
    "simulate_cycle",
    "simulate_shot",
    "run_campaign",
    "null_dataset",
]

MODES = ("normal", "no_atoms", "bypass_atoms", "no_signal")


@dataclass(frozen=True)
class ShotConfig:
    """Acquisition geometry, photon budget and noise for one shot."""

    window: float = 576e-9
    n_samples: int = 36
    dt: float = 16e-9
    mean_photons: float = 100.0
    target_click_prob: float = 0.2
    phase_noise_rms: float = 0.120
    background_click_fraction: float = 0.1
    lowpass_enabled: bool = False
    lowpass_cutoff: float = 25e6
    shots_per_cycle: int = 1500
    pulse_center: float = 260e-9
    wobble_amplitude: float = 0.0
    wobble_frequency: float = 2e6
    wobble_phase: float = 0.0

    def __post_init__(self):
        if self.n_samples < 1 or self.dt <= 0.0:
            raise ConfigError("need n_samples >= 1 and dt > 0")
        if abs(self.n_samples * self.dt - self.window) > 1e-9 * self.window:
            raise ConfigError(
                f"n_samples * dt = {self.n_samples * self.dt:.4e} s does not "
                f"equal the window {self.window:.4e} s"
            )
        if self.mean_photons < 0.0:
            raise ConfigError("mean_photons must be non-negative")
        if not 0.0 <= self.target_click_prob < 1.0:
            raise ConfigError("target_click_prob must lie in [0, 1)")
        if not 0.0 <= self.background_click_fraction <= 0.2:
            raise ConfigError("background_click_fraction must lie in [0, 0.2]")
        if self.phase_noise_rms < 0.0:
            raise ConfigError("phase_noise_rms must be non-negative")
        if self.lowpass_cutoff <= 0.0 or self.wobble_frequency <= 0.0:
            raise ConfigError("filter and wobble frequencies must be positive")
        if self.shots_per_cycle < 1:
            raise ConfigError("shots_per_cycle must be at least 1")

    def sample_times(self) -> np.ndarray:
        """Bin centers of the acquisition window, seconds."""
        return (np.arange(self.n_samples) + 0.5) * self.dt


@dataclass(frozen=True)
class ShotRecord:
    phase_samples: np.ndarray
    clicked: bool
    n_transmitted: int = 0
    n_scattered: int = 0
    background_clicked: bool = False

    def __post_init__(self):
        if not np.all(np.isfinite(self.phase_samples)):
            raise ConfigError("phase samples must be finite")
        if self.background_clicked and not self.clicked:
            raise ConfigError("background event recorded but shot not clicked")
        if self.clicked and not self.background_clicked and self.n_transmitted == 0:
            raise ConfigError(
                "clicked shot has neither background nor transmitted photons"
            )


@dataclass(frozen=True)
class CycleData:
    """One atom cycle of shots, kept as arrays for accumulation."""

    cycle: int
    traces: np.ndarray  # (shots, n_samples)
    clicked: np.ndarray  # (shots,) bool
    n_transmitted: np.ndarray | None = None
    n_scattered: np.ndarray | None = None
    background_clicked: np.ndarray | None = None


@dataclass(frozen=True)
class PerPhotonShapes:
    """Phase-trace shapes on the detection grid, radians per photon.

    phi_01 = tbar phi_T1 + (1 - tbar) phi_S1 holds pointwise; when the
    medium is transparent (tbar -> 1) the scattered shape is undefined
    and is returned as zero with ``all_transmitted`` set.
    """

    dt: float
    phi_T1: np.ndarray = field(repr=False)
    phi_S1: np.ndarray = field(repr=False)
    phi_01: np.ndarray = field(repr=False)
    tbar: float = 0.0
    all_transmitted: bool = False

    def __post_init__(self):
        recon = self.tbar * self.phi_T1 + (1.0 - self.tbar) * self.phi_S1
        ref = np.max(np.abs(self.phi_01)) + 1e-300
        if not self.all_transmitted and np.max(np.abs(recon - self.phi_01)) > 1e-9 * ref:
            raise ConfigError("shape decomposition identity violated")

    def zeroed(self) -> "PerPhotonShapes":
        z = np.zeros_like(self.phi_01)
        return replace(
            self, phi_T1=z, phi_S1=z.copy(), phi_01=z.copy(), all_transmitted=True
        )


@dataclass(frozen=True)
class DetectionCalibration:
    """Per-photon detection probability and per-shot background rate."""

    eta: float
    p_bg: float
    lam: float  # mean transmitted photons per shot, mu * tbar
    target_click_prob: float

    @property
    def kappa(self) -> float:
        return kappa_closed_form(self.eta, self.lam, self.p_bg)


def bin_average(
    values: np.ndarray, dt: float, t0: float, edges: np.ndarray
) -> np.ndarray:
    """Integral-preserving average of a fine trace over coarse bins.

    The trace is treated as piecewise linear (trapezoidal antiderivative)
    and zero outside its grid; bin i gets its mean over
    [edges[i], edges[i+1]].
    """
    vals = np.asarray(values, dtype=np.float64)
    cum = np.concatenate(
        ([0.0], np.cumsum(0.5 * dt * (vals[1:] + vals[:-1])))
    )
    t = t0 + dt * np.arange(len(vals))
    at_edges = np.interp(edges, t, cum)
    widths = np.diff(edges)
    if np.any(widths <= 0.0):
        raise ConfigError("bin edges must be strictly increasing")
    return np.diff(at_edges) / widths


def fine_signal(medium: MediumSpec, pulse: PulseSpec):
    """Pulse field on a grid fine enough for the collision model."""
    from .pulse import DEFAULT_LEAD_SIGMAS, DEFAULT_TAIL_LIFETIMES

    step = max_step(medium, pulse.sigma_rms)
    span = (
        2.0 * DEFAULT_LEAD_SIGMAS * pulse.sigma_rms
        + DEFAULT_TAIL_LIFETIMES / medium.gamma
    )
    n = max(4096, 1 << math.ceil(math.log2(span / step)))
    return gaussian_field(pulse, medium.gamma, n=n)


def derive_shapes(
    medium: MediumSpec,
    pulse: PulseSpec,
    config: ShotConfig,
    n_atoms: int = 64,
    snap_every: int = 64,
) -> PerPhotonShapes:
    """Per-photon phase shapes: conditional trace from the collision
    model, unconditioned trace from the slab model, scattered shape from
    the decomposition identity."""
    sig = fine_signal(medium, pulse)
    conv = conversion_factor(medium)
    weak = weak_excitation_trace(sig, medium, n_atoms=n_atoms, snap_every=snap_every)
    phi_t_fine = conv * weak.weak
    phi_0_fine = conv * excited_population(sig, medium).values
    tbar = transmission_probability(sig, medium)

    # detection-window bin edges expressed on the pulse time axis
    edges = (
        np.arange(config.n_samples + 1) * config.dt - config.pulse_center
    )
    phi_t1 = bin_average(phi_t_fine, sig.dt, sig.t0, edges)
    phi_01 = bin_average(phi_0_fine, sig.dt, sig.t0, edges)
    if 1.0 - tbar < 1e-12:
        return PerPhotonShapes(
            dt=config.dt,
            phi_T1=phi_t1,
            phi_S1=np.zeros_like(phi_01),
            phi_01=phi_01,
            tbar=tbar,
            all_transmitted=True,
        )
    phi_s1 = (phi_01 - tbar * phi_t1) / (1.0 - tbar)
    return PerPhotonShapes(
        dt=config.dt, phi_T1=phi_t1, phi_S1=phi_s1, phi_01=phi_01, tbar=tbar
    )


def calibrate_detection(
    tbar: float,
    mean_photons: float,
    target_click_prob: float,
    f_bg: float,
) -> DetectionCalibration:
    """Solve for (eta, p_bg) hitting the target click probability.

    Backgrounds take the fraction f_bg of the click budget
    (p_bg = f_bg * target) and eta covers the rest through
    1 - (1 - p_bg) exp(-eta mu tbar) = target.
    """
    if not 0.0 < tbar <= 1.0:
        raise ConfigError("transmission must lie in (0, 1]")
    if not 0.0 <= f_bg < 1.0:
        raise ConfigError("background click fraction must lie in [0, 1)")
    lam = mean_photons * tbar
    if target_click_prob == 0.0:
        return DetectionCalibration(
            eta=0.0, p_bg=0.0, lam=lam, target_click_prob=0.0
        )
    p_bg = f_bg * target_click_prob
    needed = math.log((1.0 - p_bg) / (1.0 - target_click_prob))
    if lam <= 0.0:
        raise ConfigError(
            "click target unreachable: no transmitted photons to detect"
        )
    eta = needed / lam
    if eta > 1.0:
        raise ConfigError(
            f"click target {target_click_prob:g} needs eta = {eta:.3f} > 1; "
            "raise mean_photons or the transmission"
        )
    return DetectionCalibration(
        eta=eta, p_bg=p_bg, lam=lam, target_click_prob=target_click_prob
    )


def kappa_closed_form(eta: float, lam: float, p_bg: float) -> float:
    """Poisson-conditioning factor lam eta / P(click)."""
    p_click = 1.0 - (1.0 - p_bg) * math.exp(-lam * eta)
    if p_click == 0.0:
        return 1.0  # eta -> 0 limit with no background
    return lam * eta / p_click


def kappa_enumeration(
    eta: float, lam: float, p_bg: float, n_max: int = 200
) -> float:
    """Same factor by direct summation over the Poisson support.

    Kept deliberately independent of the closed form; the two must agree
    to float precision for any admissible (eta, lam, p_bg).
    """
    if lam < 0.0:
        raise ConfigError("mean transmitted photon number must be >= 0")
    pmf = math.exp(-lam)
    # exp(-lam) underflow would zero the whole sum and dodge the tail
    # check below
    if pmf == 0.0:
        raise ConfigError(f"Poisson tail not negligible at n_max = {n_max}")
    p_click = e_n_click = e_n_noclick = p_noclick = 0.0
    for n in range(n_max + 1):
        p_click_n = 1.0 - (1.0 - p_bg) * (1.0 - eta) ** n
        p_click += pmf * p_click_n
        e_n_click += pmf * n * p_click_n
        p_noclick += pmf * (1.0 - p_click_n)
        e_n_noclick += pmf * n * (1.0 - p_click_n)
        pmf *= lam / (n + 1)
    if pmf * lam > 1e-12:
        raise ConfigError(f"Poisson tail not negligible at n_max = {n_max}")
    if p_click == 0.0:
        return 1.0
    if p_noclick == 0.0:
        return e_n_click / p_click - lam
    return e_n_click / p_click - e_n_noclick / p_noclick


def _effective(mode: str, shapes, cal, config):
    """Map a null-dataset kind onto (mu, tbar, eta, shapes)."""
    if mode == "normal":
        return config.mean_photons, shapes.tbar, cal.eta, shapes
    if mode in ("no_atoms", "bypass_atoms"):
        # signal light never meets the cloud: full transmission, no phase
        return config.mean_photons, 1.0, cal.eta, shapes.zeroed()
    if mode == "no_signal":
        if cal.p_bg <= 0.0:
            raise ConfigError(
                "no_signal dataset needs background clicks; set "
                "background_click_fraction > 0"
            )
        return 0.0, 1.0, 0.0, shapes.zeroed()
    raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")


def _lowpass(traces: np.ndarray, dt: float, cutoff: float) -> np.ndarray:
    a = math.exp(-2.0 * math.pi * cutoff * dt)
    out = np.empty_like(traces)
    acc = np.zeros(traces.shape[0])
    for j in range(traces.shape[1]):
        acc = a * acc + (1.0 - a) * traces[:, j]
        out[:, j] = acc
    return out


def simulate_cycle(
    rng: np.random.Generator,
    shapes: PerPhotonShapes,
    config: ShotConfig,
    cal: DetectionCalibration,
    mode: str = "normal",
    cycle: int = 0,
    truth: bool = False,
) -> CycleData:
    """All shots of one atom cycle, vectorized.

    The draw order (photon numbers, transmitted split, detections,
    background uniforms, noise matrix) is part of the reproducibility
    contract and must not change.
    """
    mu, tbar, eta, eff = _effective(mode, shapes, cal, config)
    shots = config.shots_per_cycle
    n_ph = rng.poisson(mu, shots)
    n_t = rng.binomial(n_ph, tbar)
    n_det = rng.binomial(n_t, eta)
    u_bg = rng.random(shots)
    noise = rng.standard_normal((shots, config.n_samples))

    n_s = n_ph - n_t
    traces = (
        n_t[:, None] * eff.phi_T1[None, :]
        + n_s[:, None] * eff.phi_S1[None, :]
        + config.phase_noise_rms * noise
    )
    if config.wobble_amplitude != 0.0:
        if config.mean_photons <= 0.0:
            raise ConfigError("wobble injection needs mean_photons > 0")
        ripple = config.wobble_amplitude * np.sin(
            2.0 * np.pi * config.wobble_frequency * config.sample_times()
            + config.wobble_phase
        )
        traces += (n_ph / config.mean_photons)[:, None] * ripple[None, :]
    if config.lowpass_enabled:
        traces = _lowpass(traces, config.dt, config.lowpass_cutoff)

    bg = u_bg < cal.p_bg
    clicked = (n_det > 0) | bg
    if truth:
        return CycleData(
            cycle=cycle,
            traces=traces,
            clicked=clicked,
            n_transmitted=n_t,
            n_scattered=n_s,
            background_clicked=bg,
        )
    return CycleData(cycle=cycle, traces=traces, clicked=clicked)


def simulate_shot(
    rng: np.random.Generator,
    shapes: PerPhotonShapes,
    config: ShotConfig,
    cal: DetectionCalibration,
    mode: str = "normal",
) -> ShotRecord:
    """Single-shot convenience wrapper with the same draw order."""
    one = replace(config, shots_per_cycle=1)
    data = simulate_cycle(rng, shapes, one, cal, mode=mode, truth=True)
    return ShotRecord(
        phase_samples=data.traces[0],
        clicked=bool(data.clicked[0]),
        n_transmitted=int(data.n_transmitted[0]),
        n_scattered=int(data.n_scattered[0]),
        background_clicked=bool(data.background_clicked[0]),
    )


def run_campaign(
    seed: int,
    n_cycles: int,
    shapes: PerPhotonShapes,
    config: ShotConfig,
    cal: DetectionCalibration,
    mode: str = "normal",
    jobs: int = 1,
    truth: bool = False,
) -> Iterator[CycleData]:
    """Cycles [0, n_cycles) in index order, one independent stream each.

    Cycle c uses np.random.default_rng([seed, c]), so any cycle can be
    regenerated in isolation and thread fan-out cannot change results.
    """
    if n_cycles < 0:
        raise ConfigError("n_cycles must be non-negative")

    def one(cycle: int) -> CycleData:
        rng = np.random.default_rng([seed, cycle])
        return simulate_cycle(
            rng, shapes, config, cal, mode=mode, cycle=cycle, truth=truth
        )

    if jobs <= 1:
        for cycle in range(n_cycles):
            yield one(cycle)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(one, range(n_cycles))


def null_dataset(
    kind: str,
    seed: int,
    n_cycles: int,
    shapes: PerPhotonShapes,
    config: ShotConfig,
    cal: DetectionCalibration,
    jobs: int = 1,
) -> Iterator[CycleData]:
    """Datasets whose true conditional phase is identically zero."""
    if kind not in ("no_atoms", "bypass_atoms", "no_signal"):
        raise ConfigError(
            f"unknown null kind {kind!r}; expected no_atoms, bypass_atoms "
            "or no_signal"
        )
    return run_campaign(
        seed, n_cycles, shapes, config, cal, mode=kind, jobs=jobs
    )
