"""Single-photon states on path (x) polarization space and their propagation.

The state of one photon is a complex amplitude per (spatial mode, polarization)
slot. Alongside each amplitude we carry a *tangent* amplitude: the exact
derivative of the amplitude with respect to one selected rotation parameter
(``active_param``). Elements transform tangents with the same unitary as the
amplitudes; the element that owns the active parameter additionally injects
``dR/dtheta @ a`` evaluated at the incoming amplitudes. Detector probabilities
and their derivatives are therefore exact to double precision: no finite
differences anywhere inside propagation.

Detector bins absorb amplitude coherently (the bin keeps the complex value, it
just never re-enters interference), so every element acts as an isometry on
(live modes + bins) and total probability is conserved to machine precision.

Element conventions
-------------------
Beam splitter on the ordered mode pair (lo, hi), transmission ``T``::

    out_lo = sqrt(T) a_lo + i sqrt(1-T) a_hi
    out_hi = i sqrt(1-T) a_lo + sqrt(T) a_hi

applied identically to each polarization component.

Polarization rotation ("tagging") by angle theta at one mode::

    R(theta) = [[cos t, -sin t],
                [sin t,  cos t]]     acting on (H, V).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Union

from .errors import CircuitConfigError, CircuitStructureError

ModeId = Union[str, int]

#: total leftover |amplitude|^2 allowed in non-terminated modes
LEFTOVER_TOL = 1e-12
#: probability closure tolerance for a finished propagation
CLOSURE_TOL = 1e-12


class Polarization(Enum):
    H = 0
    V = 1


Amp = tuple[complex, complex]  # (H, V) components

_ZERO: Amp = (0j, 0j)


@dataclass(frozen=True)
class BeamSplitter:
    mode_lo: ModeId
    mode_hi: ModeId
    transmission: float

    def __post_init__(self):
        if not 0.0 <= self.transmission <= 1.0:
            raise CircuitConfigError(
                f"beam splitter transmission {self.transmission} outside [0, 1]"
            )


@dataclass(frozen=True)
class Tagging:
    """Weak polarization rotation probing whether the photon was here."""

    mode: ModeId
    param_id: str


@dataclass(frozen=True)
class PhasePlate:
    mode: ModeId
    phase: float


@dataclass(frozen=True)
class Mirror:
    """Ideal mirror; redirects a path without changing the state."""

    mode: ModeId


@dataclass(frozen=True)
class DetectorBin:
    """Absorbing, polarization-resolving detector terminating one mode."""

    mode: ModeId
    bin_id: str


@dataclass(frozen=True)
class Swap:
    mode_a: ModeId
    mode_b: ModeId


Element = Union[BeamSplitter, Tagging, PhasePlate, Mirror, DetectorBin, Swap]


@dataclass(frozen=True)
class PhotonState:
    """Amplitudes and exact tangents over live modes plus absorbed bins.

    ``amplitudes``/``tangents`` map mode -> (H, V) complex pairs; ``bins``
    holds the same pairs for amplitude already swallowed by detectors.
    Instances are treated as immutable; every operation returns a new state.
    """

    amplitudes: dict[ModeId, Amp]
    tangents: dict[ModeId, Amp] = field(default_factory=dict)
    bin_amplitudes: dict[str, Amp] = field(default_factory=dict)
    bin_tangents: dict[str, Amp] = field(default_factory=dict)
    active_param: str | None = None

    @classmethod
    def single_photon(cls, mode: ModeId, active_param: str | None = None) -> "PhotonState":
        """H-polarized unit amplitude in one mode."""
        return cls(
            amplitudes={mode: (1.0 + 0j, 0j)},
            tangents={mode: _ZERO},
            active_param=active_param,
        )

    @classmethod
    def over_modes(
        cls,
        modes: Iterable[ModeId],
        input_mode: ModeId,
        active_param: str | None = None,
    ) -> "PhotonState":
        """H-polarized unit amplitude in ``input_mode``, vacuum elsewhere."""
        amps = {m: _ZERO for m in modes}
        if input_mode not in amps:
            raise CircuitConfigError(f"input mode {input_mode!r} not among modes")
        amps[input_mode] = (1.0 + 0j, 0j)
        return cls(
            amplitudes=amps,
            tangents={m: _ZERO for m in amps},
            active_param=active_param,
        )

    def norm_squared(self) -> float:
        live = sum(abs(h) ** 2 + abs(v) ** 2 for h, v in self.amplitudes.values())
        binned = sum(abs(h) ** 2 + abs(v) ** 2 for h, v in self.bin_amplitudes.values())
        return live + binned


def _tangent_of(state: PhotonState, mode: ModeId) -> Amp:
    return state.tangents.get(mode, _ZERO)


def apply_element(
    state: PhotonState,
    elem: Element,
    theta_values: Mapping[str, float] | None = None,
) -> PhotonState:
    """Apply one optical element; returns the transformed state.

    ``theta_values`` must provide an angle for every Tagging encountered.
    Raises CircuitConfigError for unknown modes or missing angles.
    """
    amps = dict(state.amplitudes)
    tans = {m: _tangent_of(state, m) for m in state.amplitudes}
    bins_a = dict(state.bin_amplitudes)
    bins_t = dict(state.bin_tangents)

    def need(mode: ModeId) -> None:
        if mode not in amps:
            raise CircuitConfigError(f"element {elem!r} references unknown mode {mode!r}")

    if isinstance(elem, BeamSplitter):
        need(elem.mode_lo)
        need(elem.mode_hi)
        ct = math.sqrt(elem.transmission)
        st = math.sqrt(1.0 - elem.transmission)
        for arr in (amps, tans):
            xl, yl = arr[elem.mode_lo], arr[elem.mode_hi]
            arr[elem.mode_lo] = (ct * xl[0] + 1j * st * yl[0], ct * xl[1] + 1j * st * yl[1])
            arr[elem.mode_hi] = (1j * st * xl[0] + ct * yl[0], 1j * st * xl[1] + ct * yl[1])
    elif isinstance(elem, Tagging):
        need(elem.mode)
        if theta_values is None or elem.param_id not in theta_values:
            raise CircuitConfigError(f"no angle supplied for tagging parameter {elem.param_id!r}")
        c = math.cos(theta_values[elem.param_id])
        s = math.sin(theta_values[elem.param_id])
        h, v = amps[elem.mode]
        th, tv = tans[elem.mode]
        amps[elem.mode] = (c * h - s * v, s * h + c * v)
        rot = (c * th - s * tv, s * th + c * tv)
        if elem.param_id == state.active_param:
            # dR/dtheta applied to the incoming amplitudes
            rot = (rot[0] - s * h - c * v, rot[1] + c * h - s * v)
        tans[elem.mode] = rot
    elif isinstance(elem, PhasePlate):
        need(elem.mode)
        ph = cmath.exp(1j * elem.phase)
        amps[elem.mode] = (ph * amps[elem.mode][0], ph * amps[elem.mode][1])
        tans[elem.mode] = (ph * tans[elem.mode][0], ph * tans[elem.mode][1])
    elif isinstance(elem, Mirror):
        need(elem.mode)
        # identity on the state; kept for circuit topology/export
    elif isinstance(elem, DetectorBin):
        need(elem.mode)
        if elem.bin_id in bins_a:
            raise CircuitConfigError(f"detector bin {elem.bin_id!r} used twice")
        bins_a[elem.bin_id] = amps[elem.mode]
        bins_t[elem.bin_id] = tans[elem.mode]
        amps[elem.mode] = _ZERO
        tans[elem.mode] = _ZERO
    elif isinstance(elem, Swap):
        need(elem.mode_a)
        need(elem.mode_b)
        for arr in (amps, tans):
            arr[elem.mode_a], arr[elem.mode_b] = arr[elem.mode_b], arr[elem.mode_a]
    else:
        raise CircuitConfigError(f"unknown element type {type(elem).__name__}")

    return PhotonState(
        amplitudes=amps,
        tangents=tans,
        bin_amplitudes=bins_a,
        bin_tangents=bins_t,
        active_param=state.active_param,
    )


@dataclass(frozen=True)
class OutcomeDistribution:
    """Polarization-resolved detector probabilities with exact derivatives.

    ``bins`` maps (bin_id, Polarization) -> (p, dp/dtheta_active). ``roles``
    carries the circuit's bin-role registry so downstream analysis can
    post-select on roles without holding the circuit. ``tag_fluxes`` records
    the probability |a|^2 crossing each tagging site during this propagation
    (evaluated just before the rotation), used for flux cross-checks.
    """

    bins: dict[tuple[str, Polarization], tuple[float, float]]
    active_param: str | None
    roles: dict[str, str] = field(default_factory=dict)
    tag_fluxes: dict[str, float] = field(default_factory=dict)

    def probability(self, bin_id: str) -> float:
        return sum(p for (b, _pol), (p, _dp) in self.bins.items() if b == bin_id)

    def derivative(self, bin_id: str) -> float:
        return sum(dp for (b, _pol), (_p, dp) in self.bins.items() if b == bin_id)

    def total(self) -> float:
        return sum(p for p, _ in self.bins.values())


def distribution_from_state(
    state: PhotonState,
    roles: Mapping[str, str] | None = None,
    tag_fluxes: Mapping[str, float] | None = None,
) -> OutcomeDistribution:
    """Square absorbed bin amplitudes into probabilities and derivatives."""
    out: dict[tuple[str, Polarization], tuple[float, float]] = {}
    for bin_id, (ah, av) in state.bin_amplitudes.items():
        th, tv = state.bin_tangents.get(bin_id, _ZERO)
        out[(bin_id, Polarization.H)] = (abs(ah) ** 2, 2.0 * (ah.conjugate() * th).real)
        out[(bin_id, Polarization.V)] = (abs(av) ** 2, 2.0 * (av.conjugate() * tv).real)
    return OutcomeDistribution(
        bins=out,
        active_param=state.active_param,
        roles=dict(roles or {}),
        tag_fluxes=dict(tag_fluxes or {}),
    )


def propagate_state(
    circuit,
    state: PhotonState,
    theta_values: Mapping[str, float] | None = None,
) -> PhotonState:
    """Run an arbitrary initial state through a circuit, element by element.

    Reference path: exact but slow. `propagate` below is the production
    entry point (unit H input, compiled kernel when available).
    """
    merged = dict(circuit.default_thetas)
    merged.update(theta_values or {})
    for elem in circuit.elements:
        state = apply_element(state, elem, merged)
    return state


def propagate(
    circuit,
    theta_values: Mapping[str, float] | None = None,
    active_param: str | None = None,
    backend: str | None = None,
) -> OutcomeDistribution:
    """Propagate a single H-polarized photon from the circuit input.

    Returns polarization-resolved bin probabilities with exact derivatives
    with respect to ``active_param``. Raises CircuitStructureError if the
    circuit leaves amplitude outside its detector bins or the probabilities
    fail closure.
    """
    from . import backends  # local import: backends imports numpy

    if active_param is not None and active_param not in circuit.param_ids:
        raise CircuitConfigError(f"active parameter {active_param!r} not in circuit")
    merged = dict(circuit.default_thetas)
    merged.update(theta_values or {})
    missing = [p for p in circuit.param_ids if p not in merged]
    if missing:
        raise CircuitConfigError(f"no angle supplied for tagging parameter(s) {missing}")

    p, dp, fluxes, leftover = backends.run(circuit, merged, active_param, backend)

    if leftover > LEFTOVER_TOL:
        raise CircuitStructureError(
            f"circuit is not isometric onto its bins: |amplitude|^2 = {leftover:.3e} "
            "left in non-terminated modes"
        )
    bins: dict[tuple[str, Polarization], tuple[float, float]] = {}
    for j, bin_id in enumerate(circuit.bin_ids):
        bins[(bin_id, Polarization.H)] = (float(p[j, 0]), float(dp[j, 0]))
        bins[(bin_id, Polarization.V)] = (float(p[j, 1]), float(dp[j, 1]))
    total = sum(v for v, _ in bins.values())
    dtotal = sum(d for _, d in bins.values())
    if abs(total - 1.0) > CLOSURE_TOL or abs(dtotal) > CLOSURE_TOL:
        raise CircuitStructureError(
            f"probability closure violated: sum p = {total!r}, sum dp = {dtotal!r}"
        )
    flux_map = {pid: float(fluxes[i]) for i, pid in enumerate(circuit.param_ids)}
    return OutcomeDistribution(
        bins=bins,
        active_param=active_param,
        roles=dict(circuit.bin_roles),
        tag_fluxes=flux_map,
    )
