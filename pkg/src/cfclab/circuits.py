"""Builders for the three interferometer networks under study.

* ``build_reference`` -- free propagation through a single tagging, then a
  polarization-resolving detector. Its Fisher information (= 4, independent
  of the rotation angle) normalizes all violation strengths.

* ``build_reduced`` -- the doubly nested Mach-Zehnder device: an outer pair
  of beam splitters with cross-coupling chosen so the receiver-side dark port
  stays dark, whose through-arm traverses two balanced inner interferometers.
  The transmitter ("Bob") either closes the inner loops with mirrors (0-bit)
  or replaces them with absorbing detectors (1-bit). Weak polarization
  taggings sit at the two points where the photon can enter his side.

* ``build_full`` -- the chained generalization: N outer splitters, each of
  the first N-1 followed by an inner chain of M splitters whose far side is
  the transmitter's; inner chains are tuned so that, with mirrors in place,
  they dump the through-arm amplitude into loss bins after M steps (the
  repeated-interrogation discard), keeping the main arm coherent.

Bin roles: ``d0``/``d1`` are the terminal signal detectors (the post-selected
set), ``loss`` the discard ports, ``bob`` the transmitter's own detectors in
1-bit processes, ``other`` anything else.

Wiring note: the published devices are specified by their observable
behaviour, not by a drawing we can execute. The wiring below is pinned by a
calibration contract (inner dark ports exactly dark at zero rotation, with
the beam-splitter convention of `cfclab.optics`) and by golden tests on the
resulting detection probabilities; dedicated tests verify every published
constant this family of devices must reproduce.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import CircuitConfigError, SizeGuardError
from .optics import (
    BeamSplitter,
    DetectorBin,
    Element,
    Mirror,
    ModeId,
    PhasePlate,
    Swap,
    Tagging,
)

#: hard ceiling on element count accepted by build_full
MAX_FULL_ELEMENTS = 1_000_000

ROLE_D0 = "d0"
ROLE_D1 = "d1"
ROLE_LOSS = "loss"
ROLE_BOB = "bob"
ROLE_OTHER = "other"

_ROLES = (ROLE_D0, ROLE_D1, ROLE_LOSS, ROLE_BOB, ROLE_OTHER)


class BitProcess(Enum):
    """Transmitter action: ZERO inserts mirrors, ONE inserts detectors."""

    ZERO = 0
    ONE = 1


@dataclass(frozen=True)
class ReducedParams:
    theta1: float = 0.0
    theta2: float = 0.0
    bit: BitProcess = BitProcess.ZERO

    def __post_init__(self):
        for name, th in (("theta1", self.theta1), ("theta2", self.theta2)):
            if not 0.0 <= th < math.pi / 2:
                raise CircuitConfigError(f"{name}={th} outside [0, pi/2)")


@dataclass(frozen=True)
class FullParams:
    n_outer: int
    m_inner: int
    bit: BitProcess = BitProcess.ZERO

    def __post_init__(self):
        if self.n_outer < 2 or self.m_inner < 2:
            raise CircuitConfigError("need at least 2 outer and 2 inner beam splitters")


@dataclass(frozen=True, eq=False)
class Circuit:
    """An ordered element list over named modes, ending in detector bins.

    ``bin_roles`` is total over bins; ``param_ids`` fixes the tagging-site
    ordering used by the kernels; ``default_thetas`` supplies angles for
    parameters not overridden at propagation time.
    """

    elements: tuple[Element, ...]
    input_mode: ModeId
    modes: tuple[ModeId, ...]
    bin_roles: dict[str, str]
    param_ids: tuple[str, ...]
    default_thetas: dict[str, float] = field(default_factory=dict)

    @property
    def bin_ids(self) -> tuple[str, ...]:
        return tuple(self.bin_roles)

    def bins_with_role(self, role: str) -> tuple[str, ...]:
        return tuple(b for b, r in self.bin_roles.items() if r == role)

    def validate(self) -> None:
        known = set(self.modes)
        if self.input_mode not in known:
            raise CircuitConfigError(f"input mode {self.input_mode!r} not declared")
        seen_bins: set[str] = set()
        seen_params: set[str] = set()
        for elem in self.elements:
            refs: Iterable[ModeId]
            if isinstance(elem, BeamSplitter):
                refs = (elem.mode_lo, elem.mode_hi)
            elif isinstance(elem, Swap):
                refs = (elem.mode_a, elem.mode_b)
            elif isinstance(elem, (Tagging, PhasePlate, Mirror, DetectorBin)):
                refs = (elem.mode,)
            else:
                raise CircuitConfigError(f"unknown element type {type(elem).__name__}")
            for m in refs:
                if m not in known:
                    raise CircuitConfigError(f"element {elem!r} references unknown mode {m!r}")
            if isinstance(elem, DetectorBin):
                if elem.bin_id in seen_bins:
                    raise CircuitConfigError(f"detector bin {elem.bin_id!r} used twice")
                seen_bins.add(elem.bin_id)
            if isinstance(elem, Tagging):
                seen_params.add(elem.param_id)
        if seen_bins != set(self.bin_roles):
            raise CircuitConfigError("bin role registry does not match detector bins")
        for b, role in self.bin_roles.items():
            if role not in _ROLES:
                raise CircuitConfigError(f"bin {b!r} has unknown role {role!r}")
        if seen_params != set(self.param_ids):
            raise CircuitConfigError("param_ids does not match tagging elements")

    def to_json_dict(self) -> dict:
        """Deterministic description for debugging and golden tests."""
        elems = []
        for e in self.elements:
            if isinstance(e, BeamSplitter):
                elems.append({"type": "beam_splitter", "lo": e.mode_lo, "hi": e.mode_hi,
                              "transmission": e.transmission})
            elif isinstance(e, Tagging):
                elems.append({"type": "tagging", "mode": e.mode, "param": e.param_id})
            elif isinstance(e, PhasePlate):
                elems.append({"type": "phase_plate", "mode": e.mode, "phase": e.phase})
            elif isinstance(e, Mirror):
                elems.append({"type": "mirror", "mode": e.mode})
            elif isinstance(e, DetectorBin):
                elems.append({"type": "detector", "mode": e.mode, "bin": e.bin_id})
            elif isinstance(e, Swap):
                elems.append({"type": "swap", "a": e.mode_a, "b": e.mode_b})
        return {
            "input_mode": self.input_mode,
            "modes": list(self.modes),
            "elements": elems,
            "bin_roles": dict(self.bin_roles),
            "param_ids": list(self.param_ids),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=False)


def _circuit(elements, input_mode, modes, bin_roles, param_ids, defaults) -> Circuit:
    circ = Circuit(
        elements=tuple(elements),
        input_mode=input_mode,
        modes=tuple(modes),
        bin_roles=dict(bin_roles),
        param_ids=tuple(param_ids),
        default_thetas=dict(defaults),
    )
    circ.validate()
    return circ


def build_reference(theta: float = 0.0) -> Circuit:
    """Whole wavepacket through one tagging, then a resolving detector."""
    return _circuit(
        elements=[Tagging("in", "theta"), DetectorBin("in", "ref")],
        input_mode="in",
        modes=["in"],
        bin_roles={"ref": ROLE_OTHER},
        param_ids=["theta"],
        defaults={"theta": theta},
    )


# Outer cross-coupling of the reduced device. The value is pinned by the
# device's defining interference condition: in the 1-bit process the
# through-arm remnant sqrt(T)/4 must cancel the bypass amplitude sqrt(1-T)
# at the d0 port, i.e. T/4 = 1 - T.
REDUCED_OUTER_T = 4.0 / 5.0
REDUCED_INNER_T = 0.5


def build_reduced(params: ReducedParams) -> Circuit:
    """Doubly nested interferometer for one bit process.

    The photon enters the through-arm ("chain"); the first outer splitter
    keeps sqrt(4/5) there and reflects the rest into a bypass arm. The chain
    then crosses two balanced inner interferometers whose far arms enter the
    transmitter's side (tagging sites ``theta1``, ``theta2``), and finally
    recombines with the bypass. With mirrors in and zero rotations each inner
    loop interferes destructively toward its chain continuation, so the whole
    chain amplitude leaves through the inner far ports (bins d2, d3).
    """
    one_bit = params.bit is BitProcess.ONE
    elements: list[Element] = [BeamSplitter("chain", "bypass", REDUCED_OUTER_T)]
    bin_roles: dict[str, str] = {}
    for idx, (cross, par) in enumerate((("cross1", "theta1"), ("cross2", "theta2")), start=1):
        elements.append(BeamSplitter("chain", cross, REDUCED_INNER_T))
        elements.append(Tagging(cross, par))
        if one_bit:
            elements.append(DetectorBin(cross, f"bob{idx}"))
            bin_roles[f"bob{idx}"] = ROLE_BOB
        else:
            elements.append(Mirror(cross))
        elements.append(BeamSplitter("chain", cross, REDUCED_INNER_T))
        elements.append(DetectorBin(cross, f"d{idx + 1}"))
        bin_roles[f"d{idx + 1}"] = ROLE_LOSS
    elements.append(BeamSplitter("chain", "bypass", REDUCED_OUTER_T))
    elements.append(DetectorBin("chain", "d0"))
    elements.append(DetectorBin("bypass", "d1"))
    bin_roles["d0"] = ROLE_D0
    bin_roles["d1"] = ROLE_D1
    return _circuit(
        elements=elements,
        input_mode="chain",
        modes=["chain", "bypass", "cross1", "cross2"],
        bin_roles=bin_roles,
        param_ids=["theta1", "theta2"],
        defaults={"theta1": params.theta1, "theta2": params.theta2},
    )


def tag_param(n: int, m: int) -> str:
    """Tagging-site id for the crossing after inner splitter m of chain n."""
    return f"t_{n}_{m}"


def build_full(params: FullParams) -> Circuit:
    """Chained device with N outer and M inner beam splitters per stage.

    Outer splitters couple the main arm to the transmitter-side arm with
    cross-coupling sin^2(pi/2N); inner splitters couple that arm to the
    crossing rail with sin^2(pi/2M). Each of the M-1 segments between inner
    splitters passes through the transmitter's side: a tagging followed by
    his mirror (0-bit) or absorbing detector (1-bit). After the M-th inner
    splitter the crossing rail is dumped into a loss bin, which at exact
    tuning (0-bit) absorbs the whole stage amplitude.
    """
    n_outer, m_inner, bit = params.n_outer, params.m_inner, params.bit
    n_elements = n_outer + (n_outer - 1) * (3 * m_inner - 1)
    if n_elements > MAX_FULL_ELEMENTS:
        raise SizeGuardError(
            f"N={n_outer}, M={m_inner} needs {n_elements} elements "
            f"(guard: {MAX_FULL_ELEMENTS})"
        )
    # paper-style "transmission" is the cross-coupling INTO the other arm;
    # the element parameter is the stay-probability, hence the cos^2.
    outer_t = math.cos(math.pi / (2 * n_outer)) ** 2
    inner_t = math.cos(math.pi / (2 * m_inner)) ** 2
    one_bit = bit is BitProcess.ONE

    elements: list[Element] = []
    bin_roles: dict[str, str] = {}
    param_ids: list[str] = []
    for n in range(1, n_outer):
        elements.append(BeamSplitter("main", "chain", outer_t))
        for m in range(1, m_inner):
            elements.append(BeamSplitter("chain", "cross", inner_t))
            pid = tag_param(n, m)
            param_ids.append(pid)
            elements.append(Tagging("cross", pid))
            if one_bit:
                elements.append(DetectorBin("cross", f"bob_{n}_{m}"))
                bin_roles[f"bob_{n}_{m}"] = ROLE_BOB
            else:
                elements.append(Mirror("cross"))
        elements.append(BeamSplitter("chain", "cross", inner_t))
        elements.append(DetectorBin("cross", f"loss_{n}"))
        bin_roles[f"loss_{n}"] = ROLE_LOSS
    elements.append(BeamSplitter("main", "chain", outer_t))
    elements.append(DetectorBin("main", "d0"))
    elements.append(DetectorBin("chain", "d1"))
    bin_roles["d0"] = ROLE_D0
    bin_roles["d1"] = ROLE_D1
    return _circuit(
        elements=elements,
        input_mode="main",
        modes=["main", "chain", "cross"],
        bin_roles=bin_roles,
        param_ids=param_ids,
        defaults={p: 0.0 for p in param_ids},
    )
