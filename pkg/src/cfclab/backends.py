"""Propagation kernel selection and circuit-to-program compilation.

A circuit is compiled once into a flat opcode program (numpy arrays); the
program is then executed either by the compiled extension (``cfclab._kernel``,
built from Cython) or by the pure-Python fallback (``cfclab._pykernel``).
The backend is selected at import time: the extension is used when present.
Both kernels implement identical arithmetic (the extension is compiled with
FP contraction off), so results agree bit for bit.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import _pykernel
from .errors import CircuitConfigError

try:
    from . import _kernel  # compiled extension, optional
except ImportError:  # pragma: no cover - depends on build environment
    _kernel = None

HAVE_COMPILED = _kernel is not None
DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "python"

OP_BS = 0
OP_TAG = 1
OP_PHASE = 2
OP_MIRROR = 3
OP_DETECT = 4
OP_SWAP = 5


@dataclass
class Program:
    """Flat instruction stream over integer mode/bin/parameter slots."""

    ops: np.ndarray      # int32 (n_ops, 4): code, slot_a, slot_b, aux
    opf: np.ndarray      # float64 (n_ops, 2): per-op constants
    n_modes: int
    n_bins: int
    n_params: int
    input_slot: int
    _ops_list: list | None = None
    _opf_list: list | None = None

    def as_lists(self):
        # plain lists are much faster to iterate in the Python kernel
        if self._ops_list is None:
            self._ops_list = self.ops.tolist()
            self._opf_list = self.opf.tolist()
        return self._ops_list, self._opf_list


_program_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def compile_circuit(circuit) -> Program:
    """Lower a validated circuit to the opcode program (cached per circuit)."""
    from . import optics

    cached = _program_cache.get(circuit)
    if cached is not None:
        return cached

    mode_slot = {m: i for i, m in enumerate(circuit.modes)}
    bin_slot = {b: i for i, b in enumerate(circuit.bin_ids)}
    param_slot = {p: i for i, p in enumerate(circuit.param_ids)}

    n = len(circuit.elements)
    ops = np.zeros((n, 4), dtype=np.int32)
    opf = np.zeros((n, 2), dtype=np.float64)
    for i, elem in enumerate(circuit.elements):
        if isinstance(elem, optics.BeamSplitter):
            ops[i] = (OP_BS, mode_slot[elem.mode_lo], mode_slot[elem.mode_hi], 0)
            opf[i] = (math.sqrt(elem.transmission), math.sqrt(1.0 - elem.transmission))
        elif isinstance(elem, optics.Tagging):
            ops[i] = (OP_TAG, mode_slot[elem.mode], 0, param_slot[elem.param_id])
        elif isinstance(elem, optics.PhasePlate):
            ops[i] = (OP_PHASE, mode_slot[elem.mode], 0, 0)
            opf[i] = (math.cos(elem.phase), math.sin(elem.phase))
        elif isinstance(elem, optics.Mirror):
            ops[i] = (OP_MIRROR, mode_slot[elem.mode], 0, 0)
        elif isinstance(elem, optics.DetectorBin):
            ops[i] = (OP_DETECT, mode_slot[elem.mode], 0, bin_slot[elem.bin_id])
        elif isinstance(elem, optics.Swap):
            ops[i] = (OP_SWAP, mode_slot[elem.mode_a], mode_slot[elem.mode_b], 0)
        else:
            raise CircuitConfigError(f"cannot compile element {elem!r}")

    prog = Program(
        ops=ops,
        opf=opf,
        n_modes=len(circuit.modes),
        n_bins=len(circuit.bin_ids),
        n_params=len(circuit.param_ids),
        input_slot=mode_slot[circuit.input_mode],
    )
    _program_cache[circuit] = prog
    return prog


def available_backends() -> tuple[str, ...]:
    return ("python", "compiled") if HAVE_COMPILED else ("python",)


def run(circuit, theta_values: Mapping[str, float], active_param: str | None,
        backend: str | None = None):
    """Execute a circuit; returns (p, dp, tag_fluxes, leftover_norm).

    ``p``/``dp`` are float64 arrays of shape (n_bins, 2) over (H, V);
    ``tag_fluxes`` is float64 (n_params,); ``leftover_norm`` is the total
    |amplitude|^2 remaining in live modes (should be ~0 for a good circuit).
    """
    name = backend or DEFAULT_BACKEND
    if name not in ("python", "compiled"):
        raise CircuitConfigError(f"unknown backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise CircuitConfigError("compiled backend requested but extension not built")

    prog = compile_circuit(circuit)
    # rotation cosines/sines are precomputed once per run so the kernels
    # stay trig-free (and therefore backend-identical)
    cs = np.array(
        [
            (math.cos(theta_values[p]), math.sin(theta_values[p]))
            for p in circuit.param_ids
        ],
        dtype=np.float64,
    ).reshape(len(circuit.param_ids), 2)
    active = circuit.param_ids.index(active_param) if active_param is not None else -1

    if name == "compiled":
        amp, tan, bin_a, bin_t, flux = _kernel.run_program(
            prog.ops, prog.opf, cs, active,
            prog.n_modes, prog.n_bins, prog.n_params, prog.input_slot,
        )
    else:
        amp, tan, bin_a, bin_t, flux = _pykernel.run_program(
            prog, cs, active,
        )

    p = np.abs(bin_a) ** 2
    dp = 2.0 * (np.conj(bin_a) * bin_t).real
    leftover = float(np.sum(np.abs(amp) ** 2))
    return p, dp, flux, leftover
