import numpy as np
import pytest

from cfclab import (
    BeamSplitter,
    DetectorBin,
    Mirror,
    PhasePlate,
    Swap,
    Tagging,
)
from cfclab.backends import available_backends
from cfclab.circuits import Circuit


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


def random_circuit(rng: np.random.Generator, n_modes: int | None = None):
    """Random small circuit terminated by one detector per mode, plus a
    random positive angle assignment for every tagging site."""
    n_modes = n_modes or int(rng.integers(2, 5))
    modes = [f"m{i}" for i in range(n_modes)]
    elements = []
    params = []
    for i in range(int(rng.integers(5, 26))):
        kind = rng.integers(0, 5)
        if kind == 0:
            a, b = rng.choice(n_modes, size=2, replace=False)
            elements.append(BeamSplitter(modes[a], modes[b], float(rng.uniform(0, 1))))
        elif kind == 1:
            pid = f"p{len(params)}"
            params.append(pid)
            elements.append(Tagging(modes[int(rng.integers(n_modes))], pid))
        elif kind == 2:
            elements.append(
                PhasePlate(modes[int(rng.integers(n_modes))], float(rng.uniform(0, 2 * np.pi)))
            )
        elif kind == 3:
            elements.append(Mirror(modes[int(rng.integers(n_modes))]))
        else:
            a, b = rng.choice(n_modes, size=2, replace=False)
            elements.append(Swap(modes[a], modes[b]))
    if not params:
        params.append("p0")
        elements.append(Tagging(modes[0], "p0"))
    bin_roles = {}
    for i, m in enumerate(modes):
        elements.append(DetectorBin(m, f"bin{i}"))
        bin_roles[f"bin{i}"] = "other"
    circuit = Circuit(
        elements=tuple(elements),
        input_mode=modes[0],
        modes=tuple(modes),
        bin_roles=bin_roles,
        param_ids=tuple(params),
        default_thetas={p: 0.0 for p in params},
    )
    circuit.validate()
    thetas = {p: float(rng.uniform(0.0, 0.3)) for p in params}
    return circuit, thetas
