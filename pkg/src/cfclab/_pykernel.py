"""Pure-Python propagation kernel (fallback when the extension is absent).

Mirrors cfclab._kernel operation by operation; the arithmetic below is kept
in the exact evaluation order of the C code so both backends produce
bit-identical results. Rotation cosines/sines arrive precomputed (``cs``,
one (cos, sin) row per parameter), keeping libm quirks out of the kernels.
"""
from __future__ import annotations

import numpy as np


def run_program(prog, cs, active):
    ops, opf = prog.as_lists()
    rot = cs.tolist()

    amp = [[0.0, 0.0, 0.0, 0.0] for _ in range(prog.n_modes)]  # Hr Hi Vr Vi
    tan = [[0.0, 0.0, 0.0, 0.0] for _ in range(prog.n_modes)]
    bin_a = [[0.0, 0.0, 0.0, 0.0] for _ in range(prog.n_bins)]
    bin_t = [[0.0, 0.0, 0.0, 0.0] for _ in range(prog.n_bins)]
    flux = [0.0] * prog.n_params
    amp[prog.input_slot][0] = 1.0

    for i, (code, a, b, k) in enumerate(ops):
        if code == 0:  # beam splitter: opf = (sqrt(T), sqrt(1-T))
            c, s = opf[i]
            for arr in (amp, tan):
                ra, rb = arr[a], arr[b]
                for o in (0, 2):
                    xr, xi = ra[o], ra[o + 1]
                    yr, yi = rb[o], rb[o + 1]
                    ra[o] = c * xr - s * yi
                    ra[o + 1] = c * xi + s * yr
                    rb[o] = -(s * xi) + c * yr
                    rb[o + 1] = s * xr + c * yi
        elif code == 1:  # polarization rotation
            c, s = rot[k]
            ra = amp[a]
            hr, hi, vr, vi = ra
            flux[k] += hr * hr + hi * hi + vr * vr + vi * vi
            ra[0] = c * hr - s * vr
            ra[1] = c * hi - s * vi
            ra[2] = s * hr + c * vr
            ra[3] = s * hi + c * vi
            rt = tan[a]
            xr, xi, yr, yi = rt
            rt[0] = c * xr - s * yr
            rt[1] = c * xi - s * yi
            rt[2] = s * xr + c * yr
            rt[3] = s * xi + c * yi
            if k == active:
                rt[0] = rt[0] - s * hr - c * vr
                rt[1] = rt[1] - s * hi - c * vi
                rt[2] = rt[2] + c * hr - s * vr
                rt[3] = rt[3] + c * hi - s * vi
        elif code == 2:  # phase plate: opf = (cos phi, sin phi)
            cr, ci = opf[i]
            for arr in (amp, tan):
                ra = arr[a]
                for o in (0, 2):
                    xr, xi = ra[o], ra[o + 1]
                    ra[o] = cr * xr - ci * xi
                    ra[o + 1] = cr * xi + ci * xr
        elif code == 3:  # mirror: identity
            pass
        elif code == 4:  # absorbing detector: move mode -> bin
            bin_a[k] = amp[a]
            bin_t[k] = tan[a]
            amp[a] = [0.0, 0.0, 0.0, 0.0]
            tan[a] = [0.0, 0.0, 0.0, 0.0]
        elif code == 5:  # swap
            amp[a], amp[b] = amp[b], amp[a]
            tan[a], tan[b] = tan[b], tan[a]

    def to_complex(rows):
        arr = np.asarray(rows, dtype=np.float64).reshape(len(rows), 2, 2)
        return arr[:, :, 0] + 1j * arr[:, :, 1]

    return (
        to_complex(amp),
        to_complex(tan),
        to_complex(bin_a),
        to_complex(bin_t),
        np.asarray(flux, dtype=np.float64),
    )
