# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled propagation kernel.

Operation-for-operation twin of cfclab._pykernel.run_program; see that module
for the opcode reference. Compiled with -ffp-contract=off so both backends
round identically.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def run_program(const int[:, ::1] ops, const double[:, ::1] opf,
                const double[:, ::1] cs, int active,
                int n_modes, int n_bins, int n_params, int input_slot):
    cdef Py_ssize_t n_ops = ops.shape[0]
    amp_np = np.zeros((n_modes, 4), dtype=np.float64)   # Hr Hi Vr Vi
    tan_np = np.zeros((n_modes, 4), dtype=np.float64)
    bina_np = np.zeros((n_bins, 4), dtype=np.float64)
    bint_np = np.zeros((n_bins, 4), dtype=np.float64)
    flux_np = np.zeros(n_params, dtype=np.float64)

    cdef double[:, ::1] amp = amp_np
    cdef double[:, ::1] tan = tan_np
    cdef double[:, ::1] bin_a = bina_np
    cdef double[:, ::1] bin_t = bint_np
    cdef double[::1] flux = flux_np

    cdef Py_ssize_t i
    cdef int code, a, b, k, o, j
    cdef double c, s, cr, ci
    cdef double xr, xi, yr, yi, hr, hi, vr, vi, tmp

    amp[input_slot, 0] = 1.0

    for i in range(n_ops):
        code = ops[i, 0]
        a = ops[i, 1]
        b = ops[i, 2]
        k = ops[i, 3]
        if code == 0:  # beam splitter
            c = opf[i, 0]
            s = opf[i, 1]
            for o in range(0, 4, 2):
                xr = amp[a, o]; xi = amp[a, o + 1]
                yr = amp[b, o]; yi = amp[b, o + 1]
                amp[a, o] = c * xr - s * yi
                amp[a, o + 1] = c * xi + s * yr
                amp[b, o] = -(s * xi) + c * yr
                amp[b, o + 1] = s * xr + c * yi
                xr = tan[a, o]; xi = tan[a, o + 1]
                yr = tan[b, o]; yi = tan[b, o + 1]
                tan[a, o] = c * xr - s * yi
                tan[a, o + 1] = c * xi + s * yr
                tan[b, o] = -(s * xi) + c * yr
                tan[b, o + 1] = s * xr + c * yi
        elif code == 1:  # polarization rotation
            c = cs[k, 0]
            s = cs[k, 1]
            hr = amp[a, 0]; hi = amp[a, 1]; vr = amp[a, 2]; vi = amp[a, 3]
            flux[k] += hr * hr + hi * hi + vr * vr + vi * vi
            amp[a, 0] = c * hr - s * vr
            amp[a, 1] = c * hi - s * vi
            amp[a, 2] = s * hr + c * vr
            amp[a, 3] = s * hi + c * vi
            xr = tan[a, 0]; xi = tan[a, 1]; yr = tan[a, 2]; yi = tan[a, 3]
            tan[a, 0] = c * xr - s * yr
            tan[a, 1] = c * xi - s * yi
            tan[a, 2] = s * xr + c * yr
            tan[a, 3] = s * xi + c * yi
            if k == active:
                tan[a, 0] = tan[a, 0] - s * hr - c * vr
                tan[a, 1] = tan[a, 1] - s * hi - c * vi
                tan[a, 2] = tan[a, 2] + c * hr - s * vr
                tan[a, 3] = tan[a, 3] + c * hi - s * vi
        elif code == 2:  # phase plate
            cr = opf[i, 0]
            ci = opf[i, 1]
            for o in range(0, 4, 2):
                xr = amp[a, o]; xi = amp[a, o + 1]
                amp[a, o] = cr * xr - ci * xi
                amp[a, o + 1] = cr * xi + ci * xr
                xr = tan[a, o]; xi = tan[a, o + 1]
                tan[a, o] = cr * xr - ci * xi
                tan[a, o + 1] = cr * xi + ci * xr
        elif code == 3:  # mirror
            pass
        elif code == 4:  # absorbing detector
            for j in range(4):
                bin_a[k, j] = amp[a, j]
                bin_t[k, j] = tan[a, j]
                amp[a, j] = 0.0
                tan[a, j] = 0.0
        elif code == 5:  # swap
            for j in range(4):
                tmp = amp[a, j]; amp[a, j] = amp[b, j]; amp[b, j] = tmp
                tmp = tan[a, j]; tan[a, j] = tan[b, j]; tan[b, j] = tmp

    def to_complex(arr):
        r = arr.reshape(arr.shape[0], 2, 2)
        return r[:, :, 0] + 1j * r[:, :, 1]

    return (
        to_complex(amp_np),
        to_complex(tan_np),
        to_complex(bina_np),
        to_complex(bint_np),
        flux_np,
    )
