# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sliding-window scoring kernel.

Scores are lookup-table sums over absolute pixel differences, accumulated
in row-major pixel order.  The loop releases the GIL so caller threads can
run bands of the offset grid in parallel.
"""


def score_map_band(const unsigned char[:, :] frame,
                   const unsigned char[:, :] tmpl,
                   Py_ssize_t x0, Py_ssize_t y0, Py_ssize_t radius,
                   const double[:] lut, double[:, :] out,
                   Py_ssize_t row_start, Py_ssize_t row_end):
    cdef Py_ssize_t th = tmpl.shape[0]
    cdef Py_ssize_t tw = tmpl.shape[1]
    cdef Py_ssize_t side = 2 * radius + 1
    cdef Py_ssize_t row, col, j, i, top, left
    cdef int d
    cdef double acc
    with nogil:
        for row in range(row_start, row_end):
            top = y0 + (row - radius)
            for col in range(side):
                left = x0 + (col - radius)
                acc = 0.0
                for j in range(th):
                    for i in range(tw):
                        d = frame[top + j, left + i] - tmpl[j, i]
                        if d < 0:
                            d = -d
                        acc += lut[d]
                out[row, col] = acc
