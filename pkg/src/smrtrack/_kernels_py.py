"""Numpy fallback for the sliding-window scoring kernel.

Same contract as the compiled backend in _kernels_c: fill rows
[row_start, row_end) of a (2*radius+1)^2 score map, where entry
(h2 + radius, h1 + radius) is the lookup-table sum over the candidate
patch anchored at (x0 + h1, y0 + h2).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def score_map_band(frame, tmpl, x0, y0, radius, lut, out, row_start, row_end):
    th, tw = tmpl.shape
    t16 = tmpl.astype(np.int16)
    for row in range(row_start, row_end):
        top = y0 + (row - radius)
        strip = frame[top : top + th, x0 - radius : x0 + radius + tw]
        windows = sliding_window_view(strip, (th, tw))[0]
        d = np.abs(windows.astype(np.int16) - t16)
        out[row, :] = lut[d].sum(axis=(1, 2))
