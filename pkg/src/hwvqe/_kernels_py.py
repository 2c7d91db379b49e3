"""Pure-numpy fallback for the compiled kernels.

Same signatures and in-place semantics as ``_kernels``; used when the
extension is unavailable or when HWVQE_PURE_PYTHON=1 forces it.
"""

import numpy as np


def apply_v_block(amps: np.ndarray, lower: int, c: float, s: float) -> None:
    """Rotate the |01>/|10> subspace of the adjacent pair (lower+1, lower)."""
    n_low = 1 << lower
    view = amps.reshape(-1, 4, n_low)  # middle axis index = 2*bit(lower+1) + bit(lower)
    a01 = view[:, 1, :].copy()
    a10 = view[:, 2, :]
    view[:, 1, :] = c * a01 + s * a10
    view[:, 2, :] = -s * a01 + c * a10


def apply_x(amps: np.ndarray, qubit: int) -> None:
    """Flip one qubit: swap amplitudes of every index pair differing in it."""
    n_low = 1 << qubit
    view = amps.reshape(-1, 2, n_low)
    view[:, :, :] = view[:, ::-1, :].copy()
