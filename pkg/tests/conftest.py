"""Shared test configuration.

BLAS threading is pinned to one thread before numpy loads: the tensor
splits here are small, and thread synchronization costs more than it
saves (2-4x slowdowns were measured with the default pool).
"""

import os

for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")
