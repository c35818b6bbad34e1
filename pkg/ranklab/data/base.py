import math

import numpy as np


# ---------------------------------------
# Utility to check all arrays have same length
def _check_lengths(arrays):
    if not arrays:
        raise ValueError("at least one array is required")
    n = len(arrays[0])
    for a in arrays:
        if len(a) != n:
            raise ValueError("All input arrays must have the same length")
    return n


# ---------------------------------------
class ArrayLoader:
    """Fixed-size, ordered partitions of aligned arrays.

    Batches depend only on `batch_size`, never on the worker count, so a
    reduction over `loader` in index order is reproducible bit for bit.
    """

    def __init__(self, *arrays, batch_size: int):
        self.arrays = [np.asarray(a) for a in arrays]
        self.batch_size = int(batch_size)
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

        # ---- validate ----
        self.num_samples = _check_lengths(self.arrays)
        self.num_batches = math.ceil(self.num_samples / self.batch_size)

    # -------------------------------------------------
    def __len__(self):
        return self.num_batches

    # -------------------------------------------------
    def bounds(self, batch_idx: int):
        if batch_idx < 0 or batch_idx >= self.num_batches:
            raise IndexError("batch index out of range")
        start = batch_idx * self.batch_size
        return start, min(start + self.batch_size, self.num_samples)

    def __getitem__(self, batch_idx: int):
        start, end = self.bounds(batch_idx)
        batch = [a[start:end] for a in self.arrays]
        return batch[0] if len(batch) == 1 else batch

    def __iter__(self):
        for i in range(self.num_batches):
            yield self[i]
