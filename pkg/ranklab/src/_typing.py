from __future__ import annotations
from typing import Any, Protocol, TypeAlias, runtime_checkable

import numpy as np
import numpy.typing as npt

FloatArray: TypeAlias = npt.NDArray[np.float64]
IntArray: TypeAlias = npt.NDArray[np.int64]
BoolArray: TypeAlias = npt.NDArray[np.bool_]


@runtime_checkable
class ModelFit(Protocol):
    """Anything that can score slots of a `SlotTable`.

    Implemented by the pooled fit (`ranklab.estimate.PooledFit`) and the
    per-cluster fit (`ranklab.cluster.ClusteredFit`); counterfactual and
    frontier code only talks to this protocol.
    """

    def slot_utilities(self, table: Any, mode: str = "expected") -> FloatArray: ...

    def euro_utilities(self, table: Any, utilities: FloatArray) -> FloatArray: ...

    def click_index(self, table: Any, positions: IntArray, utilities: FloatArray) -> FloatArray: ...
