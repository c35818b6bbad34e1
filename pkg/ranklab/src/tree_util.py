"""Flatten named coefficient blocks into one vector and back.

Optimizers work on a single flat vector while results are reported per
block (`beta1`, `beta2`, `beta_xz`, ...). A block tree is a dict (or a
dataclass) whose leaves are 1-d arrays or scalars.
"""

from dataclasses import fields, is_dataclass
from typing import Any, Dict, List, Tuple

import numpy as np

from ._typing import FloatArray


class TreeDef:
    """Structural definition of a block tree."""

    def __init__(self, typ, children):
        self.typ = typ
        self.children = children

    def __repr__(self):
        return f"TreeDef({self.typ}, {self.children})"

    @property
    def size(self) -> int:
        if self.typ == "leaf":
            return int(np.prod(self.children)) if self.children else 1
        return sum(c.size for _, c in self.children)


def _flatten(x: Any, out: List[FloatArray]) -> TreeDef:
    if isinstance(x, dict):
        return TreeDef(("dict", None), [(k, _flatten(x[k], out)) for k in x])

    if is_dataclass(x) and not isinstance(x, type):
        return TreeDef(
            ("dataclass", x.__class__),
            [(f.name, _flatten(getattr(x, f.name), out)) for f in fields(x)],
        )

    arr = np.asarray(x, dtype=np.float64)
    out.append(arr.ravel())
    return TreeDef("leaf", arr.shape)


def flatten_blocks(tree: Any) -> Tuple[FloatArray, TreeDef]:
    leaves: List[FloatArray] = []
    treedef = _flatten(tree, leaves)
    vec = np.concatenate(leaves) if leaves else np.zeros(0)
    return vec, treedef


def _unflatten(vec: FloatArray, pos: int, treedef: TreeDef) -> Tuple[Any, int]:
    typ = treedef.typ

    if typ == "leaf":
        shape = treedef.children
        n = int(np.prod(shape)) if shape else 1
        chunk = vec[pos:pos + n]
        value = float(chunk[0]) if shape == () else chunk.reshape(shape).copy()
        return value, pos + n

    kind, cls = typ
    values: Dict[str, Any] = {}
    for name, child in treedef.children:
        values[name], pos = _unflatten(vec, pos, child)

    if kind == "dict":
        return values, pos
    return cls(**values), pos


def unflatten_blocks(vec: FloatArray, treedef: TreeDef) -> Any:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.size != treedef.size:
        raise ValueError(f"expected {treedef.size} values, got {vec.size}")
    tree, _ = _unflatten(vec, 0, treedef)
    return tree


def block_slices(treedef: TreeDef) -> Dict[str, slice]:
    """Top-level block name -> slice of the flat vector."""
    if treedef.typ == "leaf":
        raise TypeError("a leaf has no named blocks")
    out, pos = {}, 0
    for name, child in treedef.children:
        out[name] = slice(pos, pos + child.size)
        pos += child.size
    return out
