"""
Disjoint-set (union-find) over hashable elements.

Used for component tracking in the moat engine, actively connected classes,
the gain functional's per-interval merging, and demand grouping in the oracle.
"""
from collections import defaultdict
from typing import Dict, Generic, Hashable, Iterable, Iterator, List, TypeVar

T = TypeVar("T", bound=Hashable)


class DisjointSet(Generic[T]):
    """
    Union-find with path halving and union by size.

    Example:
        >>> ds = DisjointSet([1, 2, 3])
        >>> ds.union(1, 3)
        True
        >>> ds.connected(1, 3), ds.connected(1, 2)
        (True, False)
    """

    def __init__(self, elements: Iterable[T] = ()) -> None:
        self._parent: Dict[T, T] = {}
        self._size: Dict[T, int] = {}
        for element in elements:
            self.add(element)

    def __contains__(self, element: object) -> bool:
        return element in self._parent

    def __len__(self) -> int:
        return len(self._parent)

    def add(self, element: T) -> None:
        if element not in self._parent:
            self._parent[element] = element
            self._size[element] = 1

    def find(self, element: T) -> T:
        parent = self._parent
        while parent[element] != element:
            parent[element] = parent[parent[element]]
            element = parent[element]
        return element

    def union(self, a: T, b: T) -> bool:
        """Merge the sets of ``a`` and ``b``; returns False if already merged."""
        root_a = self.find(a)
        root_b = self.find(b)
        if root_a == root_b:
            return False
        if self._size[root_a] < self._size[root_b]:
            root_a, root_b = root_b, root_a
        self._parent[root_b] = root_a
        self._size[root_a] += self._size[root_b]
        return True

    def connected(self, a: T, b: T) -> bool:
        return self.find(a) == self.find(b)

    def groups(self) -> List[List[T]]:
        """All sets, each in insertion order, listed by first inserted member."""
        by_root: Dict[T, List[T]] = defaultdict(list)
        for element in self._parent:
            by_root[self.find(element)].append(element)
        return list(by_root.values())

    def __iter__(self) -> Iterator[T]:
        return iter(self._parent)

    def copy(self) -> "DisjointSet[T]":
        clone: DisjointSet[T] = DisjointSet()
        clone._parent = dict(self._parent)
        clone._size = dict(self._size)
        return clone
