"""Receiver lists that can be sealed before a long running job starts."""

from collections.abc import MutableSequence
from typing import Any, Iterable, Iterator, List, Optional  # noqa

__all__ = ('FrozenList', 'Signal')


class FrozenList(MutableSequence):
    """A list that refuses changes once freeze() was called."""

    __slots__ = ('_frozen', '_items')

    def __init__(self, items: Optional[Iterable[Any]]=None) -> None:
        self._frozen = False
        self._items = list(items or ())  # type: List[Any]

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> None:
        self._frozen = True

    def _writable(self) -> List[Any]:
        if self._frozen:
            raise RuntimeError("Cannot modify frozen list.")
        return self._items

    def __getitem__(self, index: Any) -> Any:
        return self._items[index]

    def __setitem__(self, index: Any, value: Any) -> None:
        self._writable()[index] = value

    def __delitem__(self, index: Any) -> None:
        del self._writable()[index]

    def insert(self, pos: int, item: Any) -> None:
        self._writable().insert(pos, item)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Any]:
        return iter(self._items)

    def __eq__(self, other: object) -> bool:
        return list(self) == other

    def __repr__(self) -> str:
        return '<FrozenList(frozen={}, {!r})>'.format(self._frozen,
                                                      self._items)


class Signal(FrozenList):
    """Callbacks fired at fixed points of a job, e.g. after every epoch.

    Receivers are added with any list method and called by send() in
    registration order.  send() refuses to run until the owner froze the
    signal, so the receiver set is fixed for the whole job.
    """

    __slots__ = ('_owner',)

    def __init__(self, owner: Any) -> None:
        super().__init__()
        self._owner = owner

    @property
    def owner(self) -> Any:
        return self._owner

    def __repr__(self) -> str:
        return '<Signal owner={}, frozen={}, {!r}>'.format(
            self._owner, self.frozen, list(self))

    def send(self, *args: Any, **kwargs: Any) -> None:
        if not self.frozen:
            raise RuntimeError("Cannot send non-frozen signal.")
        for receiver in self:
            receiver(*args, **kwargs)
