"""Task catalog: the set of entries every query is ranked over.

Catalogs are immutable after construction and therefore safe to share
across concurrent queries; reloading a file yields a new catalog value.

File format (UTF-8, one record per line, ``#`` lines ignored)::

    id<TAB>name<TAB>help_text<TAB>description<TAB>category

Trailing empty fields may be omitted. Tabs and newlines are forbidden
inside fields.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path

from .errors import DuplicateTaskId, EmptyCatalogError, ParseError, UnknownTaskId

_FIELDS = ("id", "name", "help_text", "description", "category")


@dataclass(frozen=True)
class Task:
    """One catalog entry. ``id`` is the stable handle; ``name`` is what users see."""

    id: str
    name: str
    help_text: str = ""
    description: str = ""
    category: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("task id must be non-empty")
        if not self.name:
            raise ValueError(f"task {self.id!r}: name must be non-empty")
        for field in _FIELDS:
            value = getattr(self, field)
            if "\t" in value or "\n" in value:
                raise ValueError(f"task {self.id!r}: field {field!r} contains a tab or newline")


class TaskCatalog:
    """Ordered, immutable collection of tasks with id lookup.

    Catalog order is significant: it is the deterministic tie-break used by
    the ranking stage.
    """

    def __init__(self, tasks: Iterable[Task]):
        self._tasks = tuple(tasks)
        if not self._tasks:
            raise EmptyCatalogError("catalog must contain at least one task")
        index: dict[str, int] = {}
        for pos, task in enumerate(self._tasks):
            if task.id in index:
                raise DuplicateTaskId(task.id)
            index[task.id] = pos
        self._index = index

    @property
    def tasks(self) -> tuple[Task, ...]:
        return self._tasks

    def __len__(self) -> int:
        return len(self._tasks)

    def __iter__(self) -> Iterator[Task]:
        return iter(self._tasks)

    def __contains__(self, task_id: str) -> bool:
        return task_id in self._index

    def ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self._tasks)

    def get(self, task_id: str) -> Task:
        """Return the task with ``task_id`` or raise UnknownTaskId."""
        try:
            return self._tasks[self._index[task_id]]
        except KeyError:
            raise UnknownTaskId(task_id) from None

    def position(self, task_id: str) -> int:
        """0-based catalog position of ``task_id`` (the tie-break key)."""
        try:
            return self._index[task_id]
        except KeyError:
            raise UnknownTaskId(task_id) from None

    def extended(self, new_tasks: Iterable[Task]) -> "TaskCatalog":
        """New catalog with ``new_tasks`` appended; rejects id collisions."""
        return TaskCatalog(self._tasks + tuple(new_tasks))


def concat_text(task: Task) -> str:
    """Name, help text, and description joined by single spaces, empties skipped.

    This is the text that gets embedded for the semantic signal.
    """
    return " ".join(part for part in (task.name, task.help_text, task.description) if part)


def load_catalog(path: str | Path) -> TaskCatalog:
    """Parse a catalog file; see the module docstring for the format."""
    path = Path(path)
    tasks: list[Task] = []
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ParseError(path, line_no, "expected at least id and name fields")
            if len(parts) > len(_FIELDS):
                raise ParseError(path, line_no, f"expected at most {len(_FIELDS)} fields, got {len(parts)}")
            parts += [""] * (len(_FIELDS) - len(parts))
            try:
                tasks.append(Task(*parts))
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
    if not tasks:
        raise EmptyCatalogError(f"no task records in {path}")
    return TaskCatalog(tasks)


def save_catalog(catalog: TaskCatalog, path: str | Path) -> None:
    """Write ``catalog`` in the load_catalog format (round-trips exactly)."""
    path = Path(path)
    lines = ["# " + "\t".join(_FIELDS)]
    for task in catalog:
        fields = [task.id, task.name, task.help_text, task.description, task.category]
        while len(fields) > 2 and not fields[-1]:
            fields.pop()
        lines.append("\t".join(fields))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
