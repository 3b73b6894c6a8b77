"""Core data model for user-interaction logs.

A log is an ordered sequence of interaction events. Each event names an
activity and may additionally record what the user did (an action), where
they did it (a target location inside the UI hierarchy), an input value,
a timestamp, and references to a user and a task. Everything except the
activity name is optional, and every component can carry arbitrary extra
attributes.

The UI hierarchy is a composition forest with four levels: systems hold
applications, applications hold UI groups and UI elements, and UI groups
nest other groups and elements. Node ids only need to be unique among
siblings, so the same element id may exist under different groups (think
of cell "A1" on two spreadsheet tabs). Events therefore record their
location as the full id chain (:class:`Target`), and
:func:`resolve_target` maps that chain to the most specific node.

All types are immutable after construction; operations return new values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import (
    CycleError,
    DanglingReferenceError,
    DuplicateIdError,
    LevelViolationError,
    NoTargetError,
    OutOfOrderTimestampError,
    UnknownParentError,
    UnresolvedReferenceError,
)

#: Maximum nesting depth of list/map attribute values.
MAX_NESTING_DEPTH = 32

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1

# An attribute value is plain data: text, a 64-bit integer, a float, a
# boolean, a UTC timestamp, an ordered list of values, or a map with text
# keys. Containers may nest up to MAX_NESTING_DEPTH levels.
AttributeValue = Union[str, int, float, bool, datetime, list, dict]
AttributeSet = dict


def normalize_timestamp(value: datetime) -> datetime:
    """Coerce a timestamp to UTC and truncate it to millisecond precision.

    Naive datetimes are taken to already denote UTC.
    """
    if not isinstance(value, datetime):
        raise TypeError(f"expected datetime, got {type(value).__name__}")
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    else:
        value = value.astimezone(timezone.utc)
    return value.replace(microsecond=value.microsecond - value.microsecond % 1000)


def normalize_value(value: AttributeValue, _depth: int = 0) -> AttributeValue:
    """Validate an attribute value and return its normalized copy.

    Timestamps are normalized to UTC milliseconds, tuples become lists,
    and arbitrary mappings become plain dicts. Raises TypeError for
    unsupported types and ValueError for out-of-range integers, empty map
    keys, or nesting deeper than MAX_NESTING_DEPTH.
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        if not _INT64_MIN <= value <= _INT64_MAX:
            raise ValueError(f"integer attribute out of 64-bit range: {value}")
        return value
    if isinstance(value, (str, float)):
        return value
    if isinstance(value, datetime):
        return normalize_timestamp(value)
    if isinstance(value, (list, tuple)):
        if _depth + 1 > MAX_NESTING_DEPTH:
            raise ValueError(f"attribute nesting deeper than {MAX_NESTING_DEPTH}")
        return [normalize_value(item, _depth + 1) for item in value]
    if isinstance(value, Mapping):
        if _depth + 1 > MAX_NESTING_DEPTH:
            raise ValueError(f"attribute nesting deeper than {MAX_NESTING_DEPTH}")
        out = {}
        for key, item in value.items():
            if not isinstance(key, str) or not key:
                raise ValueError(f"map keys must be non-empty text, got {key!r}")
            out[key] = normalize_value(item, _depth + 1)
        return out
    raise TypeError(f"unsupported attribute value type: {type(value).__name__}")


def normalize_attributes(attributes: Optional[Mapping]) -> dict:
    """Normalize an attribute set (key → value), rejecting empty keys."""
    if not attributes:
        return {}
    out = {}
    for key, value in attributes.items():
        if not isinstance(key, str) or not key:
            raise ValueError(f"attribute keys must be non-empty text, got {key!r}")
        out[key] = normalize_value(value)
    return out


def _check_id(node_id) -> None:
    if not isinstance(node_id, str) or not node_id:
        raise ValueError(f"id must be non-empty text, got {node_id!r}")


# ---------------------------------------------------------------------------
# UI hierarchy


class Level(enum.IntEnum):
    """Hierarchy levels, ordered from least to most specific."""

    SYSTEM = 1
    APPLICATION = 2
    GROUP = 3
    ELEMENT = 4


@dataclass(frozen=True)
class SystemNode:
    """Root of a composition tree: the machine or environment observed."""

    id: str
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        _check_id(self.id)
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


@dataclass(frozen=True)
class ApplicationNode:
    """A single program instance, optionally running on a system."""

    id: str
    system: Optional[SystemNode] = None
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        _check_id(self.id)
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


@dataclass(frozen=True)
class UIGroupNode:
    """A named part of an interface; groups nest inside groups or apps."""

    id: str
    parent: Union["UIGroupNode", ApplicationNode, None] = None
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        _check_id(self.id)
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


@dataclass(frozen=True)
class UIElementNode:
    """An atomic widget (button, text box, dropdown); always a leaf.

    Stateful widgets record their content in ``current_state``; for list
    and dropdown elements the convention is a list of selectable labels.
    """

    id: str
    parent: Union[UIGroupNode, ApplicationNode, None] = None
    current_state: Optional[AttributeValue] = None
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        _check_id(self.id)
        if self.current_state is not None:
            object.__setattr__(self, "current_state", normalize_value(self.current_state))
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


#: Any node a resolved target may point at.
TargetNode = Union[UIElementNode, UIGroupNode, ApplicationNode, SystemNode]

_LEVEL_BY_TYPE = {
    SystemNode: Level.SYSTEM,
    ApplicationNode: Level.APPLICATION,
    UIGroupNode: Level.GROUP,
    UIElementNode: Level.ELEMENT,
}


def level_of(node: TargetNode) -> Level:
    """Return the hierarchy level of a node."""
    try:
        return _LEVEL_BY_TYPE[type(node)]
    except KeyError:
        raise TypeError(f"not a hierarchy node: {type(node).__name__}") from None


def parent_of(node):
    """Return the composition parent of a node, or None at a root.

    Total: anything that is not a hierarchy node is treated as a root,
    so walks over defective hierarchies terminate and validation can
    report the breach instead of crashing.
    """
    if isinstance(node, ApplicationNode):
        return node.system
    if isinstance(node, (UIGroupNode, UIElementNode)):
        return node.parent
    return None


# ---------------------------------------------------------------------------
# Group path encoding (shared by the XES and tabular formats)


def join_group_path(ids: Iterable[str]) -> str:
    """Join group ids, outermost first, into a "/"-separated path.

    Literal slashes and backslashes inside ids are escaped so the joined
    form stays unambiguous.
    """
    return "/".join(i.replace("\\", "\\\\").replace("/", "\\/") for i in ids)


def split_group_path(text: str) -> tuple:
    """Inverse of :func:`join_group_path`; "" yields the empty path."""
    if not text:
        return ()
    parts = []
    current = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text) and text[i + 1] in "\\/":
            current.append(text[i + 1])
            i += 2
        elif ch == "/":
            parts.append("".join(current))
            current = []
            i += 1
        else:
            current.append(ch)
            i += 1
    parts.append("".join(current))
    return tuple(parts)


# ---------------------------------------------------------------------------
# Targets


@dataclass(frozen=True)
class Target:
    """The UI location recorded for one event, as an id chain.

    Each field holds what the recorder captured at that level; ``None``
    (or an empty group path) means the level was not recorded, in which
    case the chain is rooted at the highest recorded level below it. The
    one exception is a recorded system with no recorded application:
    composition only links applications to systems, so such a system is
    kept as a free-standing association next to the group/element chain.
    """

    element: Optional[str] = None
    groups: tuple = ()
    application: Optional[str] = None
    system: Optional[str] = None

    def __post_init__(self):
        groups = tuple(self.groups)
        for gid in groups:
            _check_id(gid)
        object.__setattr__(self, "groups", groups)
        for value in (self.element, self.application, self.system):
            if value is not None:
                _check_id(value)

    @property
    def is_empty(self) -> bool:
        return not (self.element or self.groups or self.application or self.system)

    @property
    def level(self) -> Optional[Level]:
        """Most specific recorded level, or None when nothing is recorded."""
        if self.element is not None:
            return Level.ELEMENT
        if self.groups:
            return Level.GROUP
        if self.application is not None:
            return Level.APPLICATION
        if self.system is not None:
            return Level.SYSTEM
        return None

    @property
    def most_specific_id(self) -> Optional[str]:
        if self.element is not None:
            return self.element
        if self.groups:
            return self.groups[-1]
        if self.application is not None:
            return self.application
        return self.system

    def _chain_scope(self):
        # (system, application) ids that scope the group/element chain.
        # A system without an application does not join the chain.
        if self.application is not None:
            return self.system, self.application
        return None, None


@dataclass(frozen=True)
class UIHierarchy:
    """The registered node sets of one log's UI composition forest."""

    systems: tuple = ()
    applications: tuple = ()
    ui_groups: tuple = ()
    ui_elements: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "systems", tuple(self.systems))
        object.__setattr__(self, "applications", tuple(self.applications))
        object.__setattr__(self, "ui_groups", tuple(self.ui_groups))
        object.__setattr__(self, "ui_elements", tuple(self.ui_elements))

    def all_nodes(self) -> Iterator[TargetNode]:
        yield from self.systems
        yield from self.applications
        yield from self.ui_groups
        yield from self.ui_elements

    @property
    def node_count(self) -> int:
        return (
            len(self.systems)
            + len(self.applications)
            + len(self.ui_groups)
            + len(self.ui_elements)
        )

    @cached_property
    def _member_ids(self) -> frozenset:
        return frozenset(id(n) for n in self.all_nodes())

    def _chain_key(self, node: TargetNode):
        """(system id, application id, group id path) above a node.

        Returns None when the parent chain is broken (cycles, foreign
        parents, level garbage); validation reports those separately.
        """
        system_id = None
        app_id = None
        groups = []
        current = parent_of(node)
        steps = 0
        cap = self.node_count + 1
        while current is not None:
            steps += 1
            if steps > cap:
                return None
            if isinstance(current, UIGroupNode):
                groups.append(current.id)
            elif isinstance(current, ApplicationNode):
                app_id = current.id
            elif isinstance(current, SystemNode):
                system_id = current.id
            else:
                return None
            current = parent_of(current)
        groups.reverse()
        return system_id, app_id, tuple(groups)

    @cached_property
    def _system_index(self) -> dict:
        index = {}
        for node in self.systems:
            index.setdefault(node.id, node)
        return index

    @cached_property
    def _application_index(self) -> dict:
        index = {}
        for node in self.applications:
            system_id = node.system.id if isinstance(node.system, SystemNode) else None
            index.setdefault((system_id, node.id), node)
        return index

    @cached_property
    def _group_index(self) -> dict:
        index = {}
        for node in self.ui_groups:
            key = self._chain_key(node)
            if key is not None:
                system_id, app_id, groups = key
                index.setdefault((system_id, app_id, groups + (node.id,)), node)
        return index

    @cached_property
    def _element_index(self) -> dict:
        index = {}
        for node in self.ui_elements:
            key = self._chain_key(node)
            if key is not None:
                index.setdefault(key + (node.id,), node)
        return index

    def __contains__(self, node) -> bool:
        return id(node) in self._member_ids

    def find_system(self, system_id: str) -> Optional[SystemNode]:
        return self._system_index.get(system_id)

    def find_application(self, app_id: str, system: Optional[str] = None):
        return self._application_index.get((system, app_id))

    def find_group(self, groups, application=None, system=None):
        if application is None:
            system = None
        return self._group_index.get((system, application, tuple(groups)))

    def find_element(self, element_id, groups=(), application=None, system=None):
        if application is None:
            system = None
        return self._element_index.get((system, application, tuple(groups), element_id))

    def check_target(self, target: Target) -> None:
        """Verify that every level the target records exists here."""
        system, application = target._chain_scope()
        if target.element is not None:
            if self.find_element(target.element, target.groups, application, system) is None:
                raise DanglingReferenceError(
                    f"element {target.element!r} not found under "
                    f"group path {join_group_path(target.groups)!r}",
                    node_id=target.element,
                )
        if target.groups:
            if self.find_group(target.groups, application, system) is None:
                raise DanglingReferenceError(
                    f"group path {join_group_path(target.groups)!r} not found",
                    node_id=target.groups[-1],
                )
        if target.application is not None:
            if self.find_application(target.application, target.system) is None:
                raise DanglingReferenceError(
                    f"application {target.application!r} not found",
                    node_id=target.application,
                )
        if target.system is not None:
            if self.find_system(target.system) is None:
                raise DanglingReferenceError(
                    f"system {target.system!r} not found", node_id=target.system
                )

    def resolve(self, target: Optional[Target]) -> TargetNode:
        """Return the node for the most specific recorded level."""
        if target is None or target.is_empty:
            raise NoTargetError("event has no UI hierarchy association")
        system, application = target._chain_scope()
        if target.element is not None:
            node = self.find_element(target.element, target.groups, application, system)
            kind, missing = "element", target.element
        elif target.groups:
            node = self.find_group(target.groups, application, system)
            kind, missing = "group", join_group_path(target.groups)
        elif target.application is not None:
            node = self.find_application(target.application, target.system)
            kind, missing = "application", target.application
        else:
            node = self.find_system(target.system)
            kind, missing = "system", target.system
        if node is None:
            raise DanglingReferenceError(f"{kind} {missing!r} not found", node_id=missing)
        return node

    def ancestors(self, node: TargetNode) -> list:
        """Parents of a member node, nearest first."""
        if node not in self:
            raise DanglingReferenceError(
                f"node {node.id!r} is not part of this hierarchy", node_id=node.id
            )
        chain = []
        current = parent_of(node)
        cap = self.node_count + 1
        while current is not None:
            chain.append(current)
            if len(chain) > cap:
                raise CycleError(f"parent chain from {node.id!r} does not terminate")
            current = parent_of(current)
        return chain

    def location_of(self, node: TargetNode) -> Target:
        """The Target chain that addresses a member node."""
        if node not in self:
            raise DanglingReferenceError(
                f"node {node.id!r} is not part of this hierarchy", node_id=node.id
            )
        ids = {Level.ELEMENT: None, Level.APPLICATION: None, Level.SYSTEM: None}
        groups = []
        current = node
        if isinstance(current, UIElementNode):
            ids[Level.ELEMENT] = current.id
            current = parent_of(current)
        while isinstance(current, UIGroupNode):
            groups.append(current.id)
            current = parent_of(current)
        if isinstance(current, ApplicationNode):
            ids[Level.APPLICATION] = current.id
            current = parent_of(current)
        if isinstance(current, SystemNode):
            ids[Level.SYSTEM] = current.id
        groups.reverse()
        return Target(
            element=ids[Level.ELEMENT],
            groups=tuple(groups),
            application=ids[Level.APPLICATION],
            system=ids[Level.SYSTEM],
        )


def resolve_target(event: "InteractionEvent", hierarchy: UIHierarchy) -> TargetNode:
    """Resolve an event's recorded location to its most specific node.

    The priority is element over group over application over system.
    Raises NoTargetError when the event records nothing at any level and
    DanglingReferenceError when the recorded chain is not in the
    hierarchy.
    """
    return hierarchy.resolve(event.target)


def ancestry(node: TargetNode, hierarchy: UIHierarchy) -> list:
    """Ids from a node up to its root, starting with the node itself."""
    return [node.id] + [n.id for n in hierarchy.ancestors(node)]


# ---------------------------------------------------------------------------
# Hierarchy construction


class _Pending:
    """Mutable node record used while a hierarchy is being assembled."""

    __slots__ = ("level", "id", "parent", "attributes", "current_state")

    def __init__(self, level, node_id, parent):
        self.level = level
        self.id = node_id
        self.parent = parent
        self.attributes = {}
        self.current_state = None


_ALLOWED_PARENT_LEVELS = {
    Level.SYSTEM: frozenset(),
    Level.APPLICATION: frozenset({Level.SYSTEM}),
    Level.GROUP: frozenset({Level.GROUP, Level.APPLICATION}),
    Level.ELEMENT: frozenset({Level.GROUP, Level.APPLICATION}),
}


class HierarchyBuilder:
    """Incremental, duplicate-aware constructor for a UIHierarchy.

    The ``system``/``application``/``group``/``element`` methods declare
    one node each and reject re-declarations of the same path with
    DuplicateIdError. ``chain`` instead reuses already-known nodes, which
    is what ingestion wants when every row repeats its context.

    Nodes are materialized once, in :meth:`build`; the handles returned
    in the meantime are only useful as ``parent`` arguments.
    """

    def __init__(self):
        self._systems = {}
        self._applications = {}
        self._groups = {}
        self._elements = {}
        self._known = set()

    # -- strict declarations -------------------------------------------------

    def system(self, node_id: str, attributes: Optional[Mapping] = None) -> _Pending:
        _check_id(node_id)
        if node_id in self._systems:
            raise DuplicateIdError(f"system {node_id!r} declared twice")
        return self._new_system(node_id, attributes)

    def application(self, node_id, *, system=None, attributes=None) -> _Pending:
        _check_id(node_id)
        system = self._check_parent(system, Level.APPLICATION)
        key = (system.id if system else None, node_id)
        if key in self._applications:
            raise DuplicateIdError(f"application {node_id!r} declared twice")
        return self._new_application(key, attributes)

    def group(self, node_id, *, parent=None, attributes=None) -> _Pending:
        _check_id(node_id)
        parent = self._check_parent(parent, Level.GROUP)
        key = (id(parent) if parent else None, node_id)
        if key in self._groups:
            raise DuplicateIdError(f"group {node_id!r} declared twice under one parent")
        return self._new_group(key, parent, attributes)

    def element(self, node_id, *, parent=None, current_state=None, attributes=None) -> _Pending:
        _check_id(node_id)
        parent = self._check_parent(parent, Level.ELEMENT)
        key = (id(parent) if parent else None, node_id)
        if key in self._elements:
            raise DuplicateIdError(f"element {node_id!r} declared twice under one parent")
        return self._new_element(key, parent, current_state, attributes)

    # -- reuse-friendly declaration ------------------------------------------

    def chain(
        self,
        *,
        system: Optional[str] = None,
        application: Optional[str] = None,
        groups: Iterable[str] = (),
        element: Optional[str] = None,
        current_state: Optional[AttributeValue] = None,
        system_attributes: Optional[Mapping] = None,
        application_attributes: Optional[Mapping] = None,
        group_attributes: Optional[Mapping] = None,
        element_attributes: Optional[Mapping] = None,
    ) -> Target:
        """Ensure the nodes for one recorded location exist; return it.

        Attribute mappings are merged into the nodes (later values win),
        ``group_attributes`` maps group id paths (tuples) to attribute
        sets, and a non-None ``current_state`` replaces the element's
        previous one. A system recorded without an application stays a
        free-standing root next to the group/element chain.
        """
        groups = tuple(groups)
        target = Target(element=element, groups=groups, application=application, system=system)
        system_rec = None
        if system is not None:
            system_rec = self._systems.get(system) or self._new_system(system, None)
            _merge(system_rec, system_attributes)
        parent = None
        if application is not None:
            app_key = (system, application)
            app_rec = self._applications.get(app_key)
            if app_rec is None:
                app_rec = self._new_application(app_key, None, system_rec)
            _merge(app_rec, application_attributes)
            parent = app_rec
        prefix = []
        for gid in groups:
            prefix.append(gid)
            key = (id(parent) if parent else None, gid)
            group_rec = self._groups.get(key) or self._new_group(key, parent, None)
            if group_attributes:
                _merge(group_rec, group_attributes.get(tuple(prefix)))
            parent = group_rec
        if element is not None:
            key = (id(parent) if parent else None, element)
            element_rec = self._elements.get(key) or self._new_element(key, parent, None, None)
            _merge(element_rec, element_attributes)
            if current_state is not None:
                element_rec.current_state = normalize_value(current_state)
        return target

    # -- internals -------------------------------------------------------------

    def _check_parent(self, parent, child_level):
        if parent is None:
            return None
        if not isinstance(parent, _Pending) or id(parent) not in self._known:
            raise UnknownParentError("parent must be a node handle from this builder")
        if parent.level not in _ALLOWED_PARENT_LEVELS[child_level]:
            raise LevelViolationError(
                f"a {child_level.name.lower()} cannot be parented to a {parent.level.name.lower()}"
            )
        return parent

    def _register(self, rec):
        self._known.add(id(rec))
        return rec

    def _new_system(self, node_id, attributes):
        rec = _Pending(Level.SYSTEM, node_id, None)
        _merge(rec, attributes)
        self._systems[node_id] = rec
        return self._register(rec)

    def _new_application(self, key, attributes, system_rec=None):
        rec = _Pending(Level.APPLICATION, key[1], system_rec)
        _merge(rec, attributes)
        self._applications[key] = rec
        return self._register(rec)

    def _new_group(self, key, parent, attributes):
        rec = _Pending(Level.GROUP, key[1], parent)
        _merge(rec, attributes)
        self._groups[key] = rec
        return self._register(rec)

    def _new_element(self, key, parent, current_state, attributes):
        rec = _Pending(Level.ELEMENT, key[1], parent)
        rec.current_state = current_state
        _merge(rec, attributes)
        self._elements[key] = rec
        return self._register(rec)

    def build(self) -> UIHierarchy:
        built = {}
        systems = []
        for rec in self._systems.values():
            node = SystemNode(rec.id, attributes=rec.attributes)
            built[id(rec)] = node
            systems.append(node)
        applications = []
        for rec in self._applications.values():
            parent = built[id(rec.parent)] if rec.parent is not None else None
            node = ApplicationNode(rec.id, system=parent, attributes=rec.attributes)
            built[id(rec)] = node
            applications.append(node)
        groups = []
        for rec in self._groups.values():
            parent = built[id(rec.parent)] if rec.parent is not None else None
            node = UIGroupNode(rec.id, parent=parent, attributes=rec.attributes)
            built[id(rec)] = node
            groups.append(node)
        elements = []
        for rec in self._elements.values():
            parent = built[id(rec.parent)] if rec.parent is not None else None
            node = UIElementNode(
                rec.id,
                parent=parent,
                current_state=rec.current_state,
                attributes=rec.attributes,
            )
            elements.append(node)
        return UIHierarchy(
            systems=tuple(systems),
            applications=tuple(applications),
            ui_groups=tuple(groups),
            ui_elements=tuple(elements),
        )


def _merge(rec: _Pending, attributes: Optional[Mapping]) -> None:
    if attributes:
        rec.attributes.update(normalize_attributes(attributes))


_LEVEL_NAMES = {
    "system": Level.SYSTEM,
    "application": Level.APPLICATION,
    "group": Level.GROUP,
    "element": Level.ELEMENT,
}


@dataclass(frozen=True)
class NodeDecl:
    """One node declaration for :func:`build_hierarchy`.

    ``parent`` names another declared node by id; when the same id occurs
    at more than one admissible level, ``parent_level`` disambiguates.
    Sibling-scoped duplicate ids cannot be expressed declaratively; use
    :class:`HierarchyBuilder` directly for those.
    """

    level: Union[Level, str]
    id: str
    parent: Optional[str] = None
    parent_level: Union[Level, str, None] = None
    current_state: Optional[AttributeValue] = None
    attributes: Optional[Mapping] = None

    def __post_init__(self):
        if isinstance(self.level, str):
            try:
                object.__setattr__(self, "level", _LEVEL_NAMES[self.level.lower()])
            except KeyError:
                raise ValueError(f"unknown level {self.level!r}") from None
        if isinstance(self.parent_level, str):
            try:
                object.__setattr__(
                    self, "parent_level", _LEVEL_NAMES[self.parent_level.lower()]
                )
            except KeyError:
                raise ValueError(f"unknown level {self.parent_level!r}") from None


def build_hierarchy(declarations: Iterable[NodeDecl]) -> UIHierarchy:
    """Construct a hierarchy from level-tagged node declarations.

    Raises UnknownParentError for unresolvable or ambiguous parents,
    LevelViolationError for composition-rule breaches, CycleError when
    parent references loop, and DuplicateIdError for re-declared nodes.
    """
    decls = list(declarations)
    by_id = {}
    for decl in decls:
        by_id.setdefault(decl.id, []).append(decl)

    resolved = {}
    for decl in decls:
        if decl.parent is None:
            resolved[id(decl)] = None
            continue
        allowed = _ALLOWED_PARENT_LEVELS[decl.level]
        if not allowed:
            raise LevelViolationError(f"a {decl.level.name.lower()} cannot have a parent")
        if decl.parent_level is not None and decl.parent_level not in allowed:
            raise LevelViolationError(
                f"a {decl.level.name.lower()} cannot be parented to a "
                f"{decl.parent_level.name.lower()}"
            )
        wanted = {decl.parent_level} if decl.parent_level is not None else allowed
        candidates = [d for d in by_id.get(decl.parent, []) if d.level in wanted]
        if not candidates:
            raise UnknownParentError(
                f"{decl.level.name.lower()} {decl.id!r}: parent {decl.parent!r} not declared"
            )
        if len(candidates) > 1:
            raise UnknownParentError(
                f"{decl.level.name.lower()} {decl.id!r}: parent {decl.parent!r} is "
                "ambiguous; set parent_level"
            )
        resolved[id(decl)] = candidates[0]

    order = []
    state = {}  # id(decl) -> 1 while on stack, 2 when done
    for decl in decls:
        if state.get(id(decl)):
            continue
        stack = [decl]
        while stack:
            current = stack[-1]
            if state.get(id(current)) == 2:
                stack.pop()
                continue
            parent = resolved[id(current)]
            if parent is None or state.get(id(parent)) == 2:
                state[id(current)] = 2
                order.append(current)
                stack.pop()
            elif state.get(id(parent)) == 1:
                raise CycleError(
                    f"parent references loop through {current.id!r} and {parent.id!r}"
                )
            else:
                state[id(current)] = 1
                state[id(parent)] = max(state.get(id(parent), 0), 1)
                stack.append(parent)
        state[id(decl)] = 2

    builder = HierarchyBuilder()
    handles = {}
    adders = {
        Level.SYSTEM: lambda d, p: builder.system(d.id, attributes=d.attributes),
        Level.APPLICATION: lambda d, p: builder.application(
            d.id, system=p, attributes=d.attributes
        ),
        Level.GROUP: lambda d, p: builder.group(d.id, parent=p, attributes=d.attributes),
        Level.ELEMENT: lambda d, p: builder.element(
            d.id, parent=p, current_state=d.current_state, attributes=d.attributes
        ),
    }
    for decl in order:
        parent_decl = resolved[id(decl)]
        parent = handles[id(parent_decl)] if parent_decl is not None else None
        handles[id(decl)] = adders[decl.level](decl, parent)
    return builder.build()


# ---------------------------------------------------------------------------
# Context components and events


@dataclass(frozen=True)
class UserRef:
    """The entity (human or bot) that initiated interactions."""

    id: str
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        _check_id(self.id)
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


@dataclass(frozen=True)
class TaskRef:
    """A higher-level task or routine the interactions belong to."""

    id: str
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        _check_id(self.id)
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


@dataclass(frozen=True)
class Action:
    """What the user did. The type domain is open ("left click", "input",
    "KEY_F5", ...); the literal "none" is a real value used by abstracted
    events and is distinct from an absent action."""

    action_type: str
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.action_type, str) or not self.action_type:
            raise ValueError("action_type must be non-empty text")
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


@dataclass(frozen=True)
class InteractionEvent:
    """One activity instance.

    Only the activity name is mandatory, and even that is checked by
    validation rather than at construction so that defective logs can be
    represented and reported. Without a timestamp an event is ordered by
    its position in the log. ``user`` and ``task`` are ids into the
    owning log's registries.
    """

    activity_name: str
    action: Optional[Action] = None
    target: Optional[Target] = None
    input_value: Optional[AttributeValue] = None
    timestamp: Optional[datetime] = None
    user: Optional[str] = None
    task: Optional[str] = None
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.activity_name, str):
            raise TypeError("activity_name must be text")
        if self.timestamp is not None:
            object.__setattr__(self, "timestamp", normalize_timestamp(self.timestamp))
        if self.input_value is not None:
            object.__setattr__(self, "input_value", normalize_value(self.input_value))
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


@dataclass(frozen=True)
class Trace:
    """One case of a partitioned log: an ordered group of event indices."""

    id: str
    events: tuple = ()
    attributes: AttributeSet = field(default_factory=dict)

    def __post_init__(self):
        _check_id(self.id)
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))


@dataclass(frozen=True)
class UILog:
    """An ordered event sequence plus its hierarchy and registries.

    The log itself has no case notion; ``traces``, when present, is a
    partition of event indices produced by segmentation (or read from an
    interchange document) and must cover every event exactly once.
    """

    events: tuple = ()
    hierarchy: UIHierarchy = field(default_factory=UIHierarchy)
    users: tuple = ()
    tasks: tuple = ()
    attributes: AttributeSet = field(default_factory=dict)
    traces: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "attributes", normalize_attributes(self.attributes))
        if self.traces is not None:
            object.__setattr__(self, "traces", tuple(self.traces))

    @property
    def is_traced(self) -> bool:
        return self.traces is not None

    def trace_events(self, trace: Trace) -> tuple:
        return tuple(self.events[i] for i in trace.events)

    def user_ids(self) -> frozenset:
        return frozenset(u.id for u in self.users)

    def task_ids(self) -> frozenset:
        return frozenset(t.id for t in self.tasks)


def append_event(log: UILog, event: InteractionEvent, *, strict: bool = False) -> UILog:
    """Return a new log with the event appended.

    The event's target chain and user/task ids must resolve inside the
    log (UnresolvedReferenceError otherwise). With ``strict`` the event
    may not be older than the last timestamped event
    (OutOfOrderTimestampError). Traced logs cannot be appended to; call
    :func:`uilog.transform.flatten` first.
    """
    if log.traces is not None:
        raise ValueError("cannot append to a traced log; flatten it first")
    if event.target is not None and not event.target.is_empty:
        try:
            log.hierarchy.check_target(event.target)
        except DanglingReferenceError as exc:
            raise UnresolvedReferenceError(f"event target does not resolve: {exc}") from exc
    if event.user is not None and event.user not in log.user_ids():
        raise UnresolvedReferenceError(f"unknown user {event.user!r}")
    if event.task is not None and event.task not in log.task_ids():
        raise UnresolvedReferenceError(f"unknown task {event.task!r}")
    if strict and event.timestamp is not None:
        last = next(
            (e.timestamp for e in reversed(log.events) if e.timestamp is not None), None
        )
        if last is not None and event.timestamp < last:
            raise OutOfOrderTimestampError(
                f"event at {event.timestamp.isoformat()} is older than {last.isoformat()}"
            )
    return replace(log, events=log.events + (event,))


# ---------------------------------------------------------------------------
# Activity naming


@dataclass(frozen=True)
class NamingScheme:
    """How synthesized activity names are formed from action and target."""

    separator: str = " "
    rewrites: Mapping = field(default_factory=dict)


DEFAULT_NAMING = NamingScheme()

#: Common click abbreviations for compact activity names.
ABBREVIATED_NAMING = NamingScheme(
    rewrites={"left click": "click", "right click": "rclick"}
)


def make_activity_name(
    action_type: Optional[str], target_id: str, naming: NamingScheme = DEFAULT_NAMING
) -> str:
    """Concatenate (rewritten) action type and target id into a name.

    An empty or None action type is treated as the literal "none".
    Deterministic: equal inputs always produce the same name.
    """
    _check_id(target_id)
    action = action_type or "none"
    action = naming.rewrites.get(action, action)
    return f"{action}{naming.separator}{target_id}"
