"""XES serialization of UI logs.

The writer produces an IEEE 1849-2016 style document (log/trace/event
with typed attributes) in which the activity name and timestamp travel
in the standard concept/time extensions and everything else travels in
event-level attributes of the "uilog" extension. The reader is the exact
inverse: it rebuilds hierarchy nodes on demand from those attributes.

XES event attributes are flat, so the group nesting of a target is
encoded in ``uilog:ui-group-path`` as a "/"-separated id path, outermost
group first (a literal "/" in an id is escaped as "\\/"). Hierarchy
context is repeated on every event; that redundancy is the price of the
flat format and is accepted deliberately.

Logs without traces are wrapped in a single artificial trace, marked by
the log-level boolean ``uilog:untraced`` so the reader can undo it.
"""

from __future__ import annotations

import warnings
from datetime import datetime, timezone
from typing import Mapping, Optional
from xml.etree import ElementTree as ET

from .errors import (
    InvalidLogError,
    MalformedDocumentError,
    MissingConceptNameError,
    UnserializableValueError,
)
from .model import (
    Action,
    HierarchyBuilder,
    InteractionEvent,
    MAX_NESTING_DEPTH,
    TaskRef,
    Trace,
    UILog,
    UserRef,
    join_group_path,
    split_group_path,
)
from .validation import validate

CONCEPT_URI = "http://www.xes-standard.org/concept.xesext"
TIME_URI = "http://www.xes-standard.org/time.xesext"
UILOG_URI = "http://www.xes-standard.org/uilog.xesext"

KEY_CONCEPT_NAME = "concept:name"
KEY_TIMESTAMP = "time:timestamp"

KEY_ACTION_TYPE = "uilog:action-type"
KEY_INPUT_VALUE = "uilog:input-value"
KEY_UI_ELEMENT = "uilog:ui-element"
KEY_UI_ELEMENT_STATE = "uilog:ui-element-state"
KEY_UI_GROUP_PATH = "uilog:ui-group-path"
KEY_APPLICATION = "uilog:application"
KEY_SYSTEM = "uilog:system"
KEY_USER = "uilog:user"
KEY_TASK = "uilog:task"
KEY_UNTRACED = "uilog:untraced"

#: The event-level vocabulary of the uilog extension, in canonical order.
EXTENSION_KEYS = (
    KEY_ACTION_TYPE,
    KEY_INPUT_VALUE,
    KEY_UI_ELEMENT,
    KEY_UI_ELEMENT_STATE,
    KEY_UI_GROUP_PATH,
    KEY_APPLICATION,
    KEY_SYSTEM,
    KEY_USER,
    KEY_TASK,
)

# Canonical extension declaration. Keys that admit more than one XES type
# (input values may be plain strings or maps; element states are often
# lists) are declared once per admitted type.
_EXTENSION_DEFINITION = """<?xml version="1.0" encoding="UTF-8"?>
<xesextension name="UILog" prefix="uilog" uri="http://www.xes-standard.org/uilog.xesext">
  <log>
    <boolean key="untraced"/>
  </log>
  <trace/>
  <event>
    <string key="action-type"/>
    <string key="input-value"/>
    <container key="input-value"/>
    <string key="ui-element"/>
    <string key="ui-element-state"/>
    <list key="ui-element-state"/>
    <string key="ui-group-path"/>
    <string key="application"/>
    <string key="system"/>
    <string key="user"/>
    <string key="task"/>
  </event>
</xesextension>
"""


def emit_extension_definition() -> str:
    """The uilog XES extension declaration; byte-stable across runs."""
    return _EXTENSION_DEFINITION


# ---------------------------------------------------------------------------
# Writing


def _format_timestamp(value: datetime) -> str:
    value = value.astimezone(timezone.utc)
    return (
        f"{value.year:04d}-{value.month:02d}-{value.day:02d}"
        f"T{value.hour:02d}:{value.minute:02d}:{value.second:02d}"
        f".{value.microsecond // 1000:03d}+00:00"
    )


def _value_element(key: str, value, depth: int = 0) -> ET.Element:
    if depth > MAX_NESTING_DEPTH:
        raise UnserializableValueError(
            f"attribute {key!r} nests deeper than {MAX_NESTING_DEPTH}"
        )
    if isinstance(value, bool):
        return ET.Element("boolean", key=key, value="true" if value else "false")
    if isinstance(value, int):
        return ET.Element("int", key=key, value=str(value))
    if isinstance(value, float):
        return ET.Element("float", key=key, value=repr(value))
    if isinstance(value, str):
        return ET.Element("string", key=key, value=value)
    if isinstance(value, datetime):
        return ET.Element("date", key=key, value=_format_timestamp(value))
    if isinstance(value, list):
        element = ET.Element("list", key=key)
        values = ET.SubElement(element, "values")
        for position, item in enumerate(value):
            values.append(_value_element(str(position), item, depth + 1))
        return element
    if isinstance(value, Mapping):
        element = ET.Element("container", key=key)
        for child_key, item in value.items():
            element.append(_value_element(child_key, item, depth + 1))
        return element
    raise UnserializableValueError(
        f"attribute {key!r} has unsupported type {type(value).__name__}"
    )


def _append_attributes(parent: ET.Element, attributes: Mapping) -> None:
    for key, value in attributes.items():
        parent.append(_value_element(key, value))


def _event_element(event: InteractionEvent, log: UILog, registries) -> ET.Element:
    users, tasks = registries
    out = ET.Element("event")
    out.append(ET.Element("string", key=KEY_CONCEPT_NAME, value=event.activity_name))
    if event.timestamp is not None:
        out.append(
            ET.Element("date", key=KEY_TIMESTAMP, value=_format_timestamp(event.timestamp))
        )
    if event.action is not None:
        action = ET.Element("string", key=KEY_ACTION_TYPE, value=event.action.action_type)
        _append_attributes(action, event.action.attributes)
        out.append(action)
    if event.input_value is not None:
        out.append(_value_element(KEY_INPUT_VALUE, event.input_value))
    target = event.target
    if target is not None and not target.is_empty:
        scope_system, scope_application = target._chain_scope()
        if target.element is not None:
            node = log.hierarchy.find_element(
                target.element, target.groups, scope_application, scope_system
            )
            element = ET.Element("string", key=KEY_UI_ELEMENT, value=target.element)
            if node is not None:
                _append_attributes(element, node.attributes)
            out.append(element)
            if node is not None and node.current_state is not None:
                out.append(_value_element(KEY_UI_ELEMENT_STATE, node.current_state))
        if target.groups:
            path = ET.Element(
                "string", key=KEY_UI_GROUP_PATH, value=join_group_path(target.groups)
            )
            for index in range(len(target.groups)):
                prefix = target.groups[: index + 1]
                group = log.hierarchy.find_group(prefix, scope_application, scope_system)
                if group is not None and group.attributes:
                    nested = ET.Element("container", key=join_group_path(prefix))
                    _append_attributes(nested, group.attributes)
                    path.append(nested)
            out.append(path)
        if target.application is not None:
            application = ET.Element(
                "string", key=KEY_APPLICATION, value=target.application
            )
            node = log.hierarchy.find_application(target.application, target.system)
            if node is not None:
                _append_attributes(application, node.attributes)
            out.append(application)
        if target.system is not None:
            system = ET.Element("string", key=KEY_SYSTEM, value=target.system)
            node = log.hierarchy.find_system(target.system)
            if node is not None:
                _append_attributes(system, node.attributes)
            out.append(system)
    if event.user is not None:
        user = ET.Element("string", key=KEY_USER, value=event.user)
        ref = users.get(event.user)
        if ref is not None:
            _append_attributes(user, ref.attributes)
        out.append(user)
    if event.task is not None:
        task = ET.Element("string", key=KEY_TASK, value=event.task)
        ref = tasks.get(event.task)
        if ref is not None:
            _append_attributes(task, ref.attributes)
        out.append(task)
    _append_attributes(out, event.attributes)
    return out


def write_xes(log: UILog, *, check: bool = True) -> str:
    """Serialize a log to XES XML text.

    With ``check`` (the default) the log must validate cleanly;
    InvalidLogError carries the report otherwise. Output is deterministic
    for a given log: fixed key order, fixed formatting.
    """
    if check:
        report = validate(log)
        if not report.ok:
            raise InvalidLogError(
                f"log failed validation with {len(report.violations)} violation(s)",
                report=report,
            )
    root = ET.Element("log", {"xes.version": "1849-2016", "xes.features": "nested-attributes"})
    for name, prefix, uri in (
        ("Concept", "concept", CONCEPT_URI),
        ("Time", "time", TIME_URI),
        ("UILog", "uilog", UILOG_URI),
    ):
        root.append(ET.Element("extension", name=name, prefix=prefix, uri=uri))
    _append_attributes(root, log.attributes)

    registries = (
        {u.id: u for u in log.users},
        {t.id: t for t in log.tasks},
    )
    if log.traces is None:
        if log.events:
            root.append(ET.Element("boolean", key=KEY_UNTRACED, value="true"))
            trace = ET.SubElement(root, "trace")
            trace.append(ET.Element("string", key=KEY_CONCEPT_NAME, value="all-events"))
            for event in log.events:
                trace.append(_event_element(event, log, registries))
    else:
        for stored in log.traces:
            trace = ET.SubElement(root, "trace")
            trace.append(ET.Element("string", key=KEY_CONCEPT_NAME, value=stored.id))
            _append_attributes(trace, stored.attributes)
            for index in stored.events:
                trace.append(_event_element(log.events[index], log, registries))

    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


# ---------------------------------------------------------------------------
# Reading


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_timestamp(text: str, where: str) -> datetime:
    raw = text.strip()
    normalized = raw.replace("Z", "+00:00").replace("z", "+00:00")
    # Pre-3.11 fromisoformat only accepts up to microsecond fractions.
    if "." in normalized:
        head, _, rest = normalized.partition(".")
        digits = ""
        index = 0
        while index < len(rest) and rest[index].isdigit():
            digits += rest[index]
            index += 1
        tail = rest[index:]
        if len(digits) > 6:
            digits = digits[:6]
        normalized = f"{head}.{digits.ljust(6, '0')}{tail}" if digits else head + tail
    try:
        value = datetime.fromisoformat(normalized)
    except ValueError as exc:
        raise MalformedDocumentError(f"{where}: bad timestamp {raw!r}") from exc
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    truncated = value.replace(microsecond=value.microsecond - value.microsecond % 1000)
    if truncated != value.astimezone(timezone.utc):
        warnings.warn(
            f"{where}: timestamp {raw!r} truncated to millisecond precision",
            stacklevel=2,
        )
    return truncated


def _parse_attribute(element: ET.Element, where: str):
    """Return (key, value, nested) for one attribute element.

    ``nested`` holds the parsed child attributes of elementary values
    (XES allows attributes on attributes); for lists and containers the
    children are the value itself and ``nested`` is empty.
    """
    tag = _local_name(element.tag)
    key = element.get("key")
    if key is None:
        raise MalformedDocumentError(f"{where}: attribute element without key")
    if tag == "list":
        values = [child for child in element if _local_name(child.tag) == "values"]
        children = values[0] if values else element
        items = [
            _parse_attribute(child, where)[1]
            for child in children
            if _local_name(child.tag) != "values"
        ]
        return key, items, {}
    if tag == "container":
        mapping = {}
        for child in element:
            child_key, child_value, _ = _parse_attribute(child, where)
            if child_key in mapping:
                warnings.warn(f"{where}: duplicate map key {child_key!r}; keeping the last")
            mapping[child_key] = child_value
        return key, mapping, {}
    raw = element.get("value")
    if raw is None:
        raise MalformedDocumentError(f"{where}: {tag} attribute {key!r} without value")
    if tag == "string" or tag == "id":
        value = raw
    elif tag == "int":
        value = int(raw)
    elif tag == "float":
        value = float(raw)
    elif tag == "boolean":
        value = raw.strip().lower() == "true"
    elif tag == "date":
        value = _parse_timestamp(raw, where)
    else:
        raise MalformedDocumentError(f"{where}: unknown attribute type {tag!r}")
    nested = {}
    for child in element:
        child_key, child_value, _ = _parse_attribute(child, where)
        nested[child_key] = child_value
    return key, value, nested


def _read_event(
    element: ET.Element,
    where: str,
    builder: HierarchyBuilder,
    users: dict,
    tasks: dict,
    aliases: Mapping,
    lenient_names: bool,
) -> InteractionEvent:
    fields = {}
    nested_by_key = {}
    extras = {}
    for child in element:
        key, value, nested = _parse_attribute(child, where)
        key = aliases.get(key, key)
        if key in _EVENT_FIELD_KEYS:
            fields[key] = value
            nested_by_key[key] = nested
        else:
            extras[key] = value

    name = fields.get(KEY_CONCEPT_NAME)
    if name is None:
        if not lenient_names:
            raise MissingConceptNameError(f"{where}: event has no {KEY_CONCEPT_NAME}")
        name = ""
    if not isinstance(name, str):
        name = str(name)

    timestamp = fields.get(KEY_TIMESTAMP)
    if timestamp is not None and not isinstance(timestamp, datetime):
        timestamp = _parse_timestamp(str(timestamp), where)

    action = None
    if KEY_ACTION_TYPE in fields:
        action = Action(
            str(fields[KEY_ACTION_TYPE]), attributes=nested_by_key.get(KEY_ACTION_TYPE, {})
        )

    element_id = fields.get(KEY_UI_ELEMENT)
    groups = split_group_path(str(fields[KEY_UI_GROUP_PATH])) if KEY_UI_GROUP_PATH in fields else ()
    application = fields.get(KEY_APPLICATION)
    system = fields.get(KEY_SYSTEM)
    state = fields.get(KEY_UI_ELEMENT_STATE)
    if state is not None and element_id is None:
        warnings.warn(f"{where}: {KEY_UI_ELEMENT_STATE} without {KEY_UI_ELEMENT}; ignored")
        state = None

    target = None
    if element_id is not None or groups or application is not None or system is not None:
        group_attributes = {
            split_group_path(k): v
            for k, v in nested_by_key.get(KEY_UI_GROUP_PATH, {}).items()
            if isinstance(v, Mapping)
        }
        target = builder.chain(
            system=str(system) if system is not None else None,
            application=str(application) if application is not None else None,
            groups=groups,
            element=str(element_id) if element_id is not None else None,
            current_state=state,
            system_attributes=nested_by_key.get(KEY_SYSTEM),
            application_attributes=nested_by_key.get(KEY_APPLICATION),
            group_attributes=group_attributes,
            element_attributes=nested_by_key.get(KEY_UI_ELEMENT),
        )

    user = fields.get(KEY_USER)
    if user is not None:
        user = str(user)
        users[user] = UserRef(user, attributes={**users.get(user, UserRef(user)).attributes,
                                                **nested_by_key.get(KEY_USER, {})})
    task = fields.get(KEY_TASK)
    if task is not None:
        task = str(task)
        tasks[task] = TaskRef(task, attributes={**tasks.get(task, TaskRef(task)).attributes,
                                                **nested_by_key.get(KEY_TASK, {})})

    return InteractionEvent(
        activity_name=name,
        action=action,
        target=target,
        input_value=fields.get(KEY_INPUT_VALUE),
        timestamp=timestamp,
        user=user,
        task=task,
        attributes=extras,
    )


_EVENT_FIELD_KEYS = frozenset(
    {KEY_CONCEPT_NAME, KEY_TIMESTAMP} | set(EXTENSION_KEYS)
)

_STRUCTURAL_TAGS = frozenset({"extension", "global", "classifier"})


def read_xes(
    source: str,
    *,
    aliases: Optional[Mapping] = None,
    lenient_names: bool = False,
) -> UILog:
    """Parse XES XML text into a UILog.

    Hierarchy nodes are rebuilt on demand from the event-level uilog
    attributes; chains that share a path share nodes, while identical
    element ids under different group paths become distinct siblings.
    ``aliases`` maps alternative attribute spellings onto the canonical
    keys before interpretation. With ``lenient_names`` an event without
    concept:name loads with an empty activity name (so validation can
    report it) instead of raising MissingConceptNameError.
    """
    aliases = dict(aliases or {})
    try:
        root = ET.fromstring(source)
    except ET.ParseError as exc:
        raise MalformedDocumentError(f"not well-formed XML: {exc}") from exc
    if _local_name(root.tag) != "log":
        raise MalformedDocumentError(
            f"expected a <log> document, found <{_local_name(root.tag)}>"
        )

    builder = HierarchyBuilder()
    users: dict = {}
    tasks: dict = {}
    log_attributes = {}
    untraced = False
    events = []
    traces = []

    trace_elements = []
    for child in root:
        tag = _local_name(child.tag)
        if tag in _STRUCTURAL_TAGS:
            continue
        if tag == "trace":
            trace_elements.append(child)
            continue
        if tag == "event":
            # Tolerated deviation: events directly under <log>.
            trace_elements.append(child)
            continue
        key, value, _ = _parse_attribute(child, "log attribute")
        key = aliases.get(key, key)
        if key == KEY_UNTRACED:
            untraced = bool(value)
        else:
            log_attributes[key] = value

    for position, trace_element in enumerate(trace_elements):
        if _local_name(trace_element.tag) == "event":
            where = f"log event {len(events)}"
            events.append(
                _read_event(trace_element, where, builder, users, tasks, aliases, lenient_names)
            )
            continue
        trace_id = None
        trace_attributes = {}
        indices = []
        for child in trace_element:
            tag = _local_name(child.tag)
            if tag == "event":
                where = f"trace {position}, event {len(indices)}"
                events.append(
                    _read_event(child, where, builder, users, tasks, aliases, lenient_names)
                )
                indices.append(len(events) - 1)
            elif tag in _STRUCTURAL_TAGS:
                continue
            else:
                key, value, _ = _parse_attribute(child, f"trace {position}")
                key = aliases.get(key, key)
                if key == KEY_CONCEPT_NAME:
                    trace_id = str(value)
                else:
                    trace_attributes[key] = value
        traces.append(
            Trace(
                id=trace_id if trace_id else f"trace_{position}",
                events=tuple(indices),
                attributes=trace_attributes,
            )
        )

    # Stray log-level events ended up as pseudo-traces above only when the
    # document mixed levels; fold them away for untraced documents.
    if untraced or not traces:
        final_traces = None
    else:
        final_traces = tuple(traces)

    return UILog(
        events=tuple(events),
        hierarchy=builder.build(),
        users=tuple(users.values()),
        tasks=tuple(tasks.values()),
        attributes=log_attributes,
        traces=final_traces,
    )
