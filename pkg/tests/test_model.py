import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from uilog import (
    ABBREVIATED_NAMING,
    CycleError,
    DanglingReferenceError,
    DuplicateIdError,
    HierarchyBuilder,
    InteractionEvent,
    Level,
    LevelViolationError,
    NamingScheme,
    NodeDecl,
    NoTargetError,
    OutOfOrderTimestampError,
    Target,
    UILog,
    UnknownParentError,
    UnresolvedReferenceError,
    UserRef,
    ancestry,
    append_event,
    build_hierarchy,
    join_group_path,
    level_of,
    make_activity_name,
    normalize_timestamp,
    normalize_value,
    resolve_target,
    split_group_path,
)

import keyword_log


def event_at(target):
    return InteractionEvent("x", target=target)


@pytest.fixture
def erp_hierarchy():
    b = HierarchyBuilder()
    b.chain(groups=("fpanel keyword",), element="name")
    b.chain(groups=("explorer tree",))
    b.chain(application="ERP client")
    return b.build()


class TestResolveTarget:
    def test_element_wins_over_group(self, erp_hierarchy):
        node = resolve_target(
            event_at(Target(element="name", groups=("fpanel keyword",))), erp_hierarchy
        )
        assert node.id == "name"
        assert node.parent.id == "fpanel keyword"

    def test_group_when_no_element(self, erp_hierarchy):
        node = resolve_target(event_at(Target(groups=("explorer tree",))), erp_hierarchy)
        assert node.id == "explorer tree"

    def test_application_only(self, erp_hierarchy):
        node = resolve_target(event_at(Target(application="ERP client")), erp_hierarchy)
        assert node.id == "ERP client"

    def test_no_association_raises(self, erp_hierarchy):
        with pytest.raises(NoTargetError):
            resolve_target(event_at(None), erp_hierarchy)
        with pytest.raises(NoTargetError):
            resolve_target(event_at(Target()), erp_hierarchy)

    def test_unknown_chain_raises(self, erp_hierarchy):
        with pytest.raises(DanglingReferenceError):
            resolve_target(event_at(Target(element="nope")), erp_hierarchy)

    def test_removing_levels_raises_resolution(self):
        b = HierarchyBuilder()
        full = b.chain(
            system="win-host", application="Excel", groups=("wb1", "sheet1"), element="A1"
        )
        h = b.build()
        seen = []
        for target in (
            full,
            Target(groups=("wb1", "sheet1"), application="Excel", system="win-host"),
            Target(application="Excel", system="win-host"),
            Target(system="win-host"),
        ):
            node = h.resolve(target)
            seen.append(Level(target.level))
            assert node.id == target.most_specific_id
        assert seen == [Level.ELEMENT, Level.GROUP, Level.APPLICATION, Level.SYSTEM]
        assert seen == sorted(seen, reverse=True)


class TestAncestry:
    def test_element_in_parentless_group(self, erp_hierarchy):
        node = erp_hierarchy.find_element("name", ("fpanel keyword",))
        assert ancestry(node, erp_hierarchy) == ["name", "fpanel keyword"]

    def test_root_is_its_own_path(self):
        b = HierarchyBuilder()
        b.chain(system="win-host")
        h = b.build()
        assert ancestry(h.find_system("win-host"), h) == ["win-host"]

    def test_spreadsheet_chain(self):
        b = HierarchyBuilder()
        b.chain(application="Excel", groups=("workbook1", "sheet1"), element="A1")
        h = b.build()
        node = h.find_element("A1", ("workbook1", "sheet1"), "Excel")
        assert ancestry(node, h) == ["A1", "sheet1", "workbook1", "Excel"]

    def test_foreign_node_raises(self, erp_hierarchy):
        b = HierarchyBuilder()
        b.chain(groups=("other",))
        foreign = b.build().find_group(("other",))
        with pytest.raises(DanglingReferenceError):
            ancestry(foreign, erp_hierarchy)


class TestActivityNaming:
    @pytest.mark.parametrize(
        "action,target,scheme,expected",
        [
            ("input", "name", NamingScheme(), "input name"),
            ("KEY_F5", "explorer tree", NamingScheme(), "KEY_F5 explorer tree"),
            ("left click", "confirm", ABBREVIATED_NAMING, "click confirm"),
            ("right click", "keywords", ABBREVIATED_NAMING, "rclick keywords"),
            ("", "logout", NamingScheme(), "none logout"),
            (None, "logout", NamingScheme(), "none logout"),
        ],
    )
    def test_examples(self, action, target, scheme, expected):
        assert make_activity_name(action, target, scheme) == expected

    def test_empty_target_rejected(self):
        with pytest.raises(ValueError):
            make_activity_name("input", "")

    @given(st.text(min_size=1), st.text(min_size=1))
    def test_deterministic(self, action, target):
        scheme = NamingScheme()
        assert make_activity_name(action, target, scheme) == make_activity_name(
            action, target, scheme
        )

    @given(
        st.text(alphabet="abcdef_", min_size=1),
        st.text(alphabet="abcdef xyz", min_size=1),
        st.text(alphabet="abcdef xyz", min_size=1),
    )
    def test_injective_in_target_when_separator_free(self, action, t1, t2):
        # action tokens without the separator cannot collide across targets
        scheme = NamingScheme()
        if t1 != t2:
            assert make_activity_name(action, t1, scheme) != make_activity_name(
                action, t2, scheme
            )


class TestBuildHierarchy:
    def test_empty(self):
        h = build_hierarchy([])
        assert h.node_count == 0

    def test_self_parent_is_cycle(self):
        with pytest.raises(CycleError):
            build_hierarchy([NodeDecl("group", "g", parent="g")])

    def test_mutual_cycle(self):
        with pytest.raises(CycleError):
            build_hierarchy(
                [NodeDecl("group", "g1", parent="g2"), NodeDecl("group", "g2", parent="g1")]
            )

    def test_unknown_parent(self):
        with pytest.raises(UnknownParentError):
            build_hierarchy([NodeDecl("group", "g", parent="missing")])

    def test_level_violation(self):
        decls = [
            NodeDecl("system", "s"),
            NodeDecl("group", "g", parent="s", parent_level="system"),
        ]
        with pytest.raises(LevelViolationError):
            build_hierarchy(decls)

    def test_ambiguous_parent_needs_level(self):
        decls = [
            NodeDecl("application", "x"),
            NodeDecl("group", "x"),
            NodeDecl("element", "e", parent="x"),
        ]
        with pytest.raises(UnknownParentError, match="ambiguous"):
            build_hierarchy(decls)
        decls[2] = NodeDecl("element", "e", parent="x", parent_level="group")
        h = build_hierarchy(decls)
        assert h.find_element("e", ("x",)) is not None

    def test_duplicate_declaration(self):
        with pytest.raises(DuplicateIdError):
            build_hierarchy([NodeDecl("group", "g"), NodeDecl("group", "g")])

    def test_keyword_creation_groups(self):
        decls = [NodeDecl("group", g) for g in keyword_log.GROUPS]
        decls += [
            NodeDecl("element", element, parent=group)
            for _, _, element, group, _, _ in keyword_log.ROWS
            if element is not None
        ]
        # drop duplicate element declarations, keeping first mention
        seen = set()
        unique = []
        for decl in decls:
            key = (decl.level, decl.id, decl.parent)
            if key not in seen:
                seen.add(key)
                unique.append(decl)
        h = build_hierarchy(unique)
        assert len(h.ui_groups) == 6
        assert len(h.ui_elements) == keyword_log.ELEMENT_NODES
        assert h.find_element("confirm", ("fpanel keyword",)) is not None
        assert h.find_element("confirm", ("dialog logout",)) is not None


class TestBuilder:
    def test_sibling_uniqueness_is_scoped(self):
        b = HierarchyBuilder()
        b.chain(groups=("sheet1",), element="A1")
        b.chain(groups=("sheet2",), element="A1")
        h = b.build()
        first = h.find_element("A1", ("sheet1",))
        second = h.find_element("A1", ("sheet2",))
        assert first is not None and second is not None and first is not second

    def test_strict_add_rejects_duplicates(self):
        b = HierarchyBuilder()
        b.group("g")
        with pytest.raises(DuplicateIdError):
            b.group("g")

    def test_parent_from_other_builder_rejected(self):
        other = HierarchyBuilder()
        parent = other.group("g")
        with pytest.raises(UnknownParentError):
            HierarchyBuilder().element("e", parent=parent)

    def test_level_rules(self):
        b = HierarchyBuilder()
        system = b.system("s")
        with pytest.raises(LevelViolationError):
            b.group("g", parent=system)

    def test_chain_merges_state_last_wins(self):
        b = HierarchyBuilder()
        b.chain(groups=("g",), element="dd", current_state=["a"])
        b.chain(groups=("g",), element="dd", current_state=["a", "b"])
        h = b.build()
        assert h.find_element("dd", ("g",)).current_state == ["a", "b"]

    def test_floating_system_stays_out_of_the_chain(self):
        b = HierarchyBuilder()
        target = b.chain(system="host", groups=("g",), element="e")
        h = b.build()
        node = h.resolve(target)
        assert ancestry(node, h) == ["e", "g"]
        assert h.find_system("host") is not None


class TestAppendEvent:
    def test_append_to_empty(self):
        log = append_event(UILog(), InteractionEvent("a"))
        assert len(log.events) == 1

    def test_out_of_order_strict(self):
        t0 = datetime(2024, 1, 1, tzinfo=timezone.utc)
        log = append_event(UILog(), InteractionEvent("a", timestamp=t0), strict=True)
        with pytest.raises(OutOfOrderTimestampError):
            append_event(
                log,
                InteractionEvent("b", timestamp=t0 - timedelta(seconds=1)),
                strict=True,
            )

    def test_out_of_order_allowed_when_lenient(self):
        t0 = datetime(2024, 1, 1, tzinfo=timezone.utc)
        log = append_event(UILog(), InteractionEvent("a", timestamp=t0))
        log = append_event(log, InteractionEvent("b", timestamp=t0 - timedelta(seconds=1)))
        assert len(log.events) == 2

    def test_twenty_rows_append(self):
        hand = keyword_log.build_by_hand()
        log = UILog(hierarchy=hand.hierarchy)
        for event in hand.events:
            log = append_event(log, event, strict=True)
        assert len(log.events) == 20

    def test_unresolved_target_rejected(self):
        with pytest.raises(UnresolvedReferenceError):
            append_event(UILog(), InteractionEvent("a", target=Target(element="ghost")))

    def test_unknown_user_rejected(self):
        with pytest.raises(UnresolvedReferenceError):
            append_event(UILog(), InteractionEvent("a", user="u1"))
        log = UILog(users=(UserRef("u1"),))
        assert len(append_event(log, InteractionEvent("a", user="u1")).events) == 1


class TestValues:
    def test_timestamps_truncate_to_milliseconds(self):
        ts = datetime(2024, 1, 1, 10, 0, 0, 123456, tzinfo=timezone.utc)
        assert normalize_timestamp(ts).microsecond == 123000

    def test_naive_means_utc(self):
        ts = normalize_timestamp(datetime(2024, 1, 1, 10, 0, 0))
        assert ts.tzinfo == timezone.utc

    def test_nesting_cap(self):
        value = "leaf"
        for _ in range(32):
            value = [value]
        normalize_value(value)  # exactly at the cap
        with pytest.raises(ValueError):
            normalize_value([value])

    def test_map_keys_must_be_text(self):
        with pytest.raises(ValueError):
            normalize_value({"": 1})
        with pytest.raises(ValueError):
            normalize_value({3: 1})

    def test_int_range(self):
        with pytest.raises(ValueError):
            normalize_value(2**63)

    def test_bool_is_not_int(self):
        assert normalize_value(True) is True
        assert normalize_value(1) == 1

    def test_unsupported_type(self):
        with pytest.raises(TypeError):
            normalize_value(object())


class TestGroupPathCodec:
    @pytest.mark.parametrize(
        "ids,encoded",
        [
            (("workbook1", "sheet1"), "workbook1/sheet1"),
            (("a/b", "c"), "a\\/b/c"),
            (("back\\slash",), "back\\\\slash"),
            ((), ""),
        ],
    )
    def test_examples(self, ids, encoded):
        assert join_group_path(ids) == encoded
        assert split_group_path(encoded) == ids

    @given(st.lists(st.text(min_size=1), max_size=5))
    def test_round_trip(self, ids):
        assert split_group_path(join_group_path(ids)) == tuple(ids)


@given(st.integers(0, 2**31))
def test_dropping_the_element_strictly_raises_the_resolved_level(seed):
    rng = random.Random(seed)
    b = HierarchyBuilder()
    system = f"s{rng.randrange(2)}" if rng.random() < 0.5 else None
    application = f"a{rng.randrange(2)}" if rng.random() < 0.5 else None
    groups = tuple(f"g{d}" for d in range(rng.randrange(3)))
    with_element = b.chain(
        system=system, application=application, groups=groups, element="el"
    )
    h = b.build()
    without_element = Target(
        groups=with_element.groups,
        application=with_element.application,
        system=with_element.system,
    )
    if without_element.is_empty:
        with pytest.raises(NoTargetError):
            h.resolve(without_element)
    else:
        assert level_of(h.resolve(without_element)) < Level.ELEMENT
    assert level_of(h.resolve(with_element)) == Level.ELEMENT


@given(st.integers(0, 2**31))
def test_parent_walks_terminate_within_node_count(seed):
    import genlogs

    rng = random.Random(seed)
    builder = HierarchyBuilder()
    genlogs._chains(rng, builder)
    h = builder.build()
    from uilog import parent_of

    for node in h.all_nodes():
        steps = 0
        current = parent_of(node)
        while current is not None:
            steps += 1
            assert steps <= h.node_count
            current = parent_of(current)


def test_sorting_by_timestamp_is_noop_on_strict_logs():
    rng = random.Random(7)
    clock = datetime(2024, 3, 1, tzinfo=timezone.utc)
    log = UILog()
    for i in range(120):
        ts = None
        if rng.random() < 0.7:
            clock += timedelta(seconds=rng.randrange(0, 30))
            ts = clock
        log = append_event(log, InteractionEvent(f"e{i}", timestamp=ts), strict=True)

    # stable sort in which events without timestamps keep their position
    timestamped = [e for e in log.events if e.timestamp is not None]
    timestamped.sort(key=lambda e: e.timestamp.isoformat())
    merged = []
    pull = iter(timestamped)
    for event in log.events:
        merged.append(next(pull) if event.timestamp is not None else event)
    assert tuple(merged) == log.events
