import json
import random
from datetime import datetime, timedelta, timezone

import pytest

from uilog import (
    InteractionEvent,
    SystemNode,
    Target,
    TaskRef,
    Trace,
    UIGroupNode,
    UIHierarchy,
    UILog,
    UserRef,
    ViolationCode,
    coverage,
    profile,
    render_coverage,
    render_profile,
    render_report,
    report_records,
    validate,
)

import keyword_log


def codes(report):
    return [v.code for v in report.violations]


class TestValidate:
    def test_keyword_creation_log_is_clean(self):
        report = validate(keyword_log.build_by_hand())
        assert report.ok
        assert report.violations == ()
        assert report.checked_events == 20
        assert report.checked_nodes == 19  # 6 groups + 13 elements

    def test_activity_name_is_the_only_required_field(self):
        assert validate(UILog(events=(InteractionEvent("just a name"),))).ok
        assert not validate(UILog(events=(InteractionEvent(""),))).ok

    def test_empty_activity_name_located(self):
        log = UILog(events=(InteractionEvent("a"), InteractionEvent("b"), InteractionEvent("")))
        report = validate(log)
        assert codes(report) == [ViolationCode.MISSING_ACTIVITY_NAME]
        assert report.violations[0].event_index == 2

    def test_group_parent_cycle_detected(self):
        g1 = UIGroupNode("g1")
        g2 = UIGroupNode("g2", parent=g1)
        object.__setattr__(g1, "parent", g2)
        log = UILog(hierarchy=UIHierarchy(ui_groups=(g1, g2)))
        report = validate(log)
        assert ViolationCode.CYCLE_DETECTED in codes(report)
        flagged = {v.node_id for v in report.violations
                   if v.code == ViolationCode.CYCLE_DETECTED}
        assert flagged == {"g1", "g2"}

    def test_level_violation_detected(self):
        system = SystemNode("s")
        group = UIGroupNode("g", parent=system)
        hierarchy = UIHierarchy(systems=(system,), ui_groups=(group,))
        report = validate(UILog(hierarchy=hierarchy))
        assert ViolationCode.LEVEL_VIOLATION in codes(report)

    def test_unregistered_parent_is_dangling(self):
        ghost = UIGroupNode("ghost")
        group = UIGroupNode("g", parent=ghost)
        hierarchy = UIHierarchy(ui_groups=(group,))
        report = validate(UILog(hierarchy=hierarchy))
        dangling = [v for v in report.violations if v.code == ViolationCode.DANGLING_REFERENCE]
        assert dangling and dangling[0].node_id == "g"

    def test_duplicate_sibling_ids(self):
        hierarchy = UIHierarchy(ui_groups=(UIGroupNode("g"), UIGroupNode("g")))
        report = validate(UILog(hierarchy=hierarchy))
        assert codes(report) == [ViolationCode.DUPLICATE_ID]
        assert report.violations[0].node_id == "g"

    def test_duplicate_registry_ids(self):
        report = validate(UILog(users=(UserRef("u"), UserRef("u"))))
        assert codes(report) == [ViolationCode.DUPLICATE_ID]
        report = validate(UILog(tasks=(TaskRef("t"), TaskRef("t"))))
        assert codes(report) == [ViolationCode.DUPLICATE_ID]

    def test_dangling_event_references(self):
        log = UILog(
            events=(
                InteractionEvent("a", target=Target(element="nope")),
                InteractionEvent("b", user="ghost"),
                InteractionEvent("c", task="ghost"),
            )
        )
        report = validate(log)
        assert codes(report) == [ViolationCode.DANGLING_REFERENCE] * 3
        assert [v.event_index for v in report.violations] == [0, 1, 2]

    def test_out_of_order_timestamps(self):
        t0 = datetime(2024, 1, 1, tzinfo=timezone.utc)
        log = UILog(
            events=(
                InteractionEvent("a", timestamp=t0),
                InteractionEvent("b", timestamp=t0 - timedelta(seconds=5)),
            )
        )
        report = validate(log)
        assert codes(report) == [ViolationCode.OUT_OF_ORDER_TIMESTAMP]
        assert report.violations[0].event_index == 1

    def test_order_checked_per_trace(self):
        t0 = datetime(2024, 1, 1, tzinfo=timezone.utc)
        events = (
            InteractionEvent("a", timestamp=t0 + timedelta(seconds=10)),
            InteractionEvent("b", timestamp=t0),
        )
        traced = UILog(
            events=events,
            traces=(Trace("t1", (0,)), Trace("t2", (1,))),
        )
        assert validate(traced).ok  # decreasing across traces is fine

    def test_partition_gap_and_overlap(self):
        events = (InteractionEvent("a"), InteractionEvent("b"))
        gap = UILog(events=events, traces=(Trace("t1", (0,)),))
        report = validate(gap)
        assert codes(report) == [ViolationCode.PARTITION_GAP]
        assert report.violations[0].event_index == 1

        overlap = UILog(events=events, traces=(Trace("t1", (0, 1)), Trace("t2", (0,))))
        report = validate(overlap)
        assert codes(report) == [ViolationCode.PARTITION_OVERLAP]
        assert report.violations[0].event_index == 0

    def test_idempotent(self):
        log = UILog(events=(InteractionEvent(""),))
        assert validate(log) == validate(log)


class TestCoverage:
    def test_keyword_creation_counts(self):
        matrix = coverage(keyword_log.build_by_hand())
        assert matrix.input_value.fraction == "5/20"
        assert matrix.input_value.ratio == pytest.approx(0.25)
        assert matrix.target_element.fraction == "17/20"
        assert matrix.current_state.fraction == "4/20"
        assert matrix.action_type.fraction == "20/20"
        assert matrix.ui_hierarchy.fraction == "17/20"
        assert matrix.application.events_present == 0
        assert matrix.timestamp.events_present == 0

    def test_none_action_counts_as_present(self):
        from uilog import Action

        log = UILog(events=(InteractionEvent("a", action=Action("none")),))
        assert coverage(log).action_type.fraction == "1/1"

    def test_empty_log_all_zero(self):
        matrix = coverage(UILog())
        for cell in matrix.as_dict().values():
            assert cell.ratio == 0.0
            assert cell.events_total == 0

    def test_invariant_under_reordering(self):
        base = keyword_log.build_by_hand()
        rng = random.Random(11)
        order = list(range(len(base.events)))
        rng.shuffle(order)
        shuffled = UILog(
            events=tuple(base.events[i] for i in order), hierarchy=base.hierarchy
        )
        assert coverage(shuffled) == coverage(base)


class TestProfile:
    def test_keyword_creation_profile(self):
        summary = profile(keyword_log.build_by_hand())
        assert summary.events == keyword_log.EVENTS
        assert summary.distinct_activities == keyword_log.DISTINCT_ACTIVITIES
        assert summary.distinct_action_types == keyword_log.DISTINCT_ACTION_TYPES
        assert summary.ui_groups == 6
        assert summary.ui_elements == keyword_log.ELEMENT_NODES
        assert summary.systems == 0 and summary.applications == 0
        assert summary.traces is None

    def test_empty(self):
        summary = profile(UILog())
        assert summary.events == 0
        assert summary.distinct_activities == 0

    def test_single_event(self):
        summary = profile(UILog(events=(InteractionEvent("a"),)))
        assert summary.events == 1 and summary.distinct_activities == 1

    def test_trace_count(self):
        log = UILog(
            events=(InteractionEvent("a"),), traces=(Trace("t1", (0,)),)
        )
        assert profile(log).traces == 1


class TestRendering:
    def test_report_text_names_code_and_locator(self):
        log = UILog(events=(InteractionEvent("a"), InteractionEvent("")))
        text = render_report(validate(log))
        assert "1 violation" in text
        assert "[MissingActivityName]" in text
        assert "event 1" in text

    def test_records_are_json_ready(self):
        log = UILog(events=(InteractionEvent(""),))
        records = report_records(validate(log))
        assert len(records) == 1
        parsed = json.loads(json.dumps(records[0]))
        assert parsed["code"] == "MissingActivityName"
        assert parsed["event_index"] == 0
        assert parsed["node_id"] is None

    def test_coverage_render_states_hierarchy_rule(self):
        text = render_coverage(coverage(keyword_log.build_by_hand()))
        assert "at least one recorded ancestor" in text
        assert "5/20" in text

    def test_profile_render(self):
        text = render_profile(profile(keyword_log.build_by_hand()))
        assert "events" in text and "20" in text
