import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from isac_handover.channel import FadingParams, RcsModel
from isac_handover.geometry import Point
from isac_handover.handover import (
    ControllerState,
    HandoverPolicy,
    PolicyMode,
    SoftOverlap,
    Stable,
    TriggerCause,
    activate_due,
    combine_soft,
    enumerate_configs,
    evaluate_triggers,
    initial_state,
    resolve_acks,
    select_config,
    step,
)
from isac_handover.linkbudget import (
    AccessPoint,
    CandidateMetrics,
    CommAssignment,
    Scene,
    SensingConfiguration as Cfg,
    SnapshotReport,
    all_configurations,
)
from isac_handover.signaling import AssistingInfo, HandoverAck, HandoverRequest
from isac_handover.simengine import _follow

MS1, MS2, MS3 = Cfg.mono(1), Cfg.mono(2), Cfg.mono(3)
BS12, BS13, BS21 = Cfg.bi(1, 2), Cfg.bi(1, 3), Cfg.bi(2, 1)

SCENE = Scene(
    tuple(AccessPoint(i, Point(100.0 * (i - 1), 0.0), max_range_m=300.0) for i in (1, 2, 3)),
    fading=FadingParams(enabled=False),
    rcs=RcsModel(0.0, fluctuating=False),
)
OBJ = Point(50.0, 50.0)
HARD = HandoverPolicy(switch_latency=1)


def report(metrics, t=0, pos=OBJ, comm_pred=None):
    comm_pred = comm_pred or {}
    cands = {c: CandidateMetrics(v, v, comm_pred.get(c, {})) for c, v in metrics.items()}
    return SnapshotReport(t, pos, None, cands, {})


def test_enumerate_free_aps():
    assert len(enumerate_configs(SCENE)) == 9


def test_enumerate_with_serving_aps():
    comm = CommAssignment.from_pairs([(2, 1), (3, 2)])
    pol = HandoverPolicy(PolicyMode.QOS_PRIORITY)
    assert enumerate_configs(SCENE, comm, pol) == [MS1, BS12, BS13]


def test_enumerate_single_ap():
    one = Scene((AccessPoint(1, Point(0, 0)),))
    assert enumerate_configs(one) == [MS1]
    with pytest.raises(ValueError):
        enumerate_configs(Scene(()))


def test_enumerate_drops_out_of_range_aps():
    far = Point(-250.0, 20.0)
    cands = enumerate_configs(SCENE, object_pos=far)
    assert all(3 not in c.ap_ids for c in cands)
    assert MS1 in cands


def test_better_configuration_trigger():
    events = evaluate_triggers(initial_state(MS1), report({MS1: 20.0, BS12: 25.0}), HARD, SCENE)
    assert [e.cause for e in events] == [TriggerCause.BETTER_CONFIGURATION]


def test_no_trigger_when_argmax_and_qos_hold():
    pol = HandoverPolicy(PolicyMode.QOS_PRIORITY)
    r = report({MS1: 20.0, BS12: 10.0}, comm_pred={MS1: {1: 30.0}})
    assert evaluate_triggers(initial_state(MS1), r, pol, SCENE) == []
    assert evaluate_triggers(initial_state(MS1), report({MS1: 25.0, BS12: 25.0}), HARD, SCENE) == []


def test_coverage_exit_trigger():
    far = Point(250.0, 200.0)  # beyond AP1's 300 m range
    events = evaluate_triggers(initial_state(MS1), report({MS1: 5.0}, pos=far), HARD, SCENE)
    assert events[0].cause is TriggerCause.COVERAGE_EXIT


def test_qos_trigger_outranks_better_configuration():
    pol = HandoverPolicy(PolicyMode.QOS_PRIORITY)
    r = report({MS1: 20.0, BS12: 25.0}, comm_pred={MS1: {1: 10.0}, BS12: {1: 20.0}})
    events = evaluate_triggers(initial_state(MS1), r, pol, SCENE)
    assert events[0].cause is TriggerCause.QOS_VIOLATION and events[0].ue_id == 1


def test_select_argmax():
    r = report({MS1: 10.0, BS12: 15.0})
    assert select_config([MS1, BS12], r, HARD) == BS12


def test_select_tie_break():
    r = report({MS2: 12.0, BS12: 12.0})
    assert select_config([BS12, MS2], r, HARD) == MS2
    r = report({BS13: 12.0, BS12: 12.0})
    assert select_config([BS13, BS12], r, HARD) == BS12


def test_select_qos_fallback_max_min_margin():
    pol = HandoverPolicy(PolicyMode.QOS_PRIORITY, qos_threshold_db=15.0)
    pred = {MS1: {1: 5.0, 2: 30.0}, BS12: {1: 12.0, 2: 13.0}, BS13: {1: 14.0, 2: 8.0}}
    r = report({MS1: 30.0, BS12: 10.0, BS13: 20.0}, comm_pred=pred)
    assert select_config([MS1, BS12, BS13], r, pol) == BS12


def test_select_qos_feasible_argmax():
    pol = HandoverPolicy(PolicyMode.QOS_PRIORITY, qos_threshold_db=15.0)
    pred = {MS1: {1: 10.0}, BS12: {1: 16.0}, BS13: {1: 20.0}}
    r = report({MS1: 30.0, BS12: 25.0, BS13: 20.0}, comm_pred=pred)
    assert select_config([MS1, BS12, BS13], r, pol) == BS12


def test_select_qos_relieves_violated_server():
    # UE1 is served by AP2: a violation moves sensing off AP2 even at a sensing cost
    comm = CommAssignment.from_pairs([(2, 1), (3, 2)])
    pol = HandoverPolicy(PolicyMode.QOS_PRIORITY, qos_threshold_db=15.0)
    pred = {MS1: {1: 14.0, 2: 30.0}, BS12: {1: 16.0, 2: 30.0}, BS13: {1: 14.5, 2: 20.0}}
    r = report({MS1: 10.0, BS12: 25.0, BS13: 20.0}, comm_pred=pred)
    assert select_config([MS1, BS12, BS13], r, pol, comm, violated_ues=[1]) == BS13


def test_step_without_trigger_is_noop():
    state = initial_state(MS1)
    new, msgs = step(state, report({MS1: 20.0, BS12: 10.0}), HARD, SCENE, 0)
    assert msgs == []
    assert new.active_cfg == MS1 and new.history == () and new.pending is None


def test_hard_handover_switches_next_snapshot():
    state = initial_state(MS1)
    state, msgs = step(state, report({MS1: 20.0, BS12: 25.0}, t=10), HARD, SCENE, 10)
    assert [type(m.payload) for m in msgs] == [AssistingInfo, HandoverRequest]
    assert msgs[1].to == 2
    state = resolve_acks(state, HARD, {2: HandoverAck(True)}, 10)
    assert len(state.history) == 1 and state.history[0].snapshot == 10
    assert activate_due(state, 10, HARD).active_cfg == MS1
    state = activate_due(state, 11, HARD)
    assert state.active_cfg == BS12 and state.pending is None


def test_rejected_request_aborts():
    state, _ = step(initial_state(MS1), report({MS1: 20.0, BS12: 25.0}), HARD, SCENE, 0)
    state = resolve_acks(state, HARD, {2: HandoverAck(False, "no LOS")}, 0)
    assert state.pending is None and state.history == () and state.active_cfg == MS1


def test_soft_window_walk():
    pol = HandoverPolicy(soft=True, soft_window=3, switch_latency=0)
    state, _ = step(initial_state(MS1), report({MS1: 20.0, BS12: 25.0}), pol, SCENE, 0)
    state = activate_due(resolve_acks(state, pol, {2: HandoverAck(True)}, 0), 0, pol)
    assert state.phase == SoftOverlap(MS1, BS12, 3)
    assert state.sensing_cfgs == (MS1, BS12)
    phases = []
    terminate = []
    for t in (1, 2, 3):
        state, msgs = step(state, report({MS1: 20.0, BS12: 25.0}, t=t), pol, SCENE, t)
        phases.append(state.phase)
        terminate += msgs
    assert phases[:2] == [SoftOverlap(MS1, BS12, 2), SoftOverlap(MS1, BS12, 1)]
    assert phases[2] == Stable()
    assert [m.payload.cfg for m in terminate] == [MS1]
    assert state.active_cfg == BS12


def test_soft_early_exit():
    pol = HandoverPolicy(soft=True, soft_window=5, switch_latency=0, soft_exit_threshold_db=10.0)
    state = ControllerState(BS12, SoftOverlap(MS1, BS12, 5))
    state, msgs = step(state, report({MS1: 3.0, BS12: 25.0}, t=4), pol, SCENE, 4)
    assert state.phase == Stable() and len(msgs) == 1


def test_combine_soft_examples():
    assert combine_soft(10.0, 10.0) == pytest.approx(13.0103, abs=1e-4)
    assert combine_soft(10.0, -400.0) == pytest.approx(10.0)


@settings(max_examples=1000)
@given(st.floats(-300, 300), st.floats(-300, 300))
def test_combine_soft_superadditive(a, b):
    assert combine_soft(a, b) >= max(a, b) - 1e-12


metric = st.floats(-30, 60, allow_nan=False)


@settings(max_examples=1000)
@given(
    st.lists(metric, min_size=9, max_size=9),
    st.sampled_from([PolicyMode.SNR_MAX, PolicyMode.QOS_PRIORITY]),
    st.floats(0, 5),
)
def test_noop_stability(values, mode, hysteresis):
    cfgs = all_configurations([1, 2, 3])
    pred = {c: {1: 40.0} for c in cfgs}
    r = report(dict(zip(cfgs, values)), comm_pred=pred)
    pol = HandoverPolicy(mode, hysteresis_db=hysteresis, switch_latency=0)
    state = initial_state(r.best())
    for t in range(120):
        state, msgs = step(state, replace(r, snapshot=t), pol, SCENE, t)
        assert msgs == [] and state.history == ()


@st.composite
def traces(draw):
    cfgs = draw(st.lists(st.sampled_from(all_configurations([1, 2, 3])), min_size=2, max_size=5, unique=True))
    n = draw(st.integers(2, 40))
    rows = draw(st.lists(st.lists(metric, min_size=len(cfgs), max_size=len(cfgs)), min_size=n, max_size=n))
    return [report(dict(zip(cfgs, row)), t=t) for t, row in enumerate(rows)]


def count(reports, h):
    pol = HandoverPolicy(hysteresis_db=h, switch_latency=0)
    return _follow(reports, pol, SCENE, CommAssignment(), reports[0].best())[1]


@settings(max_examples=1000)
@given(traces(), st.floats(0.01, 20))
def test_hysteresis_never_adds_handovers(reports, h):
    assert count(reports, h) <= count(reports, 0.0)


def test_hysteresis_monotone_on_canonical_trace():
    from isac_handover import load_scenario, run

    sc = load_scenario("scenario1")
    reports = [row.report for row in run(sc).rows]
    counts = [count(reports, h) for h in (0, 1, 2, 4, 8, 16, 32)]
    assert counts == sorted(counts, reverse=True)


def test_policy_validation():
    with pytest.raises(ValueError):
        HandoverPolicy(soft=True, soft_window=0)
    with pytest.raises(ValueError):
        HandoverPolicy(hysteresis_db=math.nan)
