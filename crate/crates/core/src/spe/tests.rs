use super::*;
use crate::rove::{generate_episode, EpisodeConfig, MockRecognizer};
use crate::task::Chains;
use crate::world::{generate_scene, scene_from_ascii, RoomLabel, SceneParams};
use std::sync::OnceLock;

fn corpus() -> &'static [(SceneGraph, EpisodeSpec)] {
    static EPS: OnceLock<Vec<(SceneGraph, EpisodeSpec)>> = OnceLock::new();
    EPS.get_or_init(|| {
        let mut out = Vec::new();
        let mut seed = 0;
        while out.len() < 6 {
            let s = generate_scene(seed, &SceneParams::default()).unwrap();
            if let Ok(ep) = generate_episode(&s, seed, &format!("e{seed}"), &EpisodeConfig::default(), &MockRecognizer::default()) {
                out.push((s, ep));
            }
            seed += 1;
        }
        out
    })
}

const ROOM: [&str; 5] = ["########", "#......#", "#......#", "#......#", "########"];

/// Everything within reach: item under FH, handoff one cell east where SH
/// waits, delivery on the same cell.
fn micro() -> (SceneGraph, EpisodeSpec) {
    let scene = scene_from_ascii(
        "micro",
        &ROOM,
        &[RoomLabel::Kitchen],
        &[("cup", (2, 2), 1.0, 0.0), ("side_table", (3, 1), 1.0, 0.0), ("sofa", (4, 3), 1.0, 0.0)],
    )
    .unwrap();
    let res = scene.resolution();
    let (item, handoff, delivery) = (Cell::new(2, 2), Cell::new(3, 2), Cell::new(3, 2));
    let chains = Chains::relay(item, item, handoff, delivery);
    let ep = EpisodeSpec {
        episode_id: "micro".into(),
        scene_id: "micro".into(),
        instruction: "bring the cup".into(),
        target_object_id: 0,
        target_category: "cup".into(),
        handoff_object_id: 1,
        delivery_object_id: 2,
        pickup_room: RoomLabel::Kitchen,
        handoff_room: RoomLabel::Kitchen,
        delivery_room: RoomLabel::Kitchen,
        pickup_waypoint: Pose::at_cell(item, res, 0),
        handoff_waypoint: Pose::at_cell(handoff, res, 0),
        delivery_waypoint: Pose::at_cell(delivery, res, 0),
        start_pose_fh: Pose::at_cell(item, res, 0),
        start_pose_sh: Pose::at_cell(handoff, res, 180),
        gt_path_fh: vec![item, handoff],
        gt_path_sh: vec![handoff],
        gt_length_fh: res,
        gt_length_sh: 0.0,
        subtasks_fh: chains.first,
        subtasks_sh: chains.second,
        gate_reports: corpus()[0].1.gate_reports,
    };
    (scene, ep)
}

#[test]
fn same_inputs_same_trace() {
    for (s, ep) in corpus().iter().take(3) {
        let mut cfg = RolloutConfig::default();
        if let Some(p) = plan_blockage(s, ep) {
            cfg.blockages.push(p.blockage);
        }
        let a = run(s, ep, &cfg).unwrap();
        let b = run(s, ep, &cfg).unwrap();
        assert_eq!(trace_to_string(&a.trace), trace_to_string(&b.trace));
        assert_eq!(a.result, b.result);
    }
}

#[test]
fn zero_tick_budget_ends_at_once() {
    let (s, ep) = &corpus()[0];
    let r = run(s, ep, &RolloutConfig { t_max: 0, ..Default::default() }).unwrap();
    assert!(r.trace.is_empty());
    assert_eq!(r.result.ticks, 0);
    assert!(!r.result.success_fh && !r.result.success_sh && !r.result.both_success);
}

#[test]
fn micro_episode_finishes_within_chain_length() {
    let (s, ep) = micro();
    let r = run(&s, &ep, &RolloutConfig::default()).unwrap();
    assert!(r.result.both_success, "{:?}", r.result);
    // FH: goto, pick, goto, deposit, stop on ticks 0-4; SH receives after the
    // deposit tick, then goto, deliver, stop: 8 ticks in all
    assert_eq!(r.result.ticks, 8);
    assert!(r.result.ticks as usize <= ep.subtasks_fh.len() + ep.subtasks_sh.len());
    assert_eq!((r.result.subtasks_done_fh, r.result.subtasks_done_sh), (5, 5));
    assert_eq!(r.result.path_len_fh_m + r.result.path_len_sh_m, 0.0);
    let stages: Vec<u8> = r.trace.iter().map(|t| t.item.stage()).collect();
    assert_eq!(stages, [0, 1, 1, 2, 3, 3, 4, 4]);
}

#[test]
fn malformed_episode_is_rejected_before_tick_zero() {
    let (s, ep) = micro();
    let mut bad = ep.clone();
    bad.scene_id = "other".into();
    assert!(matches!(run(&s, &bad, &RolloutConfig::default()), Err(SpeError::Malformed { .. })));
    let mut bad = ep.clone();
    bad.start_pose_fh = Pose::at_cell(Cell::new(0, 0), s.resolution(), 0);
    assert!(matches!(run(&s, &bad, &RolloutConfig::default()), Err(SpeError::Malformed { .. })));
    let mut bad = ep;
    bad.subtasks_sh.clear();
    assert!(matches!(run(&s, &bad, &RolloutConfig::default()), Err(SpeError::Malformed { .. })));
}

#[test]
fn invalid_config_is_rejected() {
    let (s, ep) = micro();
    let cfg = RolloutConfig { r_succ: 0.0, ..Default::default() };
    assert!(matches!(run(&s, &ep, &cfg), Err(SpeError::Config(_))));
    let mut cfg = RolloutConfig::default();
    cfg.transport.drop_prob = 1.5;
    assert!(matches!(run_distributed(&s, &ep, cfg.transport, &cfg), Err(SpeError::Config(_))));
}

#[test]
fn instant_transport_matches_lockstep() {
    for (s, ep) in corpus() {
        let mut cfg = RolloutConfig::default();
        if let Some(p) = plan_blockage(s, ep) {
            cfg.blockages.push(p.blockage);
        }
        let lock = run_lockstep(s, ep, &cfg).unwrap();
        let dist = run_distributed(s, ep, TransportModel::default(), &cfg).unwrap();
        assert_eq!(trace_to_string(&lock.trace), trace_to_string(&dist.trace));
    }
}

#[test]
fn late_packets_are_always_stale_but_robots_keep_going() {
    let cfg = RolloutConfig::default();
    let transport = TransportModel {
        latency: 2 * cfg.tau,
        ..Default::default()
    };
    for (s, ep) in corpus() {
        let r = run_distributed(s, ep, transport, &cfg).unwrap();
        assert!(r.result.ticks <= cfg.t_max);
        for t in &r.trace {
            for rt in &t.robots {
                assert!(rt.partner_stale, "tick {} robot {}", t.tick, rt.robot_id);
            }
        }
        // FH still works through its own chain
        assert!(r.result.subtasks_done_fh >= 2, "{:?}", r.result);
    }
}

#[test]
fn dropped_packets_match_partner_muted_baseline() {
    let cfg = RolloutConfig::default();
    let dropped = TransportModel {
        drop_prob: 1.0,
        ..Default::default()
    };
    // a partner whose packets never arrive within the episode
    let never = TransportModel {
        latency: cfg.t_max + 1,
        ..Default::default()
    };
    for (s, ep) in corpus() {
        let muted = run_distributed(s, ep, dropped, &cfg).unwrap();
        let baseline = run_distributed(s, ep, never, &cfg).unwrap();
        for t in &muted.trace {
            for rt in &t.robots {
                assert_eq!(rt.partner_ts, None);
                assert!(rt.partner_stale);
            }
        }
        let acts = |r: &Rollout| -> Vec<(Pose, Action, Pose, Action)> {
            r.trace
                .iter()
                .map(|t| (t.robots[0].pose, t.robots[0].action, t.robots[1].pose, t.robots[1].action))
                .collect()
        };
        assert_eq!(acts(&muted), acts(&baseline));
        assert_eq!(muted.result, baseline.result);
        assert_eq!(muted.result.swap_count, 0);
    }
}

#[test]
fn muted_robots_finish_solo_completable_episodes() {
    let cfg = RolloutConfig::default();
    let dropped = TransportModel {
        drop_prob: 1.0,
        ..Default::default()
    };
    let mut solo = 0;
    for (s, ep) in corpus() {
        // solo-completable: the coordination-free policy gets both robots home
        let alone = run(s, ep, &RolloutConfig { policy: Policy::Static, ..cfg.clone() }).unwrap();
        if !alone.result.both_success {
            continue;
        }
        solo += 1;
        let muted = run_distributed(s, ep, dropped, &cfg).unwrap();
        assert!(muted.result.both_success, "{}", ep.episode_id);
    }
    assert!(solo > 0);
}

#[test]
fn transport_is_fifo_per_sender() {
    let mut t = Transport::new(TransportModel {
        latency: 2,
        jitter: 6,
        drop_prob: 0.2,
        seed: 11,
    })
    .unwrap();
    let (_, ep) = micro();
    let base = {
        let (s, _) = micro();
        let ctx = crate::edr::PolicyContext::new(RobotId::FH, ep.chains(), "cup");
        crate::agent::AgentState::new(RobotId::FH, ep.start_pose_fh, &s, ctx).packet(0, RoomLabel::Kitchen)
    };
    let mut got = Vec::new();
    for now in 0..200 {
        if now < 100 {
            t.send(SemanticPacket { ts: now, ..base.clone() });
        }
        got.extend(t.deliver(RobotId::SH, now).into_iter().map(|p| (now, p.ts)));
    }
    assert!(t.dropped > 0);
    assert_eq!(t.in_flight(), 0);
    assert_eq!(got.len() as u64 + t.dropped, 100);
    for w in got.windows(2) {
        assert!(w[0].1 < w[1].1, "{w:?}");
    }
    for (at, ts) in &got {
        assert!(at - ts >= 2 && at - ts <= 8 + 100, "{at} {ts}");
    }
    // nothing for the sender itself
    assert!(t.deliver(RobotId::FH, 1000).is_empty());
}

#[test]
fn transport_seed_fixes_the_schedule() {
    let (s, ep) = &corpus()[1];
    let transport = TransportModel {
        latency: 1,
        jitter: 4,
        drop_prob: 0.3,
        seed: 5,
    };
    let cfg = RolloutConfig::default();
    let a = run_distributed(s, ep, transport, &cfg).unwrap();
    let b = run_distributed(s, ep, transport, &cfg).unwrap();
    assert_eq!(trace_to_string(&a.trace), trace_to_string(&b.trace));
}

fn attempt(robot: RobotId, kind: SubtaskKind, role: Role, distance: f64) -> Attempt {
    Attempt {
        robot,
        kind,
        cell: Cell::new(3, 2),
        epoch: 0,
        role,
        distance: Some(distance),
    }
}

#[test]
fn receive_while_carried_is_a_no_op() {
    let mut item = ItemState::Carried {
        by: RobotId::FH,
        role: Role::First,
    };
    let before = item;
    let done = resolve_interactions(&mut item, &[attempt(RobotId::SH, SubtaskKind::Receive, Role::Second, 0.0)], 5, 0.5);
    assert!(done.is_empty());
    assert_eq!(item, before);
}

#[test]
fn deposit_then_receive_next_tick() {
    let mut item = ItemState::Carried {
        by: RobotId::FH,
        role: Role::First,
    };
    let deposit = attempt(RobotId::FH, SubtaskKind::Deposit, Role::First, 0.0);
    let receive = attempt(RobotId::SH, SubtaskKind::Receive, Role::Second, 0.25);
    // same tick: the deposit lands, the receive has to wait
    assert_eq!(resolve_interactions(&mut item, &[deposit, receive], 7, 0.5), [RobotId::FH]);
    assert_eq!(item, ItemState::AtHandoff { cell: Cell::new(3, 2), since: 7 });
    assert!(resolve_interactions(&mut item, &[receive], 7, 0.5).is_empty());
    assert_eq!(resolve_interactions(&mut item, &[receive], 8, 0.5), [RobotId::SH]);
    assert_eq!(item.stage(), 3);
}

#[test]
fn only_first_role_picks_up() {
    let mut item = ItemState::AtPickup { cell: Cell::new(2, 2) };
    let a = attempt(RobotId::FH, SubtaskKind::PickUp, Role::First, 0.25);
    let b = attempt(RobotId::SH, SubtaskKind::PickUp, Role::Second, 0.0);
    assert_eq!(resolve_interactions(&mut item, &[b, a], 0, 0.5), [RobotId::FH]);
    assert_eq!(item, ItemState::Carried { by: RobotId::FH, role: Role::First });

    // after a swap SH holds the first role and is the one that may pick up
    let mut item = ItemState::AtPickup { cell: Cell::new(2, 2) };
    let a = attempt(RobotId::FH, SubtaskKind::PickUp, Role::Second, 0.0);
    let b = Attempt { epoch: 1, ..attempt(RobotId::SH, SubtaskKind::PickUp, Role::First, 0.0) };
    assert_eq!(resolve_interactions(&mut item, &[a, b], 0, 0.5), [RobotId::SH]);
}

#[test]
fn interactions_need_the_interaction_radius() {
    let mut item = ItemState::AtPickup { cell: Cell::new(2, 2) };
    let far = attempt(RobotId::FH, SubtaskKind::PickUp, Role::First, 0.75);
    assert!(resolve_interactions(&mut item, &[far], 0, 0.5).is_empty());
    let unreachable = Attempt { distance: None, ..far };
    assert!(resolve_interactions(&mut item, &[unreachable], 0, 0.5).is_empty());
    assert_eq!(item.stage(), 0);
}

#[test]
fn deliver_needs_own_carry() {
    let mut item = ItemState::Carried { by: RobotId::SH, role: Role::Second };
    let wrong = attempt(RobotId::FH, SubtaskKind::Deliver, Role::Second, 0.0);
    assert!(resolve_interactions(&mut item, &[wrong], 0, 0.5).is_empty());
    let right = attempt(RobotId::SH, SubtaskKind::Deliver, Role::Second, 0.0);
    assert_eq!(resolve_interactions(&mut item, &[right], 0, 0.5), [RobotId::SH]);
    assert_eq!(item, ItemState::Delivered { cell: Cell::new(3, 2) });
}

fn blocked_runs() -> Vec<Rollout> {
    corpus()
        .iter()
        .map(|(s, ep)| {
            let mut cfg = RolloutConfig::default();
            if let Some(p) = plan_blockage(s, ep) {
                cfg.blockages.push(p.blockage);
            }
            run(s, ep, &cfg).unwrap()
        })
        .collect()
}

#[test]
fn trace_invariants_hold() {
    for (r, (s, _)) in blocked_runs().iter().zip(corpus()) {
        assert_eq!(r.trace.len() as u64, r.result.ticks);
        for (i, t) in r.trace.iter().enumerate() {
            assert_eq!(t.tick, i as u64);
            assert_eq!(t.robots.len(), 2);
            for rt in &t.robots {
                if rt.decision == ReplanDecision::SwapSubtasks {
                    assert!(t.robots.iter().all(|x| !x.carrying));
                }
            }
        }
        for w in r.trace.windows(2) {
            let (a, b) = (w[0].item.stage(), w[1].item.stage());
            assert!(b == a || b == a + 1, "item jumped {a} -> {b}");
            // each robot moves from its own previous pose alone
            for i in 0..2 {
                let (expect, hit) = s.step_kinematics(&w[0].robots[i].pose, w[1].robots[i].action);
                assert_eq!(w[1].robots[i].pose, expect);
                assert_eq!(w[1].robots[i].blocked, hit);
            }
        }
        let res = &r.result;
        assert_eq!(res.both_success, res.success_fh && res.success_sh);
        if res.success_fh {
            assert_eq!(res.subtasks_done_fh, res.subtasks_total_fh);
            assert!(res.ne_fh_m <= 1.0);
        }
        if res.success_sh {
            assert_eq!(res.subtasks_done_sh, res.subtasks_total_sh);
            assert!(res.ne_sh_m <= 1.0);
        }
        assert_eq!(res.subtasks_total_fh + res.subtasks_total_sh, 10);
    }
}

#[test]
fn blockage_plan_closes_a_corridor_on_a_route() {
    let mut planned = 0;
    for (s, ep) in corpus() {
        let Some(p) = plan_blockage(s, ep) else { continue };
        planned += 1;
        let c = s.corridors().iter().find(|c| c.corridor_id == p.blockage.corridor_id).unwrap();
        let on_route = ep.gt_path_fh.iter().chain(&ep.gt_path_sh).any(|x| c.gate_cells.contains(x));
        assert!(on_route);
        assert!(p.blockage.tick >= 1);
        let closed = s.apply_blockage(p.blockage.corridor_id).unwrap();
        let chains = ep.chains();
        let fh = closed.geodesic_steps(ep.start_pose_fh.cell(s.resolution()), chains.first[0].cell);
        let sh = closed.geodesic_steps(ep.start_pose_sh.cell(s.resolution()), chains.second[0].cell);
        assert!(fh.is_some() && sh.is_some());
    }
    assert!(planned > 0);
}

#[test]
fn trace_files_round_trip() {
    let (s, ep) = &corpus()[2];
    let dir = tempfile::tempdir().unwrap();
    let cfg = RolloutConfig::default();
    let runs = [
        run_lockstep(s, ep, &cfg).unwrap(),
        run_distributed(
            s,
            ep,
            TransportModel {
                latency: 3,
                jitter: 2,
                drop_prob: 0.2,
                seed: 9,
            },
            &cfg,
        )
        .unwrap(),
        run(s, ep, &RolloutConfig { t_max: 5, ..cfg.clone() }).unwrap(),
    ];
    for (i, r) in runs.iter().enumerate() {
        let path = dir.path().join(format!("t{i}.jsonl"));
        emit_trace(&r.trace, &path).unwrap();
        let back = load_trace(&path).unwrap();
        assert_eq!(back, r.trace);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), trace_to_string(&back));
    }
    assert_eq!(runs[2].trace.len(), 5);
}

#[test]
fn broken_trace_line_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(&path, "{\"tick\": 0}\n").unwrap();
    assert!(matches!(load_trace(&path), Err(SpeError::Parse(_))));
    assert!(matches!(load_trace(&dir.path().join("missing")), Err(SpeError::Io(_))));
}
