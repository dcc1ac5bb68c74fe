use super::*;
use crate::task::Chains;
use crate::world::{generate_scene, scene_from_ascii, ObjectSpec, SceneParams};
use proptest::prelude::*;

fn room(rows: &[&str], objects: &[ObjectSpec<'_>]) -> SceneGraph {
    scene_from_ascii("t", rows, &[RoomLabel::Kitchen], objects).unwrap()
}

fn two_rooms(rows: &[&str], objects: &[ObjectSpec<'_>]) -> SceneGraph {
    scene_from_ascii("t", rows, &[RoomLabel::Kitchen, RoomLabel::Bedroom], objects).unwrap()
}

const OPEN: [&str; 7] = [
    "##########",
    "#........#",
    "#........#",
    "#........#",
    "#........#",
    "#........#",
    "##########",
];

// two rooms split by a solid wall at x = 5
const SPLIT: [&str; 5] = ["###########", "#....#....#", "#....#....#", "#....#....#", "###########"];

fn agent_at(scene: &SceneGraph, cell: (i32, i32), heading: u16, goal: (i32, i32)) -> AgentState {
    let g = Cell::new(goal.0, goal.1);
    let ctx = PolicyContext::new(RobotId::FH, Chains::relay(g, g, g, g), "cup");
    let pose = Pose::at_cell(Cell::new(cell.0, cell.1), scene.resolution(), heading);
    AgentState::new(RobotId::FH, pose, scene, ctx)
}

fn sensor(range: f64, fov: f64) -> SensorConfig {
    SensorConfig { max_range: range, fov }
}

#[test]
fn zero_range_knows_only_own_cell() {
    let s = room(&OPEN, &[]);
    let mut a = agent_at(&s, (3, 3), 0, (7, 3));
    a.observe(&s, s.objects(), &sensor(0.0, 270.0));
    assert_eq!(a.belief.known_count(), 1);
    assert_eq!(a.belief.get(Cell::new(3, 3)), CellBelief::Free);
}

/// Samples the segment between cell centers; any blocked cell on the way
/// hides the far end.
fn sampled_ray_clear(scene: &SceneGraph, from: Cell, to: Cell) -> bool {
    let g = scene.grid();
    let (a, b) = (g.cell_center(from), g.cell_center(to));
    (1..200).all(|i| {
        let t = i as f64 / 200.0;
        let c = g.cell_of(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
        c == to || g.is_free(c)
    })
}

#[test]
fn object_behind_wall_is_not_observed() {
    let s = two_rooms(&SPLIT, &[("cup", (7, 2), 1.0, 0.0), ("bowl", (3, 2), 1.0, 0.0)]);
    let mut a = agent_at(&s, (1, 2), 0, (3, 2));
    let obs = a.observe(&s, s.objects(), &sensor(5.0, 270.0));
    assert!(!sampled_ray_clear(&s, Cell::new(1, 2), Cell::new(7, 2)));
    assert!(sampled_ray_clear(&s, Cell::new(1, 2), Cell::new(3, 2)));
    let cats: Vec<&str> = obs.objects.iter().map(|o| o.category.as_str()).collect();
    assert_eq!(cats, ["bowl"]);
    assert_eq!(a.belief.get(Cell::new(7, 2)), CellBelief::Unknown);
    assert_eq!(a.belief.get(Cell::new(5, 2)), CellBelief::Blocked);
}

#[test]
fn visible_cells_agree_with_sampled_rays_in_open_room() {
    let s = room(&OPEN, &[]);
    let pose = Pose::at_cell(Cell::new(2, 3), s.resolution(), 0);
    let seen = visible_cells(&s, &pose, &sensor(5.0, 360.0));
    for i in 0..s.grid().len() {
        let c = s.grid().cell_at(i);
        // every room cell is in range and has a clear ray in an empty room
        if s.is_free(c) {
            assert!(seen.contains(&c), "{c} missing");
            assert!(sampled_ray_clear(&s, Cell::new(2, 3), c));
        }
    }
}

#[test]
fn fov_limits_what_is_seen() {
    let s = room(&OPEN, &[]);
    let pose = Pose::at_cell(Cell::new(4, 3), s.resolution(), 0);
    let seen = visible_cells(&s, &pose, &sensor(5.0, 90.0));
    assert!(seen.contains(&Cell::new(7, 3)));
    assert!(!seen.contains(&Cell::new(1, 3)));
}

#[test]
fn observing_twice_changes_nothing() {
    let s = two_rooms(&SPLIT, &[("cup", (3, 2), 1.0, 0.0)]);
    let mut a = agent_at(&s, (1, 2), 0, (3, 2));
    let first = a.observe(&s, s.objects(), &sensor(5.0, 270.0));
    let belief = a.belief.clone();
    let second = a.observe(&s, s.objects(), &sensor(5.0, 270.0));
    assert_eq!(a.belief, belief);
    assert_eq!(first.objects, second.objects);
}

#[test]
fn plan_on_known_open_map_is_geodesic() {
    let s = room(&OPEN, &[]);
    let b = Belief::from_scene(&s);
    let (from, to) = (Cell::new(1, 1), Cell::new(8, 5));
    let p = b.straight_path(from, to, 0).unwrap();
    // no walls in between: the geodesic is the Manhattan distance
    assert_eq!(p.len() as u32 - 1, from.manhattan(to));
    assert_eq!(b.distance(from, to), Some(from.manhattan(to)));
}

#[test]
fn plan_at_goal_is_a_single_cell() {
    let s = room(&OPEN, &[]);
    let b = Belief::from_scene(&s);
    let p = b.straight_path(Cell::new(2, 2), Cell::new(2, 2), 0).unwrap();
    assert_eq!(p, [Cell::new(2, 2)]);
    let pose = Pose::at_cell(Cell::new(2, 2), s.resolution(), 0);
    assert_eq!(next_action(&pose, &p, s.resolution()), Action::Stop);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn known_map_plans_match_scene_geodesics(seed in 0u64..4, a in any::<usize>(), b in any::<usize>(), h in 0u16..24) {
        let s = generate_scene(seed, &SceneParams::default()).unwrap();
        let free: Vec<Cell> = (0..s.grid().len()).map(|i| s.grid().cell_at(i)).filter(|c| s.is_free(*c)).collect();
        let (from, to) = (free[a % free.len()], free[b % free.len()]);
        let belief = Belief::from_scene(&s);
        let p = belief.straight_path(from, to, h * 15).unwrap();
        prop_assert_eq!(p.len() as u32 - 1, s.geodesic_steps(from, to).unwrap());
        for w in p.windows(2) {
            prop_assert_eq!(w[0].manhattan(w[1]), 1);
            prop_assert!(s.is_free(w[1]));
        }
    }

    #[test]
    fn belief_only_grows(seed in 0u64..3, steps in prop::collection::vec(0u8..3, 1..40)) {
        let s = generate_scene(seed, &SceneParams::default()).unwrap();
        let start = (0..s.grid().len()).map(|i| s.grid().cell_at(i)).find(|c| s.is_free(*c)).unwrap();
        let mut a = agent_at(&s, (start.x, start.y), 0, (start.x, start.y));
        let mut known = 0;
        let mut blocked = 0;
        for st in steps {
            a.observe(&s, s.objects(), &SensorConfig::three_view());
            prop_assert!(a.belief.known_count() >= known);
            prop_assert!(a.belief.blocked_cells().len() >= blocked);
            known = a.belief.known_count();
            blocked = a.belief.blocked_cells().len();
            let action = [Action::MoveForward, Action::TurnLeft, Action::TurnRight][st as usize];
            a.pose = s.step_kinematics(&a.pose, action).0;
        }
    }
}

#[test]
fn undiscovered_wall_is_planned_through_then_avoided() {
    // the wall at x = 5 has a gap at y = 3
    let rows = ["###########", "#....#....#", "#....#....#", "#.........#", "###########"];
    let s = room(&rows, &[]);
    let mut a = agent_at(&s, (1, 1), 0, (8, 1));
    let cfg = AgentConfig::default();
    // nothing observed yet: the optimistic plan runs straight along y = 1
    a.decide(0, &cfg);
    let plan = a.plan.clone().unwrap();
    assert!(plan.path.contains(&Cell::new(5, 1)));
    // walk it: the wall shows up, the plan bends and the gap gets used
    let mut visited = vec![a.cell()];
    for t in 1..200 {
        a.observe(&s, s.objects(), &cfg.sensor);
        let intent = a.decide(t, &cfg);
        if let Some(p) = &a.plan {
            assert!(p.path.iter().all(|c| a.belief.passable(*c)));
        }
        if intent.attempt.is_some() {
            break;
        }
        let (next, bumped) = s.step_kinematics(&a.pose, intent.action);
        assert!(!bumped);
        a.pose = next;
        visited.push(a.cell());
    }
    assert!(visited.contains(&Cell::new(5, 3)));
    assert!(a.cell().manhattan(Cell::new(8, 1)) <= 4);
}

#[test]
fn blocked_edge_is_reported_once() {
    let s = room(&OPEN, &[]);
    let mut a = agent_at(&s, (2, 3), 0, (7, 3));
    a.observe(&s, s.objects(), &SensorConfig::three_view());
    a.decide(0, &AgentConfig::default());
    assert!(a.on_blocked(Cell::new(3, 3)));
    assert!(a.plan.is_none());
    assert_eq!(a.belief.get(Cell::new(3, 3)), CellBelief::Blocked);
    assert!(!a.on_blocked(Cell::new(3, 3)));
    let report = a.take_report(Vec::new());
    assert_eq!(report.blocked_edges, [(Cell::new(2, 3), Cell::new(3, 3))]);
    assert!(a.take_report(Vec::new()).blocked_edges.is_empty());

    // the next plan goes around, as short as BFS on the updated belief allows
    a.decide(1, &AgentConfig::default());
    let p = a.plan.clone().unwrap().path;
    assert!(!p.contains(&Cell::new(3, 3)));
    assert_eq!(p.len() as u32 - 1, a.belief.distance(Cell::new(2, 3), Cell::new(7, 3)).unwrap());
    assert_eq!(p.len() - 1, 7);
}

#[test]
fn plan_cell_turning_blocked_is_a_path_blocked_edge() {
    let s = room(&OPEN, &[]);
    let mut a = agent_at(&s, (2, 3), 0, (7, 3));
    a.observe(&s, s.objects(), &SensorConfig::three_view());
    a.decide(0, &AgentConfig::default());
    let mut rows: Vec<String> = OPEN.iter().map(|r| r.to_string()).collect();
    rows[3].replace_range(5..6, "#");
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    let closed = room(&rows, &[]);
    let obs = a.observe(&closed, closed.objects(), &SensorConfig::three_view());
    assert_eq!(obs.newly_blocked, [Cell::new(5, 3)]);
    assert_eq!(a.take_report(Vec::new()).blocked_edges, [(Cell::new(4, 3), Cell::new(5, 3))]);
}

#[test]
fn next_cell_ahead_moves_forward() {
    let pose = Pose::at_cell(Cell::new(2, 2), 0.25, 0);
    let path = [Cell::new(2, 2), Cell::new(3, 2)];
    assert_eq!(next_action(&pose, &path, 0.25), Action::MoveForward);
}

#[test]
fn next_cell_behind_turns_right_twelve_times() {
    let s = room(&OPEN, &[]);
    let mut pose = Pose::at_cell(Cell::new(4, 3), s.resolution(), 0);
    let path = [Cell::new(4, 3), Cell::new(3, 3)];
    let mut turns = 0;
    loop {
        let action = next_action(&pose, &path, s.resolution());
        if action == Action::MoveForward {
            break;
        }
        assert_eq!(action, Action::TurnRight);
        pose = s.step_kinematics(&pose, action).0;
        turns += 1;
    }
    assert_eq!(turns, 12);
    assert_eq!(pose.heading, 180);
}

#[test]
fn shorter_rotation_wins() {
    let pose = Pose::at_cell(Cell::new(4, 3), 0.25, 0);
    // +y is a right turn from heading 0
    assert_eq!(next_action(&pose, &[Cell::new(4, 3), Cell::new(4, 4)], 0.25), Action::TurnRight);
    assert_eq!(next_action(&pose, &[Cell::new(4, 3), Cell::new(4, 2)], 0.25), Action::TurnLeft);
}

#[test]
fn near_waypoint_stops_to_finish_goto() {
    let s = room(&OPEN, &[]);
    let mut a = agent_at(&s, (2, 3), 0, (5, 3));
    a.observe(&s, s.objects(), &SensorConfig::three_view());
    let intent = a.decide(0, &AgentConfig::default());
    // 3 cells = 0.75 m, inside r_succ
    assert_eq!(intent.action, Action::Stop);
    assert_eq!(intent.attempt, Some(SubtaskKind::GotoPickup));
}

#[test]
fn far_waypoint_moves() {
    let s = room(&OPEN, &[]);
    let mut a = agent_at(&s, (1, 3), 0, (8, 3));
    a.observe(&s, s.objects(), &SensorConfig::three_view());
    let intent = a.decide(0, &AgentConfig::default());
    assert_eq!(intent.action, Action::MoveForward);
    assert_eq!(intent.attempt, None);
}

#[test]
fn no_motion_means_no_progress() {
    let s = room(&OPEN, &[]);
    let mut a = agent_at(&s, (4, 3), 180, (8, 3));
    a.observe(&s, s.objects(), &SensorConfig::three_view());
    a.decide(0, &AgentConfig::default());
    assert_eq!(a.ctx.last_progress_tick, 0);
    // the engine never commits the turns: distance stays put
    for t in 1..30 {
        a.decide(t, &AgentConfig::default());
    }
    assert_eq!(a.ctx.last_progress_tick, 0);
}

#[test]
fn unreachable_goal_stops_the_agent() {
    let s = two_rooms(&SPLIT, &[]);
    let mut a = agent_at(&s, (1, 2), 0, (8, 2));
    a.belief = Belief::from_scene(&s);
    let intent = a.decide(0, &AgentConfig::default());
    assert_eq!(intent.action, Action::Stop);
    assert!(a.stopped);
}

#[test]
fn pickup_without_anchor_explores() {
    let s = room(&OPEN, &[]);
    let mut a = agent_at(&s, (1, 1), 0, (1, 1));
    a.ctx.cursor.index = 1;
    a.observe(&s, s.objects(), &sensor(0.5, 270.0));
    let intent = a.decide(0, &AgentConfig::default());
    assert_ne!(intent.action, Action::Stop);
    let goal = a.plan.as_ref().unwrap().goal;
    assert_eq!(a.belief.get(goal), CellBelief::Free);
    assert!(goal.neighbors4().iter().any(|n| a.belief.get(*n) == CellBelief::Unknown));
}
