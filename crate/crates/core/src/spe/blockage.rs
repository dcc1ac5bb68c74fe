//! Picks a corridor to close on a ground-truth route, for blockage runs.

use super::Blockage;
use crate::rove::EpisodeSpec;
use crate::world::{Cell, SceneGraph};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockagePlan {
    pub blockage: Blockage,
    /// Extra first-half distance to the pickup waypoint, meters.
    pub detour_m: f64,
    /// Whether the corridor lies before the pickup on the first-half route.
    pub before_pickup: bool,
}

/// Chooses a corridor crossed by a ground-truth route whose closure keeps
/// every stop reachable for both robots.
///
/// Corridors on the first-half leg toward the pickup come first, ranked by
/// the detour they force; the closing tick is half the number of steps the
/// route needs to reach the corridor, so the robot has not passed it yet.
pub fn plan_blockage(scene: &SceneGraph, ep: &EpisodeSpec) -> Option<BlockagePlan> {
    let start_fh = ep.start_pose_fh.cell(scene.resolution());
    let start_sh = ep.start_pose_sh.cell(scene.resolution());
    let res = scene.resolution();
    let pickup = ep.pickup_waypoint.cell(res);
    let handoff = ep.handoff_waypoint.cell(res);
    let delivery = ep.delivery_waypoint.cell(res);
    let split = ep.gt_path_fh.iter().position(|c| *c == pickup).unwrap_or(0);
    let base = scene.geodesic_distance(start_fh, pickup)?;

    let first_hit = |path: &[Cell], gates: &[Cell]| path.iter().position(|c| gates.contains(c));
    let mut best: Option<(BlockagePlan, (bool, i64, u32))> = None;
    for corridor in scene.corridors() {
        if corridor.blocked {
            continue;
        }
        let gates = &corridor.gate_cells;
        let (step, before) = match first_hit(&ep.gt_path_fh, gates) {
            Some(i) => (i, i <= split),
            None => match first_hit(&ep.gt_path_sh, gates) {
                Some(i) => (i, false),
                None => continue,
            },
        };
        let Ok(closed) = scene.apply_blockage(corridor.corridor_id) else {
            continue;
        };
        let legs = [
            (start_fh, pickup),
            (start_fh, handoff),
            (start_sh, pickup),
            (start_sh, handoff),
            (pickup, handoff),
            (handoff, delivery),
        ];
        if legs.iter().any(|(a, b)| closed.geodesic_steps(*a, *b).is_none()) {
            continue;
        }
        let detour = closed.geodesic_distance(start_fh, pickup)? - base;
        let plan = BlockagePlan {
            blockage: Blockage {
                tick: (step as u64 / 2).max(1),
                corridor_id: corridor.corridor_id,
            },
            detour_m: detour,
            before_pickup: before,
        };
        let key = (before, (detour / res).round() as i64, u32::MAX - corridor.corridor_id);
        if best.as_ref().is_none_or(|(_, k)| key > *k) {
            best = Some((plan, key));
        }
    }
    best.map(|(p, _)| p)
}
