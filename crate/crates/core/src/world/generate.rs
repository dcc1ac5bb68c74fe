//! Binary-space-partition house generator.
//!
//! The interior is recursively split into rectangular rooms separated by
//! one-cell walls. Every pair of rooms sharing a long enough wall gets a door
//! (a [`Corridor`]), so the free space is connected and usually has cycles.

use super::catalog::{signature_objects, PORTABLE_CATEGORIES};
use super::{
    Cell, Corridor, GridMap, LabelProvenance, Region, RoomLabel, SceneGraph, SceneMeta, SceneObject,
    WorldError,
};
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    pub width: u32,
    pub height: u32,
    /// Meters per cell.
    pub resolution: f64,
    pub regions: usize,
    /// Minimum room interior side, in cells.
    pub min_room_size: u32,
    pub door_width: u32,
    /// Portable items scattered over the scene (distinct categories).
    pub portable_objects: usize,
    /// Probability that a room gets a cabinet (a handoff fixture).
    pub cabinet_prob: f64,
    /// Probability that a room gets one signature object of another room type.
    pub stray_prob: f64,
    pub max_retries: u32,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            resolution: 0.25,
            regions: 6,
            min_room_size: 6,
            door_width: 2,
            portable_objects: 4,
            cabinet_prob: 0.5,
            stray_prob: 0.15,
            max_retries: 8,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::InvalidParams(m));
        if self.regions < 3 {
            return bad(format!("regions = {} is below the minimum of 3", self.regions));
        }
        if self.width > 256 || self.height > 256 {
            return bad(format!("grid {}x{} exceeds 256x256", self.width, self.height));
        }
        if self.width < 8 || self.height < 8 {
            return bad(format!("grid {}x{} is too small", self.width, self.height));
        }
        if !(self.resolution > 0.0) {
            return bad("resolution must be > 0".into());
        }
        if self.min_room_size < self.door_width + 2 || self.door_width == 0 {
            return bad("min_room_size must be at least door_width + 2 and door_width >= 1".into());
        }
        if self.portable_objects > PORTABLE_CATEGORIES.len() {
            return bad(format!(
                "at most {} portable objects are supported",
                PORTABLE_CATEGORIES.len()
            ));
        }
        for (name, p) in [("cabinet_prob", self.cabinet_prob), ("stray_prob", self.stray_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0,1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Rect {
    fn w(&self) -> i32 {
        self.x1 - self.x0 + 1
    }
    fn h(&self) -> i32 {
        self.y1 - self.y0 + 1
    }
    fn area(&self) -> i32 {
        self.w() * self.h()
    }
}

/// Generates a scene as a pure function of `(seed, params)`.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<SceneGraph, WorldError> {
    generate_scene_with_id(&format!("scene-{seed:016x}"), seed, params)
}

pub fn generate_scene_with_id(
    scene_id: &str,
    seed: u64,
    params: &SceneParams,
) -> Result<SceneGraph, WorldError> {
    params.validate()?;
    let mut last_reason = String::new();
    for attempt in 0..params.max_retries.max(1) {
        let mut rng = seed::rng(seed, "scene-layout", u64::from(attempt));
        match try_generate(scene_id, seed, params, &mut rng) {
            Ok(scene) => return Ok(scene),
            Err(reason) => last_reason = reason,
        }
    }
    Err(WorldError::GenerationFailed {
        seed,
        attempts: params.max_retries.max(1),
        reason: last_reason,
    })
}

fn try_generate(
    scene_id: &str,
    seed: u64,
    params: &SceneParams,
    rng: &mut ChaCha8Rng,
) -> Result<SceneGraph, String> {
    let rects = partition(params, rng)?;

    let mut grid = GridMap::filled(params.width, params.height, params.resolution, true);
    for r in &rects {
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                grid.set_blocked(Cell::new(x, y), false);
            }
        }
    }

    let mut corridors = Vec::new();
    for i in 0..rects.len() {
        for j in i + 1..rects.len() {
            if let Some(gates) = door_between(&rects[i], &rects[j], params.door_width as i32, rng) {
                for g in &gates {
                    grid.set_blocked(*g, false);
                }
                corridors.push(Corridor {
                    corridor_id: corridors.len() as u32,
                    gate_cells: gates,
                    blocked: false,
                });
            }
        }
    }

    let labels = assign_labels(rects.len(), rng);
    let mut regions = Vec::with_capacity(rects.len());
    for (i, r) in rects.iter().enumerate() {
        let mut cells = Vec::with_capacity(r.area() as usize);
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                cells.push(Cell::new(x, y));
            }
        }
        regions.push(Region {
            region_id: i as u32,
            cells,
            room_label: labels[i],
            label_provenance: LabelProvenance::GeneratorGroundTruth,
            ground_truth_label: labels[i],
        });
    }

    if !all_regions_connected(&grid, &regions) {
        return Err("free space is not connected".into());
    }

    let objects = place_objects(&regions, params, rng)?;
    let meta = SceneMeta {
        scene_id: scene_id.to_string(),
        seed,
        resolution: params.resolution,
    };
    SceneGraph::new(meta, grid, regions, objects, corridors).map_err(|e| e.to_string())
}

fn partition(params: &SceneParams, rng: &mut ChaCha8Rng) -> Result<Vec<Rect>, String> {
    let min = params.min_room_size as i32;
    let mut rects = vec![Rect {
        x0: 1,
        y0: 1,
        x1: params.width as i32 - 2,
        y1: params.height as i32 - 2,
    }];
    while rects.len() < params.regions {
        let mut order: Vec<usize> = (0..rects.len()).collect();
        order.sort_by_key(|&i| (-rects[i].area(), i));
        let mut split = None;
        for i in order {
            let r = rects[i];
            let vertical_first = r.w() >= r.h();
            for vertical in [vertical_first, !vertical_first] {
                let span = if vertical { r.w() } else { r.h() };
                if span > 2 * min {
                    split = Some((i, vertical));
                    break;
                }
            }
            if split.is_some() {
                break;
            }
        }
        let (i, vertical) = split.ok_or("no room is large enough to split further")?;
        let r = rects.swap_remove(i);
        if vertical {
            let s = rng.gen_range(r.x0 + min..=r.x1 - min);
            rects.push(Rect { x1: s - 1, ..r });
            rects.push(Rect { x0: s + 1, ..r });
        } else {
            let s = rng.gen_range(r.y0 + min..=r.y1 - min);
            rects.push(Rect { y1: s - 1, ..r });
            rects.push(Rect { y0: s + 1, ..r });
        }
    }
    rects.sort_by_key(|r| (r.y0, r.x0));
    Ok(rects)
}

fn door_between(a: &Rect, b: &Rect, door: i32, rng: &mut ChaCha8Rng) -> Option<Vec<Cell>> {
    let overlap = |lo1: i32, hi1: i32, lo2: i32, hi2: i32| (lo1.max(lo2), hi1.min(hi2));
    // vertical wall between a and b
    for (l, r) in [(a, b), (b, a)] {
        if l.x1 + 2 == r.x0 {
            let (lo, hi) = overlap(l.y0, l.y1, r.y0, r.y1);
            if hi - lo + 1 >= door + 2 {
                let start = rng.gen_range(lo + 1..=hi - door);
                return Some((start..start + door).map(|y| Cell::new(l.x1 + 1, y)).collect());
            }
        }
        if l.y1 + 2 == r.y0 {
            let (lo, hi) = overlap(l.x0, l.x1, r.x0, r.x1);
            if hi - lo + 1 >= door + 2 {
                let start = rng.gen_range(lo + 1..=hi - door);
                return Some((start..start + door).map(|x| Cell::new(x, l.y1 + 1)).collect());
            }
        }
    }
    None
}

fn assign_labels(n: usize, rng: &mut ChaCha8Rng) -> Vec<RoomLabel> {
    let mut pool: Vec<RoomLabel> = RoomLabel::KNOWN.to_vec();
    pool.shuffle(rng);
    (0..n)
        .map(|i| {
            if i < pool.len() {
                pool[i]
            } else {
                *RoomLabel::KNOWN.choose(rng).expect("non-empty")
            }
        })
        .collect()
}

fn all_regions_connected(grid: &GridMap, regions: &[Region]) -> bool {
    let start = regions[0].cells[0];
    let field = super::bfs_field(grid, start, |c| grid.is_free(c));
    regions
        .iter()
        .flat_map(|r| r.cells.iter())
        .all(|c| field[grid.index(*c).expect("region cells are in bounds")] != u32::MAX)
}

fn place_objects(
    regions: &[Region],
    params: &SceneParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SceneObject>, String> {
    let mut free: Vec<Vec<Cell>> = regions
        .iter()
        .map(|r| {
            let mut cells = r.cells.clone();
            cells.shuffle(rng);
            cells
        })
        .collect();
    let mut objects = Vec::new();
    let put = |objects: &mut Vec<SceneObject>,
                   free: &mut Vec<Vec<Cell>>,
                   region: usize,
                   category: &str,
                   salience: f64,
                   occlusion: f64|
     -> Result<(), String> {
        let cell = free[region]
            .pop()
            .ok_or_else(|| format!("region {region} has no room for more objects"))?;
        objects.push(SceneObject {
            object_id: objects.len() as u32,
            category: category.to_string(),
            cell,
            region_id: regions[region].region_id,
            salience,
            occlusion,
        });
        Ok(())
    };

    let signature_rooms: Vec<RoomLabel> = RoomLabel::KNOWN
        .into_iter()
        .filter(|l| !signature_objects(*l).is_empty())
        .collect();

    for (i, region) in regions.iter().enumerate() {
        for cat in signature_objects(region.ground_truth_label) {
            let (s, o) = (rng.gen_range(0.7..=1.0), rng.gen_range(0.0..=0.25));
            put(&mut objects, &mut free, i, cat, s, o)?;
        }
        let (s, o) = (rng.gen_range(0.7..=1.0), rng.gen_range(0.0..=0.25));
        put(&mut objects, &mut free, i, "side_table", s, o)?;
        if rng.gen_bool(params.cabinet_prob) {
            let (s, o) = (rng.gen_range(0.7..=1.0), rng.gen_range(0.0..=0.25));
            put(&mut objects, &mut free, i, "cabinet", s, o)?;
        }
        if rng.gen_bool(params.stray_prob) {
            let others: Vec<RoomLabel> = signature_rooms
                .iter()
                .copied()
                .filter(|l| *l != region.ground_truth_label)
                .collect();
            let label = *others.choose(rng).expect("non-empty");
            let cat = *signature_objects(label).choose(rng).expect("non-empty");
            let (s, o) = (rng.gen_range(0.5..=1.0), rng.gen_range(0.0..=0.5));
            put(&mut objects, &mut free, i, cat, s, o)?;
        }
    }

    let mut portable: Vec<&str> = PORTABLE_CATEGORIES.to_vec();
    portable.shuffle(rng);
    for cat in portable.into_iter().take(params.portable_objects) {
        let region = rng.gen_range(0..regions.len());
        let (s, o) = (rng.gen_range(0.6..=1.0), rng.gen_range(0.0..=0.3));
        put(&mut objects, &mut free, region, cat, s, o)?;
    }
    Ok(objects)
}

/// Flood fill used by tests and callers that need a reachability oracle
/// independent of the distance field.
#[cfg(test)]
pub(crate) fn reachable_set(grid: &GridMap, from: Cell) -> Vec<bool> {
    let mut seen = vec![false; grid.len()];
    let Some(i) = grid.index(from) else {
        return seen;
    };
    if grid.is_blocked(from) {
        return seen;
    }
    seen[i] = true;
    let mut q = std::collections::VecDeque::from([from]);
    while let Some(c) = q.pop_front() {
        for n in c.neighbors4() {
            if let Some(j) = grid.index(n) {
                if !seen[j] && grid.is_free(n) {
                    seen[j] = true;
                    q.push_back(n);
                }
            }
        }
    }
    seen
}
