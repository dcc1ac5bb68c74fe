//! Procedural indoor scene model: occupancy grid, room regions, semantic
//! objects, blockable corridors, robot kinematics and exact geodesic queries.

mod ascii;
pub mod catalog;
mod generate;
mod raycast;

pub use ascii::{scene_from_ascii, ObjectSpec};
pub use generate::{generate_scene, generate_scene_with_id, SceneParams};
pub use raycast::supercover;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Forward step length of the `move_forward` action, in meters.
pub const STEP_METERS: f64 = 0.25;
/// Heading quantum of the turn actions, in degrees.
pub const TURN_DEGREES: u16 = 15;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid scene parameters: {0}")]
    InvalidParams(String),
    #[error("scene generation failed for seed {seed} after {attempts} attempts: {reason}")]
    GenerationFailed {
        seed: u64,
        attempts: u32,
        reason: String,
    },
    #[error("unknown corridor id {0}")]
    UnknownCorridor(u32),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("scene file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene file parse: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Integer grid cell. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// 4-neighborhood in a fixed order (+x, -x, +y, -y).
    pub fn neighbors4(self) -> [Cell; 4] {
        [
            Cell::new(self.x + 1, self.y),
            Cell::new(self.x - 1, self.y),
            Cell::new(self.x, self.y + 1),
            Cell::new(self.x, self.y - 1),
        ]
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Cell::new(v[0], v[1])
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoomLabel {
    Bathroom,
    Bedroom,
    Kitchen,
    LivingRoom,
    DiningRoom,
    Corridor,
    Office,
    Hallway,
    Foyer,
    Unknown,
}

impl RoomLabel {
    /// Every label a room can actually carry (excludes `Unknown`).
    pub const KNOWN: [RoomLabel; 9] = [
        RoomLabel::Bathroom,
        RoomLabel::Bedroom,
        RoomLabel::Kitchen,
        RoomLabel::LivingRoom,
        RoomLabel::DiningRoom,
        RoomLabel::Corridor,
        RoomLabel::Office,
        RoomLabel::Hallway,
        RoomLabel::Foyer,
    ];

    pub fn is_known(self) -> bool {
        self != RoomLabel::Unknown
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RoomLabel::Bathroom => "Bathroom",
            RoomLabel::Bedroom => "Bedroom",
            RoomLabel::Kitchen => "Kitchen",
            RoomLabel::LivingRoom => "LivingRoom",
            RoomLabel::DiningRoom => "DiningRoom",
            RoomLabel::Corridor => "Corridor",
            RoomLabel::Office => "Office",
            RoomLabel::Hallway => "Hallway",
            RoomLabel::Foyer => "Foyer",
            RoomLabel::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for RoomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RoomLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoomLabel::KNOWN
            .iter()
            .chain(std::iter::once(&RoomLabel::Unknown))
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .copied()
            .ok_or_else(|| format!("unknown room label '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelProvenance {
    Rule,
    Vote,
    Adjudicated,
    GeneratorGroundTruth,
}

/// Occupancy grid; `true` marks a blocked cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: u32,
    height: u32,
    resolution: f64,
    occupancy: Vec<bool>,
}

impl GridMap {
    /// A grid with blocked border cells and a free interior.
    pub fn open(width: u32, height: u32, resolution: f64) -> Self {
        let mut grid = Self::filled(width, height, resolution, false);
        for x in 0..width as i32 {
            grid.set_blocked(Cell::new(x, 0), true);
            grid.set_blocked(Cell::new(x, height as i32 - 1), true);
        }
        for y in 0..height as i32 {
            grid.set_blocked(Cell::new(0, y), true);
            grid.set_blocked(Cell::new(width as i32 - 1, y), true);
        }
        grid
    }

    pub fn filled(width: u32, height: u32, resolution: f64, blocked: bool) -> Self {
        Self {
            width,
            height,
            resolution,
            occupancy: vec![blocked; (width * height) as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c)
            .then(|| c.y as usize * self.width as usize + c.x as usize)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(
            (index % self.width as usize) as i32,
            (index / self.width as usize) as i32,
        )
    }

    /// Out-of-bounds cells count as blocked.
    pub fn is_blocked(&self, c: Cell) -> bool {
        self.index(c).is_none_or(|i| self.occupancy[i])
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_blocked(c)
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        if let Some(i) = self.index(c) {
            self.occupancy[i] = blocked;
        }
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    pub fn blocked_cells(&self) -> Vec<Cell> {
        (0..self.occupancy.len())
            .filter(|&i| self.occupancy[i])
            .map(|i| self.cell_at(i))
            .collect()
    }

    /// Center of a cell in meters.
    pub fn cell_center(&self, c: Cell) -> (f64, f64) {
        (
            (c.x as f64 + 0.5) * self.resolution,
            (c.y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        Cell::new(
            (x / self.resolution).floor() as i32,
            (y / self.resolution).floor() as i32,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub region_id: u32,
    pub cells: Vec<Cell>,
    pub room_label: RoomLabel,
    pub label_provenance: LabelProvenance,
    /// Label the generator assigned; used to score labeling correctness.
    pub ground_truth_label: RoomLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub object_id: u32,
    pub category: String,
    pub cell: Cell,
    pub region_id: u32,
    pub salience: f64,
    pub occlusion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub corridor_id: u32,
    pub gate_cells: Vec<Cell>,
    pub blocked: bool,
}

/// Continuous robot pose. Heading is in degrees, a multiple of 15 in `[0, 360)`,
/// with 0 along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: u16,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: u16) -> Self {
        Self { x, y, heading }
    }

    /// Pose at the center of `cell`.
    pub fn at_cell(cell: Cell, resolution: f64, heading: u16) -> Self {
        Self {
            x: (cell.x as f64 + 0.5) * resolution,
            y: (cell.y as f64 + 0.5) * resolution,
            heading,
        }
    }

    pub fn cell(&self, resolution: f64) -> Cell {
        Cell::new(
            (self.x / resolution).floor() as i32,
            (self.y / resolution).floor() as i32,
        )
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }

    pub fn heading_is_valid(&self) -> bool {
        self.heading < 360 && self.heading.is_multiple_of(TURN_DEGREES)
    }
}

/// Unit direction for a quantized heading; exact on the axes.
pub fn heading_vector(heading: u16) -> (f64, f64) {
    match heading % 360 {
        0 => (1.0, 0.0),
        90 => (0.0, 1.0),
        180 => (-1.0, 0.0),
        270 => (0.0, -1.0),
        h => {
            let r = f64::from(h).to_radians();
            (r.cos(), r.sin())
        }
    }
}

/// Signed difference `to - from` in degrees, normalized to `(-180, 180]`.
pub fn angle_diff(from: f64, to: f64) -> f64 {
    let mut d = (to - from) % 360.0;
    if d <= -180.0 {
        d += 360.0;
    } else if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Bearing in degrees `[0, 360)` from a point to another.
pub fn bearing(from: (f64, f64), to: (f64, f64)) -> f64 {
    let b = (to.1 - from.1).atan2(to.0 - from.0).to_degrees();
    if b < 0.0 {
        b + 360.0
    } else {
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

/// Sensor model shared by the gates and the agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Meters.
    pub max_range: f64,
    /// Degrees, full cone.
    pub fov: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            max_range: 5.0,
            fov: 120.0,
        }
    }
}

impl SensorConfig {
    /// Three forward-left-right views per step, as the robots carry.
    pub fn three_view() -> Self {
        Self {
            max_range: 5.0,
            fov: 270.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub scene_id: String,
    pub seed: u64,
    pub resolution: f64,
}

/// The simulated world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SceneFile", try_from = "SceneFile")]
pub struct SceneGraph {
    pub meta: SceneMeta,
    grid: GridMap,
    regions: Vec<Region>,
    objects: Vec<SceneObject>,
    corridors: Vec<Corridor>,
    region_of_cell: Vec<Option<u32>>,
}

/// On-disk scene document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub meta: SceneMeta,
    pub grid: GridFile,
    pub regions: Vec<Region>,
    pub objects: Vec<SceneObject>,
    pub corridors: Vec<Corridor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    pub width: u32,
    pub height: u32,
    pub blocked_cells: Vec<Cell>,
}

impl From<SceneGraph> for SceneFile {
    fn from(s: SceneGraph) -> Self {
        SceneFile {
            grid: GridFile {
                width: s.grid.width,
                height: s.grid.height,
                blocked_cells: s.grid.blocked_cells(),
            },
            meta: s.meta,
            regions: s.regions,
            objects: s.objects,
            corridors: s.corridors,
        }
    }
}

impl TryFrom<SceneFile> for SceneGraph {
    type Error = WorldError;

    fn try_from(f: SceneFile) -> Result<Self, Self::Error> {
        if !(f.meta.resolution > 0.0) {
            return Err(WorldError::InvalidScene("resolution must be > 0".into()));
        }
        let mut grid = GridMap::filled(f.grid.width, f.grid.height, f.meta.resolution, false);
        for c in &f.grid.blocked_cells {
            if !grid.in_bounds(*c) {
                return Err(WorldError::InvalidScene(format!("blocked cell {c} out of bounds")));
            }
            grid.set_blocked(*c, true);
        }
        SceneGraph::new(f.meta, grid, f.regions, f.objects, f.corridors)
    }
}

impl SceneGraph {
    /// Assembles a scene and validates its structural invariants.
    pub fn new(
        meta: SceneMeta,
        grid: GridMap,
        regions: Vec<Region>,
        objects: Vec<SceneObject>,
        corridors: Vec<Corridor>,
    ) -> Result<Self, WorldError> {
        let mut region_of_cell = vec![None; grid.len()];
        for r in &regions {
            if r.cells.is_empty() {
                return Err(WorldError::InvalidScene(format!("region {} is empty", r.region_id)));
            }
            for c in &r.cells {
                let i = grid
                    .index(*c)
                    .ok_or_else(|| WorldError::InvalidScene(format!("region cell {c} out of bounds")))?;
                if region_of_cell[i].is_some() {
                    return Err(WorldError::InvalidScene(format!("cell {c} in two regions")));
                }
                region_of_cell[i] = Some(r.region_id);
            }
            if !cells_connected(&r.cells) {
                return Err(WorldError::InvalidScene(format!(
                    "region {} is not 4-connected",
                    r.region_id
                )));
            }
        }
        for o in &objects {
            let idx = grid.index(o.cell);
            if idx.and_then(|i| region_of_cell[i]) != Some(o.region_id) {
                return Err(WorldError::InvalidScene(format!(
                    "object {} not inside region {}",
                    o.object_id, o.region_id
                )));
            }
            if !(0.0..=1.0).contains(&o.salience) || !(0.0..=1.0).contains(&o.occlusion) {
                return Err(WorldError::InvalidScene(format!(
                    "object {} salience/occlusion outside [0,1]",
                    o.object_id
                )));
            }
        }
        for cor in &corridors {
            for c in &cor.gate_cells {
                if !grid.in_bounds(*c) {
                    return Err(WorldError::InvalidScene(format!("gate cell {c} out of bounds")));
                }
            }
        }
        let scene = SceneGraph {
            meta,
            grid,
            regions,
            objects,
            corridors,
            region_of_cell,
        };
        for r in &scene.regions {
            if r.cells.iter().any(|c| scene.grid.is_blocked(*c)) {
                return Err(WorldError::InvalidScene(format!(
                    "region {} contains a blocked cell",
                    r.region_id
                )));
            }
        }
        Ok(scene)
    }

    pub fn scene_id(&self) -> &str {
        &self.meta.scene_id
    }

    pub fn grid(&self) -> &GridMap {
        &self.grid
    }

    pub fn resolution(&self) -> f64 {
        self.grid.resolution
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn corridors(&self) -> &[Corridor] {
        &self.corridors
    }

    pub fn region(&self, id: u32) -> Option<&Region> {
        self.regions.iter().find(|r| r.region_id == id)
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.object_id == id)
    }

    pub fn objects_in_region(&self, region_id: u32) -> impl Iterator<Item = &SceneObject> {
        self.objects.iter().filter(move |o| o.region_id == region_id)
    }

    pub fn region_at(&self, c: Cell) -> Option<&Region> {
        let id = self.grid.index(c).and_then(|i| self.region_of_cell[i])?;
        self.region(id)
    }

    /// Room label of the region containing `c`, `Unknown` outside any region.
    pub fn room_label_at(&self, c: Cell) -> RoomLabel {
        self.region_at(c).map_or(RoomLabel::Unknown, |r| r.room_label)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.grid.is_free(c)
    }

    pub fn set_region_label(&mut self, region_id: u32, label: RoomLabel, provenance: LabelProvenance) -> bool {
        match self.regions.iter_mut().find(|r| r.region_id == region_id) {
            Some(r) => {
                r.room_label = label;
                r.label_provenance = provenance;
                true
            }
            None => false,
        }
    }

    /// Sets the blocked state of a corridor in place. Idempotent.
    pub fn set_corridor_blocked(&mut self, corridor_id: u32, blocked: bool) -> Result<(), WorldError> {
        let pos = self
            .corridors
            .iter()
            .position(|c| c.corridor_id == corridor_id)
            .ok_or(WorldError::UnknownCorridor(corridor_id))?;
        self.corridors[pos].blocked = blocked;
        let gates = self.corridors[pos].gate_cells.clone();
        for cell in gates {
            let still_blocked = blocked
                || self
                    .corridors
                    .iter()
                    .any(|c| c.blocked && c.gate_cells.contains(&cell));
            self.grid.set_blocked(cell, still_blocked);
        }
        Ok(())
    }

    /// Returns a copy of the scene with the corridor locked.
    pub fn apply_blockage(&self, corridor_id: u32) -> Result<SceneGraph, WorldError> {
        let mut next = self.clone();
        next.set_corridor_blocked(corridor_id, true)?;
        Ok(next)
    }

    pub fn blocked_corridors(&self) -> Vec<u32> {
        self.corridors
            .iter()
            .filter(|c| c.blocked)
            .map(|c| c.corridor_id)
            .collect()
    }

    /// BFS step counts from `from` over free cells (4-connected). `u32::MAX`
    /// marks unreachable cells.
    pub fn distance_field(&self, from: Cell) -> Vec<u32> {
        bfs_field(&self.grid, from, |c| self.grid.is_free(c))
    }

    /// Geodesic distance in meters, `None` when unreachable.
    pub fn geodesic_distance(&self, a: Cell, b: Cell) -> Option<f64> {
        self.geodesic_steps(a, b)
            .map(|s| s as f64 * self.grid.resolution)
    }

    pub fn geodesic_steps(&self, a: Cell, b: Cell) -> Option<u32> {
        if a == b {
            return Some(0);
        }
        if self.grid.is_blocked(a) || self.grid.is_blocked(b) {
            return None;
        }
        let field = self.distance_field(a);
        let d = field[self.grid.index(b)?];
        (d != u32::MAX).then_some(d)
    }

    /// A shortest 4-connected path from `a` to `b`, endpoints included.
    pub fn shortest_path(&self, a: Cell, b: Cell) -> Option<Vec<Cell>> {
        if a == b {
            return self.grid.is_free(a).then(|| vec![a]);
        }
        if self.grid.is_blocked(a) || self.grid.is_blocked(b) {
            return None;
        }
        bfs_path(&self.grid, a, b, |c| self.grid.is_free(c))
    }

    /// Field-of-view plus supercover ray test from an observer pose to a cell.
    pub fn line_of_sight(&self, from: &Pose, target: Cell, max_range: f64, fov: f64) -> bool {
        let here = from.cell(self.grid.resolution);
        if here == target {
            return true;
        }
        let center = self.grid.cell_center(target);
        if from.distance_to(center.0, center.1) > max_range {
            return false;
        }
        if !within_fov(from, center, fov) {
            return false;
        }
        supercover(here, target)
            .into_iter()
            .all(|c| self.grid.is_free(c))
    }

    /// Applies one action. A forward step commits only if the destination
    /// cell is free; otherwise the pose is unchanged and `blocked` is true.
    pub fn step_kinematics(&self, pose: &Pose, action: Action) -> (Pose, bool) {
        match action {
            Action::Stop => (*pose, false),
            Action::TurnLeft => (
                Pose {
                    heading: (pose.heading + 360 - TURN_DEGREES) % 360,
                    ..*pose
                },
                false,
            ),
            Action::TurnRight => (
                Pose {
                    heading: (pose.heading + TURN_DEGREES) % 360,
                    ..*pose
                },
                false,
            ),
            Action::MoveForward => {
                let (dx, dy) = heading_vector(pose.heading);
                let next = Pose {
                    x: pose.x + STEP_METERS * dx,
                    y: pose.y + STEP_METERS * dy,
                    heading: pose.heading,
                };
                if self.grid.is_free(next.cell(self.grid.resolution)) {
                    (next, false)
                } else {
                    (*pose, true)
                }
            }
        }
    }

    pub fn pose_is_valid(&self, pose: &Pose) -> bool {
        pose.heading_is_valid() && self.grid.is_free(pose.cell(self.grid.resolution))
    }

    pub fn to_json(&self) -> Result<String, WorldError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, WorldError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), WorldError> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Whether a point lies inside the observer's view cone (inclusive).
pub fn within_fov(from: &Pose, point: (f64, f64), fov: f64) -> bool {
    if fov >= 360.0 {
        return true;
    }
    let b = bearing((from.x, from.y), point);
    angle_diff(f64::from(from.heading), b).abs() <= fov / 2.0 + 1e-9
}

pub(crate) fn bfs_field(grid: &GridMap, from: Cell, passable: impl Fn(Cell) -> bool) -> Vec<u32> {
    let mut dist = vec![u32::MAX; grid.len()];
    let Some(start) = grid.index(from) else {
        return dist;
    };
    dist[start] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        let d = dist[grid.index(c).expect("queued cells are in bounds")];
        for n in c.neighbors4() {
            if let Some(i) = grid.index(n) {
                if dist[i] == u32::MAX && passable(n) {
                    dist[i] = d + 1;
                    queue.push_back(n);
                }
            }
        }
    }
    dist
}

pub(crate) fn bfs_path(
    grid: &GridMap,
    from: Cell,
    to: Cell,
    passable: impl Fn(Cell) -> bool,
) -> Option<Vec<Cell>> {
    let mut parent: Vec<u32> = vec![u32::MAX; grid.len()];
    let start = grid.index(from)?;
    let goal = grid.index(to)?;
    parent[start] = start as u32;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        let ci = grid.index(c).expect("queued cells are in bounds");
        if ci == goal {
            let mut path = vec![to];
            let mut i = goal;
            while i != start {
                i = parent[i] as usize;
                path.push(grid.cell_at(i));
            }
            path.reverse();
            return Some(path);
        }
        for n in c.neighbors4() {
            if let Some(i) = grid.index(n) {
                if parent[i] == u32::MAX && passable(n) {
                    parent[i] = ci as u32;
                    queue.push_back(n);
                }
            }
        }
    }
    None
}

fn cells_connected(cells: &[Cell]) -> bool {
    let set: BTreeSet<Cell> = cells.iter().copied().collect();
    let Some(first) = cells.first() else {
        return false;
    };
    let mut seen = BTreeSet::from([*first]);
    let mut queue = VecDeque::from([*first]);
    while let Some(c) = queue.pop_front() {
        for n in c.neighbors4() {
            if set.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == set.len()
}
