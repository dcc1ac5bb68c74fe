//! Small hand-drawn scenes, mostly for tests and examples.
//!
//! `#` is a wall, `.` a room cell and `D` a door cell. Rooms are the
//! 4-connected components of `.` cells, numbered in row-major discovery
//! order; 4-connected groups of `D` cells become corridors. Row 0 is `y = 0`.

use super::{
    Cell, Corridor, GridMap, LabelProvenance, Region, RoomLabel, SceneGraph, SceneMeta, SceneObject, WorldError,
};
use std::collections::VecDeque;

/// An object to place: category, cell, salience, occlusion.
pub type ObjectSpec<'a> = (&'a str, (i32, i32), f64, f64);

pub fn scene_from_ascii(
    scene_id: &str,
    rows: &[&str],
    labels: &[RoomLabel],
    objects: &[ObjectSpec<'_>],
) -> Result<SceneGraph, WorldError> {
    let height = rows.len() as u32;
    let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0) as u32;
    let bad = |m: String| WorldError::InvalidScene(m);
    if width == 0 || height == 0 {
        return Err(bad("empty map".into()));
    }
    let mut grid = GridMap::filled(width, height, 0.25, true);
    let mut kind = vec![b'#'; (width * height) as usize];
    for (y, row) in rows.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            let c = Cell::new(x as i32, y as i32);
            let i = grid.index(c).expect("in bounds");
            match ch {
                '#' => {}
                '.' | 'D' => {
                    grid.set_blocked(c, false);
                    kind[i] = ch as u8;
                }
                other => return Err(bad(format!("unexpected map character {other:?} at {c}"))),
            }
        }
    }

    let components = |want: u8| -> Vec<Vec<Cell>> {
        let mut seen = vec![false; kind.len()];
        let mut out = Vec::new();
        for i in 0..kind.len() {
            if kind[i] != want || seen[i] {
                continue;
            }
            seen[i] = true;
            let mut cells = Vec::new();
            let mut q = VecDeque::from([grid.cell_at(i)]);
            while let Some(c) = q.pop_front() {
                cells.push(c);
                for n in c.neighbors4() {
                    if let Some(j) = grid.index(n) {
                        if kind[j] == want && !seen[j] {
                            seen[j] = true;
                            q.push_back(n);
                        }
                    }
                }
            }
            cells.sort();
            out.push(cells);
        }
        out
    };

    let rooms = components(b'.');
    if labels.len() != rooms.len() {
        return Err(bad(format!("map has {} rooms but {} labels were given", rooms.len(), labels.len())));
    }
    let regions: Vec<Region> = rooms
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (cells, label))| Region {
            region_id: i as u32,
            cells,
            room_label: *label,
            label_provenance: LabelProvenance::GeneratorGroundTruth,
            ground_truth_label: *label,
        })
        .collect();
    let corridors: Vec<Corridor> = components(b'D')
        .into_iter()
        .enumerate()
        .map(|(i, gate_cells)| Corridor {
            corridor_id: i as u32,
            gate_cells,
            blocked: false,
        })
        .collect();
    let mut placed = Vec::with_capacity(objects.len());
    for (i, (category, (x, y), salience, occlusion)) in objects.iter().enumerate() {
        let cell = Cell::new(*x, *y);
        let region_id = regions
            .iter()
            .find(|r| r.cells.binary_search(&cell).is_ok())
            .map(|r| r.region_id)
            .ok_or_else(|| bad(format!("object {category} at {cell} is not inside a room")))?;
        placed.push(SceneObject {
            object_id: i as u32,
            category: category.to_string(),
            cell,
            region_id,
            salience: *salience,
            occlusion: *occlusion,
        });
    }
    let meta = SceneMeta {
        scene_id: scene_id.to_string(),
        seed: 0,
        resolution: 0.25,
    };
    SceneGraph::new(meta, grid, regions, placed, corridors)
}
