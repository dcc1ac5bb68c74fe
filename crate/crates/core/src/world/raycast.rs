//! Supercover grid traversal between cell centers.

use super::Cell;

/// Returns every cell touched by the closed segment joining the centers of
/// `from` and `to`, in traversal order, including both endpoints.
///
/// When the segment passes exactly through a grid corner both side cells are
/// emitted, so diagonal leaks between two blocked cells are impossible.
pub fn supercover(from: Cell, to: Cell) -> Vec<Cell> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let nx = dx.unsigned_abs() as i64;
    let ny = dy.unsigned_abs() as i64;
    let sx = dx.signum();
    let sy = dy.signum();

    let mut cells = Vec::with_capacity((nx + ny + 1) as usize);
    let mut p = from;
    cells.push(p);
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < nx || iy < ny {
        // Compare where the segment crosses the next vertical vs horizontal
        // cell boundary; equality means it crosses through a corner.
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            cells.push(Cell::new(p.x + sx, p.y));
            cells.push(Cell::new(p.x, p.y + sy));
            p = Cell::new(p.x + sx, p.y + sy);
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            p = Cell::new(p.x + sx, p.y);
            ix += 1;
        } else {
            p = Cell::new(p.x, p.y + sy);
            iy += 1;
        }
        cells.push(p);
    }
    cells
}
