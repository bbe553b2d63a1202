use std::collections::VecDeque;

use crate::geometry::Point;
use crate::segment::BinaryMask;

/// Pixel lists of the 8-connected components, ordered by their first pixel
/// in row-major order. Each list starts with that first pixel.
pub fn trace_components(mask: &BinaryMask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = mask.dimensions();
    let mut seen = vec![false; w * h];
    let mut components = Vec::new();
    for start in 0..w * h {
        if !mask.data()[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut pixels = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push((x, y));
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if mask.get_signed(nx, ny) {
                        let j = ny as usize * w + nx as usize;
                        if !seen[j] {
                            seen[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        components.push(pixels);
    }
    components
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Dir {
    East,
    South,
    West,
    North,
}

impl Dir {
    fn step(self) -> (isize, isize) {
        match self {
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
            Dir::North => (0, -1),
        }
    }

    fn right(self) -> Dir {
        match self {
            Dir::East => Dir::South,
            Dir::South => Dir::West,
            Dir::West => Dir::North,
            Dir::North => Dir::East,
        }
    }

    fn left(self) -> Dir {
        match self {
            Dir::East => Dir::North,
            Dir::South => Dir::East,
            Dir::West => Dir::South,
            Dir::North => Dir::West,
        }
    }

    /// The two pixels in front of lattice vertex `(vx, vy)`, as
    /// `(ahead_left, ahead_right)`, with the foreground kept on the right.
    fn ahead(self, vx: isize, vy: isize) -> ((isize, isize), (isize, isize)) {
        match self {
            Dir::East => ((vx, vy - 1), (vx, vy)),
            Dir::South => ((vx, vy), (vx - 1, vy)),
            Dir::West => ((vx - 1, vy), (vx - 1, vy - 1)),
            Dir::North => ((vx - 1, vy - 1), (vx, vy - 1)),
        }
    }
}

/// Follows the outer boundary of the component whose row-major first pixel
/// is `(x0, y0)`, walking the pixel-corner lattice with the component on the
/// right. Moore-neighbourhood rule at each corner: turn towards a diagonal
/// foreground pixel before going straight, so 8-connected pixels stay in one
/// outline. Returns the corner vertices in pixel units.
fn follow_outline(mask: &BinaryMask, x0: usize, y0: usize) -> Vec<Point> {
    let start = (x0 as isize, y0 as isize);
    let mut pos = start;
    let mut dir = Dir::East;
    let mut corners = Vec::new();
    loop {
        let (dx, dy) = dir.step();
        pos = (pos.0 + dx, pos.1 + dy);
        let (l, r) = dir.ahead(pos.0, pos.1);
        let next = if mask.get_signed(l.0, l.1) {
            dir.left()
        } else if mask.get_signed(r.0, r.1) {
            dir
        } else {
            dir.right()
        };
        if next != dir {
            corners.push(Point::new(pos.0 as f64, pos.1 as f64));
        }
        dir = next;
        if pos == start {
            debug_assert_eq!(dir, Dir::East);
            break;
        }
    }
    // begin at the starting corner
    corners.rotate_right(1);
    corners
}

/// Traces every 8-connected component with at least `min_area` pixels.
///
/// Each polygon is the component's outer pixel outline (holes are not
/// traced), normalized by the mask size. Vertices run with positive signed
/// area in `(x, y)` coordinates, i.e. counter-clockwise in a y-up frame.
/// Polygons are ordered by component discovery (row-major first pixel).
pub fn mask_to_polygons(mask: &BinaryMask, min_area: usize) -> Vec<Vec<Point>> {
    let (w, h) = mask.dimensions();
    trace_components(mask)
        .into_iter()
        .filter(|c| c.len() >= min_area.max(1))
        .map(|c| {
            let (x0, y0) = c[0];
            follow_outline(mask, x0, y0)
                .into_iter()
                .map(|p| Point::new(p.x / w as f64, p.y / h as f64))
                .collect()
        })
        .collect()
}
