//! Discrete observation circle: the set of grid nodes approximating the
//! circle from the inside, forming a closed barrier for the 5-point stencil.
//!
//! Selection rule: for every grid-cell edge crossed by the circle, take the
//! inside endpoint. Any 4-step from an outside node to an inside node lands on
//! such a node by construction, so this base set already blocks all 5-point
//! stencil paths into the disc. Diagonal gaps between angle-consecutive nodes
//! are then closed with an extra in-circle node so the ring is 4-connected as
//! a curve.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone)]
pub struct SensorRing {
    grid: Grid,
    radius: f64,
    /// Ring nodes ordered by polar angle (ties by distance from the origin).
    nodes: Vec<(usize, usize)>,
    coords: Vec<(f64, f64)>,
}

impl SensorRing {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[(usize, usize)] {
        &self.nodes
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    /// Row-major storage indices of the ring nodes.
    pub fn linear_indices(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .map(|&(i, j)| self.grid.idx(i, j))
            .collect()
    }

    /// Per-node flag: true where the node is a sensor.
    pub fn ring_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.grid.len()];
        for &(i, j) in &self.nodes {
            mask[self.grid.idx(i, j)] = true;
        }
        mask
    }

    /// Per-node flag: true where a 5-point-stencil path from the square
    /// boundary reaches the node without crossing the ring. False exactly on
    /// the ring and in the region it encloses.
    pub fn outside_mask(&self) -> Vec<bool> {
        flood_from_edge(&self.grid, &self.ring_mask())
    }
}

/// BFS over the 4-neighborhood from every boundary node, walls blocking.
fn flood_from_edge(grid: &Grid, walls: &[bool]) -> Vec<bool> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut reached = vec![false; grid.len()];
    let mut queue = std::collections::VecDeque::new();
    let push = |i: usize,
                j: usize,
                reached: &mut Vec<bool>,
                queue: &mut std::collections::VecDeque<(usize, usize)>| {
        let idx = grid.idx(i, j);
        if !reached[idx] && !walls[idx] {
            reached[idx] = true;
            queue.push_back((i, j));
        }
    };
    for i in 0..nx {
        push(i, 0, &mut reached, &mut queue);
        push(i, ny - 1, &mut reached, &mut queue);
    }
    for j in 0..ny {
        push(0, j, &mut reached, &mut queue);
        push(nx - 1, j, &mut reached, &mut queue);
    }
    while let Some((i, j)) = queue.pop_front() {
        if i > 0 {
            push(i - 1, j, &mut reached, &mut queue);
        }
        if i + 1 < nx {
            push(i + 1, j, &mut reached, &mut queue);
        }
        if j > 0 {
            push(i, j - 1, &mut reached, &mut queue);
        }
        if j + 1 < ny {
            push(i, j + 1, &mut reached, &mut queue);
        }
    }
    reached
}

pub fn build_sensor_ring(grid: Grid, radius: f64) -> Result<SensorRing> {
    if !(radius > 0.0) {
        return Err(Error::SensorRing(format!("radius = {radius}")));
    }
    let (x0, y0) = grid.origin();
    let x_end = grid.node(grid.nx() - 1, 0).0;
    let y_end = grid.node(0, grid.ny() - 1).1;
    if x0 > -radius - 0.5 * grid.h()
        || y0 > -radius - 0.5 * grid.h()
        || x_end < radius + 0.5 * grid.h()
        || y_end < radius + 0.5 * grid.h()
    {
        return Err(Error::SensorRing(format!(
            "grid [{x0}, {x_end}] x [{y0}, {y_end}] does not cover the circle of radius {radius}"
        )));
    }

    // the relative slack keeps nodes that land exactly on the circle (the
    // lattice hits Pythagorean points) classified identically on all sides,
    // so symmetric grids produce symmetric rings
    let r2 = radius * radius * (1.0 + 1e-12);
    let inside = |i: usize, j: usize| -> bool {
        let (x, y) = grid.node(i, j);
        x * x + y * y <= r2
    };

    // base set: inside endpoints of circle-crossing edges
    let mut picked = std::collections::BTreeSet::new();
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            if !inside(i, j) {
                continue;
            }
            let boundary_adjacent = (i > 0 && !inside(i - 1, j))
                || (i + 1 < grid.nx() && !inside(i + 1, j))
                || (j > 0 && !inside(i, j - 1))
                || (j + 1 < grid.ny() && !inside(i, j + 1));
            if boundary_adjacent {
                picked.insert((i, j));
            }
        }
    }

    let angle_order = |&(i, j): &(usize, usize)| -> (f64, f64) {
        let (x, y) = grid.node(i, j);
        (y.atan2(x), x.hypot(y))
    };
    let mut ring: Vec<(usize, usize)> = picked.iter().copied().collect();
    ring.sort_by(|a, b| angle_order(a).partial_cmp(&angle_order(b)).unwrap());

    // close diagonal gaps between angle-consecutive nodes
    let mut extra = Vec::new();
    for k in 0..ring.len() {
        let a = ring[k];
        let b = ring[(k + 1) % ring.len()];
        let di = b.0 as isize - a.0 as isize;
        let dj = b.1 as isize - a.1 as isize;
        if di.abs() == 1 && dj.abs() == 1 {
            let c1 = (b.0, a.1);
            let c2 = (a.0, b.1);
            let candidates: Vec<(usize, usize)> = [c1, c2]
                .into_iter()
                .filter(|&(i, j)| inside(i, j))
                .collect();
            let chosen = match candidates.len() {
                0 => None,
                1 => Some(candidates[0]),
                _ => {
                    // prefer the candidate nearer the circle; exact ties go to
                    // the smaller polar angle
                    let key = |&(i, j): &(usize, usize)| {
                        let (x, y) = grid.node(i, j);
                        x.hypot(y)
                    };
                    let (ra, rb) = (key(&candidates[0]), key(&candidates[1]));
                    if ra > rb {
                        Some(candidates[0])
                    } else if rb > ra {
                        Some(candidates[1])
                    } else if angle_order(&candidates[0]) <= angle_order(&candidates[1]) {
                        Some(candidates[0])
                    } else {
                        Some(candidates[1])
                    }
                }
            };
            if let Some(c) = chosen {
                if !picked.contains(&c) {
                    extra.push(c);
                }
            }
        }
    }
    for c in extra {
        picked.insert(c);
    }

    let mut nodes: Vec<(usize, usize)> = picked.into_iter().collect();
    nodes.sort_by(|a, b| angle_order(a).partial_cmp(&angle_order(b)).unwrap());

    if nodes.len() < 8 {
        return Err(Error::SensorRing(format!(
            "grid too coarse: ring has only {} nodes",
            nodes.len()
        )));
    }

    let coords: Vec<(f64, f64)> = nodes.iter().map(|&(i, j)| grid.node(i, j)).collect();
    let max_gap = grid.h() * std::f64::consts::SQRT_2 * (1.0 + 1e-9);
    for &(x, y) in &coords {
        let d = radius - x.hypot(y);
        if d < -1e-12 * radius || d > max_gap {
            return Err(Error::SensorRing(format!(
                "node ({x}, {y}) at distance {d} from the circle (limit {max_gap})"
            )));
        }
    }

    let ring = SensorRing {
        grid,
        radius,
        nodes,
        coords,
    };

    // closed-barrier invariant: the flood fill from the square edge must not
    // penetrate past the ring
    let reached = ring.outside_mask();
    let guard = radius - 2.0 * grid.h();
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let (x, y) = grid.node(i, j);
            if x.hypot(y) < guard && reached[grid.idx(i, j)] {
                return Err(Error::SensorRing(format!("barrier leak at ({x}, {y})")));
            }
        }
    }

    Ok(ring)
}
