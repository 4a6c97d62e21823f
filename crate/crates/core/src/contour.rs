//! Zero-level contours of a planar function on a triangulation, with each
//! crossing refined by bisection on the exact function.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// A connected piece of a contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

fn bisect(g: &impl Fn([f64; 2]) -> f64, a: [f64; 2], b: [f64; 2], ga: f64) -> [f64; 2] {
    let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let sa = ga >= 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(at(mid)) >= 0.0) == sa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint of the final bracket with the smaller |g|.
    let (pl, ph) = (at(lo), at(hi));
    if g(pl).abs() <= g(ph).abs() {
        pl
    } else {
        ph
    }
}

/// Traces {g = 0} over `triangles` (indices into `vertices`). Vertices with
/// g ≥ 0 count as positive.
pub fn contour(vertices: &[[f64; 2]], triangles: &[[usize; 3]], g: impl Fn([f64; 2]) -> f64) -> Vec<Polyline> {
    let values: Vec<f64> = vertices.iter().map(|&v| g(v)).collect();
    let positive = |i: usize| values[i] >= 0.0;
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };

    let mut points: HashMap<(usize, usize), [f64; 2]> = HashMap::new();
    let mut adjacency: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for tri in triangles {
        let mut cut = Vec::with_capacity(2);
        for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            if positive(a) != positive(b) {
                let k = key(a, b);
                points
                    .entry(k)
                    .or_insert_with(|| bisect(&g, vertices[k.0], vertices[k.1], values[k.0]));
                cut.push(k);
            }
        }
        if let [p, q] = cut[..] {
            for (x, y) in [(p, q), (q, p)] {
                let list = adjacency.entry(x).or_insert_with(|| {
                    order.push(x);
                    Vec::new()
                });
                list.push(y);
            }
        }
    }

    let mut used: HashMap<(usize, usize), bool> = HashMap::new();
    let mut lines = Vec::new();
    let trace = |start: (usize, usize), used: &mut HashMap<(usize, usize), bool>| {
        let mut chain = vec![start];
        used.insert(start, true);
        let mut current = start;
        let mut closed = false;
        loop {
            let next = adjacency[&current].iter().find(|n| !used.get(n).copied().unwrap_or(false));
            match next {
                Some(&n) => {
                    used.insert(n, true);
                    chain.push(n);
                    current = n;
                }
                None => {
                    if chain.len() > 2 && adjacency[&current].contains(&start) {
                        closed = true;
                    }
                    break;
                }
            }
        }
        let mut pts: Vec<[f64; 2]> = chain.iter().map(|k| points[k]).collect();
        if closed {
            pts.push(pts[0]);
        }
        Polyline { points: pts, closed }
    };
    // Open chains start at a crossing with one neighbour.
    for &k in &order {
        if !used.contains_key(&k) && adjacency[&k].len() == 1 {
            lines.push(trace(k, &mut used));
        }
    }
    for &k in &order {
        if !used.contains_key(&k) {
            lines.push(trace(k, &mut used));
        }
    }
    lines
}

/// Vertices and triangles of an nx × ny rectangular grid over
/// [x0, x1] × [y0, y1], each cell split along its diagonal.
pub fn rectangle_mesh(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut verts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push([
                x[0] + (x[1] - x[0]) * i as f64 / nx as f64,
                y[0] + (y[1] - y[0]) * j as f64 / ny as f64,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            tris.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
            tris.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (verts, tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_one_closed_loop() {
        let (v, t) = rectangle_mesh([-2.0, 2.0], [-2.0, 2.0], 40, 40);
        let lines = contour(&v, &t, |p| p[0] * p[0] + p[1] * p[1] - 1.0);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for p in &lines[0].points {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn line_is_open() {
        let (v, t) = rectangle_mesh([0.0, 1.0], [0.0, 1.0], 10, 10);
        let lines = contour(&v, &t, |p| p[0] + p[1] - 0.73);
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert!(lines[0].points.len() > 5);
        for p in &lines[0].points {
            assert!((p[0] + p[1] - 0.73).abs() < 1e-14);
        }
    }

    #[test]
    fn no_crossing_no_lines() {
        let (v, t) = rectangle_mesh([0.0, 1.0], [0.0, 1.0], 4, 4);
        assert!(contour(&v, &t, |_| 1.0).is_empty());
    }
}
