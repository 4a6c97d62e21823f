//! Regular barycentric grids on the L-simplex with piecewise-linear
//! interpolation over the Kuhn (Freudenthal) triangulation.
//!
//! A node is a composition `(i_1, …, i_L)` with `Σ i_ℓ ≤ G`; its belief is
//! `π_ℓ = i_ℓ / G`. Interpolation works in the cumulative coordinates
//! `y_k = Σ_{ℓ ≥ k} G π_ℓ`, in which the simplex is `G ≥ y_1 ≥ … ≥ y_L ≥ 0`
//! and is a union of Kuhn simplices of the unit-cube lattice.

use crate::error::{Error, Result};
use crate::model::Belief;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGrid {
    dim: usize,
    resolution: usize,
    nodes: Vec<Vec<usize>>,
    /// Dense lookup over the cube `{0..=G}^L`; `usize::MAX` marks points outside the simplex.
    lookup: Vec<usize>,
}

impl SimplexGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("grid", "simplex dimension must be >= 1"));
        }
        if resolution < 2 {
            return Err(Error::invalid("grid", "resolution must be >= 2 steps per axis"));
        }
        let side = resolution + 1;
        let cube = side
            .checked_pow(dim as u32)
            .filter(|&c| c <= 50_000_000)
            .ok_or_else(|| Error::invalid("grid", "grid too large"))?;
        let mut nodes = Vec::new();
        let mut lookup = vec![usize::MAX; cube];
        let mut idx = vec![0usize; dim];
        loop {
            if idx.iter().sum::<usize>() <= resolution {
                lookup[flat(&idx, side)] = nodes.len();
                nodes.push(idx.clone());
            }
            // Odometer increment.
            let mut k = 0;
            loop {
                if k == dim {
                    return Ok(Self {
                        dim,
                        resolution,
                        nodes,
                        lookup,
                    });
                }
                idx[k] += 1;
                if idx[k] <= resolution {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Grid step 1/G.
    pub fn step(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &[usize] {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[Vec<usize>] {
        &self.nodes
    }

    /// Node index of the composition `idx`, if it lies in the simplex.
    pub fn index_of(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.dim || idx.iter().any(|&i| i > self.resolution) {
            return None;
        }
        match self.lookup[flat(idx, self.resolution + 1)] {
            usize::MAX => None,
            n => Some(n),
        }
    }

    /// Index of the node displaced by `delta` (in grid steps), if any.
    pub fn offset(&self, node: usize, delta: &[i64]) -> Option<usize> {
        let base = &self.nodes[node];
        let mut idx = Vec::with_capacity(self.dim);
        for (&b, &d) in base.iter().zip(delta) {
            let v = b as i64 + d;
            if v < 0 {
                return None;
            }
            idx.push(v as usize);
        }
        self.index_of(&idx)
    }

    /// (π₁, …, π_L) of a node.
    pub fn coords(&self, node: usize) -> Vec<f64> {
        let g = self.resolution as f64;
        self.nodes[node].iter().map(|&i| i as f64 / g).collect()
    }

    /// Full probability vector (π₀, …, π_L) of a node, with π₀ formed from integers.
    pub fn full(&self, node: usize) -> Vec<f64> {
        let g = self.resolution as f64;
        let idx = &self.nodes[node];
        let rest: usize = idx.iter().sum();
        let mut full = Vec::with_capacity(self.dim + 1);
        full.push((self.resolution - rest) as f64 / g);
        full.extend(idx.iter().map(|&i| i as f64 / g));
        full
    }

    pub fn belief(&self, node: usize) -> Belief {
        Belief::from_full(self.full(node)).expect("grid nodes lie in the simplex")
    }

    /// Grid units to the nearest face: min over ℓ = 0..=L of the node's count.
    pub fn boundary_distance(&self, node: usize) -> usize {
        let idx = &self.nodes[node];
        let rest = self.resolution - idx.iter().sum::<usize>();
        idx.iter().copied().chain(std::iter::once(rest)).min().unwrap()
    }

    pub fn is_vertex(&self, node: usize) -> bool {
        let idx = &self.nodes[node];
        let nonzero = idx.iter().filter(|&&i| i > 0).count();
        let sum: usize = idx.iter().sum();
        (nonzero == 0) || (nonzero == 1 && sum == self.resolution)
    }

    /// Nodes on the segment between vertex `a` and vertex `b` (states), ordered from `a`.
    pub fn edge_nodes(&self, a: usize, b: usize) -> Vec<usize> {
        let g = self.resolution;
        (0..=g)
            .map(|t| {
                let mut idx = vec![0usize; self.dim];
                if a > 0 {
                    idx[a - 1] += g - t;
                }
                if b > 0 {
                    idx[b - 1] += t;
                }
                self.index_of(&idx).expect("edge node exists")
            })
            .collect()
    }

    /// All grid edges joining nodes that differ by moving one step of mass
    /// between two states.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let dirs = self.edge_directions();
        for n in 0..self.len() {
            for d in &dirs {
                if let Some(m) = self.offset(n, d) {
                    out.push((n, m));
                }
            }
        }
        out
    }

    fn edge_directions(&self) -> Vec<Vec<i64>> {
        let mut dirs = Vec::new();
        for a in 0..self.dim {
            let mut d = vec![0i64; self.dim];
            d[a] = 1;
            dirs.push(d);
            for b in (a + 1)..self.dim {
                let mut d = vec![0i64; self.dim];
                d[a] = 1;
                d[b] = -1;
                dirs.push(d);
            }
        }
        dirs
    }

    /// Triangles of the Kuhn triangulation for L = 2, as node-index triples.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        assert_eq!(self.dim, 2, "triangles are defined for L = 2");
        let mut tris = Vec::new();
        for n in 0..self.len() {
            if let (Some(a), Some(b)) = (self.offset(n, &[1, 0]), self.offset(n, &[0, 1])) {
                tris.push([n, a, b]);
                if let Some(c) = self.offset(n, &[1, 1]) {
                    tris.push([a, c, b]);
                }
            }
        }
        tris
    }

    /// Kuhn-simplex vertices and barycentric weights of the point `probs` = (π₁, …, π_L).
    pub fn locate(&self, probs: &[f64]) -> Vec<(usize, f64)> {
        let dim = self.dim;
        let g = self.resolution as f64;
        let gi = self.resolution as i64;
        // Cumulative coordinates y_k = G Σ_{ℓ≥k} π_ℓ, clamped into [0, G].
        let mut y = vec![0.0; dim];
        let mut acc = 0.0;
        for k in (0..dim).rev() {
            acc += probs[k].max(0.0);
            y[k] = (g * acc).clamp(0.0, g);
        }
        for k in 1..dim {
            if y[k] > y[k - 1] {
                y[k] = y[k - 1];
            }
        }
        let base: Vec<i64> = y.iter().map(|&v| (v.floor() as i64).min(gi - 1).max(0)).collect();
        let frac: Vec<f64> = y.iter().zip(&base).map(|(&v, &b)| v - b as f64).collect();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));

        let mut out = Vec::with_capacity(dim + 1);
        let mut vert = base.clone();
        let mut prev = 1.0;
        for step in 0..=dim {
            let next = if step < dim { frac[order[step]] } else { 0.0 };
            let w = prev - next;
            if w > 0.0 {
                out.push((self.from_cumulative(&vert), w));
            }
            if step < dim {
                vert[order[step]] += 1;
                prev = next;
            }
        }
        out
    }

    fn from_cumulative(&self, y: &[i64]) -> usize {
        let dim = self.dim;
        let idx: Vec<usize> = (0..dim)
            .map(|k| {
                let next = if k + 1 < dim { y[k + 1] } else { 0 };
                (y[k] - next) as usize
            })
            .collect();
        self.index_of(&idx).expect("Kuhn vertex lies in the simplex")
    }

    /// Piecewise-linear interpolation of nodal `values` at `probs`.
    pub fn interpolate(&self, values: &[f64], probs: &[f64]) -> f64 {
        self.locate(probs).iter().map(|&(n, w)| w * values[n]).sum()
    }
}

fn flat(idx: &[usize], side: usize) -> usize {
    idx.iter().rev().fold(0, |acc, &i| acc * side + i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn node_counts() {
        assert_eq!(SimplexGrid::new(1, 40).unwrap().len(), 41);
        assert_eq!(SimplexGrid::new(2, 4).unwrap().len(), 15);
        assert_eq!(SimplexGrid::new(3, 4).unwrap().len(), 35);
        assert!(SimplexGrid::new(2, 1).is_err());
    }

    #[test]
    fn interpolation_exact_at_nodes_and_for_affine() {
        for dim in 1..=3 {
            let grid = SimplexGrid::new(dim, 6).unwrap();
            let affine = |p: &[f64]| 0.3 + p.iter().enumerate().map(|(i, x)| (i as f64 + 1.5) * x).sum::<f64>();
            let vals: Vec<f64> = (0..grid.len()).map(|n| affine(&grid.coords(n))).collect();
            for n in 0..grid.len() {
                assert_abs_diff_eq!(grid.interpolate(&vals, &grid.coords(n)), vals[n], epsilon = 1e-12);
            }
            let p: Vec<f64> = (0..dim).map(|i| 0.13 + 0.07 * i as f64).collect();
            assert_abs_diff_eq!(grid.interpolate(&vals, &p), affine(&p), epsilon = 1e-12);
            // Points on the far face.
            let mut q = vec![0.0; dim];
            q[dim - 1] = 1.0;
            assert_abs_diff_eq!(grid.interpolate(&vals, &q), affine(&q), epsilon = 1e-12);
        }
    }

    #[test]
    fn weights_form_partition_of_unity() {
        let grid = SimplexGrid::new(2, 5).unwrap();
        let loc = grid.locate(&[0.31, 0.52]);
        assert!(loc.len() <= 3);
        assert_abs_diff_eq!(loc.iter().map(|x| x.1).sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn triangles_tile_the_simplex() {
        let g = 7;
        let grid = SimplexGrid::new(2, g).unwrap();
        let tris = grid.triangles();
        assert_eq!(tris.len(), g * g);
        let area: f64 = tris
            .iter()
            .map(|t| {
                let p: Vec<Vec<f64>> = t.iter().map(|&n| grid.coords(n)).collect();
                0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs()
            })
            .sum();
        assert_abs_diff_eq!(area, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn vertices_and_edges() {
        let grid = SimplexGrid::new(2, 4).unwrap();
        let verts: Vec<usize> = (0..grid.len()).filter(|&n| grid.is_vertex(n)).collect();
        assert_eq!(verts.len(), 3);
        let e = grid.edge_nodes(1, 2);
        assert_eq!(grid.node(e[0]), &[4, 0]);
        assert_eq!(grid.node(e[4]), &[0, 4]);
        assert_eq!(grid.boundary_distance(grid.index_of(&[1, 1]).unwrap()), 1);
    }
}
