//! Exact balanced transportation via the transportation network simplex.
//!
//! The basis is a spanning tree over the `m + n` row and column nodes with
//! `m + n − 1` basic cells. Node potentials satisfy `π_i + π_j = C_ij` on
//! basic cells and are recomputed by a breadth-first walk after each pivot,
//! so they never accumulate drift. Entering cells are found by block search
//! over reduced costs `C_ij − π_i − π_j`.

use super::{ground_cost, OtError, PointCloud, Result, TransportPlan};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

/// Exact Earth Mover's Distance with Euclidean ground cost.
pub fn emd_exact<T: Scalar>(a: &PointCloud<T>, b: &PointCloud<T>) -> Result<TransportPlan<T>> {
    let cost = ground_cost(a, b)?;
    let coupling = solve_transport(a.weights(), b.weights(), &cost)?;
    Ok(TransportPlan::new(coupling, cost))
}

/// Optimal coupling of the transportation problem
/// `min <C, P>  s.t.  P·1 = supply, Pᵀ·1 = demand, P ≥ 0`.
pub fn solve_transport<T: Scalar>(supply: &[T], demand: &[T], cost: &Matrix<T>) -> Result<Matrix<T>> {
    let (m, n) = cost.shape();
    if m == 0 || n == 0 {
        return Err(OtError::Degenerate("empty transportation problem".into()));
    }
    if supply.len() != m || demand.len() != n {
        return Err(OtError::InvalidWeights(format!("marginals of length {}/{} for a {m}x{n} cost matrix", supply.len(), demand.len())));
    }
    if cost.as_slice().iter().any(|c| !c.is_finite()) {
        return Err(OtError::NonFinite);
    }
    if supply.iter().chain(demand).any(|&w| w < T::zero() || !w.is_finite()) {
        return Err(OtError::InvalidWeights("marginals must be finite and non-negative".into()));
    }
    let (ts, td): (T, T) = (supply.iter().copied().sum(), demand.iter().copied().sum());
    let mass_tol = T::tolerance_floor().max(T::epsilon() * T::of_usize(m + n).sqrt() * T::lit(16.0)) * ts.max(T::one());
    if (ts - td).abs() > mass_tol {
        return Err(OtError::InvalidWeights(format!("unbalanced marginals: {ts} vs {td}")));
    }

    let mut simplex = NetworkSimplex::new(supply, demand, cost);
    simplex.run()?;
    Ok(simplex.coupling())
}

#[derive(Debug, Clone, Copy)]
struct Basic<T> {
    row: usize,
    col: usize,
    flow: T,
}

struct NetworkSimplex<'a, T> {
    m: usize,
    n: usize,
    cost: &'a Matrix<T>,
    tol: T,
    arcs: Vec<Basic<T>>,
    adj: Vec<Vec<usize>>,
    potential: Vec<T>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    queue: Vec<usize>,
    next_cell: usize,
    path_p: Vec<usize>,
    path_q: Vec<usize>,
}

impl<'a, T: Scalar> NetworkSimplex<'a, T> {
    fn new(supply: &[T], demand: &[T], cost: &'a Matrix<T>) -> Self {
        let (m, n) = cost.shape();
        let scale = cost.max_value().max(T::zero());
        let mut s = Self {
            m,
            n,
            cost,
            tol: T::tolerance_floor() * scale,
            arcs: Vec::with_capacity(m + n - 1),
            adj: vec![Vec::new(); m + n],
            potential: vec![T::zero(); m + n],
            parent: vec![NONE; m + n],
            parent_arc: vec![NONE; m + n],
            depth: vec![0; m + n],
            queue: Vec::with_capacity(m + n),
            next_cell: 0,
            path_p: Vec::new(),
            path_q: Vec::new(),
        };
        s.northwest_corner(supply, demand);
        s.rebuild_tree();
        s
    }

    fn col_node(&self, col: usize) -> usize {
        self.m + col
    }

    fn push_arc(&mut self, row: usize, col: usize, flow: T) {
        let idx = self.arcs.len();
        self.arcs.push(Basic { row, col, flow });
        self.adj[row].push(idx);
        let c = self.col_node(col);
        self.adj[c].push(idx);
    }

    /// Staircase initial basis: always a spanning tree with `m + n − 1` cells,
    /// degenerate zero-flow cells included. The last row and column absorb
    /// any rounding residue in the marginals.
    fn northwest_corner(&mut self, supply: &[T], demand: &[T]) {
        let (m, n) = (self.m, self.n);
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            if i == m - 1 && j == n - 1 {
                let x = d[j].max(T::zero());
                self.push_arc(i, j, x);
                break;
            }
            if i == m - 1 {
                let x = d[j].max(T::zero());
                self.push_arc(i, j, x);
                s[i] -= x;
                j += 1;
            } else if j == n - 1 {
                let x = s[i].max(T::zero());
                self.push_arc(i, j, x);
                d[j] -= x;
                i += 1;
            } else if s[i] <= d[j] {
                let x = s[i].max(T::zero());
                self.push_arc(i, j, x);
                d[j] -= x;
                i += 1;
            } else {
                let x = d[j].max(T::zero());
                self.push_arc(i, j, x);
                s[i] -= x;
                j += 1;
            }
        }
        debug_assert_eq!(self.arcs.len(), m + n - 1);
    }

    /// Recomputes parents, depths and potentials from the root (row 0).
    fn rebuild_tree(&mut self) {
        self.queue.clear();
        self.queue.push(0);
        self.parent[0] = NONE;
        self.parent_arc[0] = NONE;
        self.depth[0] = 0;
        self.potential[0] = T::zero();
        let mut head = 0;
        while head < self.queue.len() {
            let node = self.queue[head];
            head += 1;
            for k in 0..self.adj[node].len() {
                let a = self.adj[node][k];
                if a == self.parent_arc[node] {
                    continue;
                }
                let arc = self.arcs[a];
                let other = if node < self.m { self.m + arc.col } else { arc.row };
                self.parent[other] = node;
                self.parent_arc[other] = a;
                self.depth[other] = self.depth[node] + 1;
                self.potential[other] = self.cost[(arc.row, arc.col)] - self.potential[node];
                self.queue.push(other);
            }
        }
        debug_assert_eq!(self.queue.len(), self.m + self.n, "basis is not a spanning tree");
    }

    /// Block search for a cell with negative reduced cost.
    fn find_entering(&mut self) -> Option<(usize, usize)> {
        let (m, n) = (self.m, self.n);
        let total = m * n;
        let block = ((total as f64).sqrt() as usize).max(64).min(total);
        let costs = self.cost.as_slice();
        let (row_pot, col_pot) = self.potential.split_at(m);

        let mut best = -self.tol;
        let mut best_cell = NONE;
        let mut k = self.next_cell;
        let (mut i, mut j) = (k / n, k % n);
        let mut in_block = 0;
        for _ in 0..total {
            let r = costs[k] - row_pot[i] - col_pot[j];
            if r < best {
                best = r;
                best_cell = k;
            }
            k += 1;
            j += 1;
            if j == n {
                j = 0;
                i += 1;
                if k == total {
                    k = 0;
                    i = 0;
                }
            }
            in_block += 1;
            if in_block == block {
                if best_cell != NONE {
                    break;
                }
                in_block = 0;
            }
        }
        self.next_cell = k;
        (best_cell != NONE).then(|| (best_cell / n, best_cell % n))
    }

    fn pivot(&mut self, p: usize, q: usize) {
        // Tree paths from row p and column q up to their common ancestor.
        self.path_p.clear();
        self.path_q.clear();
        let (mut x, mut y) = (p, self.col_node(q));
        while self.depth[x] > self.depth[y] {
            self.path_p.push(self.parent_arc[x]);
            x = self.parent[x];
        }
        while self.depth[y] > self.depth[x] {
            self.path_q.push(self.parent_arc[y]);
            y = self.parent[y];
        }
        while x != y {
            self.path_p.push(self.parent_arc[x]);
            x = self.parent[x];
            self.path_q.push(self.parent_arc[y]);
            y = self.parent[y];
        }

        // The cycle is p -> q (entering, +θ), then path_q upward, then path_p
        // downward back to p. Signs alternate starting with − after q.
        let lq = self.path_q.len();
        let sign_minus = |pos: usize| pos % 2 == 0;
        let cycle_pos_p = |k: usize, lp: usize| lq + (lp - 1 - k);

        let lp = self.path_p.len();
        let mut theta = T::infinity();
        for (pos, &a) in self.path_q.iter().enumerate() {
            if sign_minus(pos) {
                theta = theta.min(self.arcs[a].flow);
            }
        }
        for (k, &a) in self.path_p.iter().enumerate() {
            if sign_minus(cycle_pos_p(k, lp)) {
                theta = theta.min(self.arcs[a].flow);
            }
        }

        // Leaving arc: last blocking arc met when walking the cycle from the
        // apex along the direction of the entering arc (down path_p, then up
        // path_q).
        let mut leaving = NONE;
        for k in (0..lp).rev() {
            let a = self.path_p[k];
            if sign_minus(cycle_pos_p(k, lp)) && self.arcs[a].flow == theta {
                leaving = a;
            }
        }
        for (pos, &a) in self.path_q.iter().enumerate() {
            if sign_minus(pos) && self.arcs[a].flow == theta {
                leaving = a;
            }
        }
        debug_assert_ne!(leaving, NONE);

        if theta > T::zero() {
            for (pos, &a) in self.path_q.iter().enumerate() {
                let f = &mut self.arcs[a].flow;
                *f = if sign_minus(pos) { *f - theta } else { *f + theta };
            }
            for k in 0..lp {
                let a = self.path_p[k];
                let f = &mut self.arcs[a].flow;
                *f = if sign_minus(cycle_pos_p(k, lp)) { *f - theta } else { *f + theta };
            }
        }

        let old = self.arcs[leaving];
        let old_col = self.col_node(old.col);
        for node in [old.row, old_col] {
            let pos = self.adj[node].iter().position(|&a| a == leaving).expect("leaving arc in adjacency");
            self.adj[node].swap_remove(pos);
        }
        self.arcs[leaving] = Basic { row: p, col: q, flow: theta };
        self.adj[p].push(leaving);
        let qn = self.col_node(q);
        self.adj[qn].push(leaving);
        self.rebuild_tree();
    }

    fn run(&mut self) -> Result<()> {
        let limit = 1000 * (self.m + self.n) + 100_000;
        for _ in 0..limit {
            match self.find_entering() {
                Some((p, q)) => self.pivot(p, q),
                None => return Ok(()),
            }
        }
        Err(OtError::PivotLimit(limit))
    }

    fn coupling(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(self.m, self.n);
        for arc in &self.arcs {
            out[(arc.row, arc.col)] += arc.flow;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_clouds_cost_nothing() {
        let a = PointCloud::from_rows(&[[0.0, 1.0], [2.0, -1.0], [5.0, 5.0]]).unwrap();
        let plan = emd_exact(&a, &a).unwrap();
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn single_points() {
        let a = PointCloud::from_rows(&[[0.0, 0.0]]).unwrap();
        let b = PointCloud::from_rows(&[[3.0, 4.0]]).unwrap();
        let plan = emd_exact(&a, &b).unwrap();
        assert_eq!(plan.cost, 5.0);
        assert_eq!(plan.coupling.as_slice(), &[1.0]);
    }

    #[test]
    fn one_dimensional_pair() {
        // Matchings {0→1, 2→3} cost 2/2, {0→3, 2→1} cost 4/2.
        let a = PointCloud::<f64>::from_rows(&[[0.0], [2.0]]).unwrap();
        let b = PointCloud::from_rows(&[[1.0], [3.0]]).unwrap();
        let plan = emd_exact(&a, &b).unwrap();
        assert!((plan.cost - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unequal_sizes_and_weights() {
        // All mass at 0 moving to {1 (w=.25), 3 (w=.75)}: 0.25 + 2.25.
        let a = PointCloud::<f64>::from_rows(&[[0.0]]).unwrap();
        let b = PointCloud::weighted(Matrix::from_rows(&[[1.0], [3.0]]).unwrap(), vec![0.25, 0.75]).unwrap();
        let plan = emd_exact(&a, &b).unwrap();
        assert!((plan.cost - 2.5).abs() < 1e-12);
    }

    #[test]
    fn known_transportation_instance() {
        // Classic 3x4 textbook problem with optimum 743 (supplies 7/9/18, demands 5/8/7/14).
        let cost = Matrix::from_rows(&[[19.0f64, 30.0, 50.0, 10.0], [70.0, 30.0, 40.0, 60.0], [40.0, 8.0, 70.0, 20.0]]).unwrap();
        let supply = [7.0f64, 9.0, 18.0];
        let demand = [5.0f64, 8.0, 7.0, 14.0];
        let p = solve_transport(&supply, &demand, &cost).unwrap();
        assert!((p.dot(&cost) - 743.0).abs() < 1e-9);
        for (r, s) in p.row_sums().iter().zip(supply) {
            assert!((r - s).abs() < 1e-9);
        }
        for (c, d) in p.col_sums().iter().zip(demand) {
            assert!((c - d).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unbalanced_and_empty() {
        let cost = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(solve_transport(&[1.0], &[0.5, 0.4], &cost), Err(OtError::InvalidWeights(_))));
        assert!(matches!(solve_transport::<f64>(&[], &[], &Matrix::zeros(0, 0)), Err(OtError::Degenerate(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let a = PointCloud::<f32>::from_rows(&[[0.0f32], [2.0]]).unwrap();
        let b = PointCloud::<f32>::from_rows(&[[1.0f32], [3.0]]).unwrap();
        assert!((emd_exact(&a, &b).unwrap().cost - 1.0).abs() < 1e-6);
    }
}
