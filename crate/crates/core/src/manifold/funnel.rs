use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::grid::ManifoldGrid;

pub const TIE_BREAK_RULE: &str = "steepest 8-neighbour; ties toward larger x, then larger c";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunnelPoint {
    pub c: f64,
    pub x: f64,
    pub value: f64,
    pub basin_fraction: f64,
    /// Lattice index of the representative node.
    pub node: (usize, usize),
    /// Number of nodes in the plateau.
    pub plateau_size: usize,
    /// Representative lies on the lattice boundary.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub funnel_points: Vec<FunnelPoint>,
    pub count: usize,
    /// Descent successor per node (row-major `i * cols + j`); `None` for sinks
    /// and absent nodes.
    pub flow_edges: Vec<Option<usize>>,
    pub flat_tol: f64,
    pub tie_break: String,
}

/// Order on candidate nodes: lower value first, then larger x, then larger c.
fn better(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => (a.2, a.1) > (b.2, b.1),
    }
}

fn find(parent: &mut [usize], mut k: usize) -> usize {
    while parent[k] != k {
        parent[k] = parent[parent[k]];
        k = parent[k];
    }
    k
}

/// Discrete steepest-descent flow on the lattice. `flat_tol = None` uses
/// 10⁻⁹·(max − min) over the present nodes.
pub fn detect_funnels(grid: &ManifoldGrid, flat_tol: Option<f64>) -> FunnelReport {
    let (rows, cols) = (grid.rows(), grid.cols());
    let idx = |i: usize, j: usize| i * cols + j;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in grid.values.iter().flatten().flatten() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let tol = flat_tol.unwrap_or(if hi > lo { 1e-9 * (hi - lo) } else { 0.0 });

    let neighbours = |i: usize, j: usize| {
        let mut out = Vec::with_capacity(8);
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a < 0 || b < 0 || a >= rows as i64 || b >= cols as i64 {
                    continue;
                }
                let (a, b) = (a as usize, b as usize);
                if let Some(v) = grid.values[a][b] {
                    out.push((v, a, b));
                }
            }
        }
        out
    };

    let mut flow = vec![None; rows * cols];
    let mut sinks = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let Some(v) = grid.values[i][j] else { continue };
            let mut best: Option<(f64, usize, usize)> = None;
            for cand in neighbours(i, j) {
                if cand.0 < v - tol && best.is_none_or(|b| better(cand, b)) {
                    best = Some(cand);
                }
            }
            match best {
                Some((_, a, b)) => flow[idx(i, j)] = Some(idx(a, b)),
                None => sinks.push((i, j)),
            }
        }
    }

    // adjacent sinks at (nearly) the same level form one plateau
    let mut parent: Vec<usize> = (0..rows * cols).collect();
    let is_sink = {
        let mut m = vec![false; rows * cols];
        for &(i, j) in &sinks {
            m[idx(i, j)] = true;
        }
        m
    };
    for &(i, j) in &sinks {
        let v = grid.values[i][j].unwrap();
        for (w, a, b) in neighbours(i, j) {
            if is_sink[idx(a, b)] && (w - v).abs() <= tol {
                let (ra, rb) = (find(&mut parent, idx(i, j)), find(&mut parent, idx(a, b)));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    // drain every node to its sink, then to the plateau root
    let mut basin = vec![0usize; rows * cols];
    let mut total = 0usize;
    for i in 0..rows {
        for j in 0..cols {
            if grid.values[i][j].is_none() {
                continue;
            }
            let mut k = idx(i, j);
            while let Some(next) = flow[k] {
                k = next;
            }
            basin[find(&mut parent, k)] += 1;
            total += 1;
        }
    }

    let mut roots: Vec<usize> = sinks.iter().map(|&(i, j)| find(&mut parent, idx(i, j))).collect();
    roots.sort_unstable();
    roots.dedup();
    let mut funnel_points = Vec::with_capacity(roots.len());
    for root in roots {
        let members: Vec<(usize, usize)> = sinks
            .iter()
            .copied()
            .filter(|&(i, j)| find(&mut parent, idx(i, j)) == root)
            .collect();
        let rep = members
            .iter()
            .map(|&(i, j)| (grid.values[i][j].unwrap(), i, j))
            .reduce(|a, b| if better(b, a) { b } else { a })
            .unwrap();
        let (c, x) = grid.coords(rep.1, rep.2);
        funnel_points.push(FunnelPoint {
            c,
            x,
            value: rep.0,
            basin_fraction: basin[root] as f64 / total as f64,
            node: (rep.1, rep.2),
            plateau_size: members.len(),
            boundary: rep.1 == 0 || rep.2 == 0 || rep.1 + 1 == rows || rep.2 + 1 == cols,
        });
    }
    funnel_points.sort_by(|a, b| b.basin_fraction.total_cmp(&a.basin_fraction).then(a.node.cmp(&b.node)));
    FunnelReport {
        count: funnel_points.len(),
        funnel_points,
        flow_edges: flow,
        flat_tol: tol,
        tie_break: TIE_BREAK_RULE.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_from(f: impl Fn(f64, f64) -> f64, n: usize) -> ManifoldGrid {
        let axis: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        let values = axis.iter().map(|&c| axis.iter().map(|&x| Some(f(c, x))).collect()).collect();
        ManifoldGrid::from_values(axis.clone(), axis, values)
    }

    #[test]
    fn ramp_has_one_funnel_at_low_end() {
        let g = ManifoldGrid::from_values(vec![1.0], (0..10).map(|k| k as f64).collect(), vec![(0..10).map(|k| Some(k as f64)).collect()]);
        let r = detect_funnels(&g, None);
        assert_eq!(r.count, 1);
        assert_eq!(r.funnel_points[0].node, (0, 0));
        assert_eq!(r.funnel_points[0].basin_fraction, 1.0);
    }

    #[test]
    fn two_wells() {
        let (p1, p2) = ((0.2, 0.2), (0.8, 0.7));
        let g = grid_from(
            |c, x| {
                let d1 = (c - p1.0).powi(2) + (x - p1.1).powi(2);
                let d2 = (c - p2.0).powi(2) + (x - p2.1).powi(2) + 0.1;
                d1.min(d2)
            },
            41,
        );
        let r = detect_funnels(&g, None);
        assert_eq!(r.count, 2);
        let mut locs: Vec<(f64, f64)> = r.funnel_points.iter().map(|f| (f.c, f.x)).collect();
        locs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((locs[0].0 - 0.2).abs() < 1e-9 && (locs[0].1 - 0.2).abs() < 1e-9);
        assert!((locs[1].0 - 0.8).abs() < 1e-9 && (locs[1].1 - 0.7).abs() < 1e-9);
    }

    #[test]
    fn single_node() {
        let g = ManifoldGrid::from_values(vec![1.0], vec![1.0], vec![vec![Some(0.0)]]);
        let r = detect_funnels(&g, None);
        assert_eq!(r.count, 1);
        assert_eq!(r.funnel_points[0].value, 0.0);
    }

    #[test]
    fn flat_region_is_one_plateau_and_ties_prefer_larger_x() {
        // zero plateau on x ≥ 0.5 plus a descending ramp toward it
        let g = grid_from(|_, x| (0.5 - x).max(0.0), 11);
        let r = detect_funnels(&g, None);
        assert_eq!(r.count, 1);
        assert_eq!(r.funnel_points[0].node, (10, 10));
        assert!(r.funnel_points[0].plateau_size > 1);
    }

    #[test]
    fn absent_nodes_are_skipped() {
        let mut g = grid_from(|c, x| c + x, 5);
        g.values[0][0] = None;
        let r = detect_funnels(&g, None);
        let total: f64 = r.funnel_points.iter().map(|f| f.basin_fraction).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn basins_partition_and_scale_invariance(seed in any::<u64>(), scale in 0.01f64..100.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 12;
            let vals: Vec<Vec<Option<f64>>> = (0..n)
                .map(|_| (0..n).map(|_| if rng.random::<f64>() < 0.1 { None } else { Some(rng.random::<f64>()) }).collect())
                .collect();
            let axis: Vec<f64> = (0..n).map(|k| k as f64).collect();
            let g = ManifoldGrid::from_values(axis.clone(), axis.clone(), vals.clone());
            let scaled: Vec<Vec<Option<f64>>> = vals.iter().map(|r| r.iter().map(|v| v.map(|v| v * scale)).collect()).collect();
            let gs = ManifoldGrid::from_values(axis.clone(), axis, scaled);
            let a = detect_funnels(&g, None);
            let b = detect_funnels(&gs, None);
            let total: f64 = a.funnel_points.iter().map(|f| f.basin_fraction).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert_eq!(a.count, b.count);
            // no funnel node has a neighbour lower by more than the tolerance
            for f in &a.funnel_points {
                let (i, j) = f.node;
                for di in -1i64..=1 { for dj in -1i64..=1 {
                    let (p, q) = (i as i64 + di, j as i64 + dj);
                    if p < 0 || q < 0 || p >= n as i64 || q >= n as i64 { continue; }
                    if let Some(w) = g.values[p as usize][q as usize] {
                        prop_assert!(w >= f.value - a.flat_tol);
                    }
                }}
            }
        }
    }
}
