//! Exact earth mover's distance and weighted k-means++.
//!
//! EMD between small histograms is computed exactly: ground matrices that
//! embed on a line (including the game's 3x3 loss/tie/win matrix) use the
//! O(n) cumulative-difference formula; arbitrary matrices fall back to a
//! dense transportation simplex. The clustering entry point is k-means++
//! with multiplicities, a pluggable distance, and a pluggable centroid
//! rule, deterministic for a given seed.

use rayon::prelude::*;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Square, symmetric, zero-diagonal matrix of ground distances.
#[derive(Clone, Debug)]
pub struct GroundDistanceMatrix {
    d: Vec<f64>,
    n: usize,
}

impl GroundDistanceMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<GroundDistanceMatrix> {
        let n = rows.len();
        let mut d = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    got: row.len(),
                    want: n,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 {
                    return Err(Error::NegativeMass(v));
                }
                d[i * n + j] = v;
            }
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::BadWeights("ground distance diagonal must be zero"));
            }
            for j in 0..n {
                if (d[i * n + j] - d[j * n + i]).abs() > 1e-12 {
                    return Err(Error::BadWeights("ground distance must be symmetric"));
                }
            }
        }
        Ok(GroundDistanceMatrix { d, n })
    }

    /// d_ij = |x_i - x_j| for given positions.
    pub fn line(points: &[f64]) -> GroundDistanceMatrix {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        GroundDistanceMatrix { d, n }
    }

    /// d_ij = |i - j|. `unit_steps(3)` is the loss/tie/win matrix
    /// [[0,1,2],[1,0,1],[2,1,0]].
    pub fn unit_steps(n: usize) -> GroundDistanceMatrix {
        GroundDistanceMatrix::line(&(0..n).map(|i| i as f64).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Positions x with d_ij = |x_i - x_j|, when the matrix embeds on a
    /// line. Enables the exact O(n) EMD.
    pub fn line_embedding(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let mut x = vec![0.0; n];
        // Anchor signs off the first point with nonzero distance to 0.
        let anchor = (1..n).find(|&j| self.get(0, j) > 0.0);
        if let Some(a) = anchor {
            x[a] = self.get(0, a);
            for j in 1..n {
                if j == a {
                    continue;
                }
                let pos = self.get(0, j);
                let fits = |v: f64| ((v - x[a]).abs() - self.get(a, j)).abs() <= 1e-9;
                if fits(pos) {
                    x[j] = pos;
                } else if fits(-pos) {
                    x[j] = -pos;
                } else {
                    return None;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if ((x[i] - x[j]).abs() - self.get(i, j)).abs() > 1e-9 {
                    return None;
                }
            }
        }
        Some(x)
    }
}

fn check_histogram(p: &[f64], dim: usize) -> Result<()> {
    if p.len() != dim {
        return Err(Error::DimensionMismatch {
            got: p.len(),
            want: dim,
        });
    }
    for &v in p {
        if v < 0.0 {
            return Err(Error::NegativeMass(v));
        }
    }
    Ok(())
}

/// Exact EMD on a line metric: sum over gaps of |cumulative difference|.
/// `order` lists histogram indices sorted by position.
fn emd_line(p: &[f64], q: &[f64], order: &[usize], xs: &[f64]) -> f64 {
    let mut cum = 0.0;
    let mut total = 0.0;
    for w in order.windows(2) {
        cum += p[w[0]] - q[w[0]];
        total += cum.abs() * (xs[w[1]] - xs[w[0]]);
    }
    total
}

fn sorted_order(xs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    order
}

/// Optimal transportation cost between two histograms of equal total mass.
pub fn emd(p: &[f64], q: &[f64], d: &GroundDistanceMatrix) -> Result<f64> {
    check_histogram(p, d.dim())?;
    check_histogram(q, d.dim())?;
    if let Some(xs) = d.line_embedding() {
        let order = sorted_order(&xs);
        return Ok(emd_line(p, q, &order, &xs));
    }
    Ok(transport_simplex(p, q, |i, j| d.get(i, j)))
}

/// Exact transportation simplex (northwest-corner start + MODI pivots).
/// Suitable for the small dense instances this crate needs.
pub fn transport_simplex<F: Fn(usize, usize) -> f64>(p: &[f64], q: &[f64], cost: F) -> f64 {
    let n = p.len();
    let m = q.len();
    // Basic feasible start: northwest corner. Keeps exactly n+m-1 basic
    // cells (degenerate zeros allowed).
    let mut flow = vec![0.0f64; n * m];
    let mut basis = vec![false; n * m];
    {
        let mut supply: Vec<f64> = p.to_vec();
        let mut demand: Vec<f64> = q.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let f = supply[i].min(demand[j]);
            flow[i * m + j] = f;
            basis[i * m + j] = true;
            supply[i] -= f;
            demand[j] -= f;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if supply[i] <= demand[j] && i < n - 1 {
                i += 1;
            } else if j < m - 1 {
                j += 1;
            } else {
                i += 1;
            }
        }
    }

    let max_pivots = 50 * (n + m).max(16) * (n + m).max(16);
    for _ in 0..max_pivots {
        // Duals from the basis: u_i + v_j = c_ij on basic cells.
        let mut u = vec![f64::NAN; n];
        let mut v = vec![f64::NAN; m];
        u[0] = 0.0;
        let mut settled = 1;
        while settled < n + m {
            let mut progressed = false;
            for i in 0..n {
                if u[i].is_nan() {
                    continue;
                }
                for j in 0..m {
                    if basis[i * m + j] && v[j].is_nan() {
                        v[j] = cost(i, j) - u[i];
                        settled += 1;
                        progressed = true;
                    }
                }
            }
            for j in 0..m {
                if v[j].is_nan() {
                    continue;
                }
                for i in 0..n {
                    if basis[i * m + j] && u[i].is_nan() {
                        u[i] = cost(i, j) - v[j];
                        settled += 1;
                        progressed = true;
                    }
                }
            }
            if !progressed {
                // Basis degenerated into a forest; connect components with
                // a zero-flow basic cell.
                'outer: for i in 0..n {
                    if u[i].is_nan() {
                        continue;
                    }
                    for j in 0..m {
                        if v[j].is_nan() {
                            basis[i * m + j] = true;
                            v[j] = cost(i, j) - u[i];
                            settled += 1;
                            break 'outer;
                        }
                    }
                }
            }
        }

        // Entering cell: most negative reduced cost.
        let mut best = (0usize, 0usize);
        let mut best_r = -1e-11;
        for i in 0..n {
            for j in 0..m {
                if !basis[i * m + j] {
                    let r = cost(i, j) - u[i] - v[j];
                    if r < best_r {
                        best_r = r;
                        best = (i, j);
                    }
                }
            }
        }
        if best_r >= -1e-11 {
            break; // optimal
        }

        // The entering cell closes a unique alternating cycle in the basis.
        let (si, sj) = best;
        let Some(mut path) = tree_path_cells(&basis, n, m, si, sj) else {
            break; // should not happen with a spanning-tree basis
        };
        path.insert(0, (si, sj));
        // Odd path positions lose flow.
        let theta = path
            .iter()
            .skip(1)
            .step_by(2)
            .map(|&(i, j)| flow[i * m + j])
            .fold(f64::INFINITY, f64::min);
        let mut leave: Option<(usize, usize)> = None;
        for (t, &(i, j)) in path.iter().enumerate() {
            if t % 2 == 1 {
                flow[i * m + j] -= theta;
                if leave.is_none() && flow[i * m + j] <= 1e-15 {
                    flow[i * m + j] = 0.0;
                    leave = Some((i, j));
                }
            } else {
                flow[i * m + j] += theta;
            }
        }
        basis[si * m + sj] = true;
        if let Some((li, lj)) = leave {
            basis[li * m + lj] = false;
        }
    }

    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            if flow[i * m + j] > 0.0 {
                total += flow[i * m + j] * cost(i, j);
            }
        }
    }
    total
}

/// The basic cells form a spanning tree on the bipartite vertex set
/// {rows} ∪ {columns}; the unique cycle closed by an entering cell
/// (si, sj) is the tree path from row si to column sj. Returns that path
/// as cells in cycle order (starting with the cell adjacent to row si).
fn tree_path_cells(
    basis: &[bool],
    n: usize,
    m: usize,
    si: usize,
    sj: usize,
) -> Option<Vec<(usize, usize)>> {
    // Vertices: 0..n are rows, n..n+m are columns.
    let nv = n + m;
    let mut parent = vec![usize::MAX; nv];
    let mut queue = std::collections::VecDeque::new();
    parent[si] = si;
    queue.push_back(si);
    let target = n + sj;
    while let Some(v) = queue.pop_front() {
        if v == target {
            break;
        }
        if v < n {
            for j in 0..m {
                if basis[v * m + j] && parent[n + j] == usize::MAX {
                    parent[n + j] = v;
                    queue.push_back(n + j);
                }
            }
        } else {
            let j = v - n;
            for i in 0..n {
                if basis[i * m + j] && parent[i] == usize::MAX {
                    parent[i] = v;
                    queue.push_back(i);
                }
            }
        }
    }
    if parent[target] == usize::MAX {
        return None;
    }
    let mut vertices = vec![target];
    while *vertices.last().unwrap() != si {
        vertices.push(parent[*vertices.last().unwrap()]);
    }
    vertices.reverse(); // row si .. column sj
    let cells: Vec<(usize, usize)> = vertices
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if a < n {
                (a, b - n)
            } else {
                (b, a - n)
            }
        })
        .collect();
    Some(cells)
}

/// Weighted sum of per-block EMDs between two concatenated block features
/// (blocks of `d.dim()` entries each).
pub fn krwemd_distance(
    f: &[f64],
    g: &[f64],
    weights: &[f64],
    d: &GroundDistanceMatrix,
) -> Result<f64> {
    let dim = d.dim();
    if f.len() != g.len() {
        return Err(Error::ShapeMismatch("features must have equal length"));
    }
    if f.len() != weights.len() * dim {
        return Err(Error::ShapeMismatch(
            "feature length must be weight count times ground dimension",
        ));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::BadWeights("weights must be nonnegative"));
    }
    let mut total = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        total += w * emd(&f[j * dim..(j + 1) * dim], &g[j * dim..(j + 1) * dim], d)?;
    }
    Ok(total)
}

/// Hot-path version of [`krwemd_distance`] for 3-wide blocks under the
/// unit-step ground matrix: per block, |p0-q0| + |p0+p1-q0-q1|.
#[inline]
pub fn krwemd_unit3(f: &[f64], g: &[f64], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        let b = j * 3;
        let d0 = f[b] - g[b];
        let d1 = d0 + f[b + 1] - g[b + 1];
        total += w * (d0.abs() + d1.abs());
    }
    total
}

/// Distance used for cluster assignment.
#[derive(Clone, Debug)]
pub enum Distance {
    /// Squared Euclidean (k-means' native objective).
    SquaredL2,
    /// EMD under a line-embedded ground matrix; `positions[i]` is the
    /// ground coordinate of histogram entry i.
    Emd1d { positions: Vec<f64> },
    /// EMD under an arbitrary ground matrix.
    EmdGeneral { matrix: GroundDistanceMatrix },
    /// Weighted per-block EMD over 3-wide blocks (unit-step ground).
    KrwEmd { weights: Vec<f64> },
}

impl Distance {
    fn order(&self) -> Option<Vec<usize>> {
        match self {
            Distance::Emd1d { positions } => Some(sorted_order(positions)),
            Distance::EmdGeneral { matrix } => matrix.line_embedding().map(|xs| sorted_order(&xs)),
            _ => None,
        }
    }

    #[inline]
    fn eval(&self, a: &[f64], b: &[f64], order: Option<&[usize]>) -> f64 {
        match self {
            Distance::SquaredL2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = x - y;
                    d * d
                })
                .sum(),
            Distance::Emd1d { positions } => {
                emd_line(a, b, order.expect("order precomputed"), positions)
            }
            Distance::EmdGeneral { matrix } => match (order, matrix.line_embedding()) {
                (Some(ord), Some(xs)) => emd_line(a, b, ord, &xs),
                _ => transport_simplex(a, b, |i, j| matrix.get(i, j)),
            },
            Distance::KrwEmd { weights } => krwemd_unit3(a, b, weights),
        }
    }

    /// Seeding weight for k-means++: squared distance (`SquaredL2` already
    /// is one).
    #[inline]
    fn seeding_weight(&self, d: f64) -> f64 {
        match self {
            Distance::SquaredL2 => d,
            _ => d * d,
        }
    }
}

/// How centroids are recomputed from members.
#[derive(Clone, Copy, Debug)]
pub enum CentroidRule {
    /// Weighted component-wise mean.
    Mean,
    /// Weighted mean, then renormalize every `block` consecutive entries
    /// to sum 1 so centroids stay valid histograms.
    NormalizedMean { block: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct KmeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: u32,
    pub restarts: u32,
}

impl KmeansConfig {
    pub fn new(k: usize, seed: u64) -> KmeansConfig {
        KmeansConfig {
            k,
            seed,
            max_iters: 300,
            restarts: 4,
        }
    }
}

/// Outcome of one clustering run.
#[derive(Clone, Debug)]
pub struct ClusteringResult {
    /// Point index -> cluster id in [0, k).
    pub assignment: Vec<u32>,
    /// k * dim, row per cluster.
    pub centroids: Vec<f64>,
    pub cost: f64,
    pub iterations: u32,
    pub seed: u64,
}

/// Weighted k-means++ (best of `restarts` runs by total cost).
///
/// `data` is row-major `n x dim`; `weights[i]` is the multiplicity of row
/// i (e.g. the number of raw observations in a canonical class). Lloyd
/// iterations stop at an assignment fixpoint or after `max_iters`; empty
/// clusters are reseeded with the point farthest from its centroid.
/// Deterministic for fixed inputs and seed. Equidistant points go to the
/// lowest cluster id.
pub fn kmeans_pp(
    data: &[f64],
    dim: usize,
    weights: &[f64],
    distance: &Distance,
    rule: CentroidRule,
    cfg: &KmeansConfig,
) -> Result<ClusteringResult> {
    let n = weights.len();
    assert_eq!(data.len(), n * dim);
    let distinct = {
        let mut rows: Vec<&[f64]> = (0..n).map(|i| &data[i * dim..(i + 1) * dim]).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.dedup();
        rows.len()
    };
    if cfg.k == 0 || cfg.k > distinct {
        return Err(Error::TooManyClusters { k: cfg.k, distinct });
    }

    let order = distance.order();
    let mut best: Option<ClusteringResult> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        let result = run_once(
            data,
            dim,
            weights,
            distance,
            order.as_deref(),
            rule,
            cfg,
            &mut rng,
        )?;
        if best.as_ref().map_or(true, |b| result.cost < b.cost) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[allow(clippy::too_many_arguments)]
fn run_once(
    data: &[f64],
    dim: usize,
    weights: &[f64],
    distance: &Distance,
    order: Option<&[usize]>,
    rule: CentroidRule,
    cfg: &KmeansConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ClusteringResult> {
    let n = weights.len();
    let k = cfg.k;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    // k-means++ seeding: first centroid by weight, the rest by weight
    // times squared distance to the nearest chosen centroid.
    let mut centroids = vec![0.0f64; k * dim];
    let total_w: f64 = weights.iter().sum();
    let first = sample_cumulative(weights, rng.random::<f64>() * total_w);
    centroids[..dim].copy_from_slice(row(first));
    let mut min_d: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| distance.seeding_weight(distance.eval(row(i), &centroids[..dim], order)))
        .collect();
    for c in 1..k {
        let probs: Vec<f64> = (0..n).map(|i| weights[i] * min_d[i]).collect();
        let total: f64 = probs.iter().sum();
        let chosen = if total > 0.0 {
            sample_cumulative(&probs, rng.random::<f64>() * total)
        } else {
            // All remaining mass sits on already-chosen points; take the
            // first point that is not yet a centroid.
            (0..n)
                .find(|&i| (0..c).all(|cc| row(i) != &centroids[cc * dim..(cc + 1) * dim]))
                .expect("k <= distinct points")
        };
        centroids[c * dim..(c + 1) * dim].copy_from_slice(row(chosen));
        let slice = centroids[c * dim..(c + 1) * dim].to_vec();
        min_d = (0..n)
            .into_par_iter()
            .map(|i| {
                let d = distance.seeding_weight(distance.eval(row(i), &slice, order));
                d.min(min_d[i])
            })
            .collect();
    }

    // Lloyd iterations to an assignment fixpoint.
    let mut assignment = vec![u32::MAX; n];
    let mut iterations = 0;
    let mut last_cost = f64::INFINITY;
    loop {
        let new_assignment: Vec<u32> = (0..n)
            .into_par_iter()
            .map(|i| {
                let r = row(i);
                let mut best_c = 0u32;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let d = distance.eval(r, &centroids[c * dim..(c + 1) * dim], order);
                    if d < best_d {
                        best_d = d;
                        best_c = c as u32;
                    }
                }
                best_c
            })
            .collect();
        let fixpoint = new_assignment == assignment;
        assignment = new_assignment;
        if fixpoint || iterations >= cfg.max_iters {
            break;
        }
        iterations += 1;

        update_centroids(data, dim, weights, &assignment, k, rule, &mut centroids);

        // Empty-cluster repair: reseed with the point farthest from its
        // centroid (ties -> lowest point index), then recompute.
        loop {
            let mut counts = vec![0u64; k];
            for &a in &assignment {
                counts[a as usize] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let mut far_i = 0;
            let mut far_d = -1.0;
            for i in 0..n {
                let c = assignment[i] as usize;
                let d = distance.eval(row(i), &centroids[c * dim..(c + 1) * dim], order);
                if d > far_d {
                    far_d = d;
                    far_i = i;
                }
            }
            assignment[far_i] = empty as u32;
            update_centroids(data, dim, weights, &assignment, k, rule, &mut centroids);
        }

        // The squared-Euclidean objective with mean centroids is monotone;
        // EMD with mean centroids has no such guarantee and is not checked.
        if matches!((distance, rule), (Distance::SquaredL2, CentroidRule::Mean)) {
            let cost = total_cost(data, dim, weights, &assignment, &centroids, distance, order);
            debug_assert!(cost <= last_cost + 1e-9 * (1.0 + last_cost.abs()));
            last_cost = cost;
        }
    }

    let cost = total_cost(data, dim, weights, &assignment, &centroids, distance, order);
    Ok(ClusteringResult {
        assignment,
        centroids,
        cost,
        iterations,
        seed: cfg.seed,
    })
}

fn sample_cumulative(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn update_centroids(
    data: &[f64],
    dim: usize,
    weights: &[f64],
    assignment: &[u32],
    k: usize,
    rule: CentroidRule,
    centroids: &mut [f64],
) {
    let mut sums = vec![0.0f64; k * dim];
    let mut mass = vec![0.0f64; k];
    for (i, &a) in assignment.iter().enumerate() {
        let c = a as usize;
        mass[c] += weights[i];
        for t in 0..dim {
            sums[c * dim + t] += weights[i] * data[i * dim + t];
        }
    }
    for c in 0..k {
        if mass[c] == 0.0 {
            continue; // repaired by the caller
        }
        for t in 0..dim {
            centroids[c * dim + t] = sums[c * dim + t] / mass[c];
        }
        if let CentroidRule::NormalizedMean { block } = rule {
            for b in (0..dim).step_by(block) {
                let s: f64 = centroids[c * dim + b..c * dim + b + block].iter().sum();
                if s > 0.0 {
                    for t in b..b + block {
                        centroids[c * dim + t] /= s;
                    }
                }
            }
        }
    }
}

fn total_cost(
    data: &[f64],
    dim: usize,
    weights: &[f64],
    assignment: &[u32],
    centroids: &[f64],
    distance: &Distance,
    order: Option<&[usize]>,
) -> f64 {
    (0..weights.len())
        .map(|i| {
            let c = assignment[i] as usize;
            weights[i]
                * distance.eval(
                    &data[i * dim..(i + 1) * dim],
                    &centroids[c * dim..(c + 1) * dim],
                    order,
                )
        })
        .sum()
}
