//! Sparse spatial-semantic graph over the nodes of an `H x W` grid.
//!
//! Distances mix normalized grid-coordinate distance with cosine feature
//! distance; each node keeps its `K` nearest neighbours, self-loops are
//! added, and the result is degree-normalized into the propagation operator
//! `D^-1/2 (A + I) D^-1/2`.

use std::cmp::Ordering;

use crate::error::{param_err, shape_err, Result};
use crate::tensor::Tensor;

/// Grid of `height x width` nodes in row-major order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub height: usize,
    pub width: usize,
}

impl GridSpec {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(param_err!("grid extents must be >= 1"));
        }
        Ok(Self { height, width })
    }

    pub fn nodes(&self) -> usize {
        self.height * self.width
    }

    pub fn position(&self, node: usize) -> (usize, usize) {
        (node / self.width, node % self.width)
    }

    /// Position scaled into `[0, 1]^2`: row by `max(H-1, 1)`, column by `max(W-1, 1)`.
    pub fn normalized_position(&self, node: usize) -> (f64, f64) {
        let (r, c) = self.position(node);
        (
            r as f64 / (self.height.max(2) - 1) as f64,
            c as f64 / (self.width.max(2) - 1) as f64,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    values: Tensor,
    zero_norm_nodes: usize,
}

impl DistanceMatrix {
    pub fn from_values(values: Tensor) -> Result<Self> {
        match values.dims() {
            &[n, m] if n == m => Ok(Self {
                values,
                zero_norm_nodes: 0,
            }),
            d => Err(shape_err!("distance matrix must be square, got {d:?}")),
        }
    }

    pub fn nodes(&self) -> usize {
        self.values.dims()[0]
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values.data()[i * self.nodes() + j]
    }

    /// Number of nodes whose feature vector had zero norm. Their cosine
    /// similarity to everything was taken as 0.
    pub fn zero_norm_nodes(&self) -> usize {
        self.zero_norm_nodes
    }
}

/// Combined distance `alpha * D_spatial + (1 - alpha) * D_feature` between
/// every pair of grid nodes. `features` is `[N, d]`.
///
/// The diagonal is exactly zero and the matrix exactly symmetric.
pub fn pairwise_distances(features: &Tensor, grid: &GridSpec, alpha: f64) -> Result<DistanceMatrix> {
    let (n, d) = match features.dims() {
        &[n, d] => (n, d),
        dims => return Err(shape_err!("features must be [N,d], got {dims:?}")),
    };
    if n != grid.nodes() {
        return Err(shape_err!("{n} feature rows for a {}x{} grid", grid.height, grid.width));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(param_err!("alpha must lie in [0,1], got {alpha}"));
    }
    let x = features.data();
    let norms: Vec<f64> = x
        .chunks_exact(d)
        .map(|r| r.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt())
        .collect();
    let zero_norm_nodes = norms.iter().filter(|&&v| v == 0.0).count();
    let pos: Vec<(f64, f64)> = (0..n).map(|i| grid.normalized_position(i)).collect();

    let mut out = vec![0f32; n * n];
    for i in 0..n {
        let xi = &x[i * d..(i + 1) * d];
        for j in i + 1..n {
            let xj = &x[j * d..(j + 1) * d];
            let cos = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let dot: f64 = xi.iter().zip(xj).map(|(&a, &b)| a as f64 * b as f64).sum();
                dot / (norms[i] * norms[j])
            };
            let spatial = (pos[i].0 - pos[j].0).hypot(pos[i].1 - pos[j].1);
            let v = (alpha * spatial + (1.0 - alpha) * (1.0 - cos)) as f32;
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix {
        values: Tensor::new(&[n, n], out)?,
        zero_norm_nodes,
    })
}

/// Dense binary adjacency, `n x n`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    bits: Vec<bool>,
}

impl Adjacency {
    pub fn from_dense(n: usize, bits: Vec<bool>) -> Result<Self> {
        if n == 0 || bits.len() != n * n {
            return Err(shape_err!("{} entries for a {n}x{n} adjacency", bits.len()));
        }
        Ok(Self { n, bits })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.n..(i + 1) * self.n]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j)
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_fn(&[self.n, self.n], |i| if self.bits[i] { 1.0 } else { 0.0 })
    }
}

/// Keeps, for each row, the `k` smallest off-diagonal distances. Ties go to
/// the smaller column index.
pub fn topk_adjacency(dist: &DistanceMatrix, k: usize) -> Result<Adjacency> {
    let n = dist.nodes();
    if k == 0 || k >= n {
        return Err(param_err!("K must satisfy 1 <= K <= N-1 = {}, got {k}", n - 1));
    }
    let v = dist.values().data();
    let mut adj = Adjacency::empty(n);
    let mut cand: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let row = &v[i * n..(i + 1) * n];
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i));
        let order = |&a: &usize, &b: &usize| -> Ordering { row[a].total_cmp(&row[b]).then(a.cmp(&b)) };
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, order);
        }
        for &j in &cand[..k] {
            adj.bits[i * n + j] = true;
        }
    }
    Ok(adj)
}

/// Adjacency with self-loops plus its normalized propagation operator.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedGraph {
    adjacency: Adjacency,
    k: usize,
    operator: Tensor,
    rows: Vec<Vec<(usize, f32)>>,
}

impl NormalizedGraph {
    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nodes(&self) -> usize {
        self.adjacency.nodes()
    }

    /// Dense `[N, N]` operator `D^-1/2 (A + I) D^-1/2`.
    pub fn operator(&self) -> &Tensor {
        &self.operator
    }

    /// Nonzero `(column, weight)` pairs of each operator row.
    pub fn sparse_rows(&self) -> &[Vec<(usize, f32)>] {
        &self.rows
    }
}

/// Adds self-loops and degree-normalizes.
///
/// Degrees are row sums of `A + I`. With `symmetrize`, `A + I` is first
/// replaced by `max(A + I, (A + I)^T)`.
pub fn normalize(adj: &Adjacency, symmetrize: bool) -> NormalizedGraph {
    let n = adj.nodes();
    let mut tilde: Vec<bool> = adj.bits.clone();
    for i in 0..n {
        tilde[i * n + i] = true;
    }
    if symmetrize {
        for i in 0..n {
            for j in i + 1..n {
                let v = tilde[i * n + j] || tilde[j * n + i];
                tilde[i * n + j] = v;
                tilde[j * n + i] = v;
            }
        }
    }
    let degree: Vec<f64> = tilde
        .chunks_exact(n)
        .map(|r| r.iter().filter(|&&b| b).count() as f64)
        .collect();
    let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / d.sqrt()).collect();

    let mut op = vec![0f32; n * n];
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::new();
        for j in 0..n {
            if tilde[i * n + j] {
                let w = (inv_sqrt[i] * inv_sqrt[j]) as f32;
                op[i * n + j] = w;
                row.push((j, w));
            }
        }
        rows.push(row);
    }
    let k = adj.row(0).iter().filter(|&&b| b).count();
    NormalizedGraph {
        adjacency: adj.clone(),
        k,
        operator: Tensor::new(&[n, n], op).expect("square operator"),
        rows,
    }
}

/// Distances, top-K selection and normalization in one call.
pub fn build_graph(
    features: &Tensor,
    grid: &GridSpec,
    alpha: f64,
    k: usize,
    symmetrize: bool,
) -> Result<NormalizedGraph> {
    let d = pairwise_distances(features, grid, alpha)?;
    let a = topk_adjacency(&d, k)?;
    Ok(normalize(&a, symmetrize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{init_uniform, Prng};

    #[test]
    fn identical_features_leave_pure_spatial_distance() {
        let grid = GridSpec::new(2, 2).unwrap();
        let f = Tensor::full(&[4, 3], 1.0 / 3f32.sqrt());
        let d = pairwise_distances(&f, &grid, 0.5).unwrap();
        assert!((d.get(0, 1) - 0.5).abs() < 1e-6);
        assert!((d.get(0, 2) - 0.5).abs() < 1e-6);
        assert!((d.get(0, 3) - 0.5 * 2f32.sqrt()).abs() < 1e-6);
        for i in 0..4 {
            assert_eq!(d.get(i, i), 0.0);
        }
    }

    #[test]
    fn zero_norm_rows_are_flagged() {
        let grid = GridSpec::new(1, 3).unwrap();
        let f = Tensor::new(&[3, 2], vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let d = pairwise_distances(&f, &grid, 0.0).unwrap();
        assert_eq!(d.zero_norm_nodes(), 1);
        assert_eq!(d.get(0, 1), 1.0);
        assert_eq!(d.get(1, 2), 1.0);
    }

    #[test]
    fn alpha_endpoints() {
        let grid = GridSpec::new(3, 3).unwrap();
        let f = init_uniform(&mut Prng::new(1), &[9, 4], 1).unwrap();
        let spatial = pairwise_distances(&f, &grid, 1.0).unwrap();
        let feature = pairwise_distances(&f, &grid, 0.0).unwrap();
        // (0,0) to (2,2) in normalized coords is sqrt(2)
        assert!((spatial.get(0, 8) - 2f32.sqrt()).abs() < 1e-6);
        let (a, b) = (&f.data()[0..4], &f.data()[32..36]);
        let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
        let na: f64 = a.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        assert!((feature.get(0, 8) as f64 - (1.0 - dot / (na * nb))).abs() < 1e-6);
        assert!(pairwise_distances(&f, &grid, 1.5).is_err());
    }

    #[test]
    fn complete_graph_when_k_is_n_minus_one() {
        let d = DistanceMatrix::from_values(Tensor::from_fn(&[4, 4], |i| i as f32)).unwrap();
        let a = topk_adjacency(&d, 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), i != j);
            }
        }
        assert!(topk_adjacency(&d, 0).is_err());
        assert!(topk_adjacency(&d, 4).is_err());
    }

    #[test]
    fn ties_prefer_smaller_column() {
        let d = DistanceMatrix::from_values(
            Tensor::new(
                &[4, 4],
                vec![
                    0.0, 0.1, 0.1, 0.9, //
                    0.1, 0.0, 0.5, 0.5, //
                    0.1, 0.5, 0.0, 0.5, //
                    0.9, 0.5, 0.5, 0.0,
                ],
            )
            .unwrap(),
        )
        .unwrap();
        let a = topk_adjacency(&d, 1).unwrap();
        assert_eq!(a.neighbors(0).collect::<Vec<_>>(), vec![1]);
        assert_eq!(a.neighbors(3).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn two_node_complete_graph_operator() {
        let a = Adjacency::from_dense(2, vec![false, true, true, false]).unwrap();
        let g = normalize(&a, false);
        assert!(g.operator().data().iter().all(|&v| (v - 0.5).abs() < 1e-7));
    }

    #[test]
    fn empty_adjacency_gives_identity() {
        let g = normalize(&Adjacency::empty(3), false);
        let eye = Tensor::from_fn(&[3, 3], |i| if i / 3 == i % 3 { 1.0 } else { 0.0 });
        assert_eq!(g.operator(), &eye);
    }

    #[test]
    fn symmetrize_flag_makes_operator_symmetric() {
        let a = Adjacency::from_dense(3, vec![false, true, false, false, false, true, true, false, false]).unwrap();
        let lit = normalize(&a, false);
        let sym = normalize(&a, true);
        let at = |g: &NormalizedGraph, i: usize, j: usize| g.operator().data()[i * 3 + j];
        assert_eq!(at(&lit, 1, 0), 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(at(&sym, i, j), at(&sym, j, i));
            }
        }
    }
}
