//! Envelope (skyline) Cholesky factorization of sparse symmetric positive
//! definite matrices, with a reverse Cuthill-McKee ordering to keep the
//! envelope narrow.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// `P A Pᵀ = L Lᵀ` with `L` stored row by row from its first nonzero column.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    /// `perm[new] = old`
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    values: Vec<f64>,
    smallest_pivot: f64,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidArgument("Cholesky needs a square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (old, &new) in inv.iter().enumerate() {
            for &c in a.row(old).0 {
                let cn = inv[c];
                if cn < new {
                    first[new] = first[new].min(cn);
                }
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for (i, &f) in first.iter().enumerate() {
            row_start.push(total);
            total += i - f + 1;
        }
        row_start.push(total);

        let mut values = vec![0.0; total];
        for (old, &i) in inv.iter().enumerate() {
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i {
                    values[row_start[i] + j - first[i]] += v;
                }
            }
        }

        let mut smallest_pivot = f64::INFINITY;
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = values.split_at_mut(row_start[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = &done[row_start[j]..row_start[j] + j - fj + 1];
                let dot = dot(&row_i[k0 - fi..j - fi], &row_j[k0 - fj..j - fj]);
                row_i[j - fi] = (row_i[j - fi] - dot) / row_j[j - fj];
            }
            let diag = row_i[i - fi];
            let d = diag - dot(&row_i[..i - fi], &row_i[..i - fi]);
            if !(d > 1e-14 * diag.abs()) || !d.is_finite() {
                return Err(Error::SingularSystem {
                    pivot: d,
                    detail: format!("non-positive pivot at row {} of a {n} x {n} matrix", perm[i]),
                });
            }
            smallest_pivot = smallest_pivot.min(d);
            row_i[i - fi] = d.sqrt();
        }
        Ok(Self { perm, first, row_start, values, smallest_pivot })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of `L`.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Smallest squared diagonal of `L` met during factorization.
    pub fn smallest_pivot(&self) -> f64 {
        self.smallest_pivot
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.row_start[i]..self.row_start[i + 1]]
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // leading zeros of a sparse right-hand side stay zero
        let start = y.iter().position(|&v| v != 0.0).unwrap_or(n);
        for i in start..n {
            let fi = self.first[i];
            let row = self.row(i);
            let k0 = fi.max(start);
            let s = dot(&row[k0 - fi..i - fi], &y[k0..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            if xi != 0.0 {
                for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                    *yk -= l * xi;
                }
            }
        }
        for (&p, v) in self.perm.iter().zip(y) {
            b[p] = v;
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorise
    let mut acc = [0.0; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity pattern of `a`,
/// returned as `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> =
        (0..n).map(|i| a.row(i).0.iter().copied().filter(|&j| j != i).collect()).collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]).unwrap();
        let root = pseudo_peripheral(seed, &adj, &degree);
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// BFS levels from `root`: the last level and the eccentricity.
fn last_level(root: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut seen = vec![root];
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
                seen.push(w);
            }
        }
    }
    let ecc = seen.iter().map(|&v| dist[v]).max().unwrap_or(0);
    (seen.into_iter().filter(|&v| dist[v] == ecc).collect(), ecc)
}

fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let (mut level, mut ecc) = last_level(root, adj);
    loop {
        let cand = *level.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        let (next_level, next_ecc) = last_level(cand, adj);
        if next_ecc <= ecc {
            return root;
        }
        root = cand;
        level = next_level;
        ecc = next_ecc;
    }
}
