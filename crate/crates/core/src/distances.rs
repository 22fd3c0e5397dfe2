//! Distribution distances for the Monte Carlo harness.
//!
//! The Mallows (Wasserstein-p) distance between two equal-size empirical
//! laws is an optimal assignment problem on the matrix of pairwise
//! `||u - v||^p` costs; it is solved exactly with the Jonker-Volgenant
//! shortest-augmenting-path form of the Hungarian method (`O(N^3)`, fine
//! for the <= 2000 atoms used at desk scale). Scalar samples additionally
//! get the sorted-pairing fast path and the two-sample Kolmogorov-Smirnov
//! statistic.

use crate::error::{Error, Result};
use crate::function_space::GridFunction;

/// A finite collection of equally weighted atoms.
#[derive(Debug, Clone)]
pub enum EmpiricalLaw {
    Functions(Vec<GridFunction>),
    Scalars(Vec<f64>),
}

impl EmpiricalLaw {
    pub fn from_functions(atoms: Vec<GridFunction>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::Degenerate("empirical law needs at least one atom".into()))?;
        let grid = first.grid().clone();
        if !atoms.iter().all(|a| a.grid() == &grid) {
            return Err(Error::Structural("law atoms live on different grids".into()));
        }
        Ok(EmpiricalLaw::Functions(atoms))
    }

    pub fn from_scalars(atoms: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Degenerate("empirical law needs at least one atom".into()));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::Structural("non-finite scalar atom".into()));
        }
        Ok(EmpiricalLaw::Scalars(atoms))
    }

    pub fn len(&self) -> usize {
        match self {
            EmpiricalLaw::Functions(a) => a.len(),
            EmpiricalLaw::Scalars(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn atom_distance(&self, i: usize, other: &EmpiricalLaw, j: usize) -> Result<f64> {
        match (self, other) {
            (EmpiricalLaw::Functions(a), EmpiricalLaw::Functions(b)) => {
                if a[i].grid() != b[j].grid() {
                    return Err(Error::Structural("laws live on different grids".into()));
                }
                Ok(a[i].l2_distance(&b[j]))
            }
            (EmpiricalLaw::Scalars(a), EmpiricalLaw::Scalars(b)) => Ok((a[i] - b[j]).abs()),
            _ => Err(Error::Unsupported("cannot mix function and scalar atoms".into())),
        }
    }
}

/// An optimal assignment between two equal-size laws.
#[derive(Debug, Clone)]
pub struct AssignmentResult {
    /// `permutation[i] = j` pairs atom `i` of the first law with atom `j`
    /// of the second; a bijection on `0..N`.
    pub permutation: Vec<usize>,
    /// `( N^-1 sum_i ||u_i - v_{perm(i)}||^p )^{1/p}`.
    pub cost: f64,
    /// Order of the metric.
    pub p: f64,
}

/// Exact Mallows distance `d_p` between equal-size empirical laws.
///
/// Unequal atom counts are rejected rather than subsampled; the harness
/// only ever compares same-`n` pools.
pub fn mallows_distance(f: &EmpiricalLaw, g: &EmpiricalLaw, p: f64) -> Result<AssignmentResult> {
    if !(p >= 1.0) {
        return Err(Error::Config(format!("metric order must be >= 1, got {p}")));
    }
    let n = f.len();
    if n != g.len() {
        return Err(Error::Unsupported(format!(
            "mallows distance needs equal-size laws, got {n} and {}",
            g.len()
        )));
    }
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = f.atom_distance(i, g, j)?.powf(p);
        }
    }
    let (permutation, total) = solve_assignment(&cost, n);
    Ok(AssignmentResult { permutation, cost: (total / n as f64).powf(1.0 / p), p })
}

/// Shortest-augmenting-path assignment solver (Jonker-Volgenant potentials
/// form of the Hungarian method). Returns the row-to-column assignment and
/// the minimal total cost. `cost` is row-major `n x n`.
fn solve_assignment(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    // 1-based arrays with column 0 as the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // matched_row[j] = row assigned to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path.
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        let i = matched_row[j];
        permutation[i - 1] = j - 1;
        total += cost[(i - 1) * n + (j - 1)];
    }
    (permutation, total)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_z |F_a(z) - F_b(z)|`.
///
/// The inputs need not be pre-sorted; ties are handled by advancing both
/// empirical distribution functions past equal values before comparing.
pub fn kolmogorov_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Degenerate("kolmogorov distance of an empty sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut stat = 0.0f64;
    while i < a.len() && j < b.len() {
        let z = a[i].min(b[j]);
        while i < a.len() && a[i] <= z {
            i += 1;
        }
        while j < b.len() && b[j] <= z {
            j += 1;
        }
        stat = stat.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(stat)
}

/// Wasserstein-p distance between equal-size scalar samples via the sorted
/// pairing, which is the optimal coupling on the real line.
pub fn scalar_wasserstein(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Config(format!("metric order must be >= 1, got {p}")));
    }
    if a.len() != b.len() {
        return Err(Error::Unsupported(format!(
            "scalar wasserstein needs equal-size samples, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Degenerate("wasserstein distance of an empty sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs().powf(p)).sum();
    Ok((total / a.len() as f64).powf(1.0 / p))
}
