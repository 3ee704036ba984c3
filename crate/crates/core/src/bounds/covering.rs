use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `(P_n|f − g|^{1+κ})^{1/(1+κ)}` between rows `i` and `j` of `values`.
pub fn empirical_distance(values: &Matrix, i: usize, j: usize, kappa: f64) -> f64 {
    let p = 1.0 + kappa;
    let (a, b) = (values.row(i), values.row(j));
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum();
    (s / a.len().max(1) as f64).powf(1.0 / p)
}

pub fn distance_matrix(values: &Matrix, kappa: f64) -> Vec<Vec<f64>> {
    let k = values.rows();
    let mut d = alloc::vec![alloc::vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = empirical_distance(values, i, j, kappa);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Farthest-first ordering: centers in selection order and, for each
/// prefix length `k`, the covering radius achieved by the first `k` centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traversal {
    pub order: Vec<usize>,
    pub radii: Vec<f64>,
}

impl Traversal {
    pub fn from_distances(dist: &[Vec<f64>]) -> Self {
        let k = dist.len();
        if k == 0 {
            return Self { order: Vec::new(), radii: Vec::new() };
        }
        let mut order = alloc::vec![0];
        let mut nearest: Vec<f64> = dist[0].clone();
        let mut radii = Vec::with_capacity(k);
        loop {
            let (far, r) =
                nearest
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            radii.push(r.max(0.0));
            if order.len() == k || r <= 0.0 {
                break;
            }
            order.push(far);
            for (i, v) in nearest.iter_mut().enumerate() {
                *v = v.min(dist[far][i]);
            }
        }
        Self { order, radii }
    }

    /// Number of centers needed for radius `h`.
    pub fn count(&self, h: f64) -> usize {
        self.radii.iter().position(|&r| r <= h).map_or(self.order.len(), |i| i + 1)
    }
}

/// Greedy cover at radius `h` with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub centers: Vec<usize>,
    /// Index into `centers` of a center within `h` of each function.
    pub assignment: Vec<usize>,
}

/// Greedy `L^{1+κ}(P_n)` cover of the rows of `values`: centers are chosen
/// farthest-first (lowest index on ties) until every function lies within
/// `h` of a center.
pub fn greedy_cover(values: &Matrix, h: f64, kappa: f64) -> Result<Cover> {
    if !(h > 0.0) {
        return Err(Error::Parameter(alloc::format!("cover radius must be > 0, got {h}")));
    }
    let dist = distance_matrix(values, kappa);
    let t = Traversal::from_distances(&dist);
    let centers: Vec<usize> = t.order[..t.count(h)].to_vec();
    let assignment = (0..values.rows())
        .map(|i| {
            centers
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (c, &j)| if dist[i][j] < acc.1 { (c, dist[i][j]) } else { acc })
                .0
        })
        .collect();
    Ok(Cover { centers, assignment })
}

pub fn empirical_covering_number(values: &Matrix, h: f64, kappa: f64) -> Result<usize> {
    Ok(greedy_cover(values, h, kappa)?.centers.len())
}

/// Every function is within `h` of the center it is assigned to.
pub fn verify_cover(values: &Matrix, cover: &Cover, h: f64, kappa: f64) -> bool {
    cover.assignment.len() == values.rows()
        && cover
            .assignment
            .iter()
            .enumerate()
            .all(|(i, &c)| c < cover.centers.len() && empirical_distance(values, i, cover.centers[c], kappa) <= h)
}
