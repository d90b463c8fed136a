#![allow(dead_code)]

pub mod exact;

use ep_moments::linalg::{self, c, CMatrix, C64};

pub fn exact_to_matrix(m: &exact::Mat) -> CMatrix {
    let rows: Vec<Vec<C64>> = exact::to_f64(m)
        .into_iter()
        .map(|r| r.into_iter().map(|(a, b)| c(a, b)).collect())
        .collect();
    linalg::from_rows(&rows).unwrap()
}

/// Largest distance in a greedy nearest-neighbour pairing of two
/// multisets of equal size (`inf` when the sizes differ).
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
