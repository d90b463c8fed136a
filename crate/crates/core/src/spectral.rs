//! Eigenstructure: clustering, Jordan block sizes, exceptional-point order,
//! closed-form spectra and parameter sweeps.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sci12;
use crate::linalg::{self, c, CMatrix, C64};

/// Default cluster radius, relative to `‖M‖_F`.
pub const CLUSTER_REL_TOL: f64 = 1e-7;
/// Default singular-value rank threshold, relative to `‖M‖_F`.
pub const RANK_REL_TOL: f64 = 1e-9;
/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "EP_MOMENTS_THREADS";

const REFINE_FACTOR: f64 = 4.0;

fn scale_of(m: &CMatrix) -> f64 {
    let f = linalg::frobenius(m);
    if f > 0.0 {
        f
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub cluster: f64,
    pub rank: f64,
}

impl Tolerances {
    pub fn for_matrix(m: &CMatrix) -> Self {
        let s = scale_of(m);
        Self {
            cluster: CLUSTER_REL_TOL * s,
            rank: RANK_REL_TOL * s,
        }
    }
}

/// Single-linkage groups of `values` (indices) at the given radius.
fn single_linkage(values: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn mean(values: &[C64]) -> C64 {
    values.iter().sum::<C64>() / values.len() as f64
}

/// Replaces the members of each defective (or exactly degenerate)
/// eigenvalue cluster by their mean.
///
/// Near a Jordan block of size `k` a backward-stable solver scatters the
/// eigenvalues on a circle of radius `~ u^(1/k)·‖M‖` around the true value
/// while their mean stays accurate to `~ u·‖M‖`. A group of `m` raw values is
/// collapsed only when `M − λ̄ I` at the mean `λ̄` has a null space of
/// dimension exactly `m` (measured by the rank sequence of its powers) and
/// the spread is compatible with the largest Jordan block found.
fn refine(m: &CMatrix, raw: &[C64]) -> Result<Vec<C64>> {
    let n = raw.len();
    let scale = scale_of(m);
    let tol_rank = RANK_REL_TOL * scale;
    let radius_for = |k: usize| REFINE_FACTOR * f64::EPSILON.powf(1.0 / k as f64) * scale;
    let mut values = raw.to_vec();
    let mut settled = vec![false; n];
    let mut rejected = HashSet::new();
    for level in 2..=n {
        let open: Vec<usize> = (0..n).filter(|&i| !settled[i]).collect();
        if open.len() < 2 {
            break;
        }
        let open_vals: Vec<C64> = open.iter().map(|&i| raw[i]).collect();
        for group in single_linkage(&open_vals, radius_for(level)) {
            let size = group.len();
            if size < 2 {
                continue;
            }
            let key: Vec<usize> = group.iter().map(|&g| open[g]).collect();
            if rejected.contains(&key) {
                continue;
            }
            let members: Vec<C64> = group.iter().map(|&g| open_vals[g]).collect();
            let centre = mean(&members);
            let shifted = linalg::shift(m, -centre);
            if linalg::numerical_rank(&shifted, tol_rank)? == n {
                rejected.insert(key);
                continue;
            }
            let ranks = linalg::power_ranks(&shifted, tol_rank, size)?;
            let plateau = ranks[size - 1];
            if n - plateau != size {
                rejected.insert(key);
                continue;
            }
            let largest_block = ranks.iter().position(|&r| r == plateau).map_or(size, |k| k + 1);
            let spread = members.iter().map(|v| (v - centre).norm()).fold(0.0, f64::max);
            if spread > radius_for(largest_block) {
                rejected.insert(key);
                continue;
            }
            for &g in &group {
                values[open[g]] = centre;
                settled[open[g]] = true;
            }
        }
    }
    Ok(values)
}

/// Eigenvalues (cluster-refined, see [`refine`]) and unit-norm right
/// eigenvectors.
pub fn eigen(m: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    if !linalg::is_square(m) {
        return Err(Error::Dimension(format!("eigenvalues of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if !linalg::all_finite(m) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let (raw, vectors) = linalg::eig(m)?;
    if raw.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("eigensolver returned non-finite values".into()));
    }
    Ok((refine(m, &raw)?, vectors))
}

/// Eigenvalues sorted by real part, then imaginary part.
pub fn sorted_eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let (mut v, _) = eigen(m)?;
    v.sort_by(linalg::cmp_complex);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster {
    pub value: C64,
    pub members: Vec<C64>,
    pub algebraic_multiplicity: usize,
    pub geometric_multiplicity: usize,
}

/// Groups eigenvalues at radius `tol_cluster` and measures each group's
/// geometric multiplicity `n − rank(M − λ I)` with threshold `tol_rank`.
/// Clusters come out sorted by centroid.
pub fn multiplicities_with(m: &CMatrix, tol: Tolerances) -> Result<Vec<EigenCluster>> {
    if !(tol.cluster > 0.0) || !(tol.rank > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let (values, _) = eigen(m)?;
    let n = values.len();
    let mut out = Vec::new();
    for group in single_linkage(&values, tol.cluster) {
        let members: Vec<C64> = group.iter().map(|&i| values[i]).collect();
        let value = mean(&members);
        let rank = linalg::numerical_rank(&linalg::shift(m, -value), tol.rank)?;
        out.push(EigenCluster {
            value,
            algebraic_multiplicity: members.len(),
            geometric_multiplicity: n - rank,
            members,
        });
    }
    out.sort_by(|a, b| linalg::cmp_complex(&a.value, &b.value));
    Ok(out)
}

/// [`multiplicities_with`] at the default rank threshold.
pub fn multiplicities(m: &CMatrix, tol_cluster: f64) -> Result<Vec<EigenCluster>> {
    let tol = Tolerances {
        cluster: tol_cluster,
        ..Tolerances::for_matrix(m)
    };
    multiplicities_with(m, tol)
}

/// Jordan block sizes of a cluster from the rank sequence
/// `r_k = rank((M − λI)^k)`: the Weyr characteristic `w_k = r_(k−1) − r_k`
/// counts blocks of size ≥ k. Returns `(largest block, blocks descending)`.
pub fn ep_order(m: &CMatrix, cluster: &EigenCluster, tol_rank: f64) -> Result<(usize, Vec<usize>)> {
    let n = m.nrows();
    let alg = cluster.algebraic_multiplicity;
    let target = n - alg;
    let ranks = linalg::power_ranks(&linalg::shift(m, -cluster.value), tol_rank, alg + 1)?;
    let mut weyr = Vec::new();
    let mut prev = n;
    for (k, &r) in ranks.iter().enumerate() {
        if r > prev {
            return Err(Error::RankBreakdown {
                k: k + 1,
                msg: format!("rank grew from {prev} to {r}"),
            });
        }
        if prev == target {
            if r != target {
                return Err(Error::RankBreakdown {
                    k: k + 1,
                    msg: format!("rank left the plateau {target}"),
                });
            }
            break;
        }
        let w = prev - r;
        if let Some(&last) = weyr.last() {
            if w > last {
                return Err(Error::RankBreakdown {
                    k: k + 1,
                    msg: format!("Weyr characteristic increased ({last} → {w})"),
                });
            }
        }
        if w == 0 {
            return Err(Error::RankBreakdown {
                k: k + 1,
                msg: format!("rank stalled at {r} above the plateau {target}"),
            });
        }
        weyr.push(w);
        prev = r;
    }
    if prev != target {
        return Err(Error::RankBreakdown {
            k: ranks.len(),
            msg: format!("rank never reached n − alg = {target}"),
        });
    }
    let mut blocks = Vec::new();
    for k in 0..weyr.len() {
        let next = weyr.get(k + 1).copied().unwrap_or(0);
        for _ in 0..(weyr[k] - next) {
            blocks.push(k + 1);
        }
    }
    blocks.sort_unstable_by(|a, b| b.cmp(a));
    Ok((weyr.len(), blocks))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub value: [f64; 2],
    pub alg: usize,
    pub geo: usize,
    pub blocks: Vec<usize>,
    pub ep_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EPReport {
    pub clusters: Vec<ClusterReport>,
    pub tolerances: Tolerances,
}

impl EPReport {
    /// Largest EP order over all clusters (1 when the matrix is diagonalizable).
    pub fn max_ep_order(&self) -> usize {
        self.clusters.iter().map(|c| c.ep_order).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn ep_report_with(m: &CMatrix, tol: Tolerances) -> Result<EPReport> {
    let clusters = multiplicities_with(m, tol)?
        .into_iter()
        .map(|cl| {
            let (order, blocks) = ep_order(m, &cl, tol.rank)?;
            if blocks.len() != cl.geometric_multiplicity {
                return Err(Error::RankBreakdown {
                    k: 1,
                    msg: format!(
                        "{} blocks but geometric multiplicity {}",
                        blocks.len(),
                        cl.geometric_multiplicity
                    ),
                });
            }
            Ok(ClusterReport {
                value: [cl.value.re, cl.value.im],
                alg: cl.algebraic_multiplicity,
                geo: cl.geometric_multiplicity,
                blocks,
                ep_order: order,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EPReport { clusters, tolerances: tol })
}

pub fn ep_report(m: &CMatrix) -> Result<EPReport> {
    ep_report_with(m, Tolerances::for_matrix(m))
}

/// `(−NΓ + (N−2n)s, −NΓ − (N−2n)s)` with `s = sqrt(Γ12² − Δ²)` (principal root).
pub fn closed_form_lambda(n_order: usize, n: usize, gamma: f64, gamma12: f64, delta: f64) -> Result<(C64, C64)> {
    if n > n_order {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds N = {n_order}")));
    }
    let s = c(gamma12 * gamma12 - delta * delta, 0.0).sqrt();
    let base = c(-(n_order as f64) * gamma, 0.0);
    let k = n_order as f64 - 2.0 * n as f64;
    Ok((base + s * k, base - s * k))
}

/// The `N + 1` eigenvalues `−NΓ + (N−2n)s`, `n = 0..N`, sorted.
pub fn closed_form_spectrum(n_order: usize, gamma: f64, gamma12: f64, delta: f64) -> Vec<C64> {
    let mut v: Vec<C64> = (0..=n_order)
        .map(|n| closed_form_lambda(n_order, n, gamma, gamma12, delta).expect("n ≤ N").0)
        .collect();
    v.sort_by(linalg::cmp_complex);
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    /// Sorted eigenvalues, or the error message for this grid point.
    pub eigenvalues: std::result::Result<Vec<C64>, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub parameter: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.param).collect()
    }

    /// CSV with header `param,re_1,im_1,…`; failed rows carry `nan` entries.
    pub fn to_csv(&self) -> String {
        let width = self
            .rows
            .iter()
            .filter_map(|r| r.eigenvalues.as_ref().ok().map(Vec::len))
            .max()
            .unwrap_or(0);
        let mut out = String::from("param");
        for k in 1..=width {
            write!(out, ",re_{k},im_{k}").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&sci12(row.param));
            for k in 0..width {
                match &row.eigenvalues {
                    Ok(v) if k < v.len() => write!(out, ",{},{}", sci12(v[k].re), sci12(v[k].im)).unwrap(),
                    _ => out.push_str(",nan,nan"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Reads a table written by [`SweepTable::to_csv`]. Rows made only of
    /// `nan` come back as failures.
    pub fn from_csv(parameter: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Syntax { line: 1, msg: "empty CSV".into() })?;
        let cols = header.split(',').count();
        if cols % 2 != 1 || !header.starts_with("param") {
            return Err(Error::Syntax {
                line: 1,
                msg: "expected `param,re_1,im_1,…`".into(),
            });
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::Syntax {
                    line: i + 2,
                    msg: format!("{} fields, expected {cols}", fields.len()),
                });
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Syntax {
                    line: i + 2,
                    msg: format!("non-numeric field `{s}`"),
                })
            };
            let param = num(fields[0])?;
            let vals = fields[1..]
                .chunks(2)
                .map(|p| Ok(c(num(p[0])?, num(p[1])?)))
                .collect::<Result<Vec<_>>>()?;
            let eigenvalues = if !vals.is_empty() && vals.iter().all(|v| v.re.is_nan()) {
                Err("failed".to_string())
            } else {
                Ok(vals.into_iter().take_while(|v| !v.re.is_nan()).collect())
            };
            rows.push(SweepRow { param, eigenvalues });
        }
        Ok(Self {
            parameter: parameter.to_string(),
            rows,
        })
    }
}

/// `steps` equal intervals from `from` to `to` (`steps + 1` points).
pub fn linear_grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if !from.is_finite() || !to.is_finite() {
        return Err(Error::InvalidArgument("grid bounds must be finite".into()));
    }
    if steps == 0 {
        return Ok(vec![from]);
    }
    Ok((0..=steps)
        .map(|i| from + (to - from) * i as f64 / steps as f64)
        .collect())
}

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Sorted eigenvalues of `builder(p)` for every `p` in `grid`. Points run
/// concurrently (capped by [`THREADS_ENV`]); rows keep grid order and a
/// failing point does not abort the others.
pub fn sweep<F>(parameter: &str, builder: F, grid: &[f64]) -> Result<SweepTable>
where
    F: Fn(f64) -> Result<CMatrix> + Sync,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty sweep grid".into()));
    }
    if grid.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("sweep grid has non-finite points".into()));
    }
    let point = |&p: &f64| SweepRow {
        param: p,
        eigenvalues: builder(p).and_then(|m| sorted_eigenvalues(&m)).map_err(|e| e.to_string()),
    };
    let run = || grid.par_iter().map(point).collect::<Vec<_>>();
    let rows = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(SweepTable {
        parameter: parameter.to_string(),
        rows,
    })
}
