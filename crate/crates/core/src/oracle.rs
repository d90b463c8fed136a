//! Brute-force reference: the full master equation integrated on a truncated
//! Fock space, with moments read off the density matrix.
//!
//! Independent of the symbolic moment machinery; it only shares the
//! [`QuadraticSystem`] description.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sci12;
use crate::linalg::{self, c, CMatrix, C64, I, ZERO};
use crate::model::{ensure_valid, QuadraticSystem};
use crate::moments::{propagate_matrix, EvolutionMatrix, MomentIndex};

/// Largest Hilbert-space dimension [`build_space`] accepts.
pub const MAX_DIM: usize = 4096;
pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Row-sparse square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseMatrix {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            rows: (0..dim).map(|i| vec![(i, c(1.0, 0.0))]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn push(&mut self, r: usize, col: usize, v: C64) {
        if v == ZERO {
            return;
        }
        match self.rows[r].iter_mut().find(|(k, _)| *k == col) {
            Some(e) => e.1 += v,
            None => self.rows[r].push((col, v)),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                for &(col, w) in &other.rows[k] {
                    out.push(r, col, v * w);
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, s: C64) {
        for (r, row) in other.rows.iter().enumerate() {
            for &(col, v) in row {
                self.push(r, col, v * s);
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(col, v) in row {
                out.push(col, r, v.conj());
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = linalg::zeros(self.dim, self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(col, v) in row {
                m[(r, col)] += v;
            }
        }
        m
    }

    /// `out += s · self · rho` for row-major `rho`.
    fn left_apply(&self, rho: &[C64], out: &mut [C64], s: C64) {
        let d = self.dim;
        for (r, row) in self.rows.iter().enumerate() {
            let dst = &mut out[r * d..(r + 1) * d];
            for &(k, v) in row {
                let f = s * v;
                let src = &rho[k * d..(k + 1) * d];
                for (o, x) in dst.iter_mut().zip(src) {
                    *o += f * x;
                }
            }
        }
    }

    /// `out += s · rho · self` for row-major `rho`.
    fn right_apply(&self, rho: &[C64], out: &mut [C64], s: C64) {
        let d = self.dim;
        for r in 0..d {
            let src = &rho[r * d..(r + 1) * d];
            let dst = &mut out[r * d..(r + 1) * d];
            for (k, &x) in src.iter().enumerate() {
                if x == ZERO {
                    continue;
                }
                let f = s * x;
                for &(col, v) in &self.rows[k] {
                    dst[col] += f * v;
                }
            }
        }
    }

    /// `Tr(self · rho)`.
    fn trace_with(&self, rho: &DensityMatrix) -> C64 {
        let d = self.dim;
        let mut acc = ZERO;
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                acc += v * rho.data[k * d + r];
            }
        }
        acc
    }
}

/// Truncated Fock space of `n_modes` modes with occupations `0..=cutoff`.
/// Basis index `Σ_j n_j (cutoff+1)^(n_modes−1−j)`: mode 1 varies slowest.
#[derive(Debug, Clone)]
pub struct FockSpace {
    n_modes: usize,
    cutoff: usize,
    dim: usize,
    lowering: Vec<SparseMatrix>,
}

pub fn build_space(n_modes: usize, cutoff: usize) -> Result<FockSpace> {
    if n_modes == 0 || cutoff == 0 {
        return Err(Error::InvalidArgument("need at least one mode and cutoff ≥ 1".into()));
    }
    let levels = cutoff + 1;
    let dim = levels
        .checked_pow(n_modes as u32)
        .filter(|&d| d <= MAX_DIM)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "Fock space ({levels} levels)^{n_modes} exceeds the {MAX_DIM}-state guardrail"
            ))
        })?;
    let lowering = (0..n_modes)
        .map(|j| {
            let stride = levels.pow((n_modes - 1 - j) as u32);
            let mut a = SparseMatrix::zero(dim);
            for col in 0..dim {
                let occ = (col / stride) % levels;
                if occ > 0 {
                    a.push(col - stride, col, c((occ as f64).sqrt(), 0.0));
                }
            }
            a
        })
        .collect();
    Ok(FockSpace {
        n_modes,
        cutoff,
        dim,
        lowering,
    })
}

impl FockSpace {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Annihilation operator of mode `j` (0-based).
    pub fn lowering(&self, j: usize) -> &SparseMatrix {
        &self.lowering[j]
    }

    /// Dense annihilation operator of mode `j` (0-based).
    pub fn annihilation(&self, j: usize) -> CMatrix {
        self.lowering[j].to_dense()
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        let levels = self.cutoff + 1;
        (index / levels.pow((self.n_modes - 1 - mode) as u32)) % levels
    }

    /// Product of ladder operators in the stored factor order.
    pub fn moment_operator(&self, idx: &MomentIndex) -> Result<SparseMatrix> {
        idx.check_modes(self.n_modes)?;
        let mut out = SparseMatrix::identity(self.dim);
        for f in idx.factors() {
            let a = &self.lowering[f.mode - 1];
            out = if f.dagger { out.mul(&a.adjoint()) } else { out.mul(a) };
        }
        Ok(out)
    }
}

/// Row-major density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if !linalg::is_square(m) {
            return Err(Error::Dimension("density matrices are square".into()));
        }
        let d = m.nrows();
        let data = (0..d * d).map(|k| m[(k / d, k % d)]).collect();
        Ok(Self { dim: d, data })
    }

    pub fn to_matrix(&self) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |i, j| self.data[i * d + j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.to_matrix())?
            .first()
            .copied()
            .unwrap_or(0.0))
    }

    /// Population of states with some mode at the cutoff.
    pub fn boundary_population(&self, space: &FockSpace) -> f64 {
        (0..self.dim)
            .filter(|&i| (0..space.n_modes).any(|m| space.occupation(i, m) == space.cutoff))
            .map(|i| self.data[i * self.dim + i].re)
            .sum()
    }

    /// `⟨X⟩ = Tr(ρ X)`.
    pub fn expectation(&self, op: &SparseMatrix) -> C64 {
        op.trace_with(self)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Product of truncated single-mode coherent states, each renormalized.
pub fn coherent_state(alphas: &[C64], space: &FockSpace) -> Result<DensityMatrix> {
    if alphas.len() != space.n_modes {
        return Err(Error::Dimension(format!(
            "{} amplitudes for {} modes",
            alphas.len(),
            space.n_modes
        )));
    }
    let levels = space.cutoff + 1;
    let mut per_mode = Vec::with_capacity(alphas.len());
    for (j, &alpha) in alphas.iter().enumerate() {
        if alpha.norm_sqr() > space.cutoff as f64 / 4.0 {
            return Err(Error::InvalidArgument(format!(
                "|α_{}|² = {:.3} exceeds cutoff/4 = {:.3}",
                j + 1,
                alpha.norm_sqr(),
                space.cutoff as f64 / 4.0
            )));
        }
        let mut amp = Vec::with_capacity(levels);
        let mut term = c(1.0, 0.0);
        for n in 0..levels {
            if n > 0 {
                term = term * alpha / (n as f64).sqrt();
            }
            amp.push(term);
        }
        let norm = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        per_mode.push(amp.into_iter().map(|a| a / norm).collect::<Vec<_>>());
    }
    let psi: Vec<C64> = (0..space.dim)
        .map(|i| (0..space.n_modes).map(|m| per_mode[m][space.occupation(i, m)]).product())
        .collect();
    let d = space.dim;
    let mut data = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            data[i * d + j] = psi[i] * psi[j].conj();
        }
    }
    Ok(DensityMatrix { dim: d, data })
}

/// Fock-space form of `L ρ = −i(H ρ − ρ H†) + 2 Σ_jk Γ_jk a_j ρ a_k†` with
/// `H = H_c − i Σ_jk Γ_jk a_k† a_j`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    h: SparseMatrix,
    h_dag: SparseMatrix,
    lowering: Vec<SparseMatrix>,
    raising: Vec<SparseMatrix>,
    gamma: CMatrix,
}

impl Liouvillian {
    pub fn new(sys: &QuadraticSystem, space: &FockSpace) -> Result<Self> {
        let n = sys.n_modes();
        if n != space.n_modes {
            return Err(Error::Dimension(format!(
                "{n}-mode system on a {}-mode Fock space",
                space.n_modes
            )));
        }
        let lowering: Vec<SparseMatrix> = space.lowering.clone();
        let raising: Vec<SparseMatrix> = lowering.iter().map(SparseMatrix::adjoint).collect();
        let mut h = SparseMatrix::zero(space.dim);
        let (g, chi, gam) = (sys.coherent_coupling(), sys.squeezing_coupling(), sys.decoherence());
        for j in 0..n {
            h.add_scaled(&raising[j].mul(&lowering[j]), c(sys.detunings()[j], 0.0));
            for k in 0..n {
                h.add_scaled(&raising[j].mul(&lowering[k]), g[(j, k)]);
                h.add_scaled(&raising[j].mul(&raising[k]), chi[(j, k)] * 0.5);
                h.add_scaled(&lowering[j].mul(&lowering[k]), chi[(j, k)].conj() * 0.5);
                h.add_scaled(&raising[k].mul(&lowering[j]), -I * gam[(j, k)]);
            }
        }
        let h_dag = h.adjoint();
        Ok(Self {
            dim: space.dim,
            h,
            h_dag,
            lowering,
            raising,
            gamma: gam.clone(),
        })
    }

    fn apply_into(&self, rho: &[C64], out: &mut [C64], scratch: &mut Vec<Vec<C64>>, acc: &mut [C64]) {
        out.iter_mut().for_each(|x| *x = ZERO);
        self.h.left_apply(rho, out, -I);
        self.h_dag.right_apply(rho, out, I);
        let n = self.lowering.len();
        scratch.resize(n, Vec::new());
        for (j, buf) in scratch.iter_mut().enumerate() {
            buf.clear();
            buf.resize(rho.len(), ZERO);
            self.lowering[j].left_apply(rho, buf, c(1.0, 0.0));
        }
        for k in 0..n {
            let mut any = false;
            acc.iter_mut().for_each(|x| *x = ZERO);
            for j in 0..n {
                let g = self.gamma[(j, k)];
                if g == ZERO {
                    continue;
                }
                any = true;
                let f = g * 2.0;
                for (a, x) in acc.iter_mut().zip(&scratch[j]) {
                    *a += f * x;
                }
            }
            if any {
                self.raising[k].right_apply(acc, out, c(1.0, 0.0));
            }
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim != self.dim {
            return Err(Error::Dimension(format!(
                "density matrix of dimension {} on a space of dimension {}",
                rho.dim, self.dim
            )));
        }
        let mut out = vec![ZERO; rho.data.len()];
        let mut acc = vec![ZERO; rho.data.len()];
        self.apply_into(&rho.data, &mut out, &mut Vec::new(), &mut acc);
        Ok(DensityMatrix { dim: self.dim, data: out })
    }
}

/// `L ρ` for a validated loss-type system.
pub fn lindblad_rhs(sys: &QuadraticSystem, rho: &DensityMatrix, space: &FockSpace) -> Result<DensityMatrix> {
    ensure_valid(sys)?;
    Liouvillian::new(sys, space)?.apply(rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    pub leakage_tol: f64,
    pub cutoff: usize,
    /// Record a sample every this many steps (the final time is always sampled).
    pub sample_every: usize,
    /// Check the smallest eigenvalue of ρ at every sample.
    pub check_positivity: bool,
}

impl SimConfig {
    pub fn new(cutoff: usize, dt: f64, t_max: f64) -> Self {
        Self {
            dt,
            t_max,
            leakage_tol: 1e-8,
            cutoff,
            sample_every: 1,
            check_positivity: true,
        }
    }

    pub fn with_sample_every(mut self, k: usize) -> Self {
        self.sample_every = k.max(1);
        self
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_max must be ≥ 0, got {}", self.t_max)));
        }
        let steps = (self.t_max / self.dt).round();
        if (steps * self.dt - self.t_max).abs() > 1e-9 * self.t_max.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "t_max = {} is not a multiple of dt = {}",
                self.t_max, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

fn check_state(rho: &DensityMatrix, space: &FockSpace, t: f64, config: &SimConfig) -> Result<()> {
    let tr = rho.trace();
    let drift = (tr - c(1.0, 0.0)).norm();
    if drift > TRACE_TOL {
        return Err(Error::Drift {
            what: "trace",
            t,
            value: drift,
            tol: TRACE_TOL,
        });
    }
    let herm = rho.hermiticity_defect();
    if herm > HERMITICITY_TOL {
        return Err(Error::Drift {
            what: "Hermiticity",
            t,
            value: herm,
            tol: HERMITICITY_TOL,
        });
    }
    let leak = rho.boundary_population(space);
    if leak > config.leakage_tol {
        return Err(Error::Leakage {
            t,
            population: leak,
            tol: config.leakage_tol,
        });
    }
    if config.check_positivity {
        let min = rho.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::Drift {
                what: "positivity",
                t,
                value: -min,
                tol: POSITIVITY_TOL,
            });
        }
    }
    Ok(())
}

/// Fixed-step RK4, calling `observe(t, ρ)` at every sample after the
/// invariant checks pass.
pub fn integrate_with<F>(sys: &QuadraticSystem, rho0: &DensityMatrix, config: &SimConfig, mut observe: F) -> Result<()>
where
    F: FnMut(f64, &DensityMatrix) -> Result<()>,
{
    ensure_valid(sys)?;
    let space = build_space(sys.n_modes(), config.cutoff)?;
    if rho0.dim != space.dim {
        return Err(Error::Dimension(format!(
            "initial state of dimension {} for a space of dimension {}",
            rho0.dim, space.dim
        )));
    }
    let steps = config.steps()?;
    let lv = Liouvillian::new(sys, &space)?;
    let len = rho0.data.len();
    let mut rho = rho0.clone();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]);
    let mut stage = vec![ZERO; len];
    let mut acc = vec![ZERO; len];
    let mut scratch = Vec::new();
    let dt = config.dt;
    check_state(&rho, &space, 0.0, config)?;
    observe(0.0, &rho)?;
    for step in 1..=steps {
        lv.apply_into(&rho.data, &mut k1, &mut scratch, &mut acc);
        for i in 0..len {
            stage[i] = rho.data[i] + k1[i] * (0.5 * dt);
        }
        lv.apply_into(&stage, &mut k2, &mut scratch, &mut acc);
        for i in 0..len {
            stage[i] = rho.data[i] + k2[i] * (0.5 * dt);
        }
        lv.apply_into(&stage, &mut k3, &mut scratch, &mut acc);
        for i in 0..len {
            stage[i] = rho.data[i] + k3[i] * dt;
        }
        lv.apply_into(&stage, &mut k4, &mut scratch, &mut acc);
        for i in 0..len {
            rho.data[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        if step % config.sample_every == 0 || step == steps {
            let t = step as f64 * dt;
            check_state(&rho, &space, t, config)?;
            observe(t, &rho)?;
        }
    }
    Ok(())
}

/// [`integrate_with`] collecting every sampled state.
pub fn integrate(sys: &QuadraticSystem, rho0: &DensityMatrix, config: &SimConfig) -> Result<Trajectory> {
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    integrate_with(sys, rho0, config, |t, rho| {
        traj.times.push(t);
        traj.states.push(rho.clone());
        Ok(())
    })?;
    Ok(traj)
}

/// `⟨Π factors⟩(t)` for each sample (rows) and index (columns).
pub fn moment_trajectory(traj: &Trajectory, indices: &[MomentIndex], space: &FockSpace) -> Result<Vec<Vec<C64>>> {
    let ops = indices
        .iter()
        .map(|i| space.moment_operator(i))
        .collect::<Result<Vec<_>>>()?;
    Ok(traj
        .states
        .iter()
        .map(|rho| ops.iter().map(|op| rho.expectation(op)).collect())
        .collect())
}

/// Moments sampled along an integration without storing the states.
pub fn sampled_moments(
    sys: &QuadraticSystem,
    rho0: &DensityMatrix,
    config: &SimConfig,
    indices: &[MomentIndex],
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let space = build_space(sys.n_modes(), config.cutoff)?;
    let ops = indices
        .iter()
        .map(|i| space.moment_operator(i))
        .collect::<Result<Vec<_>>>()?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    integrate_with(sys, rho0, config, |t, rho| {
        times.push(t);
        values.push(ops.iter().map(|op| rho.expectation(op)).collect());
        Ok(())
    })?;
    Ok((times, values))
}

/// Largest change of the sampled moments when `dt` is halved.
pub fn step_halving_deviation(
    sys: &QuadraticSystem,
    rho0: &DensityMatrix,
    config: &SimConfig,
    indices: &[MomentIndex],
) -> Result<f64> {
    let (_, coarse) = sampled_moments(sys, rho0, config, indices)?;
    let fine_cfg = SimConfig {
        dt: config.dt / 2.0,
        sample_every: config.sample_every * 2,
        ..*config
    };
    let (_, fine) = sampled_moments(sys, rho0, &fine_cfg, indices)?;
    Ok(max_deviation(&coarse, &fine))
}

fn max_deviation(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDeviation {
    pub moment: String,
    pub max_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub per_moment_max_dev: Vec<MomentDeviation>,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub oracle: Vec<Vec<C64>>,
    #[serde(skip)]
    pub predicted: Vec<Vec<C64>>,
}

impl VerificationReport {
    pub fn max_dev(&self) -> f64 {
        self.per_moment_max_dev.iter().map(|d| d.max_dev).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Oracle trajectory as CSV: `t,re⟨m⟩,im⟨m⟩,…`.
    pub fn oracle_csv(&self) -> String {
        let labels: Vec<String> = self.per_moment_max_dev.iter().map(|d| d.moment.clone()).collect();
        trajectory_csv(&self.times, &labels, &self.oracle)
    }
}

pub fn trajectory_csv(times: &[f64], labels: &[String], values: &[Vec<C64>]) -> String {
    let mut out = String::from("t");
    for l in labels {
        write!(out, ",re⟨{l}⟩,im⟨{l}⟩").unwrap();
    }
    out.push('\n');
    for (t, row) in times.iter().zip(values) {
        out.push_str(&sci12(*t));
        for v in row {
            write!(out, ",{},{}", sci12(v.re), sci12(v.im)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Compares oracle moments of the basis of `m` with `exp(M t) v0`, where
/// `v0` are the moments of `rho0`.
pub fn verify_moments(
    sys: &QuadraticSystem,
    rho0: &DensityMatrix,
    m: &EvolutionMatrix,
    config: &SimConfig,
    tol: f64,
) -> Result<VerificationReport> {
    verify_matrix(sys, rho0, m.matrix(), m.basis().entries(), config, tol)
}

pub fn verify_matrix(
    sys: &QuadraticSystem,
    rho0: &DensityMatrix,
    m: &CMatrix,
    basis: &[MomentIndex],
    config: &SimConfig,
    tol: f64,
) -> Result<VerificationReport> {
    let (times, oracle) = sampled_moments(sys, rho0, config, basis)?;
    let predicted = propagate_matrix(m, &oracle[0], &times)?;
    let per_moment_max_dev = basis
        .iter()
        .enumerate()
        .map(|(k, idx)| MomentDeviation {
            moment: idx.to_string(),
            max_dev: oracle
                .iter()
                .zip(&predicted)
                .map(|(o, p)| (o[k] - p[k]).norm())
                .fold(0.0, f64::max),
        })
        .collect::<Vec<_>>();
    let pass = per_moment_max_dev.iter().all(|d| d.max_dev <= tol);
    Ok(VerificationReport {
        per_moment_max_dev,
        tol,
        pass,
        times,
        oracle,
        predicted,
    })
}
