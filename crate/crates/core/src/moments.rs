//! Moment bases and their evolution matrices.
//!
//! A moment `⟨X⟩` is labelled by the ordered product of ladder operators in
//! `X`, written as whitespace-separated factors `a<j>` or `a<j>†` (the ASCII
//! suffix `+` is accepted on input), e.g. `a1 a1 a2` or `a1† a2`. Mode
//! indices are 1-based.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{express, Generator, OpPoly};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64};
use crate::model::{ensure_valid, ensure_well_formed, is_u1_symmetric, QuadraticSystem};

/// Representative-row consistency tolerance of [`reduce`], relative to the
/// largest entry (or 1, whichever is larger).
pub const REDUCE_TOL: f64 = 1e-12;
/// Largest non-linear remainder tolerated when extracting moment equations.
pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factor {
    /// 1-based mode index.
    pub mode: usize,
    pub dagger: bool,
}

impl Factor {
    pub fn a(mode: usize) -> Self {
        Self { mode, dagger: false }
    }

    pub fn a_dag(mode: usize) -> Self {
        Self { mode, dagger: true }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}{}", self.mode, if self.dagger { "†" } else { "" })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentIndex {
    factors: Vec<Factor>,
}

impl MomentIndex {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        let idx = Self { factors };
        if idx.factors.is_empty() {
            return Err(Error::Label {
                label: String::new(),
                msg: "a moment needs at least one factor".into(),
            });
        }
        if idx.factors.iter().any(|f| f.mode == 0) {
            return Err(Error::Label {
                label: idx.to_string(),
                msg: "mode indices start at 1".into(),
            });
        }
        Ok(idx)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn max_mode(&self) -> usize {
        self.factors.iter().map(|f| f.mode).max().unwrap_or(0)
    }

    /// Factors stably sorted by mode: operators on different modes commute,
    /// while the relative order of same-mode factors is kept.
    pub fn canonical_key(&self) -> MomentIndex {
        let mut factors = self.factors.clone();
        factors.sort_by_key(|f| f.mode);
        MomentIndex { factors }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &MomentIndex) -> MomentIndex {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        MomentIndex { factors }
    }

    pub fn check_modes(&self, n_modes: usize) -> Result<()> {
        if self.max_mode() > n_modes {
            return Err(Error::Label {
                label: self.to_string(),
                msg: format!("mode index exceeds n_modes = {n_modes}"),
            });
        }
        Ok(())
    }

    /// The operator product in stored order, as a normal-ordered polynomial.
    pub fn operator(&self, n_modes: usize) -> Result<OpPoly> {
        self.check_modes(n_modes)?;
        let f: Vec<(usize, bool)> = self.factors.iter().map(|f| (f.mode - 1, f.dagger)).collect();
        Ok(OpPoly::product(n_modes, &f))
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

impl FromStr for MomentIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Label {
            label: s.to_string(),
            msg: msg.to_string(),
        };
        let mut factors = Vec::new();
        for tok in s.split_whitespace() {
            let body = tok
                .strip_prefix('a')
                .ok_or_else(|| bad("factors look like `a<j>` or `a<j>†`"))?;
            let (digits, dagger) = match body.strip_suffix('†').or_else(|| body.strip_suffix('+')) {
                Some(d) => (d, true),
                None => (body, false),
            };
            if digits.is_empty() || !digits.chars().all(|ch| ch.is_ascii_digit()) {
                return Err(bad("factors look like `a<j>` or `a<j>†`"));
            }
            let mode: usize = digits.parse().map_err(|_| bad("mode index out of range"))?;
            factors.push(Factor { mode, dagger });
        }
        MomentIndex::new(factors).map_err(|e| match e {
            Error::Label { msg, .. } => bad(&msg),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Full,
    Reduced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentBasis {
    entries: Vec<MomentIndex>,
    kind: BasisKind,
}

impl MomentBasis {
    pub fn new(entries: Vec<MomentIndex>, kind: BasisKind) -> Self {
        Self { entries, kind }
    }

    /// `[a1, …, an]`, or `[a1, a1†, …, an, an†]` when interleaved.
    pub fn first_order(n_modes: usize, interleaved: bool) -> Self {
        let mut entries = Vec::new();
        for j in 1..=n_modes {
            entries.push(MomentIndex { factors: vec![Factor::a(j)] });
            if interleaved {
                entries.push(MomentIndex { factors: vec![Factor::a_dag(j)] });
            }
        }
        Self::new(entries, BasisKind::Full)
    }

    pub fn parse_labels<S: AsRef<str>>(labels: &[S], kind: BasisKind) -> Result<Self> {
        let entries = labels
            .iter()
            .map(|l| l.as_ref().parse())
            .collect::<Result<Vec<MomentIndex>>>()?;
        Ok(Self::new(entries, kind))
    }

    pub fn entries(&self) -> &[MomentIndex] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(ToString::to_string).collect()
    }

    pub fn position(&self, idx: &MomentIndex) -> Option<usize> {
        self.entries.iter().position(|e| e == idx)
    }
}

/// A matrix `M` with `d⟨v⟩/dt = M ⟨v⟩` for the moments `v` of its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionMatrix {
    n_modes: usize,
    matrix: CMatrix,
    basis: MomentBasis,
}

impl EvolutionMatrix {
    pub fn new(n_modes: usize, matrix: CMatrix, basis: MomentBasis) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != basis.len() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix over a basis of {} moments",
                matrix.nrows(),
                matrix.ncols(),
                basis.len()
            )));
        }
        if basis.is_empty() {
            return Err(Error::Dimension("empty moment basis".into()));
        }
        for e in basis.entries() {
            e.check_modes(n_modes)?;
        }
        Ok(Self {
            n_modes,
            matrix,
            basis,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &MomentBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = MatrixDoc {
            n_modes: self.n_modes,
            kind: self.basis.kind(),
            basis: self.basis.labels(),
            matrix: matrix_to_pairs(&self.matrix),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDoc = serde_json::from_str(text)?;
        let basis = MomentBasis::parse_labels(&doc.basis, doc.kind)?;
        let matrix = matrix_from_pairs(&doc.matrix)?;
        Self::new(doc.n_modes, matrix, basis)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    n_modes: usize,
    kind: BasisKind,
    basis: Vec<String>,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Row-major nested `[re, im]` pairs.
pub fn matrix_to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let rows: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|p| c(p[0], p[1])).collect())
        .collect();
    linalg::from_rows(&rows)
}

/// Evolution matrix of an arbitrary basis, read off the adjoint master
/// equation. Fails when `d⟨X⟩/dt` of some basis element leaves the span of
/// the basis (constant or higher-order remainders above [`CLOSURE_TOL`]).
pub fn moment_matrix(sys: &QuadraticSystem, basis: &MomentBasis) -> Result<EvolutionMatrix> {
    generator_moment_matrix(&Generator::from_system(sys), basis)
}

/// [`moment_matrix`] for an arbitrary quadratic generator.
pub fn generator_moment_matrix(gen: &Generator, basis: &MomentBasis) -> Result<EvolutionMatrix> {
    let n = gen.n_modes();
    let ops = basis
        .entries()
        .iter()
        .map(|e| e.operator(n))
        .collect::<Result<Vec<_>>>()?;
    let d = basis.len();
    let mut m = linalg::zeros(d, d);
    for (i, op) in ops.iter().enumerate() {
        let rhs = gen.heisenberg(op);
        let (coeffs, residual) = express(&rhs, &ops);
        let scale = rhs.max_abs_coefficient().max(1.0);
        if residual.max_abs_coefficient() > CLOSURE_TOL * scale {
            return Err(Error::NonClosure(format!(
                "d⟨{}⟩/dt has terms outside the basis (largest {:.3e})",
                basis.entries()[i],
                residual.max_abs_coefficient()
            )));
        }
        for (j, v) in coeffs.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    EvolutionMatrix::new(n, m, basis.clone())
}

/// First-order evolution matrix `M_A` of `sys`.
///
/// Without interleaving the basis is `[a1, …, an]` and, for U(1) systems with
/// real symmetric Γ, `M_A = −i diag(δ) − i g − Γ`. Systems with squeezing need
/// the interleaved basis `[a1, a1†, …]`.
pub fn first_moment_matrix(sys: &QuadraticSystem, interleaved: bool) -> Result<EvolutionMatrix> {
    first_moment_matrix_with(sys, interleaved, false)
}

/// [`first_moment_matrix`], optionally accepting a decoherence matrix that
/// is not positive semidefinite. The result is then the formal moment
/// dynamics of a generator that is not completely positive; parameter sweeps
/// use it to cross the loss-only boundary.
pub fn first_moment_matrix_with(sys: &QuadraticSystem, interleaved: bool, allow_gain: bool) -> Result<EvolutionMatrix> {
    if allow_gain {
        ensure_well_formed(sys)?;
    } else {
        ensure_valid(sys)?;
    }
    if !interleaved && !is_u1_symmetric(sys) {
        return Err(Error::InvalidArgument(
            "squeezing couples a and a†; use the interleaved basis".into(),
        ));
    }
    moment_matrix(sys, &MomentBasis::first_order(sys.n_modes(), interleaved))
}

/// Moments of `m` annihilation operators of a U(1) system: the m-fold
/// Kronecker power of the first-order matrix, reduced on request.
pub fn annihilation_moment_matrix(
    sys: &QuadraticSystem,
    order: usize,
    reduced: bool,
    allow_gain: bool,
) -> Result<EvolutionMatrix> {
    let m1 = first_moment_matrix_with(sys, false, allow_gain)?;
    let full = moment_power(&m1, order)?;
    if reduced {
        reduce(&full)
    } else {
        Ok(full)
    }
}

/// `A ⊗ I + I ⊗ B`.
pub fn kronecker_sum_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let ia = linalg::identity(a.nrows());
    let ib = linalg::identity(b.nrows());
    linalg::kron(a, &ib) + linalg::kron(&ia, b)
}

/// Evolution matrix of the products `α_i β_j`, ordered with the left factor
/// as the slow index.
pub fn kronecker_sum(ma: &EvolutionMatrix, mb: &EvolutionMatrix) -> Result<EvolutionMatrix> {
    if ma.n_modes != mb.n_modes {
        return Err(Error::InvalidArgument(format!(
            "matrices describe systems with {} and {} modes",
            ma.n_modes, mb.n_modes
        )));
    }
    let mut entries = Vec::with_capacity(ma.dim() * mb.dim());
    for x in ma.basis.entries() {
        for y in mb.basis.entries() {
            entries.push(x.concat(y));
        }
    }
    EvolutionMatrix::new(
        ma.n_modes,
        kronecker_sum_matrix(&ma.matrix, &mb.matrix),
        MomentBasis::new(entries, BasisKind::Full),
    )
}

/// `M_A ⊕ M_A ⊕ … ⊕ M_A` (`m` terms).
pub fn moment_power(ma: &EvolutionMatrix, m: usize) -> Result<EvolutionMatrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    let mut out = ma.clone();
    for _ in 1..m {
        out = kronecker_sum(&out, ma)?;
    }
    Ok(out)
}

/// Collapses basis entries that differ only by reordering of distinct-mode
/// factors.
///
/// Columns are summed within each class and the first member's row is kept;
/// every other member's merged row must agree with it, otherwise the
/// collapsed equations would not be exact.
pub fn reduce(m: &EvolutionMatrix) -> Result<EvolutionMatrix> {
    let entries = m.basis.entries();
    let mut class_of = Vec::with_capacity(entries.len());
    let mut reps: Vec<usize> = Vec::new();
    let mut lookup: HashMap<MomentIndex, usize> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        let cls = *lookup.entry(e.canonical_key()).or_insert_with(|| {
            reps.push(i);
            reps.len() - 1
        });
        class_of.push(cls);
    }
    if reps.len() == entries.len() {
        return Ok(m.clone());
    }
    let k = reps.len();
    let d = entries.len();
    let merged_row = |r: usize| -> Vec<C64> {
        let mut row = vec![linalg::ZERO; k];
        for j in 0..d {
            row[class_of[j]] += m.matrix[(r, j)];
        }
        row
    };
    let tol = REDUCE_TOL * linalg::max_abs(&m.matrix).max(1.0);
    let mut out = linalg::zeros(k, k);
    let rep_rows: Vec<Vec<C64>> = reps.iter().map(|&r| merged_row(r)).collect();
    for (i, row) in rep_rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    for r in 0..d {
        let cls = class_of[r];
        if reps[cls] == r {
            continue;
        }
        let row = merged_row(r);
        let dev = row
            .iter()
            .zip(&rep_rows[cls])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if dev > tol {
            return Err(Error::NonClosure(format!(
                "row of `{}` differs from its class representative `{}` by {dev:.3e} after merging",
                entries[r], entries[reps[cls]]
            )));
        }
    }
    let basis = MomentBasis::new(reps.iter().map(|&r| entries[r].clone()).collect(), BasisKind::Reduced);
    EvolutionMatrix::new(m.n_modes, out, basis)
}

/// `exp(M t) v0` for each `t`.
pub fn propagate_moments(m: &EvolutionMatrix, v0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
    propagate_matrix(&m.matrix, v0, times)
}

pub fn propagate_matrix(m: &CMatrix, v0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
    if v0.len() != m.nrows() {
        return Err(Error::Dimension(format!(
            "initial vector of length {} for a {}x{} matrix",
            v0.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    if let Some(&t0) = times.first() {
        if !(t0 >= 0.0) {
            return Err(Error::InvalidArgument("times must start at t ≥ 0".into()));
        }
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite and non-decreasing".into()));
    }
    times
        .iter()
        .map(|&t| Ok(linalg::mat_vec(&linalg::expm(&linalg::scale(m, c(t, 0.0)))?, v0)))
        .collect()
}

/// Largest coefficient by which the rows of `m` miss the exact moment
/// equations of `sys`.
///
/// Kronecker sums are exact only when no annihilator stands to the left of a
/// creator in a product; e.g. `d⟨a a†⟩/dt` carries a constant source that no
/// linear matrix on moments reproduces. Zero (up to round-off) means the
/// matrix is exact.
pub fn closure_defect(sys: &QuadraticSystem, m: &EvolutionMatrix) -> Result<f64> {
    let n = sys.n_modes();
    if m.n_modes != n {
        return Err(Error::InvalidArgument(format!(
            "matrix over {} modes checked against a {n}-mode system",
            m.n_modes
        )));
    }
    let gen = Generator::from_system(sys);
    let ops = m
        .basis
        .entries()
        .iter()
        .map(|e| e.operator(n))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (i, op) in ops.iter().enumerate() {
        let mut diff = gen.heisenberg(op);
        for (j, other) in ops.iter().enumerate() {
            diff = diff.sub(&other.scale(m.matrix[(i, j)]));
        }
        worst = worst.max(diff.max_abs_coefficient());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    fn pair(gamma12: f64) -> QuadraticSystem {
        QuadraticSystem::incoherent_pair(1.0, 1.0, gamma12)
    }

    #[test]
    fn label_grammar_round_trip() {
        for s in ["a1", "a1 a1 a2", "a1† a2", "a12† a3 a3†"] {
            let idx: MomentIndex = s.parse().unwrap();
            assert_eq!(idx.to_string(), s);
        }
        let ascii: MomentIndex = "a1+ a2".parse().unwrap();
        assert_eq!(ascii.to_string(), "a1† a2");
        for bad in ["", "b1", "a", "a0", "a1x", "a-1"] {
            assert!(bad.parse::<MomentIndex>().is_err(), "{bad}");
        }
    }

    #[test]
    fn canonical_key_keeps_same_mode_order() {
        let idx: MomentIndex = "a2 a1† a2† a1".parse().unwrap();
        assert_eq!(idx.canonical_key().to_string(), "a1† a1 a2 a2†");
    }

    #[test]
    fn first_moments_of_the_pair() {
        let m = first_moment_matrix(&pair(0.8), false).unwrap();
        let expected = from_rows(&[vec![c(-1.0, -1.0), c(-0.8, 0.0)], vec![c(-0.8, 0.0), c(-1.0, 1.0)]]).unwrap();
        assert!(linalg::max_abs_diff(m.matrix(), &expected) < 1e-12);
        assert_eq!(m.basis().labels(), ["a1", "a2"]);
    }

    #[test]
    fn single_mode_trivial() {
        let m = first_moment_matrix(&QuadraticSystem::zero(1).unwrap(), false).unwrap();
        assert_eq!(m.matrix()[(0, 0)], linalg::ZERO);
    }

    #[test]
    fn squeezing_requires_interleaving() {
        let chi = linalg::from_real_rows(&[&[0.3]]);
        let sys = QuadraticSystem::zero(1).unwrap().with_squeezing(chi).unwrap();
        assert!(first_moment_matrix(&sys, false).is_err());
        let m = first_moment_matrix(&sys, true).unwrap();
        // d⟨a⟩/dt = −i χ ⟨a†⟩, d⟨a†⟩/dt = i χ ⟨a⟩
        assert!((m.matrix()[(0, 1)] - c(0.0, -0.3)).norm() < 1e-15);
        assert!((m.matrix()[(1, 0)] - c(0.0, 0.3)).norm() < 1e-15);
        assert_eq!(m.matrix()[(0, 0)], linalg::ZERO);
    }

    #[test]
    fn kronecker_basis_order() {
        let m = first_moment_matrix(&pair(0.8), false).unwrap();
        let k = kronecker_sum(&m, &m).unwrap();
        assert_eq!(k.basis().labels(), ["a1 a1", "a1 a2", "a2 a1", "a2 a2"]);
        let scalar = |v: f64| {
            EvolutionMatrix::new(1, linalg::from_real_rows(&[&[v]]), MomentBasis::first_order(1, false)).unwrap()
        };
        let s = kronecker_sum(&scalar(2.0), &scalar(-0.5)).unwrap();
        assert_eq!(s.matrix()[(0, 0)], c(1.5, 0.0));
    }

    #[test]
    fn power_one_and_two() {
        let m = first_moment_matrix(&pair(0.8), false).unwrap();
        assert_eq!(moment_power(&m, 1).unwrap(), m);
        assert_eq!(moment_power(&m, 2).unwrap(), kronecker_sum(&m, &m).unwrap());
        assert!(moment_power(&m, 0).is_err());
    }

    #[test]
    fn reduction_of_distinct_basis_is_identity() {
        let m = first_moment_matrix(&pair(0.8), false).unwrap();
        assert_eq!(reduce(&m).unwrap(), m);
    }

    #[test]
    fn reduction_rejects_inconsistent_rows() {
        let m = first_moment_matrix(&pair(0.8), false).unwrap();
        let k = kronecker_sum(&m, &m).unwrap();
        let mut bad = k.matrix().clone();
        bad[(2, 0)] += c(0.1, 0.0);
        let bad = EvolutionMatrix::new(2, bad, k.basis().clone()).unwrap();
        assert!(matches!(reduce(&bad), Err(Error::NonClosure(_))));
    }

    #[test]
    fn kronecker_products_of_annihilators_close_exactly() {
        let sys = pair(0.8);
        let m = first_moment_matrix(&sys, false).unwrap();
        for order in 1..=3 {
            let p = moment_power(&m, order).unwrap();
            assert!(closure_defect(&sys, &p).unwrap() < 1e-12);
            let r = reduce(&p).unwrap();
            assert!(closure_defect(&sys, &r).unwrap() < 1e-12);
            let direct = moment_matrix(&sys, r.basis()).unwrap();
            assert!(linalg::max_abs_diff(direct.matrix(), r.matrix()) < 1e-12);
        }
    }

    #[test]
    fn mixed_products_pick_up_a_source_term() {
        let dec = linalg::from_real_rows(&[&[1.0]]);
        let sys = QuadraticSystem::zero(1).unwrap().with_decoherence(dec).unwrap();
        let m = first_moment_matrix(&sys, true).unwrap();
        let k = kronecker_sum(&m, &m).unwrap();
        // ⟨a a†⟩ = ⟨a†a⟩ + 1 obeys d/dt = −2(⟨a a†⟩ − 1)
        assert!((closure_defect(&sys, &k).unwrap() - 2.0).abs() < 1e-12);
        let normal = MomentBasis::parse_labels(&["a1† a1"], BasisKind::Full).unwrap();
        let n_eq = moment_matrix(&sys, &normal).unwrap();
        assert!((n_eq.matrix()[(0, 0)] - c(-2.0, 0.0)).norm() < 1e-15);
        let anti = MomentBasis::parse_labels(&["a1 a1†"], BasisKind::Full).unwrap();
        assert!(matches!(moment_matrix(&sys, &anti), Err(Error::NonClosure(_))));
    }

    #[test]
    fn scalar_decay_and_validation_of_times() {
        let m = EvolutionMatrix::new(1, linalg::from_real_rows(&[&[-1.0]]), MomentBasis::first_order(1, false)).unwrap();
        let traj = propagate_moments(&m, &[c(1.0, 0.0)], &[0.0, 1.0]).unwrap();
        assert!((traj[1][0].re - (-1f64).exp()).abs() < 1e-15);
        assert!(propagate_moments(&m, &[c(1.0, 0.0)], &[1.0, 0.5]).is_err());
        assert!(propagate_moments(&m, &[c(1.0, 0.0)], &[-1.0]).is_err());
        assert!(propagate_moments(&m, &[], &[0.0]).is_err());
    }

    #[test]
    fn decoupled_modes_decay_independently() {
        let m = first_moment_matrix(&pair(0.0), false).unwrap();
        let v0 = [c(0.6, 0.0), c(0.0, 0.3)];
        let t = 1.3;
        let traj = propagate_moments(&m, &v0, &[t]).unwrap();
        let e1 = (c(-1.0, -1.0) * t).exp() * v0[0];
        let e2 = (c(-1.0, 1.0) * t).exp() * v0[1];
        assert!((traj[0][0] - e1).norm() < 1e-14);
        assert!((traj[0][1] - e2).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let m = first_moment_matrix(&pair(0.8), false).unwrap();
        let r = reduce(&moment_power(&m, 2).unwrap()).unwrap();
        let back = EvolutionMatrix::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
