//! Quadratic Liouvillian system descriptions.
//!
//! A [`QuadraticSystem`] fixes the generator
//!
//! ```text
//! L ρ = −i(H ρ − ρ H†) + 2 Σ_jk Γ_jk a_j ρ a_k†
//! H   = Σ_j δ_j a_j†a_j + Σ_jk g_jk a_j†a_k + ½ Σ_jk (χ_jk a_j†a_k† + χ_jk* a_j a_k) − i Σ_jk Γ_jk a_k†a_j
//! ```
//!
//! The jump term carries the explicit factor 2; with it the first-moment
//! equations close without cubic remainders. For real symmetric Γ the
//! anti-Hermitian part is the familiar `−i Σ Γ_jk a_j†a_k`.

mod file;

pub use file::{format_complex, parse_complex, parse_model, serialize_model};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64};

/// Tolerance for Hermiticity and symmetry of the coupling matrices.
pub const EPS_HERM: f64 = 1e-12;
/// Decoherence eigenvalues below `−EPS_PSD` indicate a gain channel.
pub const EPS_PSD: f64 = 1e-10;
/// Tolerance of [`check_anti_pt`].
pub const EPS_ANTI_PT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSystem {
    n_modes: usize,
    detunings: Vec<f64>,
    coherent: CMatrix,
    squeezing: CMatrix,
    decoherence: CMatrix,
}

impl QuadraticSystem {
    /// Checks shapes only; physical admissibility is reported by [`validate`].
    pub fn new(
        detunings: Vec<f64>,
        coherent: CMatrix,
        squeezing: CMatrix,
        decoherence: CMatrix,
    ) -> Result<Self> {
        let n = detunings.len();
        if n == 0 {
            return Err(Error::InvalidSystem("a system needs at least one mode".into()));
        }
        for (name, m) in [
            ("coherent", &coherent),
            ("squeezing", &squeezing),
            ("decoherence", &decoherence),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "{name} matrix is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self {
            n_modes: n,
            detunings,
            coherent,
            squeezing,
            decoherence,
        })
    }

    /// `n` modes with every coefficient zero.
    pub fn zero(n_modes: usize) -> Result<Self> {
        let z = linalg::zeros(n_modes, n_modes);
        Self::new(vec![0.0; n_modes], z.clone(), z.clone(), z)
    }

    /// Two modes with detunings `(Δ, −Δ)`, equal inner loss `Γ` and
    /// incoherent coupling `Γ12` through a shared reservoir.
    pub fn incoherent_pair(delta: f64, gamma: f64, gamma12: f64) -> Self {
        let z = linalg::zeros(2, 2);
        let dec = linalg::from_real_rows(&[&[gamma, gamma12], &[gamma12, gamma]]);
        Self::new(vec![delta, -delta], z.clone(), z, dec).expect("2x2 shapes")
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn coherent_coupling(&self) -> &CMatrix {
        &self.coherent
    }

    pub fn squeezing_coupling(&self) -> &CMatrix {
        &self.squeezing
    }

    pub fn decoherence(&self) -> &CMatrix {
        &self.decoherence
    }

    pub fn with_detunings(mut self, detunings: Vec<f64>) -> Result<Self> {
        if detunings.len() != self.n_modes {
            return Err(Error::Dimension(format!(
                "{} detunings for {} modes",
                detunings.len(),
                self.n_modes
            )));
        }
        self.detunings = detunings;
        Ok(self)
    }

    pub fn with_coherent(self, m: CMatrix) -> Result<Self> {
        Self::new(self.detunings, m, self.squeezing, self.decoherence)
    }

    pub fn with_squeezing(self, m: CMatrix) -> Result<Self> {
        Self::new(self.detunings, self.coherent, m, self.decoherence)
    }

    pub fn with_decoherence(self, m: CMatrix) -> Result<Self> {
        Self::new(self.detunings, self.coherent, self.squeezing, m)
    }

    /// Applies a named scalar override.
    ///
    /// Keys: `delta<j>` (detuning of mode j), `delta` (two-mode `(Δ, −Δ)`),
    /// `gamma` (every inner loss rate), and `gamma<jk>`, `g<jk>`, `chi<jk>`
    /// for matrix entries. Mode indices are 1-based and may be written as two
    /// digits (`gamma12`) or with underscores (`gamma_1_12`). Off-diagonal
    /// writes also update the partner entry so the Hermitian (Γ, g) or
    /// symmetric (χ) structure is kept.
    pub fn set_parameter(mut self, key: &str, value: f64) -> Result<Self> {
        let n = self.n_modes;
        let unknown = || Error::InvalidArgument(format!("unknown model parameter `{key}`"));
        if key == "delta" {
            if n != 2 {
                return Err(Error::InvalidArgument(
                    "`delta` sets (Δ, −Δ) and needs exactly two modes".into(),
                ));
            }
            self.detunings = vec![value, -value];
            return Ok(self);
        }
        if key == "gamma" {
            for j in 0..n {
                self.decoherence[(j, j)] = c(value, 0.0);
            }
            return Ok(self);
        }
        if let Some(rest) = key.strip_prefix("delta") {
            let idx = parse_indices(rest, 1, n).ok_or_else(unknown)?;
            self.detunings[idx[0]] = value;
            return Ok(self);
        }
        let (target, symmetric) = if let Some(rest) = key.strip_prefix("gamma") {
            (Some((rest, 0)), false)
        } else if let Some(rest) = key.strip_prefix("chi") {
            (Some((rest, 1)), true)
        } else if let Some(rest) = key.strip_prefix('g') {
            (Some((rest, 2)), false)
        } else {
            (None, false)
        };
        let (rest, which) = target.ok_or_else(unknown)?;
        let idx = parse_indices(rest, 2, n).ok_or_else(unknown)?;
        let (j, k) = (idx[0], idx[1]);
        let m = match which {
            0 => &mut self.decoherence,
            1 => &mut self.squeezing,
            _ => &mut self.coherent,
        };
        m[(j, k)] = c(value, 0.0);
        m[(k, j)] = if symmetric { c(value, 0.0) } else { c(value, 0.0).conj() };
        Ok(self)
    }
}

fn parse_indices(s: &str, count: usize, n: usize) -> Option<Vec<usize>> {
    let parts: Vec<usize> = if let Some(stripped) = s.strip_prefix('_') {
        stripped
            .split('_')
            .map(|p| p.parse::<usize>().ok())
            .collect::<Option<Vec<_>>>()?
    } else if s.len() == count && s.chars().all(|ch| ch.is_ascii_digit()) {
        s.chars().map(|ch| ch.to_digit(10).map(|d| d as usize)).collect::<Option<Vec<_>>>()?
    } else {
        return None;
    };
    if parts.len() != count || parts.iter().any(|&p| p == 0 || p > n) {
        return None;
    }
    Some(parts.into_iter().map(|p| p - 1).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub findings: Vec<Finding>,
    /// `None` when the decoherence matrix has no eigenvalues to report
    /// (non-finite entries or an eigensolver failure).
    pub min_decoherence_eigenvalue: Option<f64>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }
}

/// Checks the structural invariants and the loss-only restriction.
pub fn validate(sys: &QuadraticSystem) -> ValidationReport {
    let mut findings = Vec::new();
    let mut push = |severity, code: &str, message: String| {
        findings.push(Finding {
            severity,
            code: code.to_string(),
            message,
        })
    };

    let finite = sys.detunings.iter().all(|d| d.is_finite())
        && linalg::all_finite(&sys.coherent)
        && linalg::all_finite(&sys.squeezing)
        && linalg::all_finite(&sys.decoherence);
    if !finite {
        push(Severity::Error, "non-finite", "model contains non-finite coefficients".into());
    }

    let d = linalg::hermiticity_defect(&sys.coherent);
    if d > EPS_HERM {
        push(
            Severity::Error,
            "coherent-not-hermitian",
            format!("coherent coupling deviates from its adjoint by {d:.3e}"),
        );
    }
    let d = linalg::max_abs_diff(&sys.squeezing, &linalg::transpose(&sys.squeezing));
    if d > EPS_HERM {
        push(
            Severity::Error,
            "squeezing-not-symmetric",
            format!("squeezing coupling deviates from its transpose by {d:.3e}"),
        );
    }
    let d = linalg::hermiticity_defect(&sys.decoherence);
    if d > EPS_HERM {
        push(
            Severity::Error,
            "decoherence-not-hermitian",
            format!("decoherence deviates from its adjoint by {d:.3e}"),
        );
    }

    let min_eig = if finite {
        match linalg::hermitian_eigenvalues(&sys.decoherence) {
            Ok(ev) => ev.first().copied().unwrap_or(0.0),
            Err(e) => {
                push(Severity::Error, "eigensolver", e.to_string());
                f64::NAN
            }
        }
    } else {
        f64::NAN
    };
    if min_eig < -EPS_PSD {
        push(
            Severity::Error,
            "gain-like-decoherence",
            format!(
                "gain-like decoherence: minimum eigenvalue {min_eig:.6e} < 0; only loss channels are supported"
            ),
        );
    }

    let chiral = linalg::max_abs_diff(&sys.decoherence, &linalg::transpose(&sys.decoherence));
    if chiral > EPS_HERM && d <= EPS_HERM {
        push(
            Severity::Warning,
            "asymmetric-decoherence",
            format!("Γ_jk ≠ Γ_kj (max difference {chiral:.3e}); complex dissipative couplings are accepted but untested"),
        );
    }

    let ok = !findings.iter().any(|f| f.severity == Severity::Error);
    ValidationReport {
        ok,
        findings,
        min_decoherence_eigenvalue: min_eig.is_finite().then_some(min_eig),
    }
}

/// Returns an error carrying every error finding when validation fails.
pub fn ensure_valid(sys: &QuadraticSystem) -> Result<()> {
    let report = validate(sys);
    if report.ok {
        Ok(())
    } else {
        let msg: Vec<String> = report.errors().map(|f| f.message.clone()).collect();
        Err(Error::InvalidSystem(msg.join("; ")))
    }
}

/// [`ensure_valid`] without the loss-only check: structure and finiteness only.
pub fn ensure_well_formed(sys: &QuadraticSystem) -> Result<()> {
    let report = validate(sys);
    let msg: Vec<String> = report
        .errors()
        .filter(|f| f.code != "gain-like-decoherence")
        .map(|f| f.message.clone())
        .collect();
    if msg.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSystem(msg.join("; ")))
    }
}

/// True iff the generator commutes with a global phase rotation, i.e. there
/// are no two-photon terms.
pub fn is_u1_symmetric(sys: &QuadraticSystem) -> bool {
    linalg::max_abs(&sys.squeezing) <= EPS_HERM
}

/// `P·conj(H)·P = −H` with `P` the mode-reversal permutation.
pub fn check_anti_pt(h: &CMatrix) -> Result<bool> {
    if !linalg::is_square(h) {
        return Err(Error::Dimension(format!(
            "anti-PT check needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let n = h.nrows();
    for i in 0..n {
        for j in 0..n {
            let pt: C64 = h[(n - 1 - i, n - 1 - j)].conj();
            if (pt + h[(i, j)]).norm() > EPS_ANTI_PT {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
