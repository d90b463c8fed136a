//! Non-Hermitian Hamiltonians read off evolution matrices, and dissipative
//! lattices that realize a prescribed moment dynamics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::algebra::{Generator, OpPoly};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64, I, ZERO};
use crate::model::{format_complex, QuadraticSystem, EPS_HERM, EPS_PSD};
use crate::moments::{
    generator_moment_matrix, matrix_from_pairs, matrix_to_pairs, BasisKind, EvolutionMatrix, Factor,
    MomentBasis, MomentIndex,
};

/// Matrix form `H` of `Ĥ = γ'† H γ'`, one quantized mode per basis entry.
#[derive(Debug, Clone, PartialEq)]
pub struct NhhMatrix {
    matrix: CMatrix,
    basis: MomentBasis,
}

impl NhhMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &MomentBasis {
        &self.basis
    }

    /// `−i H`, the evolution matrix this Hamiltonian came from.
    pub fn to_evolution_matrix(&self, n_modes: usize) -> Result<EvolutionMatrix> {
        EvolutionMatrix::new(n_modes, linalg::scale(&self.matrix, -I), self.basis.clone())
    }
}

/// `H = i M` for U(1) systems.
pub fn nhh_from_matrix_u1(m: &EvolutionMatrix) -> NhhMatrix {
    NhhMatrix {
        matrix: linalg::scale(m.matrix(), I),
        basis: m.basis().clone(),
    }
}

/// `H = i η1 M + i η2 M† η3` over the interleaved basis `[a1, a1†, …]`, with
/// `η1 = ⊕ diag(1, 0)`, `η2 = ⊕ diag(0, 1)`, `η3 = ⊕ diag(−1, 1)`.
///
/// No constant is dropped: for a single mode with `H_c = ω a†a + ½(χ a†² + χ* a²)`
/// this gives `H = [[ω, χ], [χ*, ω]]`, and `A† H A = 2 H_c + ω`. See
/// [`interleaved_operator`] and [`remove_trace`].
pub fn nhh_generic(m: &EvolutionMatrix) -> Result<NhhMatrix> {
    let d = m.dim();
    if d % 2 != 0 {
        return Err(Error::Dimension(format!(
            "interleaved first-order matrices have even dimension, got {d}"
        )));
    }
    let eta = |odd: f64, even: f64| {
        let v: Vec<C64> = (0..d).map(|i| c(if i % 2 == 0 { odd } else { even }, 0.0)).collect();
        linalg::diag(&v)
    };
    let (eta1, eta2, eta3) = (eta(1.0, 0.0), eta(0.0, 1.0), eta(-1.0, 1.0));
    let ma = m.matrix();
    let h = linalg::scale(&(&eta1 * ma), I) + linalg::scale(&(&(&eta2 * &linalg::adjoint(ma)) * &eta3), I);
    Ok(NhhMatrix {
        matrix: h,
        basis: m.basis().clone(),
    })
}

/// `A† H A` for the interleaved operator vector `A = [a1, a1†, …, an, an†]`.
pub fn interleaved_operator(h: &CMatrix) -> Result<OpPoly> {
    let d = h.nrows();
    if d % 2 != 0 || h.ncols() != d {
        return Err(Error::Dimension(format!("{}x{} is not an interleaved matrix", d, h.ncols())));
    }
    let n = d / 2;
    let op = |i: usize, adj: bool| {
        let mode = i / 2;
        let dagger = (i % 2 == 1) != adj;
        OpPoly::ladder(n, mode, dagger)
    };
    let mut out = OpPoly::zero(n);
    for i in 0..d {
        for j in 0..d {
            if h[(i, j)] != ZERO {
                out = out.add(&op(i, true).mul(&op(j, false)).scale(h[(i, j)]));
            }
        }
    }
    Ok(out)
}

/// Splits `h` into its traceless part and the removed `tr(h)/n`.
pub fn remove_trace(h: &CMatrix) -> (CMatrix, C64) {
    let n = h.nrows();
    if n == 0 {
        return (h.clone(), ZERO);
    }
    let mean = (0..n).map(|i| h[(i, i)]).sum::<C64>() / n as f64;
    (linalg::shift(h, -mean), mean)
}

/// A lattice of bosonic modes `b_j` evolving under
/// `L ρ = −i(H ρ − ρ H†) + 2 Σ γ_jk b_j ρ b_k†` with `H = Σ h_jk b_j† b_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    pub n_modes: usize,
    /// Hermitian part of `h`: detunings on the diagonal, coherent couplings off it.
    pub hermitian_h: CMatrix,
    pub nhh_h: CMatrix,
    pub jump_gamma: CMatrix,
    pub psd: bool,
    pub min_gamma_eigenvalue: f64,
    pub extra_damping: f64,
}

impl LatticeModel {
    /// Builds the lattice for a given `h`, choosing the jump matrix
    /// `γ_kj = (i/2)(h − h†)_jk` so that `d⟨b⟩/dt = −i h ⟨b⟩` exactly.
    pub fn from_h(h: CMatrix, extra_damping: f64) -> Result<Self> {
        if !linalg::is_square(&h) {
            return Err(Error::Dimension(format!("{}x{} coupling matrix", h.nrows(), h.ncols())));
        }
        let n = h.nrows();
        let hd = linalg::adjoint(&h);
        let anti = linalg::scale(&(&h - &hd), c(0.0, 0.5));
        let gamma = linalg::transpose(&anti);
        let hermitian_h = linalg::scale(&(&h + &hd), c(0.5, 0.0));
        let min_gamma_eigenvalue = linalg::hermitian_eigenvalues(&gamma)?
            .first()
            .copied()
            .unwrap_or(0.0);
        Ok(Self {
            n_modes: n,
            hermitian_h,
            nhh_h: h,
            jump_gamma: gamma,
            psd: min_gamma_eigenvalue >= -EPS_PSD,
            min_gamma_eigenvalue,
            extra_damping,
        })
    }

    /// Smallest extra uniform damping that would make `γ` positive semidefinite.
    pub fn required_extra_damping(&self) -> f64 {
        (-self.min_gamma_eigenvalue).max(0.0)
    }

    /// The lattice as a [`QuadraticSystem`] (modes renamed `a_j`).
    pub fn to_system(&self) -> Result<QuadraticSystem> {
        let n = self.n_modes;
        let detunings = (0..n).map(|j| self.hermitian_h[(j, j)].re).collect();
        let mut coherent = self.hermitian_h.clone();
        for j in 0..n {
            coherent[(j, j)] = ZERO;
        }
        QuadraticSystem::new(detunings, coherent, linalg::zeros(n, n), self.jump_gamma.clone())
    }

    pub fn adjacency(&self) -> Vec<AdjacencyEntry> {
        let n = self.n_modes;
        (0..n)
            .map(|j| AdjacencyEntry {
                mode: j + 1,
                detuning: self.hermitian_h[(j, j)].re,
                loss: self.jump_gamma[(j, j)].re,
                neighbors: (0..n)
                    .filter(|&k| k != j && (self.hermitian_h[(j, k)] != ZERO || self.jump_gamma[(j, k)] != ZERO))
                    .map(|k| Neighbor {
                        neighbor: k + 1,
                        coherent: pair(self.hermitian_h[(j, k)]),
                        dissipative: pair(self.jump_gamma[(j, k)]),
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = LatticeDoc {
            n_modes: self.n_modes,
            h: matrix_to_pairs(&self.nhh_h),
            gamma: matrix_to_pairs(&self.jump_gamma),
            psd: self.psd,
            min_gamma_eigenvalue: self.min_gamma_eigenvalue,
            extra_damping: self.extra_damping,
            required_extra_damping: self.required_extra_damping(),
            hermitian_h: matrix_to_pairs(&self.hermitian_h),
            adjacency: self.adjacency(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Reads a lattice back; the derived fields are recomputed from `h` and
    /// checked against the stored jump matrix.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LatticeDoc = serde_json::from_str(text)?;
        let lat = Self::from_h(matrix_from_pairs(&doc.h)?, doc.extra_damping)?;
        let gamma = matrix_from_pairs(&doc.gamma)?;
        if lat.n_modes != doc.n_modes || linalg::max_abs_diff(&gamma, &lat.jump_gamma) > EPS_HERM {
            return Err(Error::InvalidArgument(
                "stored jump matrix does not match the one implied by h".into(),
            ));
        }
        Ok(lat)
    }

    /// Coupling graph as GraphML. Node data: `detuning`, `loss`; edge data
    /// (for `j < k`, entry `(j, k)`): `coherent`, `dissipative`, as `a+bi`.
    pub fn to_graphml(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
        for (id, domain, ty) in [
            ("detuning", "node", "double"),
            ("loss", "node", "double"),
            ("coherent", "edge", "string"),
            ("dissipative", "edge", "string"),
        ] {
            writeln!(
                out,
                "  <key id=\"{id}\" for=\"{domain}\" attr.name=\"{id}\" attr.type=\"{ty}\"/>"
            )
            .unwrap();
        }
        out.push_str("  <graph id=\"lattice\" edgedefault=\"undirected\">\n");
        let n = self.n_modes;
        for j in 0..n {
            writeln!(out, "    <node id=\"b{}\">", j + 1).unwrap();
            writeln!(out, "      <data key=\"detuning\">{}</data>", self.hermitian_h[(j, j)].re).unwrap();
            writeln!(out, "      <data key=\"loss\">{}</data>", self.jump_gamma[(j, j)].re).unwrap();
            out.push_str("    </node>\n");
        }
        for j in 0..n {
            for k in j + 1..n {
                let (hc, gd) = (self.hermitian_h[(j, k)], self.jump_gamma[(j, k)]);
                if hc == ZERO && gd == ZERO {
                    continue;
                }
                writeln!(out, "    <edge source=\"b{}\" target=\"b{}\">", j + 1, k + 1).unwrap();
                writeln!(out, "      <data key=\"coherent\">{}</data>", format_complex(hc)).unwrap();
                writeln!(out, "      <data key=\"dissipative\">{}</data>", format_complex(gd)).unwrap();
                out.push_str("    </edge>\n");
            }
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub neighbor: usize,
    pub coherent: [f64; 2],
    pub dissipative: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyEntry {
    pub mode: usize,
    pub detuning: f64,
    pub loss: f64,
    pub neighbors: Vec<Neighbor>,
}

#[derive(Serialize, Deserialize)]
struct LatticeDoc {
    n_modes: usize,
    h: Vec<Vec<[f64; 2]>>,
    gamma: Vec<Vec<[f64; 2]>>,
    psd: bool,
    min_gamma_eigenvalue: f64,
    extra_damping: f64,
    required_extra_damping: f64,
    hermitian_h: Vec<Vec<[f64; 2]>>,
    adjacency: Vec<AdjacencyEntry>,
}

/// Lattice whose first moments obey `d⟨b⟩/dt = (M − s I)⟨b⟩`.
///
/// The extra uniform damping `s` shifts every eigenvalue by `−s` (the EP
/// keeps its order) and raises every eigenvalue of `γ` by `s`.
pub fn synthesize_lattice(m: &EvolutionMatrix, extra_damping: f64) -> Result<LatticeModel> {
    synthesize_lattice_matrix(m.matrix(), extra_damping)
}

pub fn synthesize_lattice_matrix(m: &CMatrix, extra_damping: f64) -> Result<LatticeModel> {
    if !(extra_damping >= 0.0 && extra_damping.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "extra damping must be finite and non-negative, got {extra_damping}"
        )));
    }
    if !linalg::is_square(m) {
        return Err(Error::Dimension(format!("{}x{} evolution matrix", m.nrows(), m.ncols())));
    }
    let shifted = linalg::shift(m, c(-extra_damping, 0.0));
    LatticeModel::from_h(linalg::scale(&shifted, I), extra_damping)
}

/// First-moment matrix of the lattice, from the adjoint master equation of
/// `(h, γ)`.
pub fn first_moment_of_lattice(lat: &LatticeModel) -> Result<EvolutionMatrix> {
    let gen = Generator::from_matrices(&lat.nhh_h, &lat.jump_gamma)?;
    generator_moment_matrix(&gen, &MomentBasis::first_order(lat.n_modes, false))
}

/// The `(N+1)×(N+1)` reduced matrix of the `N`-th order annihilation moments
/// `⟨a1^(N−n) a2^n⟩` of the incoherently coupled pair.
pub fn build_m_n(n_order: usize, gamma: f64, gamma12: f64, delta: f64) -> Result<EvolutionMatrix> {
    if n_order < 1 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let big_n = n_order as f64;
    let d = n_order + 1;
    let mut m = linalg::zeros(d, d);
    for n in 0..d {
        let nf = n as f64;
        m[(n, n)] = c(-big_n * gamma, (2.0 * nf - big_n) * delta);
        if n > 0 {
            m[(n, n - 1)] = c(-nf * gamma12, 0.0);
        }
        if n + 1 < d {
            m[(n, n + 1)] = c(-(big_n - nf) * gamma12, 0.0);
        }
    }
    let entries = (0..d)
        .map(|n| {
            let mut f = vec![Factor::a(1); n_order - n];
            f.extend(std::iter::repeat(Factor::a(2)).take(n));
            MomentIndex::new(f)
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = if n_order == 1 { BasisKind::Full } else { BasisKind::Reduced };
    EvolutionMatrix::new(2, m, MomentBasis::new(entries, kind))
}
