//! Normal-ordered bosonic operator polynomials and the adjoint (Heisenberg)
//! action of quadratic generators on them.
//!
//! A monomial stores, per mode, the exponents `(p, q)` of `a_j†^p a_j^q`.
//! Operators on distinct modes commute, so a product of per-mode normal-ordered
//! factors is itself normal ordered.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64, I, ZERO};
use crate::model::QuadraticSystem;

pub type Monomial = Vec<(u32, u32)>;

#[derive(Debug, Clone, PartialEq)]
pub struct OpPoly {
    n_modes: usize,
    terms: BTreeMap<Monomial, C64>,
}

fn degree(m: &Monomial) -> u32 {
    m.iter().map(|(p, q)| p + q).sum()
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

impl OpPoly {
    pub fn zero(n_modes: usize) -> Self {
        Self {
            n_modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_modes: usize) -> Self {
        let mut p = Self::zero(n_modes);
        p.add_term(vec![(0, 0); n_modes], c(1.0, 0.0));
        p
    }

    /// `a_mode` (`dagger = false`) or `a_mode†`, modes 0-based.
    pub fn ladder(n_modes: usize, mode: usize, dagger: bool) -> Self {
        let mut m = vec![(0, 0); n_modes];
        m[mode] = if dagger { (1, 0) } else { (0, 1) };
        let mut p = Self::zero(n_modes);
        p.add_term(m, c(1.0, 0.0));
        p
    }

    /// Product of ladder operators in the given order.
    pub fn product(n_modes: usize, factors: &[(usize, bool)]) -> Self {
        factors.iter().fold(Self::identity(n_modes), |acc, &(mode, dagger)| {
            acc.mul(&Self::ladder(n_modes, mode, dagger))
        })
    }

    /// `Σ_jk m_jk a_j† a_k`.
    pub fn bilinear(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut p = Self::zero(n);
        for j in 0..n {
            for k in 0..n {
                p = p.add(&Self::product(n, &[(j, true), (k, false)]).scale(m[(j, k)]));
            }
        }
        p
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, coeff: C64) {
        if coeff == ZERO {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert(ZERO);
        *e += coeff;
        if *e == ZERO {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, v) in &other.terms {
            out.add_term(m.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero(self.n_modes);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * s);
        }
        out
    }

    /// Normal-ordered product, using
    /// `a^q a†^p = Σ_k C(q,k) C(p,k) k! a†^(p−k) a^(q−k)` per mode.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n_modes, other.n_modes, "mode count mismatch");
        let mut out = Self::zero(self.n_modes);
        for (m1, v1) in &self.terms {
            for (m2, v2) in &other.terms {
                let mut partial: Vec<(Monomial, f64)> = vec![(Vec::with_capacity(self.n_modes), 1.0)];
                for j in 0..self.n_modes {
                    let (p1, q1) = m1[j];
                    let (p2, q2) = m2[j];
                    let mut next = Vec::with_capacity(partial.len() * (q1.min(p2) as usize + 1));
                    for (mono, w) in &partial {
                        for k in 0..=q1.min(p2) {
                            let f = binom(q1, k) * binom(p2, k) * factorial(k);
                            let mut mono = mono.clone();
                            mono.push((p1 + p2 - k, q1 + q2 - k));
                            next.push((mono, w * f));
                        }
                    }
                    partial = next;
                }
                for (mono, w) in partial {
                    out.add_term(mono, v1 * v2 * w);
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Hermitian conjugate.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zero(self.n_modes);
        for (m, v) in &self.terms {
            out.add_term(m.iter().map(|&(p, q)| (q, p)).collect(), v.conj());
        }
        out
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// A quadratic generator
/// `L ρ = −i(H_L ρ − ρ H_R) + 2 Σ_jk γ_jk b_j ρ b_k†`.
#[derive(Debug, Clone)]
pub struct Generator {
    h_left: OpPoly,
    h_right: OpPoly,
    jumps: CMatrix,
}

impl Generator {
    pub fn new(h_left: OpPoly, h_right: OpPoly, jumps: CMatrix) -> Result<Self> {
        let n = h_left.n_modes();
        if h_right.n_modes() != n || jumps.nrows() != n || jumps.ncols() != n {
            return Err(Error::Dimension("generator parts disagree on the mode count".into()));
        }
        Ok(Self {
            h_left,
            h_right,
            jumps,
        })
    }

    /// The master equation of a [`QuadraticSystem`], with
    /// `H_L = H_c − i K`, `H_R = H_L†` and `K = Σ_jk Γ_jk a_k† a_j`.
    pub fn from_system(sys: &QuadraticSystem) -> Self {
        let n = sys.n_modes();
        let mut hc = OpPoly::bilinear(sys.coherent_coupling());
        for (j, d) in sys.detunings().iter().enumerate() {
            hc = hc.add(&OpPoly::product(n, &[(j, true), (j, false)]).scale(c(*d, 0.0)));
        }
        let chi = sys.squeezing_coupling();
        for j in 0..n {
            for k in 0..n {
                let v = chi[(j, k)] * 0.5;
                hc = hc
                    .add(&OpPoly::product(n, &[(j, true), (k, true)]).scale(v))
                    .add(&OpPoly::product(n, &[(j, false), (k, false)]).scale(v.conj()));
            }
        }
        let k_op = OpPoly::bilinear(&crate::linalg::transpose(sys.decoherence()));
        let h_left = hc.sub(&k_op.scale(I));
        let h_right = h_left.dagger();
        Self {
            h_left,
            h_right,
            jumps: sys.decoherence().clone(),
        }
    }

    /// `H_L = Σ_jk h_jk b_j† b_k`, `H_R = H_L†`, jump matrix `γ`.
    pub fn from_matrices(h: &CMatrix, gamma: &CMatrix) -> Result<Self> {
        let h_left = OpPoly::bilinear(h);
        let h_right = h_left.dagger();
        Self::new(h_left, h_right, gamma.clone())
    }

    pub fn n_modes(&self) -> usize {
        self.h_left.n_modes()
    }

    /// `L† X = i(H_R X − X H_L) + 2 Σ_jk γ_jk b_k† X b_j`, so that
    /// `d⟨X⟩/dt = ⟨L† X⟩`.
    pub fn heisenberg(&self, x: &OpPoly) -> OpPoly {
        let n = self.n_modes();
        let mut out = self.h_right.mul(x).sub(&x.mul(&self.h_left)).scale(I);
        for j in 0..n {
            let xb = x.mul(&OpPoly::ladder(n, j, false));
            for k in 0..n {
                let g = self.jumps[(j, k)];
                if g == ZERO {
                    continue;
                }
                out = out.add(&OpPoly::ladder(n, k, true).mul(&xb).scale(g * 2.0));
            }
        }
        out
    }
}

/// Writes `target` as `Σ_i coeffs_i · basis_i + residual`.
///
/// Each basis polynomial must have a unique top-degree monomial with unit
/// coefficient (true for any product of ladder operators). Monomials are
/// eliminated from the highest degree down; whatever cannot be matched is
/// returned as the residual.
pub fn express(target: &OpPoly, basis: &[OpPoly]) -> (Vec<C64>, OpPoly) {
    let mut leading: BTreeMap<Monomial, usize> = BTreeMap::new();
    for (i, b) in basis.iter().enumerate() {
        if let Some(top) = b.terms().map(|(m, _)| m).max_by_key(|m| degree(m)) {
            leading.entry(top.clone()).or_insert(i);
        }
    }
    let mut coeffs = vec![ZERO; basis.len()];
    let mut remaining = target.clone();
    let mut residual = OpPoly::zero(target.n_modes());
    while let Some((m, v)) = remaining
        .terms()
        .max_by(|a, b| degree(a.0).cmp(&degree(b.0)).then_with(|| b.0.cmp(a.0)))
        .map(|(m, v)| (m.clone(), *v))
    {
        match leading.get(&m) {
            Some(&i) => {
                let lead = basis[i].coefficient(&m);
                let f = v / lead;
                coeffs[i] += f;
                remaining = remaining.sub(&basis[i].scale(f));
                // Guard against round-off leaving the eliminated monomial behind.
                remaining.terms.remove(&m);
            }
            None => {
                residual.add_term(m.clone(), v);
                remaining.terms.remove(&m);
            }
        }
    }
    (coeffs, residual)
}
