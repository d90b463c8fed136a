//! Exact ranks over the Gaussian rationals Q(i).

use num::{BigInt, BigRational, Zero};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Gq {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gq {
    pub fn int(re: i64, im: i64) -> Self {
        Self {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    pub fn zero() -> Self {
        Self::int(0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn recip(&self) -> Self {
        let den = &self.re * &self.re + &self.im * &self.im;
        Self {
            re: &self.re / &den,
            im: -(&self.im / &den),
        }
    }
}

impl Add for &Gq {
    type Output = Gq;
    fn add(self, o: &Gq) -> Gq {
        Gq {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl Sub for &Gq {
    type Output = Gq;
    fn sub(self, o: &Gq) -> Gq {
        Gq {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl Mul for &Gq {
    type Output = Gq;
    fn mul(self, o: &Gq) -> Gq {
        Gq {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for &Gq {
    type Output = Gq;
    fn neg(self) -> Gq {
        Gq {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

pub type Mat = Vec<Vec<Gq>>;

pub fn from_ints(rows: &[&[(i64, i64)]]) -> Mat {
    rows.iter()
        .map(|r| r.iter().map(|&(a, b)| Gq::int(a, b)).collect())
        .collect()
}

pub fn shift(m: &Mat, s: &Gq) -> Mat {
    let mut out = m.clone();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = &row[i] + s;
    }
    out
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let p = b[0].len();
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut acc = Gq::zero();
                    for (k, aik) in a[i].iter().enumerate() {
                        acc = &acc + &(aik * &b[k][j]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn rank(m: &Mat) -> usize {
    let mut a = m.clone();
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for i in (r + 1)..rows {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            for j in c..cols {
                let t = &f * &a[r][j];
                a[i][j] = &a[i][j] - &t;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// `[rank((M − λI)^k)]` for `k = 1..=kmax`.
pub fn power_ranks(m: &Mat, lambda: &Gq, kmax: usize) -> Vec<usize> {
    let a = shift(m, &-lambda);
    let mut p = a.clone();
    let mut out = vec![rank(&p)];
    for _ in 1..kmax {
        p = matmul(&p, &a);
        out.push(rank(&p));
    }
    out
}

/// Jordan block sizes at `λ` (descending) from exact power ranks.
pub fn jordan_blocks(m: &Mat, lambda: &Gq) -> Vec<usize> {
    let n = m.len();
    let mut ranks = vec![n];
    ranks.extend(power_ranks(m, lambda, n));
    let weyr: Vec<usize> = ranks.windows(2).map(|w| w[0] - w[1]).take_while(|&w| w > 0).collect();
    let mut blocks = Vec::new();
    for k in 0..weyr.len() {
        let next = weyr.get(k + 1).copied().unwrap_or(0);
        blocks.extend(std::iter::repeat(k + 1).take(weyr[k] - next));
    }
    blocks.sort_unstable_by(|a, b| b.cmp(a));
    blocks
}

/// Ladder matrix of the N-th order with integer parameters, assembled from
/// its entry formulas rather than from any library routine.
pub fn ladder(n_order: i64, gamma: i64, gamma12: i64, delta: i64) -> Mat {
    let dim = (n_order + 1) as usize;
    let mut m = vec![vec![Gq::zero(); dim]; dim];
    for n in 0..=n_order {
        let i = n as usize;
        m[i][i] = Gq::int(-n_order * gamma, (2 * n - n_order) * delta);
        if n > 0 {
            m[i][i - 1] = Gq::int(-n * gamma12, 0);
        }
        if n < n_order {
            m[i][i + 1] = Gq::int(-(n_order - n) * gamma12, 0);
        }
    }
    m
}

pub fn to_f64(m: &Mat) -> Vec<Vec<(f64, f64)>> {
    use num::ToPrimitive;
    m.iter()
        .map(|r| r.iter().map(|z| (z.re.to_f64().unwrap(), z.im.to_f64().unwrap())).collect())
        .collect()
}

