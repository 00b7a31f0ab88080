//! Eigenvalues of a dense real matrix.
//!
//! The matrix is first reduced to upper Hessenberg form by Householder
//! similarity transforms. The Hessenberg matrix is then driven to real Schur
//! form by implicitly shifted QR sweeps. Each sweep uses the two eigenvalues
//! of the trailing 2×2 block as a conjugate shift pair (the real-arithmetic
//! form of the Wilkinson shift), and the active window shrinks whenever a
//! subdiagonal entry becomes negligible. A deflated 1×1 block is a real
//! eigenvalue; a deflated 2×2 block is solved with the quadratic formula and
//! may produce a complex conjugate pair.

use std::fmt;

use crate::value::Value;

use super::{Matrix, NumericError};

/// One eigenvalue, `re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn real(re: f64) -> Self {
        Eigenvalue { re, im: 0.0 }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }

    /// Real eigenvalues become a real; complex ones a `{re, im}` pair.
    pub fn to_value(&self) -> Value {
        if self.is_real() {
            Value::Real(self.re)
        } else {
            Value::list([Value::Real(self.re), Value::Real(self.im)])
        }
    }
}

impl fmt::Display for Eigenvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_value().fmt(f)
    }
}

/// The eigenvalues of an n×n matrix in canonical order: descending modulus,
/// then descending real part, then descending imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<Eigenvalue>,
}

impl Spectrum {
    /// Sort into canonical order. Moduli that agree to about nine
    /// significant digits relative to the largest are treated as ties, so
    /// `±x` pairs order by sign instead of by rounding noise.
    pub fn from_unordered(mut values: Vec<Eigenvalue>) -> Self {
        let scale = values
            .iter()
            .map(Eigenvalue::modulus)
            .fold(1.0_f64, f64::max);
        let bucket = |e: &Eigenvalue| (e.modulus() / scale * 1e9).round();
        values.sort_by(|a, b| {
            bucket(b)
                .total_cmp(&bucket(a))
                .then_with(|| b.re.total_cmp(&a.re))
                .then_with(|| b.im.total_cmp(&a.im))
        });
        Spectrum { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Eigenvalue] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = &Eigenvalue> {
        self.values.iter()
    }

    pub fn to_value(&self) -> Value {
        Value::list(self.values.iter().map(Eigenvalue::to_value))
    }

    /// Largest per-eigenvalue distance to `other`, matched position by
    /// position under the canonical order. `None` if the lengths differ.
    pub fn max_distance(&self, other: &Spectrum) -> Option<f64> {
        (self.len() == other.len()).then(|| {
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a.re - b.re).hypot(a.im - b.im))
                .fold(0.0, f64::max)
        })
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_value().fmt(f)
    }
}

/// Eigenvalues of a square matrix.
pub fn eigenvalues(a: &Matrix) -> Result<Spectrum, NumericError> {
    if !a.is_square() {
        return Err(NumericError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(NumericError::NonFinite);
    }
    let n = a.rows();
    let mut h = Hessenberg::reduce(a);
    let values = h.schur_eigenvalues(100 * n)?;
    debug_assert_eq!(values.len(), n);
    Ok(Spectrum::from_unordered(values))
}

/// Square working copy, row-major, reduced in place.
struct Hessenberg {
    n: usize,
    h: Vec<f64>,
}

impl Hessenberg {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.h[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, x: f64) {
        self.h[i * self.n + j] = x;
    }

    fn reduce(a: &Matrix) -> Self {
        let n = a.rows();
        let mut hb = Hessenberg {
            n,
            h: a.as_slice().to_vec(),
        };
        for k in 0..n.saturating_sub(2) {
            let x: Vec<f64> = (k + 1..n).map(|i| hb.at(i, k)).collect();
            if x[1..].iter().all(|&v| v == 0.0) {
                continue;
            }
            let Some(v) = householder(&x) else { continue };
            hb.reflect_rows(&v, k + 1, k, n);
            hb.reflect_cols(&v, k + 1, 0, n);
            for i in k + 2..n {
                hb.set(i, k, 0.0);
            }
        }
        hb
    }

    /// `H[r0.., cols] -= 2 v (vᵀ H[r0.., cols])` for a unit vector `v`.
    fn reflect_rows(&mut self, v: &[f64], r0: usize, c_lo: usize, c_hi: usize) {
        for j in c_lo..c_hi {
            let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * self.at(r0 + i, j)).sum();
            for (i, vi) in v.iter().enumerate() {
                let x = self.at(r0 + i, j) - 2.0 * vi * dot;
                self.set(r0 + i, j, x);
            }
        }
    }

    /// `H[rows, c0..] -= 2 (H[rows, c0..] v) vᵀ` for a unit vector `v`.
    fn reflect_cols(&mut self, v: &[f64], c0: usize, r_lo: usize, r_hi: usize) {
        for i in r_lo..r_hi {
            let dot: f64 = v.iter().enumerate().map(|(j, vj)| vj * self.at(i, c0 + j)).sum();
            for (j, vj) in v.iter().enumerate() {
                let x = self.at(i, c0 + j) - 2.0 * vj * dot;
                self.set(i, c0 + j, x);
            }
        }
    }

    fn frobenius(&self) -> f64 {
        self.h.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn schur_eigenvalues(&mut self, max_iter: usize) -> Result<Vec<Eigenvalue>, NumericError> {
        let n = self.n;
        let eps = f64::EPSILON;
        // Subdiagonals below eps·‖H‖ are dropped even when their neighbours
        // are small: a perturbation of that size is within backward error,
        // and clusters of equal eigenvalues otherwise stall the shifts.
        let floor = eps * self.frobenius();
        let mut out = Vec::with_capacity(n);
        let mut total = 0usize;
        let mut since_deflation = 0usize;
        // Active window is rows/cols lo..=hi; everything below hi is deflated.
        let mut hi = n as isize - 1;
        while hi >= 0 {
            let h = hi as usize;
            let mut lo = h;
            while lo > 0 {
                let s = self.at(lo - 1, lo - 1).abs() + self.at(lo, lo).abs();
                if self.at(lo, lo - 1).abs() <= (eps * s).max(floor) {
                    self.set(lo, lo - 1, 0.0);
                    break;
                }
                lo -= 1;
            }

            if lo == h {
                out.push(Eigenvalue::real(self.at(h, h)));
                hi -= 1;
                since_deflation = 0;
                continue;
            }
            if lo + 1 == h {
                let (a, b, c, d) = (
                    self.at(h - 1, h - 1),
                    self.at(h - 1, h),
                    self.at(h, h - 1),
                    self.at(h, h),
                );
                out.extend(eig2x2(a, b, c, d));
                hi -= 2;
                since_deflation = 0;
                continue;
            }

            total += 1;
            since_deflation += 1;
            if total > max_iter {
                return Err(NumericError::NoConvergence { iterations: max_iter });
            }
            let (s, t) = if since_deflation % 11 == 10 {
                // Exceptional shift to break cycles, centred on the last
                // diagonal entry.
                let x = self.at(h, h - 1).abs() + self.at(h - 1, h - 2).abs();
                let d = self.at(h, h) + 0.75 * x;
                (2.0 * d, d * d + 0.4375 * x * x)
            } else {
                let (a, b, c, d) = (
                    self.at(h - 1, h - 1),
                    self.at(h - 1, h),
                    self.at(h, h - 1),
                    self.at(h, h),
                );
                (a + d, a * d - b * c)
            };
            self.francis_step(lo, h, s, t);
        }
        Ok(out)
    }

    /// One implicit double-shift QR sweep over the window `lo..=hi` with
    /// shifts whose sum is `s` and product is `t`.
    fn francis_step(&mut self, lo: usize, hi: usize, s: f64, t: f64) {
        let h00 = self.at(lo, lo);
        let h01 = self.at(lo, lo + 1);
        let h10 = self.at(lo + 1, lo);
        let h11 = self.at(lo + 1, lo + 1);
        let h21 = self.at(lo + 2, lo + 1);
        let mut x = h00 * h00 + h01 * h10 - s * h00 + t;
        let mut y = h10 * (h00 + h11 - s);
        let mut z = h10 * h21;
        for k in lo..hi - 1 {
            if let Some(v) = householder(&[x, y, z]) {
                let c_lo = if k > lo { k - 1 } else { lo };
                self.reflect_rows(&v, k, c_lo, hi + 1);
                let r_hi = (k + 4).min(hi + 1);
                self.reflect_cols(&v, k, lo, r_hi);
            }
            x = self.at(k + 1, k);
            y = self.at(k + 2, k);
            if k + 3 <= hi {
                z = self.at(k + 3, k);
            }
        }
        if let Some(v) = householder(&[x, y]) {
            self.reflect_rows(&v, hi - 1, hi - 2, hi + 1);
            self.reflect_cols(&v, hi - 1, lo, hi + 1);
        }
    }
}

/// Unit Householder vector `v` with `(I - 2vvᵀ) x = ∓‖x‖ e₁`, or `None` for `x = 0`.
fn householder(x: &[f64]) -> Option<Vec<f64>> {
    let scale: f64 = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut v: Vec<f64> = x.iter().map(|xi| xi / scale).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v[0] += norm.copysign(v[0]);
    let vnorm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= vnorm);
    Some(v)
}

/// Eigenvalues of `[[a, b], [c, d]]`.
fn eig2x2(a: f64, b: f64, c: f64, d: f64) -> [Eigenvalue; 2] {
    let p = 0.5 * (a - d);
    let bc = b * c;
    let disc = p * p + bc;
    if disc >= 0.0 {
        // Roots of μ² - 2pμ - bc = 0 with μ = λ - d, the larger root first
        // and the smaller recovered from the product to avoid cancellation.
        let z = p + disc.sqrt().copysign(if p == 0.0 { 1.0 } else { p });
        if z == 0.0 {
            [Eigenvalue::real(d), Eigenvalue::real(d)]
        } else {
            [Eigenvalue::real(d + z), Eigenvalue::real(d - bc / z)]
        }
    } else {
        let re = d + p;
        let im = (-disc).sqrt();
        [Eigenvalue { re, im }, Eigenvalue { re, im: -im }]
    }
}
