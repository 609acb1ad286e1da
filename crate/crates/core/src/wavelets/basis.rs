//! Point evaluation of father and mother wavelets.
//!
//! Haar uses its closed forms. The Daubechies families are evaluated with the
//! Daubechies–Lagarias product of refinement matrices: for `x` in `[0, 1)`
//! with binary digits `d1 d2 ...`, the vector `(phi(x), phi(x+1), ...,
//! phi(x+L-2))` equals `T[d1] T[d2] ... T[dn] v0`, where `v0` holds the values
//! of `phi` at the integers. Dyadic points with at most `eval_depth` digits are
//! therefore exact up to rounding.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::filters::{build_filter_bank, FilterBank, WaveletFamily};
use crate::error::{Error, Result};

pub const DEFAULT_EVAL_DEPTH: u32 = 30;
const MAX_EVAL_DEPTH: u32 = 52;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletKind {
    Father,
    Mother,
}

/// How non-Haar basis functions are brought onto `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// `sum_n b(u + n)`: the basis wrapped onto the circle, orthonormal on `[0, 1)`.
    #[default]
    Periodic,
    /// The basis spans the mirrored domain `[-1, 2)`; the unit interval is its
    /// middle third, so `u` is evaluated at `(u + 1) / 3`.
    Extend,
    /// `b(u) + b(-u) + b(2 - u)`: mass on `[-1, 0)` and `[1, 2)` reflected back.
    Fold,
}

/// Serialisable description of a basis; everything else is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: WaveletFamily,
    pub vanishing_moments: usize,
    #[serde(default = "default_depth")]
    pub eval_depth: u32,
    #[serde(default)]
    pub boundary: BoundaryMode,
}

fn default_depth() -> u32 {
    DEFAULT_EVAL_DEPTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisSpec", into = "BasisSpec")]
pub struct WaveletBasis {
    filter: FilterBank,
    eval_depth: u32,
    boundary: BoundaryMode,
    // (L-1) x (L-1) row-major refinement matrices for digits 0 and 1
    refine: [Vec<f64>; 2],
    integer_values: Vec<f64>,
}

impl TryFrom<BasisSpec> for WaveletBasis {
    type Error = Error;

    fn try_from(spec: BasisSpec) -> Result<Self> {
        Ok(WaveletBasis::with_depth(spec.family, spec.vanishing_moments, spec.eval_depth)?
            .with_boundary(spec.boundary))
    }
}

impl From<WaveletBasis> for BasisSpec {
    fn from(b: WaveletBasis) -> Self {
        b.spec()
    }
}

impl WaveletBasis {
    pub fn new(family: WaveletFamily, vanishing_moments: usize) -> Result<Self> {
        Self::with_depth(family, vanishing_moments, DEFAULT_EVAL_DEPTH)
    }

    pub fn haar() -> Self {
        Self::new(WaveletFamily::Haar, 1).expect("haar is always available")
    }

    pub fn with_depth(family: WaveletFamily, vanishing_moments: usize, eval_depth: u32) -> Result<Self> {
        if eval_depth == 0 || eval_depth > MAX_EVAL_DEPTH {
            return Err(Error::Domain(format!(
                "eval_depth must be in 1..={MAX_EVAL_DEPTH}, got {eval_depth}"
            )));
        }
        let filter = build_filter_bank(family, vanishing_moments)?;
        let refine = [refinement_matrix(&filter, 0), refinement_matrix(&filter, 1)];
        let integer_values = integer_values(&refine[0], filter.len() - 1)?;
        Ok(WaveletBasis {
            filter,
            eval_depth,
            boundary: BoundaryMode::default(),
            refine,
            integer_values,
        })
    }

    pub fn with_boundary(mut self, boundary: BoundaryMode) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn spec(&self) -> BasisSpec {
        BasisSpec {
            family: self.filter.family,
            vanishing_moments: self.filter.vanishing_moments,
            eval_depth: self.eval_depth,
            boundary: self.boundary,
        }
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn filter(&self) -> &FilterBank {
        &self.filter
    }

    pub fn family(&self) -> WaveletFamily {
        self.filter.family
    }

    pub fn vanishing_moments(&self) -> usize {
        self.filter.vanishing_moments
    }

    pub fn eval_depth(&self) -> u32 {
        self.eval_depth
    }

    pub fn is_haar(&self) -> bool {
        self.filter.family == WaveletFamily::Haar
    }

    /// `[0, 2N - 1]`
    pub fn father_support(&self) -> (f64, f64) {
        (0.0, (self.filter.len() - 1) as f64)
    }

    /// `[1 - N, N]`
    pub fn mother_support(&self) -> (f64, f64) {
        let n = self.filter.vanishing_moments as f64;
        (1.0 - n, n)
    }

    /// Values of the father wavelet at `0, 1, ..., L - 2`.
    pub fn integer_values(&self) -> &[f64] {
        &self.integer_values
    }

    /// `phi(frac + i)` for `i = 0..L-1`, with `frac` in `[0, 1)`.
    pub fn father_window(&self, frac: f64) -> Vec<f64> {
        debug_assert!((0.0..1.0).contains(&frac));
        let m = self.integer_values.len();
        let mut v = self.integer_values.clone();
        if m == 1 {
            return v;
        }
        let scale = (1u64 << self.eval_depth) as f64;
        let mut bits = (frac * scale).floor() as u64;
        if bits == 0 {
            return v;
        }
        // T0 fixes v0, so trailing zero digits can be skipped.
        let skip = bits.trailing_zeros();
        bits >>= skip;
        let digits = self.eval_depth - skip;
        let mut scratch = vec![0.0; m];
        for _ in 0..digits {
            let t = &self.refine[(bits & 1) as usize];
            for (i, out) in scratch.iter_mut().enumerate() {
                let row = &t[i * m..(i + 1) * m];
                *out = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            }
            std::mem::swap(&mut v, &mut scratch);
            bits >>= 1;
        }
        v
    }

    pub fn father(&self, t: f64) -> f64 {
        if self.is_haar() {
            return if (0.0..1.0).contains(&t) { 1.0 } else { 0.0 };
        }
        let m = self.integer_values.len();
        if !(t >= 0.0 && t < m as f64) {
            return 0.0;
        }
        let i = t.floor();
        self.father_window(t - i)[i as usize]
    }

    /// `psi(t) = sqrt(2) * sum_k h[k] phi(2t - k + L - 2)`, supported on `[1 - N, N]`.
    pub fn mother(&self, t: f64) -> f64 {
        if self.is_haar() {
            return if (0.0..0.5).contains(&t) {
                1.0
            } else if (0.5..1.0).contains(&t) {
                -1.0
            } else {
                0.0
            };
        }
        let len = self.filter.len();
        let m = len - 1;
        let s = 2.0 * t + (len - 2) as f64;
        if !(s >= 0.0 && s < (2 * len - 2) as f64) {
            return 0.0;
        }
        let i0 = s.floor();
        let window = self.father_window(s - i0);
        let i0 = i0 as usize;
        let mut acc = 0.0;
        for (k, h) in self.filter.high_pass.iter().enumerate() {
            if k > i0 {
                break;
            }
            let idx = i0 - k;
            if idx < m {
                acc += h * window[idx];
            }
        }
        std::f64::consts::SQRT_2 * acc
    }

    pub fn eval(&self, kind: WaveletKind, t: f64) -> f64 {
        match kind {
            WaveletKind::Father => self.father(t),
            WaveletKind::Mother => self.mother(t),
        }
    }

    /// `2^(j/2) f(2^j t - k)`
    pub fn scaled(&self, j: u32, k: i64, t: f64, kind: WaveletKind) -> f64 {
        let dil = (1u64 << j) as f64;
        dil.sqrt() * self.eval(kind, dil * t - k as f64)
    }
}

fn refinement_matrix(filter: &FilterBank, digit: usize) -> Vec<f64> {
    let len = filter.len() as i64;
    let m = (len - 1) as usize;
    let mut t = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let idx = 2 * i as i64 - j as i64 + digit as i64;
            if (0..len).contains(&idx) {
                t[i * m + j] = std::f64::consts::SQRT_2 * filter.low_pass[idx as usize];
            }
        }
    }
    t
}

/// Eigenvector of the digit-0 refinement matrix for eigenvalue one,
/// normalised to unit sum.
fn integer_values(t0: &[f64], m: usize) -> Result<Vec<f64>> {
    let mut a = DMatrix::<f64>::zeros(m + 1, m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = t0[i * m + j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[(m, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[m] = 1.0;
    let v = a
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Domain(format!("refinement eigenproblem: {e}")))?;
    Ok(v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d2() -> WaveletBasis {
        WaveletBasis::new(WaveletFamily::DaubechiesExtremalPhase, 2).unwrap()
    }

    #[test]
    fn haar_closed_forms() {
        let b = WaveletBasis::haar();
        assert_eq!(b.father(0.5), 1.0);
        assert_eq!(b.father(0.0), 1.0);
        assert_eq!(b.father(1.0), 0.0);
        assert_eq!(b.father(-0.1), 0.0);
        assert_eq!(b.mother(0.25), 1.0);
        assert_eq!(b.mother(0.75), -1.0);
        assert_eq!(b.mother(0.5), -1.0);
        assert_eq!(b.mother(1.0), 0.0);
    }

    #[test]
    fn d2_integer_values_match_closed_form() {
        let b = d2();
        let s3 = 3f64.sqrt();
        assert!(b.father(0.0).abs() < 1e-12);
        assert!((b.father(1.0) - (1.0 + s3) / 2.0).abs() < 1e-12);
        assert!((b.father(2.0) - (1.0 - s3) / 2.0).abs() < 1e-12);
        assert_eq!(b.father(3.0), 0.0);
    }

    #[test]
    fn d2_half_integer_values() {
        // phi(1/2) = c0 phi(1) = (1+sqrt3)/4 * (1+sqrt3)/2
        let b = d2();
        let s3 = 3f64.sqrt();
        let expect = (1.0 + s3) / 4.0 * (1.0 + s3) / 2.0;
        assert!((b.father(0.5) - expect).abs() < 1e-12);
    }

    #[test]
    fn mother_outside_support_is_zero() {
        let b = d2();
        assert_eq!(b.mother(10.0), 0.0);
        assert_eq!(b.mother(-1.0 - 1e-9), 0.0);
        assert_eq!(b.mother(2.0), 0.0);
        assert_eq!(b.father(f64::NAN), 0.0);
    }

    #[test]
    fn scaled_identity_and_haar_examples() {
        let h = WaveletBasis::haar();
        assert!((h.scaled(1, 0, 0.1, WaveletKind::Mother) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(h.scaled(1, 1, 0.1, WaveletKind::Mother), 0.0);
        let b = d2();
        for t in [0.1, 0.77, 1.3, 2.5] {
            assert_eq!(b.scaled(0, 0, t, WaveletKind::Father), b.father(t));
            assert_eq!(b.scaled(0, 0, t, WaveletKind::Mother), b.mother(t));
        }
    }

    #[test]
    fn partition_of_unity() {
        for (family, n) in WaveletFamily::supported() {
            let b = WaveletBasis::new(family, n).unwrap();
            for i in 0..200 {
                let t = i as f64 / 200.0 + 0.001234;
                let s: f64 = (-25..=25).map(|k| b.father(t - k as f64)).sum();
                assert!((s - 1.0).abs() < 1e-6, "{family}{n} at {t}: {s}");
            }
        }
    }

    #[test]
    fn depth_validation() {
        assert!(WaveletBasis::with_depth(WaveletFamily::Haar, 1, 0).is_err());
        assert!(WaveletBasis::with_depth(WaveletFamily::Haar, 1, 53).is_err());
    }

    #[test]
    fn basis_serialises_as_spec() {
        let b = d2().with_boundary(BoundaryMode::Fold);
        let spec = b.spec();
        let back = WaveletBasis::try_from(spec).unwrap();
        assert_eq!(back, b);
    }
}
