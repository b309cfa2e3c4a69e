//! Linear dispersion space-time block codes with the column cancellation
//! property, zero-column interleaving, and difference matrices.
//!
//! A code is stored as its dispersion matrices, one per real symbol dimension,
//! in the order `x1_re, x1_im, x2_re, x2_im, ...`. Codes that support
//! receiver-side interference cancellation also carry, for every odd column
//! `p` (zero-based even index), a row permutation and per-row coefficients
//! `alpha` such that
//!
//! ```text
//! X(r, p) + alpha[r] * conj(X(perm[r], p + 1)) = 0    for every symbol vector
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cis, CMat, C64, J, ONE, ZERO};

/// Tolerance used when checking the cancellation identities.
pub const CANCELLATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeId {
    /// The three-antenna, rate-3/2 code.
    Proposed3Tx,
    /// The four-antenna SR-style code.
    Sr4Tx,
    Alamouti,
}

impl CodeId {
    pub fn name(self) -> &'static str {
        match self {
            CodeId::Proposed3Tx => "proposed-3tx",
            CodeId::Sr4Tx => "sr-4tx",
            CodeId::Alamouti => "alamouti",
        }
    }
}

/// Cancellation map for the column pair `(column, column + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnCancellation {
    pub column: usize,
    pub perm: Vec<usize>,
    pub alpha: Vec<C64>,
}

impl ColumnCancellation {
    /// Post-cancellation noise variance added per row, `|alpha|^2`.
    pub fn sigma_sq(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a.norm_sqr()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDispersionCode {
    id: CodeId,
    theta: f64,
    m: usize,
    t_prime: usize,
    l: usize,
    disp_re: Vec<CMat>,
    disp_im: Vec<CMat>,
    cancel: Option<Vec<ColumnCancellation>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

/// First identity violation found by [`verify_column_cancellation`].
#[derive(Debug, Clone, PartialEq)]
pub struct CancellationViolation {
    /// Zero-based symbol index of the offending dispersion matrix.
    pub symbol: usize,
    pub part: Part,
    pub column: usize,
    pub row: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CancellationVerdict {
    Pass,
    Fail(CancellationViolation),
    /// The code carries no cancellation metadata.
    NoSpec,
}

impl CancellationVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, CancellationVerdict::Pass)
    }
}

impl LinearDispersionCode {
    /// Builds a code from a layout map by probing it with unit real and
    /// imaginary symbol vectors. `layout` must be linear over the reals.
    pub fn from_layout<F>(id: CodeId, theta: f64, m: usize, t_prime: usize, l: usize, layout: F) -> Self
    where
        F: Fn(&[C64]) -> CMat,
    {
        let probe = |k: usize, v: C64| {
            let mut x = vec![ZERO; l];
            x[k] = v;
            let a = layout(&x);
            assert_eq!(a.shape(), (m, t_prime), "layout shape");
            a
        };
        let disp_re = (0..l).map(|k| probe(k, ONE)).collect();
        let disp_im = (0..l).map(|k| probe(k, J)).collect();
        LinearDispersionCode { id, theta, m, t_prime, l, disp_re, disp_im, cancel: None }
    }

    pub fn with_cancellation(mut self, spec: Vec<ColumnCancellation>) -> Self {
        self.cancel = Some(spec);
        self
    }

    pub fn id(&self) -> CodeId {
        self.id
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Transmit antennas (rows).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Time slots (columns) before interleaving.
    pub fn t_prime(&self) -> usize {
        self.t_prime
    }

    /// Complex symbols per codeword.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn dispersion(&self, symbol: usize, part: Part) -> &CMat {
        match part {
            Part::Re => &self.disp_re[symbol],
            Part::Im => &self.disp_im[symbol],
        }
    }

    pub fn cancellation(&self) -> Option<&[ColumnCancellation]> {
        self.cancel.as_deref()
    }

    /// Complex symbols per channel use.
    pub fn rate(&self) -> f64 {
        self.l as f64 / self.t_prime as f64
    }

    /// `X = sum_k A_k^R x_k^R + A_k^I x_k^I`.
    pub fn encode_matrix(&self, symbols: &[C64]) -> Result<CMat> {
        if symbols.len() != self.l {
            return Err(Error::DimensionMismatch(format!(
                "{} symbols for a code carrying {}",
                symbols.len(),
                self.l
            )));
        }
        let mut x = CMat::zeros(self.m, self.t_prime);
        for (k, s) in symbols.iter().enumerate() {
            if s.re != 0.0 {
                x.zip_apply(&self.disp_re[k], |a, d| *a += d * s.re);
            }
            if s.im != 0.0 {
                x.zip_apply(&self.disp_im[k], |a, d| *a += d * s.im);
            }
        }
        Ok(x)
    }

    pub fn encode(&self, symbols: &[C64]) -> Result<Codeword> {
        Ok(Codeword {
            matrix: self.encode_matrix(symbols)?,
            symbols: symbols.to_vec(),
            code: self.id,
            theta: self.theta,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub matrix: CMat,
    pub symbols: Vec<C64>,
    code: CodeId,
    theta: f64,
}

impl Codeword {
    pub fn code(&self) -> CodeId {
        self.code
    }
}

/// The three-antenna code over four slots carrying six complex symbols.
pub fn proposed_3tx_code(theta: f64) -> LinearDispersionCode {
    let e = cis(theta);
    let layout = move |x: &[C64]| {
        let (re, im): (Vec<f64>, Vec<f64>) = x.iter().map(|z| (z.re, z.im)).unzip();
        let c = |a: f64, b: f64| C64::new(a, b);
        let mut m = CMat::zeros(3, 4);
        m[(0, 0)] = c(re[0], im[2]);
        m[(0, 1)] = c(-re[1], im[3]);
        m[(0, 2)] = e * c(re[4], im[5]);
        m[(0, 3)] = e * c(-re[2], im[0]);
        m[(1, 0)] = c(re[1], im[3]);
        m[(1, 1)] = c(re[0], -im[2]);
        m[(1, 2)] = e * c(re[3], im[1]);
        m[(1, 3)] = e * c(re[4], -im[5]);
        m[(2, 0)] = e * c(re[5], im[4]);
        m[(2, 1)] = e * c(-re[5], im[4]);
        m[(2, 2)] = c(re[2], im[0]);
        m[(2, 3)] = c(-re[3], im[1]);
        m
    };
    let e2 = cis(2.0 * theta);
    LinearDispersionCode::from_layout(CodeId::Proposed3Tx, theta, 3, 4, 6, layout).with_cancellation(vec![
        ColumnCancellation { column: 0, perm: vec![1, 0, 2], alpha: vec![-ONE, ONE, e2] },
        ColumnCancellation { column: 2, perm: vec![1, 2, 0], alpha: vec![-e2, e, e] },
    ])
}

/// The four-antenna code over four slots carrying eight complex symbols.
pub fn sr_4tx_code(theta: f64) -> LinearDispersionCode {
    let e = cis(theta);
    let layout = move |x: &[C64]| {
        let (re, im): (Vec<f64>, Vec<f64>) = x.iter().map(|z| (z.re, z.im)).unzip();
        let c = |a: f64, b: f64| C64::new(a, b);
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = c(re[0], im[2]);
        m[(0, 1)] = c(-re[1], im[3]);
        m[(0, 2)] = e * c(re[4], im[6]);
        m[(0, 3)] = e * c(-re[5], im[7]);
        m[(1, 0)] = c(re[1], im[3]);
        m[(1, 1)] = c(re[0], -im[2]);
        m[(1, 2)] = e * c(re[5], im[7]);
        m[(1, 3)] = e * c(re[4], -im[6]);
        m[(2, 0)] = e * c(re[6], im[4]);
        m[(2, 1)] = e * c(-re[7], im[5]);
        m[(2, 2)] = c(re[2], im[0]);
        m[(2, 3)] = c(-re[3], im[1]);
        m[(3, 0)] = e * c(re[7], im[5]);
        m[(3, 1)] = e * c(re[6], -im[4]);
        m[(3, 2)] = c(re[3], im[1]);
        m[(3, 3)] = c(re[2], -im[0]);
        m
    };
    let e2 = cis(2.0 * theta);
    LinearDispersionCode::from_layout(CodeId::Sr4Tx, theta, 4, 4, 8, layout).with_cancellation(vec![
        ColumnCancellation { column: 0, perm: vec![1, 0, 3, 2], alpha: vec![-ONE, ONE, -e2, e2] },
        ColumnCancellation { column: 2, perm: vec![1, 0, 3, 2], alpha: vec![-e2, e2, -ONE, ONE] },
    ])
}

/// `[[x1, -conj(x2)], [x2, conj(x1)]]`.
pub fn alamouti_code() -> LinearDispersionCode {
    let layout = |x: &[C64]| {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = x[0];
        m[(0, 1)] = -x[1].conj();
        m[(1, 0)] = x[1];
        m[(1, 1)] = x[0].conj();
        m
    };
    LinearDispersionCode::from_layout(CodeId::Alamouti, 0.0, 2, 2, 2, layout).with_cancellation(vec![
        ColumnCancellation { column: 0, perm: vec![1, 0], alpha: vec![-ONE, ONE] },
    ])
}

/// Checks the cancellation identity on every dispersion matrix, which by
/// real-linearity proves it for all symbol values.
pub fn verify_column_cancellation(code: &LinearDispersionCode) -> CancellationVerdict {
    let Some(spec) = code.cancellation() else {
        return CancellationVerdict::NoSpec;
    };
    let covered: Vec<usize> = spec.iter().map(|s| s.column).collect();
    for p in (0..code.t_prime()).step_by(2) {
        if !covered.contains(&p) {
            return CancellationVerdict::Fail(CancellationViolation {
                symbol: 0,
                part: Part::Re,
                column: p,
                row: 0,
                residual: f64::INFINITY,
            });
        }
    }
    for k in 0..code.l() {
        for part in [Part::Re, Part::Im] {
            let a = code.dispersion(k, part);
            for s in spec {
                for r in 0..code.m() {
                    let v = a[(r, s.column)] + s.alpha[r] * a[(s.perm[r], s.column + 1)].conj();
                    if v.norm() > CANCELLATION_TOL {
                        return CancellationVerdict::Fail(CancellationViolation {
                            symbol: k,
                            part,
                            column: s.column,
                            row: r,
                            residual: v.norm(),
                        });
                    }
                }
            }
        }
    }
    CancellationVerdict::Pass
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Destination {
    Rx1,
    Rx2,
}

/// Inserts `T'/2` zero columns: after every column pair for `Rx1`
/// (zeros at slots 3, 6, ...), before every pair for `Rx2` (zeros at 1, 4, ...).
pub fn interleave_zero_columns(x: &CMat, destination: Destination) -> Result<CMat> {
    let (m, t) = x.shape();
    if t % 2 != 0 {
        return Err(Error::DimensionMismatch(format!("odd column count {t}")));
    }
    let mut out = CMat::zeros(m, 3 * t / 2);
    let offset = match destination {
        Destination::Rx1 => 0,
        Destination::Rx2 => 1,
    };
    for c in 0..t {
        out.set_column(3 * (c / 2) + c % 2 + offset, &x.column(c));
    }
    Ok(out)
}

pub fn difference_matrix(c1: &Codeword, c2: &Codeword) -> Result<CMat> {
    if c1.code != c2.code || c1.theta != c2.theta || c1.matrix.shape() != c2.matrix.shape() {
        return Err(Error::CodeMismatch);
    }
    Ok(&c1.matrix - &c2.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::frobenius;
    use proptest::prelude::*;

    fn unit(l: usize, k: usize, v: C64) -> Vec<C64> {
        let mut x = vec![ZERO; l];
        x[k] = v;
        x
    }

    #[test]
    fn proposed_code_entries() {
        let theta = 0.7;
        let code = proposed_3tx_code(theta);
        assert_eq!((code.m(), code.t_prime(), code.l()), (3, 4, 6));
        assert_eq!(code.rate(), 1.5);
        assert_eq!(code.encode_matrix(&[ZERO; 6]).unwrap(), CMat::zeros(3, 4));

        let x = code.encode_matrix(&unit(6, 0, ONE)).unwrap();
        let mut want = CMat::zeros(3, 4);
        want[(0, 0)] = ONE;
        want[(1, 1)] = ONE;
        assert!(frobenius(&(x - want)) < 1e-15);

        let x = code.encode_matrix(&unit(6, 4, J)).unwrap();
        let mut want = CMat::zeros(3, 4);
        want[(2, 0)] = J * cis(theta);
        want[(2, 1)] = J * cis(theta);
        assert!(frobenius(&(x - want)) < 1e-15);
    }

    #[test]
    fn sr_code_entries() {
        let code = sr_4tx_code(0.3);
        assert_eq!((code.m(), code.t_prime(), code.l()), (4, 4, 8));
        assert_eq!(code.encode_matrix(&[ZERO; 8]).unwrap(), CMat::zeros(4, 4));
        let x = code.encode_matrix(&unit(8, 0, ONE)).unwrap();
        let mut want = CMat::zeros(4, 4);
        want[(0, 0)] = ONE;
        want[(1, 1)] = ONE;
        assert!(frobenius(&(&x - want)) < 1e-15);
        assert_eq!(x[(2, 2)], ZERO);
        assert_eq!(x[(2, 3)], ZERO);
    }

    #[test]
    fn alamouti_entries() {
        let code = alamouti_code();
        assert_eq!(code.encode_matrix(&[ONE, ZERO]).unwrap(), CMat::identity(2, 2));
        let x = code.encode_matrix(&[J, ONE]).unwrap();
        let want = crate::numerics::cmat(&[&[J, -ONE], &[ONE, -J]]);
        assert!(frobenius(&(x - want)) < 1e-15);
    }

    #[test]
    fn cancellation_holds_for_all_codes() {
        for theta in [0.0, std::f64::consts::FRAC_PI_4, 1.234] {
            assert!(verify_column_cancellation(&proposed_3tx_code(theta)).passed());
            assert!(verify_column_cancellation(&sr_4tx_code(theta)).passed());
        }
        assert!(verify_column_cancellation(&alamouti_code()).passed());
    }

    #[test]
    fn corrupted_code_fails() {
        let theta = 0.5;
        let base = proposed_3tx_code(theta);
        let corrupted = LinearDispersionCode::from_layout(CodeId::Proposed3Tx, theta, 3, 4, 6, |x| {
            let mut m = base.encode_matrix(x).unwrap();
            m[(0, 0)] = -m[(0, 0)];
            m
        })
        .with_cancellation(base.cancellation().unwrap().to_vec());
        match verify_column_cancellation(&corrupted) {
            CancellationVerdict::Fail(v) => {
                assert_eq!((v.column, v.row), (0, 0));
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn unit_modulus_maps() {
        for s in proposed_3tx_code(0.9).cancellation().unwrap() {
            assert!(s.sigma_sq().iter().all(|v| (v - 1.0).abs() < 1e-15));
        }
        for s in sr_4tx_code(0.9).cancellation().unwrap() {
            assert!(s.sigma_sq().iter().all(|v| (v - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn interleaving_patterns() {
        let code = proposed_3tx_code(0.2);
        let sym: Vec<C64> = (0..6).map(|k| C64::new(k as f64 + 1.0, -(k as f64))).collect();
        let x = code.encode_matrix(&sym).unwrap();
        let a = interleave_zero_columns(&x, Destination::Rx1).unwrap();
        assert_eq!(a.shape(), (3, 6));
        for (dst, src) in [(0, 0), (1, 1), (3, 2), (4, 3)] {
            assert_eq!(a.column(dst), x.column(src));
        }
        assert!(a.column(2).iter().all(|z| *z == ZERO));
        assert!(a.column(5).iter().all(|z| *z == ZERO));
        let b = interleave_zero_columns(&x, Destination::Rx2).unwrap();
        assert!(b.column(0).iter().all(|z| *z == ZERO));
        assert!(b.column(3).iter().all(|z| *z == ZERO));
        for (dst, src) in [(1, 0), (2, 1), (4, 2), (5, 3)] {
            assert_eq!(b.column(dst), x.column(src));
        }
    }

    #[test]
    fn difference_matrix_layout() {
        let theta = 0.8;
        let code = proposed_3tx_code(theta);
        let s1 = vec![C64::new(0.3, -0.2); 6];
        let c1 = code.encode(&s1).unwrap();
        assert_eq!(difference_matrix(&c1, &c1).unwrap(), CMat::zeros(3, 4));

        let delta = C64::new(0.5, -1.5);
        let mut s2 = s1.clone();
        s2[0] -= delta;
        let d = difference_matrix(&c1, &code.encode(&s2).unwrap()).unwrap();
        let mut want = CMat::zeros(3, 4);
        want[(0, 0)] = C64::from(delta.re);
        want[(1, 1)] = C64::from(delta.re);
        want[(0, 3)] = J * delta.im * cis(theta);
        want[(2, 2)] = J * delta.im;
        assert!(frobenius(&(d - want)) < 1e-14);

        let other = proposed_3tx_code(theta + 0.1).encode(&s1).unwrap();
        assert!(matches!(difference_matrix(&c1, &other), Err(Error::CodeMismatch)));
    }

    proptest! {
        #[test]
        fn encoding_is_real_linear(
            a in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 6),
            b in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 6),
            theta in 0.0f64..6.3,
        ) {
            let code = proposed_3tx_code(theta);
            let a: Vec<C64> = a.into_iter().map(|(r, i)| C64::new(r, i)).collect();
            let b: Vec<C64> = b.into_iter().map(|(r, i)| C64::new(r, i)).collect();
            let sum: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let lhs = code.encode_matrix(&sum).unwrap();
            let rhs = code.encode_matrix(&a).unwrap() + code.encode_matrix(&b).unwrap();
            prop_assert!(frobenius(&(lhs - rhs)) < 1e-12);
            let d = difference_matrix(&code.encode(&a).unwrap(), &code.encode(&b).unwrap()).unwrap();
            let diff: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            prop_assert!(frobenius(&(d - code.encode_matrix(&diff).unwrap())) < 1e-12);
        }

        #[test]
        fn alamouti_is_orthogonal(a in (-2.0f64..2.0, -2.0f64..2.0), b in (-2.0f64..2.0, -2.0f64..2.0)) {
            let (x1, x2) = (C64::new(a.0, a.1), C64::new(b.0, b.1));
            let x = alamouti_code().encode_matrix(&[x1, x2]).unwrap();
            let g = &x * x.adjoint();
            let e = x1.norm_sqr() + x2.norm_sqr();
            prop_assert!(frobenius(&(g - CMat::identity(2, 2) * C64::from(e))) < 1e-12);
            let det = x.determinant().norm();
            prop_assert!((det - e).abs() < 1e-12);
        }
    }
}
