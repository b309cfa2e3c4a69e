//! Verification instruments: exhaustive difference-matrix rank search, the
//! case split of the rank argument, determinant certificates for the effective
//! matrices, and diversity-slope estimation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::SimRng;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::numerics::{cis, cmat, cmat_re, det, singular_values, CMat, C64, ONE, RANK_TOL, ZERO};
use crate::schemes::{effective_matrices, s_matrix_printed};
use crate::stbc::{proposed_3tx_code, LinearDispersionCode};

/// Default budget of sign-canonical difference vectors.
pub const RANK_SEARCH_LIMIT: f64 = 1e8;

/// Failures kept verbatim in a report; the rest are only counted.
const KEPT_FAILURES: usize = 16;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankFailure {
    /// Symbol differences as `[re, im]` pairs.
    pub delta: Vec<[f64; 2]>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSearchReport {
    pub code: String,
    pub constellation: String,
    pub phi: f64,
    pub theta: f64,
    pub pairs_checked: u64,
    /// Smallest `sigma_min / sigma_max` seen.
    pub min_singular_ratio: f64,
    pub min_min_singular_value: f64,
    pub failure_count: u64,
    /// The first failures in enumeration order.
    pub failures: Vec<RankFailure>,
}

impl RankSearchReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    fn merge(mut self, other: RankSearchReport) -> RankSearchReport {
        self.pairs_checked += other.pairs_checked;
        self.min_singular_ratio = self.min_singular_ratio.min(other.min_singular_ratio);
        self.min_min_singular_value = self.min_min_singular_value.min(other.min_min_singular_value);
        self.failure_count += other.failure_count;
        let room = KEPT_FAILURES.saturating_sub(self.failures.len());
        self.failures.extend(other.failures.into_iter().take(room));
        self
    }
}

/// Index of `-d` for every `d` in a negation-closed difference set.
fn negation_table(diffs: &[C64]) -> Vec<usize> {
    diffs
        .iter()
        .map(|d| {
            diffs
                .iter()
                .position(|e| (e + d).norm() < 1e-9)
                .expect("difference sets are closed under negation")
        })
        .collect()
}

/// Number of sign-canonical nonzero vectors in `D^L`.
pub fn canonical_difference_count(d: usize, l: usize) -> f64 {
    ((d as f64).powi(l as i32) - 1.0) / 2.0
}

/// Checks `rank(Delta) = M` for every nonzero codeword difference. By
/// linearity only symbol-difference vectors are enumerated, one per `{delta, -delta}`.
pub fn rank_search(code: &LinearDispersionCode, constellation: &Constellation, limit: f64) -> Result<RankSearchReport> {
    let diffs = constellation.difference_set();
    let neg = negation_table(&diffs);
    let zero = diffs.iter().position(|d| d.norm() < 1e-12).expect("zero difference");
    let (d, l) = (diffs.len(), code.l());
    let canonical = canonical_difference_count(d, l);
    if canonical > limit {
        return Err(Error::SearchSpaceTooLarge { size: canonical, limit });
    }
    let total = (d as u64).pow(l as u32);
    let empty = RankSearchReport {
        code: code.id().name().to_string(),
        constellation: constellation.kind().name().to_string(),
        phi: constellation.phi(),
        theta: code.theta(),
        pairs_checked: 0,
        min_singular_ratio: f64::INFINITY,
        min_min_singular_value: f64::INFINITY,
        failure_count: 0,
        failures: Vec::new(),
    };
    let chunks: Vec<u64> = (0..total.div_ceil(CHUNK)).collect();
    let parts: Vec<Result<RankSearchReport>> = chunks
        .par_iter()
        .map(|&c| {
            let mut rep = empty.clone();
            let mut digits = vec![0usize; l];
            let mut delta = vec![ZERO; l];
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let mut v = idx;
                for k in (0..l).rev() {
                    digits[k] = (v % d as u64) as usize;
                    v /= d as u64;
                }
                match digits.iter().find(|&&i| i != zero) {
                    Some(&first) if first < neg[first] => {}
                    _ => continue,
                }
                for k in 0..l {
                    delta[k] = diffs[digits[k]];
                }
                let sv = singular_values(&code.encode_matrix(&delta)?)?;
                let (smax, smin) = (sv[0], sv[sv.len() - 1]);
                let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax).count();
                rep.pairs_checked += 1;
                rep.min_min_singular_value = rep.min_min_singular_value.min(smin);
                rep.min_singular_ratio = rep.min_singular_ratio.min(smin / smax);
                if rank < code.m() {
                    rep.failure_count += 1;
                    if rep.failures.len() < KEPT_FAILURES {
                        rep.failures.push(RankFailure { delta: delta.iter().map(|z| [z.re, z.im]).collect(), rank });
                    }
                }
            }
            Ok(rep)
        })
        .collect();
    parts.into_iter().try_fold(empty.clone(), |acc, r| Ok(acc.merge(r?)))
}

/// Result of checking random codeword pairs directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pairs: u64,
    pub rank_deficient: u64,
    /// Pairs whose direct rank differs from the rank of the encoded symbol difference.
    pub mismatches: u64,
}

/// Draws `samples` distinct codeword pairs and compares `rank(X(s1) - X(s2))`
/// with `rank(X(s1 - s2))`.
pub fn rank_check_pairs(
    code: &LinearDispersionCode,
    constellation: &Constellation,
    samples: u64,
    seed: u64,
) -> Result<PairCheck> {
    let mut rng = SimRng::new(seed);
    let pts = constellation.points();
    let rank = |m: &CMat| -> Result<usize> {
        let sv = singular_values(m)?;
        Ok(sv.iter().filter(|&&s| s > RANK_TOL * sv[0]).count())
    };
    let mut out = PairCheck { pairs: 0, rank_deficient: 0, mismatches: 0 };
    while out.pairs < samples {
        let a: Vec<usize> = (0..code.l()).map(|_| rng.below(pts.len())).collect();
        let b: Vec<usize> = (0..code.l()).map(|_| rng.below(pts.len())).collect();
        if a == b {
            continue;
        }
        let sa: Vec<C64> = a.iter().map(|&i| pts[i]).collect();
        let sb: Vec<C64> = b.iter().map(|&i| pts[i]).collect();
        let direct = rank(&(code.encode_matrix(&sa)? - code.encode_matrix(&sb)?))?;
        let diff: Vec<C64> = sa.iter().zip(&sb).map(|(x, y)| x - y).collect();
        let via = rank(&code.encode_matrix(&diff)?)?;
        out.pairs += 1;
        out.rank_deficient += (direct < code.m()) as u64;
        out.mismatches += (direct != via) as u64;
    }
    Ok(out)
}

/// Case of the rank argument for a difference vector of the three-antenna code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseAudit {
    pub case: u8,
    pub det_a: [f64; 2],
    pub det_b: [f64; 2],
    /// `Some(true)` where the case guarantees a nonzero determinant for every theta.
    pub predicted_nonzero: Option<bool>,
    /// Closed-form determinant of the case (`|B|` for case 1, `|A|` for case 2).
    pub closed_form: Option<[f64; 2]>,
    pub rank: usize,
}

const ZERO_TOL: f64 = 1e-12;

/// Classifies `delta` by whether `(dx1R, dx3R)` and `(dx5R, dx6R)` vanish and
/// evaluates the determinants of the first three (`A`) and last three (`B`)
/// columns of the difference matrix.
pub fn case_split_audit(delta: &[C64], theta: f64) -> Result<CaseAudit> {
    if delta.len() != 6 {
        return Err(Error::DimensionMismatch(format!("{} symbol differences, expected 6", delta.len())));
    }
    if delta.iter().all(|d| d.norm() < ZERO_TOL) {
        return Err(Error::InvalidArgument("zero difference vector".into()));
    }
    for (k, d) in delta.iter().enumerate() {
        if (d.re.abs() < ZERO_TOL) != (d.im.abs() < ZERO_TOL) {
            return Err(Error::CpdZeroConstellation(k));
        }
    }
    let z = |k: usize| delta[k].re.abs() < ZERO_TOL;
    let case = match (z(0) && z(2), z(4) && z(5)) {
        (true, true) => 1,
        (false, true) => 2,
        (true, false) => 3,
        (false, false) => 4,
    };
    let dm = proposed_3tx_code(theta).encode_matrix(delta)?;
    let da = det(&dm.columns(0, 3).into_owned())?;
    let db = det(&dm.columns(1, 3).into_owned())?;
    let (r, i) = (|k: usize| delta[k].re, |k: usize| delta[k].im);
    let jj = C64::new(0.0, 1.0);
    let closed = match case {
        1 => Some(cis(theta) * (-r(1) + jj * i(3)) * (-r(3) * r(3) - i(1) * i(1))),
        2 => Some((r(2) + jj * i(0)) * (r(0) * r(0) + i(2) * i(2) + r(1) * r(1) + i(3) * i(3))),
        _ => None,
    };
    let sv = singular_values(&dm)?;
    Ok(CaseAudit {
        case,
        det_a: [da.re, da.im],
        det_b: [db.re, db.im],
        predicted_nonzero: if case <= 2 { Some(true) } else { None },
        closed_form: closed.map(|c| [c.re, c.im]),
        rank: sv.iter().filter(|&&s| s > RANK_TOL * sv[0]).count(),
    })
}

/// Determinants of the effective matrices on the witness channel assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub theta: f64,
    pub det_r: [f64; 2],
    pub expected_r: [f64; 2],
    /// `det(S)` for the printed layout of `S`.
    pub det_s: [f64; 2],
    /// `det(S)` for the layout the receiver actually produces.
    pub det_s_pipeline: [f64; 2],
    pub expected_s: [f64; 2],
    pub r_pass: bool,
    pub s_pass: bool,
}

pub const CERTIFICATE_TOL: f64 = 1e-9;

pub fn r_witness(theta: f64) -> (CMat, CMat) {
    let h = cmat_re(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0]]);
    let g = cmat(&[&[ZERO, ZERO, ZERO], &[ONE, ZERO, ZERO], &[ONE, -cis(2.0 * theta), ONE]]);
    (h, g)
}

pub fn s_witness(theta: f64) -> (CMat, CMat) {
    let g = cmat(&[&[ZERO, ZERO, ZERO], &[ONE, ZERO, ZERO], &[ZERO, ONE, 3.0 - cis(theta)]]);
    (CMat::identity(3, 3), g)
}

/// Always returns the computed values; see [`appendix_c_certificates`] for the checked form.
pub fn certificate_values(theta: f64) -> Result<CertificateReport> {
    let (h, g) = r_witness(theta);
    let (r, _) = effective_matrices(&h, &g, theta);
    let dr = det(&r)?;
    let (h, g) = s_witness(theta);
    let ds = det(&s_matrix_printed(&h, &g, theta))?;
    let ds_pipe = det(&effective_matrices(&h, &g, theta).1)?;
    let er = C64::new(-2.0, 0.0);
    let es = 3.0 * (3.0 - cis(theta));
    Ok(CertificateReport {
        theta,
        det_r: [dr.re, dr.im],
        expected_r: [er.re, er.im],
        det_s: [ds.re, ds.im],
        det_s_pipeline: [ds_pipe.re, ds_pipe.im],
        expected_s: [es.re, es.im],
        r_pass: (dr - er).norm() <= CERTIFICATE_TOL,
        s_pass: (ds - es).norm() <= CERTIFICATE_TOL,
    })
}

pub fn appendix_c_certificates(theta: f64) -> Result<CertificateReport> {
    let rep = certificate_values(theta)?;
    if rep.r_pass && rep.s_pass {
        Ok(rep)
    } else {
        Err(Error::CertificateFailed(format!(
            "theta={theta}: det(R)={:?} (want {:?}), det(S)={:?} (want {:?}, receiver layout gives {:?})",
            rep.det_r, rep.expected_r, rep.det_s, rep.expected_s, rep.det_s_pipeline
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub p_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub bits_per_trial: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.bit_errors as f64 / (self.trials * self.bits_per_trial) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub scheme: String,
    pub constellation: String,
    pub theta: f64,
    pub phi: f64,
    pub seed: u64,
    pub points: Vec<BerPoint>,
}

/// Negated least-squares slope of `log10(BER)` against `P_dB / 10` over the
/// last `tail_points` points, so a `P^{-d}` curve yields `d`.
pub fn diversity_slope(curve: &BerCurve, tail_points: usize) -> Result<f64> {
    if tail_points < 2 {
        return Err(Error::InsufficientData(format!("{tail_points} tail points; need at least 2")));
    }
    if curve.points.len() < tail_points {
        return Err(Error::InsufficientData(format!(
            "curve has {} points, {tail_points} requested",
            curve.points.len()
        )));
    }
    let tail = &curve.points[curve.points.len() - tail_points..];
    if tail.iter().any(|p| p.ber() <= 0.0) {
        return Err(Error::ZeroBerInTail);
    }
    let xs: Vec<f64> = tail.iter().map(|p| p.p_db / 10.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.ber().log10()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("tail points share one power".into()));
    }
    Ok(-sxy / sxx)
}
