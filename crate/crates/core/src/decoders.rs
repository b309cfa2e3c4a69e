//! Zero-forcing, exhaustive ML and sphere decoding over real-lifted linear models.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::numerics::{inverse, CMat, C64, J};
use crate::schemes::{symbols_from_p, System, SYMBOL_PLACEMENT};

/// Hypothesis budget of [`ml_enumerate`].
pub const ML_GUARD: f64 = (1u64 << 20) as f64;

/// Relative size below which a QR diagonal entry counts as zero.
const QR_TOL: f64 = 1e-12;

/// A complex symbol whose real and imaginary parts occupy generator columns
/// `re` and `im`, drawn from `alphabet`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSlot {
    pub alphabet: Arc<[C64]>,
    pub re: usize,
    pub im: usize,
}

/// `observation = generator * x + noise` with `x` the stacked real and
/// imaginary parts of the slot symbols. Rows are whitened, so
/// `noise_variance` is the per-real-dimension variance of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLinearModel {
    pub observation: DVector<f64>,
    pub generator: DMatrix<f64>,
    pub slots: Vec<SymbolSlot>,
    pub noise_variance: f64,
}

impl RealLinearModel {
    pub fn new(
        observation: DVector<f64>,
        generator: DMatrix<f64>,
        slots: Vec<SymbolSlot>,
        noise_variance: f64,
    ) -> Result<Self> {
        if observation.len() != generator.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "observation of length {} for a generator with {} rows",
                observation.len(),
                generator.nrows()
            )));
        }
        if generator.ncols() != 2 * slots.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} generator columns for {} symbols",
                generator.ncols(),
                slots.len()
            )));
        }
        let mut seen = vec![false; generator.ncols()];
        for s in &slots {
            for c in [s.re, s.im] {
                if c >= seen.len() || seen[c] {
                    return Err(Error::DimensionMismatch(format!("column {c} assigned twice or out of range")));
                }
                seen[c] = true;
            }
            if s.alphabet.is_empty() {
                return Err(Error::InvalidArgument("empty symbol alphabet".into()));
            }
        }
        Ok(RealLinearModel { observation, generator, slots, noise_variance })
    }

    /// Lifts a complex model. `columns[k] = (a, b)` means symbol `k` contributes
    /// `a * Re(x_k) + b * Im(x_k)`. Row `i` is divided by `sqrt(row_var[i])`.
    pub fn from_complex_parts(
        observation: &DVector<C64>,
        row_var: &[f64],
        columns: &[(DVector<C64>, DVector<C64>)],
        alphabets: Vec<Arc<[C64]>>,
    ) -> Result<Self> {
        let n = observation.len();
        if row_var.len() != n || columns.len() != alphabets.len() {
            return Err(Error::DimensionMismatch("row variances or alphabets do not match".into()));
        }
        if row_var.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument("row variances must be positive".into()));
        }
        let w: Vec<f64> = row_var.iter().map(|v| 1.0 / v.sqrt()).collect();
        let lift = |v: &DVector<C64>| {
            DVector::from_fn(2 * n, |i, _| {
                let z = v[i / 2] * w[i / 2];
                if i % 2 == 0 {
                    z.re
                } else {
                    z.im
                }
            })
        };
        let mut g = DMatrix::zeros(2 * n, 2 * columns.len());
        for (k, (a, b)) in columns.iter().enumerate() {
            if a.len() != n || b.len() != n {
                return Err(Error::DimensionMismatch(format!("column {k} has the wrong length")));
            }
            g.set_column(2 * k, &lift(a));
            g.set_column(2 * k + 1, &lift(b));
        }
        let slots = alphabets
            .into_iter()
            .enumerate()
            .map(|(k, alphabet)| SymbolSlot { alphabet, re: 2 * k, im: 2 * k + 1 })
            .collect();
        RealLinearModel::new(lift(observation), g, slots, 0.5)
    }

    /// Model for `observation = generator * x` with complex unknowns `x`.
    pub fn from_complex(
        observation: &DVector<C64>,
        row_var: &[f64],
        generator: &CMat,
        alphabets: Vec<Arc<[C64]>>,
    ) -> Result<Self> {
        let cols: Vec<_> = (0..generator.ncols())
            .map(|k| {
                let c = generator.column(k).into_owned();
                let jc = c.map(|z| z * J);
                (c, jc)
            })
            .collect();
        Self::from_complex_parts(observation, row_var, &cols, alphabets)
    }

    /// Real vector for the given per-slot alphabet indices.
    pub fn point(&self, labels: &[usize]) -> DVector<f64> {
        let mut x = DVector::zeros(self.generator.ncols());
        for (s, &l) in self.slots.iter().zip(labels) {
            let u = s.alphabet[l];
            x[s.re] = u.re;
            x[s.im] = u.im;
        }
        x
    }

    /// `||y - G x||^2`.
    pub fn metric(&self, labels: &[usize]) -> f64 {
        (&self.observation - &self.generator * self.point(labels)).norm_squared()
    }

    pub fn hypotheses(&self) -> f64 {
        self.slots.iter().map(|s| s.alphabet.len() as f64).product()
    }
}

/// Decoded alphabet indices, the matching symbols and the residual metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub labels: Vec<usize>,
    pub symbols: Vec<C64>,
    pub metric: f64,
}

fn decision(model: &RealLinearModel, labels: Vec<usize>) -> Decision {
    let symbols = model.slots.iter().zip(&labels).map(|(s, &l)| s.alphabet[l]).collect();
    let metric = model.metric(&labels);
    Decision { labels, symbols, metric }
}

/// Stacked model of both R and S systems at one receiver: twelve symbols,
/// `x^1..x^6` of the first transmitter then of the second. `r` and `s` must
/// already include the power scaling.
#[allow(clippy::too_many_arguments)]
pub fn build_real_model(
    r: &CMat,
    s: &CMat,
    constellation: &Constellation,
    r_obs: &DVector<C64>,
    s_obs: &DVector<C64>,
    r_var: &[f64],
    s_var: &[f64],
) -> Result<RealLinearModel> {
    if r.shape() != (6, 6) || s.shape() != (6, 6) || r_obs.len() != 6 || s_obs.len() != 6 {
        return Err(Error::DimensionMismatch("R and S systems must be 6x6 with 6 observations".into()));
    }
    let obs = DVector::from_iterator(12, r_obs.iter().chain(s_obs.iter()).copied());
    let var: Vec<f64> = r_var.iter().chain(s_var).copied().collect();
    let column = |sys: System, c: usize, factor: C64| {
        DVector::from_fn(12, |i, _| match (sys, i < 6) {
            (System::R, true) => r[(i, c)] * factor,
            (System::S, false) => s[(i - 6, c)] * factor,
            _ => C64::new(0.0, 0.0),
        })
    };
    let mut cols = Vec::with_capacity(12);
    for tx in 0..2 {
        for &((rs, rc), (is, ic)) in &SYMBOL_PLACEMENT {
            cols.push((column(rs, 3 * tx + rc, C64::new(1.0, 0.0)), column(is, 3 * tx + ic, J)));
        }
    }
    let alphabet: Arc<[C64]> = constellation.points().into();
    RealLinearModel::from_complex_parts(&obs, &var, &cols, vec![alphabet; 12])
}

/// Symbol-by-symbol zero forcing of both systems: `p = R^{-1} y`, `p' = S^{-1} y'`,
/// reassembled into the twelve source symbols.
pub fn zf_decode(r: &CMat, s: &CMat, r_obs: &DVector<C64>, s_obs: &DVector<C64>) -> Result<Vec<C64>> {
    let inv = |m: &CMat| {
        inverse(m).map_err(|e| match e {
            Error::SingularMatrix { ratio } => {
                Error::ChannelDegenerate(format!("effective matrix is singular (ratio {ratio:e})"))
            }
            other => other,
        })
    };
    let pr = inv(r)? * r_obs;
    let ps = inv(s)? * s_obs;
    let mut out = symbols_from_p(&pr.as_slice()[0..3], &ps.as_slice()[0..3]);
    out.extend(symbols_from_p(&pr.as_slice()[3..6], &ps.as_slice()[3..6]));
    Ok(out)
}

/// Exhaustive ML. Hypotheses are visited in lexicographic label order and only
/// a strictly smaller metric replaces the incumbent.
pub fn ml_enumerate(model: &RealLinearModel) -> Result<Decision> {
    let size = model.hypotheses();
    if size > ML_GUARD {
        return Err(Error::SearchSpaceTooLarge { size, limit: ML_GUARD });
    }
    let n = model.slots.len();
    // Per-slot contribution of every alphabet point.
    let contrib: Vec<Vec<DVector<f64>>> = model
        .slots
        .iter()
        .map(|s| {
            let gr = model.generator.column(s.re);
            let gi = model.generator.column(s.im);
            s.alphabet.iter().map(|u| gr * u.re + gi * u.im).collect()
        })
        .collect();
    let mut labels = vec![0usize; n];
    let mut best_labels = labels.clone();
    let mut best = f64::INFINITY;
    let mut resid = model.observation.clone();
    loop {
        resid.copy_from(&model.observation);
        for (k, &l) in labels.iter().enumerate() {
            resid -= &contrib[k][l];
        }
        let m = resid.norm_squared();
        if m < best {
            best = m;
            best_labels.copy_from_slice(&labels);
        }
        // odometer, last slot fastest
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(decision(model, best_labels));
            }
            k -= 1;
            labels[k] += 1;
            if labels[k] < model.slots[k].alphabet.len() {
                break;
            }
            labels[k] = 0;
        }
    }
}

/// A QR-factored generator, reusable for any observation of the same model.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    slots: Vec<SymbolSlot>,
    /// Upper-triangular factor over slot-ordered columns `(re_0, im_0, re_1, ...)`.
    r: DMatrix<f64>,
    q_t: DMatrix<f64>,
}

impl PreparedModel {
    pub fn new(generator: &DMatrix<f64>, slots: &[SymbolSlot]) -> Result<Self> {
        let n = 2 * slots.len();
        if generator.ncols() != n || generator.nrows() < n {
            return Err(Error::RankDeficientGenerator);
        }
        let mut g = DMatrix::zeros(generator.nrows(), n);
        for (k, s) in slots.iter().enumerate() {
            g.set_column(2 * k, &generator.column(s.re));
            g.set_column(2 * k + 1, &generator.column(s.im));
        }
        let qr = g.qr();
        let r = qr.r();
        let q_t = qr.q().transpose();
        let scale = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if !(scale > 0.0) || (0..n).any(|i| r[(i, i)].abs() <= QR_TOL * scale) {
            return Err(Error::RankDeficientGenerator);
        }
        Ok(PreparedModel { slots: slots.to_vec(), r, q_t })
    }

    /// Exact ML decision for `model`, which must share this generator.
    pub fn decode(&self, model: &RealLinearModel) -> Decision {
        let z = &self.q_t * &model.observation;
        let n = self.slots.len();
        let mut search = Search {
            r: &self.r,
            z: &z,
            slots: &self.slots,
            x: vec![0.0; 2 * n],
            labels: vec![0; n],
            best: f64::INFINITY,
            best_labels: vec![0; n],
            order: self.slots.iter().map(|s| Vec::with_capacity(s.alphabet.len())).collect(),
        };
        search.descend(n, 0.0);
        decision(model, search.best_labels)
    }
}

struct Search<'a> {
    r: &'a DMatrix<f64>,
    z: &'a DVector<f64>,
    slots: &'a [SymbolSlot],
    x: Vec<f64>,
    labels: Vec<usize>,
    best: f64,
    best_labels: Vec<usize>,
    order: Vec<Vec<(f64, usize)>>,
}

impl Search<'_> {
    /// Decides slot `level - 1` given all higher slots.
    fn descend(&mut self, level: usize, partial: f64) {
        if level == 0 {
            if partial < self.best || (partial == self.best && self.labels < self.best_labels) {
                self.best = partial;
                self.best_labels.copy_from_slice(&self.labels);
            }
            return;
        }
        let k = level - 1;
        let (a, b) = (2 * k, 2 * k + 1);
        let n = self.x.len();
        let mut ta = self.z[a];
        let mut tb = self.z[b];
        for c in b + 1..n {
            ta -= self.r[(a, c)] * self.x[c];
            tb -= self.r[(b, c)] * self.x[c];
        }
        let (raa, rab, rbb) = (self.r[(a, a)], self.r[(a, b)], self.r[(b, b)]);
        let mut order = std::mem::take(&mut self.order[k]);
        order.clear();
        for (l, u) in self.slots[k].alphabet.iter().enumerate() {
            let ea = ta - raa * u.re - rab * u.im;
            let eb = tb - rbb * u.im;
            order.push((ea * ea + eb * eb, l));
        }
        order.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        for &(inc, l) in &order {
            let m = partial + inc;
            if m > self.best {
                break;
            }
            let u = self.slots[k].alphabet[l];
            self.x[a] = u.re;
            self.x[b] = u.im;
            self.labels[k] = l;
            self.descend(k, m);
        }
        self.order[k] = order;
    }
}

/// Depth-first Schnorr-Euchner search over per-symbol alphabets: exact ML.
pub fn sphere_decode(model: &RealLinearModel) -> Result<Decision> {
    Ok(PreparedModel::new(&model.generator, &model.slots)?.decode(model))
}

/// Nearest alphabet point to each estimate.
pub fn slice(estimates: &[C64], alphabet: &[C64]) -> Vec<usize> {
    estimates
        .iter()
        .map(|e| {
            let mut best = 0;
            for (l, u) in alphabet.iter().enumerate() {
                if (e - u).norm_sqr() < (e - alphabet[best]).norm_sqr() {
                    best = l;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{awgn, SimRng};
    use crate::constellation::Constellation;

    fn qpsk() -> Arc<[C64]> {
        Constellation::make_qam(4, 0.3).unwrap().points().into()
    }

    fn random_model(rng: &mut SimRng, rows: usize, n: usize, noise: f64) -> (RealLinearModel, Vec<usize>) {
        let a = qpsk();
        let g = awgn(rng, rows, n, 1.0);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(a.len())).collect();
        let x = DVector::from_iterator(n, labels.iter().map(|&l| a[l]));
        let y = &g * x + awgn(rng, rows, 1, noise).column(0);
        let m = RealLinearModel::from_complex(&y, &vec![1.0; rows], &g, vec![a; n]).unwrap();
        (m, labels)
    }

    #[test]
    fn noiseless_recovers_symbols() {
        let mut rng = SimRng::new(1);
        let (m, labels) = random_model(&mut rng, 4, 4, 0.0);
        let d = sphere_decode(&m).unwrap();
        assert_eq!(d.labels, labels);
        assert!(d.metric < 1e-20);
        assert_eq!(ml_enumerate(&m).unwrap().labels, labels);
    }

    #[test]
    fn sphere_matches_enumeration() {
        let mut rng = SimRng::new(2);
        for noise in [0.1, 1.0, 10.0] {
            for _ in 0..100 {
                let (m, _) = random_model(&mut rng, 4, 4, noise);
                let a = sphere_decode(&m).unwrap();
                let b = ml_enumerate(&m).unwrap();
                assert_eq!(a.labels, b.labels);
                assert_eq!(a.metric, b.metric);
            }
        }
    }

    #[test]
    fn single_symbol_nearest() {
        let a: Arc<[C64]> = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)].into();
        let g = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        let y = DVector::from_element(1, C64::new(0.2, 0.0));
        let m = RealLinearModel::from_complex(&y, &[1.0], &g, vec![a]).unwrap();
        assert_eq!(ml_enumerate(&m).unwrap().labels, vec![0]);
        assert_eq!(sphere_decode(&m).unwrap().labels, vec![0]);
    }

    #[test]
    fn ties_resolve_to_smallest_labels() {
        let a: Arc<[C64]> = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)].into();
        let g = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        let y = DVector::from_element(1, C64::new(0.0, 0.0));
        let m = RealLinearModel::from_complex(&y, &[1.0], &g, vec![a]).unwrap();
        assert_eq!(ml_enumerate(&m).unwrap().labels, vec![0]);
        assert_eq!(sphere_decode(&m).unwrap().labels, vec![0]);
    }

    #[test]
    fn guard_and_rank_errors() {
        let a = qpsk();
        let g = CMat::from_element(12, 11, C64::new(1.0, 0.0));
        let y = DVector::zeros(12);
        let m = RealLinearModel::from_complex(&y, &[1.0; 12], &g, vec![a.clone(); 11]).unwrap();
        assert!(matches!(ml_enumerate(&m), Err(Error::SearchSpaceTooLarge { .. })));
        assert!(matches!(sphere_decode(&m), Err(Error::RankDeficientGenerator)));
        let m = RealLinearModel::from_complex(&DVector::zeros(2), &[1.0; 2], &CMat::zeros(2, 1), vec![a]).unwrap();
        assert!(matches!(sphere_decode(&m), Err(Error::RankDeficientGenerator)));
    }

    #[test]
    fn global_phase_equivariance() {
        let mut rng = SimRng::new(3);
        let a = qpsk();
        for _ in 0..50 {
            let g = awgn(&mut rng, 3, 3, 1.0);
            let y = awgn(&mut rng, 3, 1, 2.0).column(0).into_owned();
            let rot = crate::numerics::cis(1.1);
            let m1 = RealLinearModel::from_complex(&y, &[1.0; 3], &g, vec![a.clone(); 3]).unwrap();
            let m2 = RealLinearModel::from_complex(&(&y * rot), &[1.0; 3], &(&g * rot), vec![a.clone(); 3]).unwrap();
            assert_eq!(sphere_decode(&m1).unwrap().labels, sphere_decode(&m2).unwrap().labels);
        }
    }

    #[test]
    fn malformed_models_rejected() {
        let a = qpsk();
        let g = DMatrix::zeros(4, 4);
        let bad = vec![
            SymbolSlot { alphabet: a.clone(), re: 0, im: 1 },
            SymbolSlot { alphabet: a, re: 1, im: 2 },
        ];
        assert!(RealLinearModel::new(DVector::zeros(4), g, bad, 0.5).is_err());
    }

    #[test]
    fn slicing_picks_nearest() {
        let a = qpsk();
        let est: Vec<C64> = a.iter().map(|u| u * 1.1).collect();
        assert_eq!(slice(&est, &a), vec![0, 1, 2, 3]);
    }
}
