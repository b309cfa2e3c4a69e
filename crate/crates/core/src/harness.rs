//! Seeded Monte-Carlo BER experiments, verification suites and CSV output.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{certificate_values, rank_search, BerCurve, BerPoint, RANK_SEARCH_LIMIT};
use crate::channel::{awgn, sample_channel, ChannelRealization, SimRng, MAX_CHANNEL_ATTEMPTS};
use crate::constellation::{hamming, Constellation, ConstellationKind};
use crate::decoders::{build_real_model, ml_enumerate, sphere_decode, RealLinearModel};
use crate::error::{Error, Result};
use crate::numerics::{frobenius, numeric_rank, CMat, C64};
use crate::schemes::{
    block_extend, cancel_rx1, cancel_rx2, cancelled_noise_variance, effective_channels, effective_matrices,
    js3_generator, js3_precoders, js3_receive, js3_transmit, ljj2_pipeline, ljj3_precoders, ljj_transmit,
    minkowski_alphabet, propagate, split_observation, zero_messages, JsPrecoders, Messages, SchemeId,
    LJJ_POWER_SPLIT,
};
use crate::stbc::{
    alamouti_code, proposed_3tx_code, sr_4tx_code, verify_column_cancellation, ColumnCancellation, Destination,
    LinearDispersionCode,
};

/// `tan^{-1}(2) / 2`, the rotation giving QPSK a nonzero coordinate product distance.
pub fn reference_phi() -> f64 {
    2f64.atan() / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scheme: SchemeId,
    pub constellation: ConstellationKind,
    pub rotation_phi: f64,
    pub theta: f64,
    pub p_db_list: Vec<f64>,
    pub target_bit_errors: u64,
    pub max_trials_per_point: u64,
    pub seed: u64,
    pub workers: usize,
    /// Skip the noise; every trial should decode without error.
    pub noiseless: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scheme: SchemeId::Ljj3,
            constellation: ConstellationKind::Qpsk,
            rotation_phi: 0.0,
            theta: std::f64::consts::FRAC_PI_4,
            p_db_list: vec![16.0, 20.0, 24.0, 28.0],
            target_bit_errors: 200,
            max_trials_per_point: 5_000_000,
            seed: 0,
            workers: 1,
            noiseless: false,
        }
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.p_db_list.is_empty() {
            return bad("p_db_list is empty".into());
        }
        if self.p_db_list.iter().any(|p| !p.is_finite()) || self.p_db_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("p_db_list must be finite and strictly ascending: {:?}", self.p_db_list));
        }
        if self.target_bit_errors == 0 {
            return bad("target_bit_errors must be at least 1".into());
        }
        if self.max_trials_per_point == 0 {
            return bad("max_trials_per_point must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !self.theta.is_finite() || !self.rotation_phi.is_finite() {
            return bad("theta and rotation_phi must be finite".into());
        }
        Ok(())
    }

    /// `(theta, phi)` after scheme-specific pinning.
    pub fn effective_angles(&self) -> (f64, f64) {
        self.scheme.effective_angles(self.theta, self.rotation_phi)
    }

    pub fn bits_per_trial(&self) -> u64 {
        let bits = self.constellation.order().trailing_zeros() as u64;
        4 * self.scheme.symbols_per_message() as u64 * bits
    }
}

/// Everything a trial needs that does not change between trials.
#[derive(Debug, Clone)]
pub struct TrialRunner {
    scheme: SchemeId,
    constellation: Constellation,
    alphabet: Arc<[C64]>,
    code: Option<LinearDispersionCode>,
    noise_var: [Option<nalgebra::DMatrix<f64>>; 2],
    theta: f64,
    p: f64,
    noiseless: bool,
}

impl TrialRunner {
    pub fn new(cfg: &SimConfig, p_db: f64) -> Result<Self> {
        let (theta, phi) = cfg.effective_angles();
        let constellation = Constellation::new(cfg.constellation, phi)?;
        let code = match cfg.scheme {
            SchemeId::Ljj3 | SchemeId::Ar => Some(proposed_3tx_code(theta)),
            SchemeId::Ljj2 => Some(alamouti_code()),
            SchemeId::Js3 => None,
        };
        let noise_var = match (&code, cfg.scheme) {
            (Some(c), SchemeId::Ljj3 | SchemeId::Ar) => [
                Some(cancelled_noise_variance(c, Destination::Rx1)?),
                Some(cancelled_noise_variance(c, Destination::Rx2)?),
            ],
            _ => [None, None],
        };
        Ok(TrialRunner {
            scheme: cfg.scheme,
            alphabet: constellation.points().into(),
            constellation,
            code,
            noise_var,
            theta,
            p: 10f64.powf(p_db / 10.0),
            noiseless: cfg.noiseless,
        })
    }

    fn draw_labels(&self, rng: &mut SimRng) -> [[Vec<usize>; 2]; 2] {
        let n = self.scheme.symbols_per_message();
        let q = self.alphabet.len();
        let mut d = || (0..n).map(|_| rng.below(q)).collect::<Vec<_>>();
        [[d(), d()], [d(), d()]]
    }

    fn to_symbols(&self, labels: &[[Vec<usize>; 2]; 2]) -> Messages {
        let s = |v: &Vec<usize>| v.iter().map(|&l| self.alphabet[l]).collect::<Vec<_>>();
        [[s(&labels[0][0]), s(&labels[0][1])], [s(&labels[1][0]), s(&labels[1][1])]]
    }

    fn errors(&self, decided: &[usize], labels: &[[Vec<usize>; 2]; 2], j: usize) -> u64 {
        let n = self.scheme.symbols_per_message();
        let want = labels[0][j].iter().chain(&labels[1][j]);
        decided[..2 * n].iter().zip(want).map(|(&a, &b)| hamming(a, b) as u64).sum()
    }

    /// Bit errors of one frame drawn from `rng`, over all four messages.
    pub fn run(&self, rng: &mut SimRng) -> Result<u64> {
        match self.scheme {
            SchemeId::Ljj3 | SchemeId::Ar => self.run_ljj3(rng),
            SchemeId::Ljj2 => self.run_ljj2(rng),
            SchemeId::Js3 => self.run_js3(rng),
        }
    }

    fn noise(&self, rng: &mut SimRng, rows: usize, cols: usize) -> Option<[CMat; 2]> {
        if self.noiseless {
            None
        } else {
            Some([awgn(rng, rows, cols, 1.0), awgn(rng, rows, cols, 1.0)])
        }
    }

    fn run_ljj3(&self, rng: &mut SimRng) -> Result<u64> {
        let code = self.code.as_ref().expect("ljj3 code");
        let ch = sample_channel(rng, 3)?;
        let labels = self.draw_labels(rng);
        let msgs = self.to_symbols(&labels);
        let prec = ljj3_precoders(&ch)?;
        let tx = ljj_transmit(code, &prec, &msgs)?;
        let noise = self.noise(rng, 3, 6);
        let y = propagate(&ch, &tx, self.p, noise.as_ref());
        let k = C64::from((LJJ_POWER_SPLIT * self.p).sqrt());
        let mut errors = 0;
        for (j, dest) in [Destination::Rx1, Destination::Rx2].into_iter().enumerate() {
            let yp = match dest {
                Destination::Rx1 => cancel_rx1(&y[j], code)?,
                Destination::Rx2 => cancel_rx2(&y[j], code)?,
            };
            let obs = split_observation(&yp, self.noise_var[j].as_ref().expect("ljj3 variances"), self.theta);
            let (h, g) = effective_channels(&ch, &prec, dest);
            let (r, s) = effective_matrices(&h, &g, self.theta);
            let model = build_real_model(
                &(r * k),
                &(s * k),
                &self.constellation,
                &obs.r_obs,
                &obs.s_obs,
                &obs.r_var,
                &obs.s_var,
            )?;
            errors += self.errors(&sphere_decode(&model)?.labels, &labels, j);
        }
        Ok(errors)
    }

    fn run_ljj2(&self, rng: &mut SimRng) -> Result<u64> {
        let code = self.code.as_ref().expect("alamouti code");
        let ch = sample_channel(rng, 2)?;
        let labels = self.draw_labels(rng);
        let msgs = self.to_symbols(&labels);
        let prec = ljj3_precoders(&ch)?;
        let tx = ljj_transmit(code, &prec, &msgs)?;
        let noise = self.noise(rng, 2, 3);
        let y = propagate(&ch, &tx, self.p, noise.as_ref());
        let k = C64::from((LJJ_POWER_SPLIT * self.p).sqrt());
        let mut errors = 0;
        for (j, dest) in [Destination::Rx1, Destination::Rx2].into_iter().enumerate() {
            let out = ljj2_pipeline(&ch, &prec, &y[j], dest)?;
            let model = RealLinearModel::from_complex(
                &out.processed,
                &out.noise_variance,
                &(out.r * k),
                vec![self.alphabet.clone(); 4],
            )?;
            errors += self.errors(&sphere_decode(&model)?.labels, &labels, j);
        }
        Ok(errors)
    }

    fn run_js3(&self, rng: &mut SimRng) -> Result<u64> {
        let (ch, prec) = js3_channel(rng)?;
        let labels = self.draw_labels(rng);
        let msgs = self.to_symbols(&labels);
        let tx = js3_transmit(&prec, &msgs)?;
        let noise = if self.noiseless {
            None
        } else {
            let mut v = || DVector::from_fn(9, |_, _| rng.complex_gaussian(1.0));
            Some([v(), v()])
        };
        let y = js3_receive(&ch, &tx, self.p, noise.as_ref());
        let mut errors = 0;
        for (j, dest) in [Destination::Rx1, Destination::Rx2].into_iter().enumerate() {
            let (g, w) = js3_generator(&ch, &prec, dest, self.p);
            let z: Arc<[C64]> = minkowski_alphabet(&self.alphabet, &self.alphabet, w).into();
            let mut alphabets = vec![self.alphabet.clone(); 6];
            alphabets.extend(std::iter::repeat_n(z, 3));
            let model = RealLinearModel::from_complex(&y[j], &[1.0; 9], &g, alphabets)?;
            errors += self.errors(&sphere_decode(&model)?.labels, &labels, j);
        }
        Ok(errors)
    }
}

/// A channel for the JS scheme together with its precoders, redrawing the
/// probability-zero cases of a singular gain or a defective `F`.
pub fn js3_channel(rng: &mut SimRng) -> Result<(ChannelRealization, JsPrecoders)> {
    let mut last = None;
    for _ in 0..MAX_CHANNEL_ATTEMPTS {
        let ch = sample_channel(rng, 3)?;
        match js3_precoders(&ch) {
            Ok(p) => return Ok((ch, p)),
            Err(e @ (Error::DefectiveMatrix(_) | Error::ChannelDegenerate(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ChannelDegenerate(format!("no usable JS channel: {}", last.expect("at least one attempt"))))
}

/// Trials evaluated per worker between stopping-rule checks.
const BATCH_PER_WORKER: u64 = 64;

/// Runs one power point. Trials are scanned in index order and the point stops
/// at the first trial whose cumulative errors reach the target (that trial is
/// counted), so the result does not depend on how batches were scheduled.
pub fn run_point(cfg: &SimConfig, p_db: f64, pool: &rayon::ThreadPool) -> Result<BerPoint> {
    let runner = TrialRunner::new(cfg, p_db)?;
    let stream = p_db.to_bits();
    let batch = BATCH_PER_WORKER * cfg.workers as u64;
    let mut trials = 0u64;
    let mut errors = 0u64;
    'outer: while trials < cfg.max_trials_per_point {
        let end = (trials + batch).min(cfg.max_trials_per_point);
        let counts: Vec<u64> = pool.install(|| {
            (trials..end)
                .into_par_iter()
                .map(|t| runner.run(&mut SimRng::for_trial(cfg.seed, stream, t)))
                .collect::<Result<Vec<u64>>>()
        })?;
        for c in counts {
            trials += 1;
            errors += c;
            if errors >= cfg.target_bit_errors {
                break 'outer;
            }
        }
    }
    Ok(BerPoint { p_db, trials, bit_errors: errors, bits_per_trial: cfg.bits_per_trial() })
}

pub fn run_ber(cfg: &SimConfig) -> Result<BerCurve> {
    run_ber_with(cfg, |_| {})
}

/// [`run_ber`] with a callback after each finished point.
pub fn run_ber_with(cfg: &SimConfig, mut on_point: impl FnMut(&BerPoint)) -> Result<BerCurve> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    let (theta, phi) = cfg.effective_angles();
    let mut points = Vec::with_capacity(cfg.p_db_list.len());
    for &p_db in &cfg.p_db_list {
        let pt = run_point(cfg, p_db, &pool)?;
        on_point(&pt);
        points.push(pt);
    }
    Ok(BerCurve {
        scheme: cfg.scheme.name().to_string(),
        constellation: cfg.constellation.name().to_string(),
        theta,
        phi,
        seed: cfg.seed,
        points,
    })
}

/// `a P^{-order}` through the highest-power point with nonzero BER.
pub fn reference_line(curve: &BerCurve, order: f64) -> Option<Vec<f64>> {
    let anchor = curve.points.iter().rev().find(|p| p.ber() > 0.0)?;
    let a = anchor.ber() * 10f64.powf(order * anchor.p_db / 10.0);
    Some(curve.points.iter().map(|p| a * 10f64.powf(-order * p.p_db / 10.0)).collect())
}

pub const CSV_COLUMNS: &str = "p_db,trials,bit_errors,ber";
const REF_COLUMN: &str = "ref_a_p-3";

/// CSV text: `#` comment lines with the run parameters, then the header row
/// and one row per point. With `reference`, an `a P^{-3}` column is appended.
pub fn emit_csv(curve: &BerCurve, reference: bool) -> Result<String> {
    if curve.points.is_empty() {
        return Err(Error::InsufficientData("empty curve".into()));
    }
    let bits = curve.points[0].bits_per_trial;
    let mut s = String::new();
    let _ = writeln!(s, "# scheme={}", curve.scheme);
    let _ = writeln!(s, "# constellation={}", curve.constellation);
    let _ = writeln!(s, "# theta={}", curve.theta);
    let _ = writeln!(s, "# phi={}", curve.phi);
    let _ = writeln!(s, "# seed={}", curve.seed);
    let _ = writeln!(s, "# bits_per_trial={bits}");
    let refs = if reference { reference_line(curve, 3.0) } else { None };
    s.push_str(CSV_COLUMNS);
    if refs.is_some() {
        s.push(',');
        s.push_str(REF_COLUMN);
    }
    s.push('\n');
    for (i, p) in curve.points.iter().enumerate() {
        let _ = write!(s, "{},{},{},{:e}", p.p_db, p.trials, p.bit_errors, p.ber());
        if let Some(r) = &refs {
            let _ = write!(s, ",{:e}", r[i]);
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn emit_plot_data(curve: &BerCurve, path: &Path, reference: bool) -> Result<()> {
    std::fs::write(path, emit_csv(curve, reference)?)?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<BerCurve> {
    let perr = |m: String| Error::Parse(m);
    let mut curve = BerCurve {
        scheme: String::new(),
        constellation: String::new(),
        theta: 0.0,
        phi: 0.0,
        seed: 0,
        points: Vec::new(),
    };
    let mut bits = None;
    let mut header = false;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(c) = line.strip_prefix('#') {
            let (k, v) = c.trim().split_once('=').ok_or_else(|| perr(format!("bad comment line {line:?}")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|e| perr(format!("{k}: {e}")));
            match k.trim() {
                "scheme" => curve.scheme = v.to_string(),
                "constellation" => curve.constellation = v.to_string(),
                "theta" => curve.theta = num(v)?,
                "phi" => curve.phi = num(v)?,
                "seed" => curve.seed = v.parse().map_err(|e| perr(format!("seed: {e}")))?,
                "bits_per_trial" => bits = Some(v.parse::<u64>().map_err(|e| perr(format!("bits: {e}")))?),
                _ => {}
            }
            continue;
        }
        if !header {
            if !line.starts_with(CSV_COLUMNS) {
                return Err(perr(format!("unexpected header {line:?}")));
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 4 {
            return Err(perr(format!("short row {line:?}")));
        }
        let bits = bits.ok_or_else(|| perr("missing bits_per_trial".into()))?;
        curve.points.push(BerPoint {
            p_db: f[0].parse().map_err(|e| perr(format!("p_db: {e}")))?,
            trials: f[1].parse().map_err(|e| perr(format!("trials: {e}")))?,
            bit_errors: f[2].parse().map_err(|e| perr(format!("bit_errors: {e}")))?,
            bits_per_trial: bits,
        });
    }
    if !header {
        return Err(perr("no header row".into()));
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Cancellation,
    Certificates,
    RankSearch,
    Alignment,
    DecoderEquivalence,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] =
        ["cancellation", "certificates", "rank-search", "alignment", "decoder-equivalence", "all"];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cancellation" => Suite::Cancellation,
            "certificates" => Suite::Certificates,
            "rank-search" => Suite::RankSearch,
            "alignment" => Suite::Alignment,
            "decoder-equivalence" => Suite::DecoderEquivalence,
            "all" => Suite::All,
            _ => return Err(Error::ConfigInvalid(format!("unknown suite {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Random draws per statistical check.
    pub draws: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { draws: 1000, seed: 0 }
    }
}

pub fn run_verify(suite: Suite, opts: VerifyOptions) -> Result<VerifyReport> {
    let mut rep = VerifyReport { checks: Vec::new() };
    let all = suite == Suite::All;
    if all || suite == Suite::Cancellation {
        verify_cancellation(&mut rep, opts)?;
    }
    if all || suite == Suite::Certificates {
        verify_certificates(&mut rep)?;
    }
    if all || suite == Suite::RankSearch {
        verify_rank_search(&mut rep)?;
    }
    if all || suite == Suite::Alignment {
        verify_alignment(&mut rep, opts)?;
    }
    if all || suite == Suite::DecoderEquivalence {
        verify_decoders(&mut rep, opts)?;
    }
    Ok(rep)
}

fn theta_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| 2.0 * std::f64::consts::PI * k as f64 / n as f64)
}

fn random_messages(rng: &mut SimRng, alphabet: &[C64], n: usize) -> Messages {
    let mut d = || (0..n).map(|_| alphabet[rng.below(alphabet.len())]).collect::<Vec<_>>();
    [[d(), d()], [d(), d()]]
}

/// Largest noiseless residual after cancellation with the desired messages
/// silenced, and largest mismatch against the clean desired signal.
pub fn ljj3_nulling_residuals(draws: usize, seed: u64, theta: f64) -> Result<(f64, f64)> {
    let code = proposed_3tx_code(theta);
    let pts = Constellation::make_qam(4, reference_phi())?.points().to_vec();
    let mut rng = SimRng::new(seed);
    let (mut interference, mut mismatch) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let ch = sample_channel(&mut rng, 3)?;
        let prec = ljj3_precoders(&ch)?;
        let msgs = random_messages(&mut rng, &pts, 6);
        let p = 10f64.powf(rng.below(31) as f64 / 10.0);
        let y = propagate(&ch, &ljj_transmit(&code, &prec, &msgs)?, p, None);
        for (j, dest) in [Destination::Rx1, Destination::Rx2].into_iter().enumerate() {
            let cancel = |y: &CMat| match dest {
                Destination::Rx1 => cancel_rx1(y, &code),
                Destination::Rx2 => cancel_rx2(y, &code),
            };
            let mut silent = msgs.clone();
            silent[0][j] = vec![C64::new(0.0, 0.0); 6];
            silent[1][j] = vec![C64::new(0.0, 0.0); 6];
            let yi = propagate(&ch, &ljj_transmit(&code, &prec, &silent)?, p, None);
            interference = interference.max(frobenius(&cancel(&yi[j])?));
            let (h, g) = effective_channels(&ch, &prec, dest);
            let want = (h * code.encode_matrix(&msgs[0][j])? + g * code.encode_matrix(&msgs[1][j])?)
                * C64::from((LJJ_POWER_SPLIT * p).sqrt());
            mismatch = mismatch.max(frobenius(&(cancel(&y[j])? - want)));
        }
    }
    Ok((interference, mismatch))
}

/// The same two residuals for the two-antenna scheme and its zero-forcer.
pub fn ljj2_nulling_residuals(draws: usize, seed: u64) -> Result<(f64, f64)> {
    let code = alamouti_code();
    let pts = Constellation::make_qam(4, 0.0)?.points().to_vec();
    let mut rng = SimRng::new(seed);
    let (mut interference, mut mismatch) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let ch = sample_channel(&mut rng, 2)?;
        let prec = ljj3_precoders(&ch)?;
        let msgs = random_messages(&mut rng, &pts, 2);
        let p = 10f64.powf(rng.below(31) as f64 / 10.0);
        let y = propagate(&ch, &ljj_transmit(&code, &prec, &msgs)?, p, None);
        for (j, dest) in [Destination::Rx1, Destination::Rx2].into_iter().enumerate() {
            let mut silent = msgs.clone();
            silent[0][j] = vec![C64::new(0.0, 0.0); 2];
            silent[1][j] = vec![C64::new(0.0, 0.0); 2];
            let yi = propagate(&ch, &ljj_transmit(&code, &prec, &silent)?, p, None);
            interference = interference.max(ljj2_pipeline(&ch, &prec, &yi[j], dest)?.processed.norm());
            let out = ljj2_pipeline(&ch, &prec, &y[j], dest)?;
            let x = DVector::from_iterator(4, msgs[0][j].iter().chain(&msgs[1][j]).copied());
            let want = &out.r * x * C64::from((LJJ_POWER_SPLIT * p).sqrt());
            mismatch = mismatch.max((out.processed - want).norm());
        }
    }
    Ok((interference, mismatch))
}

fn verify_cancellation(rep: &mut VerifyReport, opts: VerifyOptions) -> Result<()> {
    let thetas: Vec<f64> = theta_grid(16).collect();
    let ok3 = thetas.iter().all(|&t| verify_column_cancellation(&proposed_3tx_code(t)).passed());
    let ok4 = thetas.iter().all(|&t| verify_column_cancellation(&sr_4tx_code(t)).passed());
    rep.push("column-cancellation/proposed-3tx", ok3, "16 theta values".into());
    rep.push("column-cancellation/sr-4tx", ok4, "16 theta values".into());
    let mutated = mutated_code(0.5);
    let v = verify_column_cancellation(&mutated);
    rep.push("column-cancellation/mutated-rejected", !v.passed(), format!("{v:?}"));

    let (i3, m3) = ljj3_nulling_residuals(opts.draws, opts.seed, std::f64::consts::FRAC_PI_4)?;
    rep.push(
        "nulling/ljj3",
        i3 <= 1e-10 && m3 <= 1e-9,
        format!("max residual interference {i3:e}, max output mismatch {m3:e}"),
    );
    let (i2, m2) = ljj2_nulling_residuals(opts.draws, opts.seed)?;
    rep.push(
        "nulling/ljj2",
        i2 <= 1e-10 && m2 <= 1e-9,
        format!("max residual interference {i2:e}, max output mismatch {m2:e}"),
    );
    Ok(())
}

/// The three-antenna code with entry (1,1) negated.
pub fn mutated_code(theta: f64) -> LinearDispersionCode {
    let base = proposed_3tx_code(theta);
    let spec: Vec<ColumnCancellation> = base.cancellation().expect("spec").to_vec();
    LinearDispersionCode::from_layout(base.id(), theta, 3, 4, 6, |x| {
        let mut m = base.encode_matrix(x).expect("six symbols");
        m[(0, 0)] = -m[(0, 0)];
        m
    })
    .with_cancellation(spec)
}

fn verify_certificates(rep: &mut VerifyReport) -> Result<()> {
    let mut worst_r = 0.0f64;
    let mut worst_s = 0.0f64;
    let mut s_fail = Vec::new();
    for t in theta_grid(64) {
        let c = certificate_values(t)?;
        let d = |a: [f64; 2], b: [f64; 2]| (C64::new(a[0], a[1]) - C64::new(b[0], b[1])).norm();
        worst_r = worst_r.max(d(c.det_r, c.expected_r));
        worst_s = worst_s.max(d(c.det_s, c.expected_s));
        if !c.s_pass && s_fail.len() < 2 {
            s_fail.push(format!("theta={t:.4}: det(S)={:?}, want {:?}", c.det_s, c.expected_s));
        }
    }
    rep.push("certificate/det-R", worst_r <= 1e-9, format!("64 theta values, max |det R + 2| = {worst_r:e}"));
    rep.push(
        "certificate/det-S",
        worst_s <= 1e-9,
        format!("64 theta values, max |det S - 3(3-e^(j theta))| = {worst_s:e}; {}", s_fail.join("; ")),
    );
    Ok(())
}

fn verify_rank_search(rep: &mut VerifyReport) -> Result<()> {
    let rotated = Constellation::make_qam(4, reference_phi())?;
    let r = rank_search(&proposed_3tx_code(std::f64::consts::FRAC_PI_4), &rotated, RANK_SEARCH_LIMIT)?;
    rep.push(
        "rank-search/rotated-qpsk",
        r.passed(),
        format!("{} differences, min sigma ratio {:e}, {} rank deficient", r.pairs_checked, r.min_singular_ratio, r.failure_count),
    );
    let plain = Constellation::make_qam(4, 0.0)?;
    let a = rank_search(&proposed_3tx_code(0.0), &plain, RANK_SEARCH_LIMIT)?;
    rep.push(
        "rank-search/ar-has-deficient",
        !a.passed(),
        format!("{} of {} differences rank deficient", a.failure_count, a.pairs_checked),
    );
    Ok(())
}

/// Largest alignment residual and the largest interference rank seen at Rx-1.
pub fn js3_alignment_stats(draws: usize, seed: u64) -> Result<(f64, usize, usize)> {
    let mut rng = SimRng::new(seed);
    let pts = Constellation::make_qam(4, 0.0)?.points().to_vec();
    let (mut resid, mut rmin, mut rmax) = (0.0f64, usize::MAX, 0);
    for _ in 0..draws {
        let (ch, prec) = js3_channel(&mut rng)?;
        let h = |i: usize, j: usize| block_extend(&ch.h[i][j]);
        let a = frobenius(&(h(1, 1) * &prec.v[1][0] - h(0, 1) * &prec.v[0][0]));
        let b = frobenius(&(h(1, 0) * &prec.v[1][1] - h(0, 0) * &prec.v[0][1]));
        resid = resid.max(a.max(b));
        // interference-only receptions at Rx-1, stacked as columns
        let mut stack = CMat::zeros(9, 24);
        for c in 0..24 {
            let mut m = zero_messages(SchemeId::Js3);
            m[0][1] = (0..3).map(|_| pts[rng.below(4)]).collect();
            m[1][1] = (0..3).map(|_| pts[rng.below(4)]).collect();
            let y = js3_receive(&ch, &js3_transmit(&prec, &m)?, 1.0, None);
            stack.set_column(c, &y[0]);
        }
        let rank = numeric_rank(&stack, 1e-8)?;
        rmin = rmin.min(rank);
        rmax = rmax.max(rank);
    }
    Ok((resid, rmin, rmax))
}

fn verify_alignment(rep: &mut VerifyReport, opts: VerifyOptions) -> Result<()> {
    let (resid, rmin, rmax) = js3_alignment_stats(opts.draws, opts.seed)?;
    rep.push("alignment/js3-identities", resid <= 1e-8, format!("max residual {resid:e}"));
    rep.push(
        "alignment/js3-interference-rank",
        rmin == 3 && rmax == 3,
        format!("interference rank in [{rmin}, {rmax}]"),
    );
    Ok(())
}

/// Decision and metric agreement between sphere decoding and enumeration on
/// reduced noisy models (four QPSK symbols over four receive dimensions).
pub fn decoder_agreement(draws: usize, seed: u64) -> Result<(usize, f64)> {
    let mut rng = SimRng::new(seed);
    let a: Arc<[C64]> = Constellation::make_qam(4, reference_phi())?.points().into();
    let mut mismatched = 0;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let g = awgn(&mut rng, 4, 4, 1.0) * C64::from(10.0);
        let x = DVector::from_fn(4, |_, _| a[rng.below(4)]);
        let y = &g * x + awgn(&mut rng, 4, 1, 1.0).column(0);
        let m = RealLinearModel::from_complex(&y, &[1.0; 4], &g, vec![a.clone(); 4])?;
        let s = sphere_decode(&m)?;
        let e = ml_enumerate(&m)?;
        mismatched += (s.labels != e.labels) as usize;
        worst = worst.max((s.metric - e.metric).abs());
    }
    Ok((mismatched, worst))
}

fn verify_decoders(rep: &mut VerifyReport, opts: VerifyOptions) -> Result<()> {
    let (mismatched, worst) = decoder_agreement(opts.draws, opts.seed)?;
    rep.push(
        "decoders/sphere-equals-enumeration",
        mismatched == 0 && worst == 0.0,
        format!("{mismatched} of {} decisions differ, max metric gap {worst:e}", opts.draws),
    );
    Ok(())
}

/// Noiseless zero-forcing recovery of both messages intended for `dest`.
pub fn ljj3_zf_roundtrip(
    ch: &ChannelRealization,
    msgs: &Messages,
    theta: f64,
    p: f64,
    dest: Destination,
) -> Result<f64> {
    let code = proposed_3tx_code(theta);
    let prec = ljj3_precoders(ch)?;
    let y = propagate(ch, &ljj_transmit(&code, &prec, msgs)?, p, None);
    let j = match dest {
        Destination::Rx1 => 0,
        Destination::Rx2 => 1,
    };
    let yp = match dest {
        Destination::Rx1 => cancel_rx1(&y[0], &code)?,
        Destination::Rx2 => cancel_rx2(&y[1], &code)?,
    };
    let var = cancelled_noise_variance(&code, dest)?;
    let obs = split_observation(&yp, &var, theta);
    let (h, g) = effective_channels(ch, &prec, dest);
    let (r, s) = effective_matrices(&h, &g, theta);
    let k = C64::from((LJJ_POWER_SPLIT * p).sqrt());
    let est = crate::decoders::zf_decode(&(r * k), &(s * k), &obs.r_obs, &obs.s_obs)?;
    let want: Vec<C64> = msgs[0][j].iter().chain(&msgs[1][j]).copied().collect();
    Ok(est.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}
