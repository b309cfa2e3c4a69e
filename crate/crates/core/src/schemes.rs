//! End-to-end transmit and receive pipelines: the extended LJJ scheme for
//! three antennas (and its AR special case), the two-antenna LJJ scheme, and
//! the JS alignment scheme over a three-slot extension.
//!
//! Messages are indexed `msgs[i][j]` for transmitter `i` and destination `j`
//! (both zero-based). The transmit routines return unit-power-scaled matrices;
//! [`propagate`] applies `sqrt(P)`, the channel and the noise.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{cis, eig_general, frobenius, inverse, kron, CMat, C64, ZERO};
use crate::stbc::{
    interleave_zero_columns, proposed_3tx_code, Destination, LinearDispersionCode,
};

/// Power split `c1 = c2` between the two superposed codewords of the LJJ family.
pub const LJJ_POWER_SPLIT: f64 = 0.75;

/// Power scale `3/2` of the JS scheme.
pub const JS_POWER_SCALE: f64 = 1.5;

pub type Messages = [[Vec<C64>; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    Ljj3,
    Ar,
    Ljj2,
    Js3,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [SchemeId::Ljj3, SchemeId::Ar, SchemeId::Ljj2, SchemeId::Js3];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Ljj3 => "ljj3",
            SchemeId::Ar => "ar",
            SchemeId::Ljj2 => "ljj2",
            SchemeId::Js3 => "js3",
        }
    }

    pub fn antennas(self) -> usize {
        match self {
            SchemeId::Ljj2 => 2,
            _ => 3,
        }
    }

    /// Complex symbols carried by each of the four messages per frame.
    pub fn symbols_per_message(self) -> usize {
        match self {
            SchemeId::Ljj3 | SchemeId::Ar => 6,
            SchemeId::Ljj2 => 2,
            SchemeId::Js3 => 3,
        }
    }

    /// Channel uses per frame.
    pub fn slots(self) -> usize {
        match self {
            SchemeId::Ljj3 | SchemeId::Ar => 6,
            SchemeId::Ljj2 | SchemeId::Js3 => 3,
        }
    }

    /// `(theta, phi)` actually used: AR pins both to zero.
    pub fn effective_angles(self, theta: f64, phi: f64) -> (f64, f64) {
        match self {
            SchemeId::Ar => (0.0, 0.0),
            _ => (theta, phi),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ljj3" => Ok(SchemeId::Ljj3),
            "ar" => Ok(SchemeId::Ar),
            "ljj2" => Ok(SchemeId::Ljj2),
            "js3" => Ok(SchemeId::Js3),
            _ => Err(Error::ConfigInvalid(format!("unknown scheme {s:?}"))),
        }
    }
}

fn degenerate(e: Error) -> Error {
    match e {
        Error::SingularMatrix { ratio } => {
            Error::ChannelDegenerate(format!("singular gain (sigma ratio {ratio:e})"))
        }
        other => other,
    }
}

/// `v[i][j]` precodes the message from Tx-`i` to Rx-`j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoders {
    pub v: [[CMat; 2]; 2],
}

/// `H^{-1} / ||H^{-1}||_F`.
fn normalized_inverse(h: &CMat) -> Result<CMat> {
    let inv = inverse(h).map_err(degenerate)?;
    let n = frobenius(&inv);
    Ok(inv.map(|z| z / n))
}

/// LJJ precoders: the message for Rx-`j` is precoded with the normalized
/// inverse of the gain towards the other receiver, so it arrives there as a
/// scalar multiple of the raw codeword. Valid for any antenna count.
pub fn ljj3_precoders(ch: &ChannelRealization) -> Result<Precoders> {
    let v = |i: usize, j: usize| normalized_inverse(&ch.h[i][1 - j]);
    Ok(Precoders { v: [[v(0, 0)?, v(0, 1)?], [v(1, 0)?, v(1, 1)?]] })
}

/// `X_i = sqrt(c) (V_i1 X_i1 + V_i2 X_i2)` with each `X_ij` the encoded
/// message interleaved with zero columns for its destination.
pub fn ljj_transmit(code: &LinearDispersionCode, prec: &Precoders, msgs: &Messages) -> Result<[CMat; 2]> {
    let dests = [Destination::Rx1, Destination::Rx2];
    let tx = |i: usize| -> Result<CMat> {
        let mut x: Option<CMat> = None;
        for (j, dest) in dests.iter().enumerate() {
            let c = interleave_zero_columns(&code.encode_matrix(&msgs[i][j])?, *dest)?;
            let term = &prec.v[i][j] * c;
            x = Some(match x {
                Some(acc) => acc + term,
                None => term,
            });
        }
        Ok(x.expect("two destinations") * C64::from(LJJ_POWER_SPLIT.sqrt()))
    };
    Ok([tx(0)?, tx(1)?])
}

pub fn ljj3_transmit(prec: &Precoders, msgs: &Messages, theta: f64) -> Result<[CMat; 2]> {
    ljj_transmit(&proposed_3tx_code(theta), prec, msgs)
}

/// `Y_j = sqrt(P) sum_i H_ij X_i + N_j`.
pub fn propagate(ch: &ChannelRealization, x: &[CMat; 2], p: f64, noise: Option<&[CMat; 2]>) -> [CMat; 2] {
    let s = C64::from(p.sqrt());
    let rx = |j: usize| {
        let mut y = (&ch.h[0][j] * &x[0] + &ch.h[1][j] * &x[1]) * s;
        if let Some(n) = noise {
            y += &n[j];
        }
        y
    };
    [rx(0), rx(1)]
}

fn cancellation_spec(code: &LinearDispersionCode) -> Result<&[crate::stbc::ColumnCancellation]> {
    code.cancellation()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no cancellation maps", code.id().name())))
}

fn check_received(y: &CMat, code: &LinearDispersionCode) -> Result<()> {
    let want = (code.m(), 3 * code.t_prime() / 2);
    if y.shape() != want {
        return Err(Error::DimensionMismatch(format!("received {:?}, expected {want:?}", y.shape())));
    }
    Ok(())
}

/// Interference cancellation at Rx-1. Desired columns sit at `3k, 3k+1`;
/// interference occupies `3k+1, 3k+2`, with `3k+2` holding only interference.
/// `Y'(:,2k) = Y(:,3k)` and `Y'(r,2k+1) = Y(r,3k+1) + alpha_r conj(Y(perm_r,3k+2))`.
pub fn cancel_rx1(y: &CMat, code: &LinearDispersionCode) -> Result<CMat> {
    check_received(y, code)?;
    let spec = cancellation_spec(code)?;
    let mut out = CMat::zeros(code.m(), code.t_prime());
    for s in spec {
        let k = s.column / 2;
        for r in 0..code.m() {
            out[(r, 2 * k)] = y[(r, 3 * k)];
            out[(r, 2 * k + 1)] = y[(r, 3 * k + 1)] + s.alpha[r] * y[(s.perm[r], 3 * k + 2)].conj();
        }
    }
    Ok(out)
}

/// Interference cancellation at Rx-2. Column `3k` holds only interference;
/// inverting the conjugate-linear maps predicts the interference in `3k+1`:
/// `Y'(perm_r,2k) = Y(perm_r,3k+1) + conj(Y(r,3k)) / conj(alpha_r)`, `Y'(:,2k+1) = Y(:,3k+2)`.
pub fn cancel_rx2(y: &CMat, code: &LinearDispersionCode) -> Result<CMat> {
    check_received(y, code)?;
    let spec = cancellation_spec(code)?;
    let mut out = CMat::zeros(code.m(), code.t_prime());
    for s in spec {
        let k = s.column / 2;
        for r in 0..code.m() {
            let q = s.perm[r];
            out[(q, 2 * k)] = y[(q, 3 * k + 1)] + y[(r, 3 * k)].conj() / s.alpha[r].conj();
            out[(r, 2 * k + 1)] = y[(r, 3 * k + 2)];
        }
    }
    Ok(out)
}

pub fn ljj3_receive_cancel(y1: &CMat, theta: f64) -> Result<CMat> {
    cancel_rx1(y1, &proposed_3tx_code(theta))
}

pub fn ljj3_receive_cancel_rx2(y2: &CMat, theta: f64) -> Result<CMat> {
    cancel_rx2(y2, &proposed_3tx_code(theta))
}

/// Per-entry noise variance of the cancelled output for unit-variance input noise.
pub fn cancelled_noise_variance(code: &LinearDispersionCode, dest: Destination) -> Result<DMatrix<f64>> {
    let spec = cancellation_spec(code)?;
    let mut var = DMatrix::from_element(code.m(), code.t_prime(), 1.0);
    for s in spec {
        let k = s.column / 2;
        for r in 0..code.m() {
            let extra = match dest {
                Destination::Rx1 => s.alpha[r].norm_sqr(),
                Destination::Rx2 => 1.0 / s.alpha[r].norm_sqr(),
            };
            match dest {
                Destination::Rx1 => var[(r, 2 * k + 1)] += extra,
                Destination::Rx2 => var[(s.perm[r], 2 * k)] += extra,
            }
        }
    }
    Ok(var)
}

/// `(H, G)`: effective gains of the two desired messages at a receiver.
pub fn effective_channels(ch: &ChannelRealization, prec: &Precoders, dest: Destination) -> (CMat, CMat) {
    let j = dest_index(dest);
    (&ch.h[0][j] * &prec.v[0][j], &ch.h[1][j] * &prec.v[1][j])
}

fn dest_index(dest: Destination) -> usize {
    match dest {
        Destination::Rx1 => 0,
        Destination::Rx2 => 1,
    }
}

/// The two 6x6 systems seen after cancellation. `R` acts on
/// `(p1, p2, p3)` of both transmitters through `[y'(r,0), conj y'(r,1)]`;
/// `S` acts on `(p4, p5, p6)` through `e^{-j theta} [y'(r,2), conj y'(r,3)]`.
pub fn effective_matrices(h: &CMat, g: &CMat, theta: f64) -> (CMat, CMat) {
    let e = cis(theta);
    let mut r = CMat::zeros(6, 6);
    let mut s = CMat::zeros(6, 6);
    for (blk, m) in [h, g].into_iter().enumerate() {
        let c = 3 * blk;
        for row in 0..3 {
            let (a, b, d) = (m[(row, 0)], m[(row, 1)], m[(row, 2)]);
            r[(2 * row, c)] = a;
            r[(2 * row, c + 1)] = b;
            r[(2 * row, c + 2)] = e * d;
            r[(2 * row + 1, c)] = b.conj();
            r[(2 * row + 1, c + 1)] = -a.conj();
            r[(2 * row + 1, c + 2)] = -e.conj() * d.conj();

            s[(2 * row, c)] = a;
            s[(2 * row, c + 1)] = e.conj() * d;
            s[(2 * row, c + 2)] = b;
            s[(2 * row + 1, c)] = b.conj();
            s[(2 * row + 1, c + 1)] = -a.conj();
            s[(2 * row + 1, c + 2)] = -e * d.conj();
        }
    }
    (r, s)
}

/// `S` with the conjugate-row phase `-e^{-j theta}` on the third column of each
/// block, the layout printed alongside the determinant certificate.
pub fn s_matrix_printed(h: &CMat, g: &CMat, theta: f64) -> CMat {
    let (_, mut s) = effective_matrices(h, g, theta);
    let e = cis(theta);
    for (blk, m) in [h, g].into_iter().enumerate() {
        for row in 0..3 {
            s[(2 * row + 1, 3 * blk + 2)] = -e.conj() * m[(row, 2)].conj();
        }
    }
    s
}

pub fn ljj3_effective_matrices(ch: &ChannelRealization, theta: f64, dest: Destination) -> Result<(CMat, CMat)> {
    let prec = ljj3_precoders(ch)?;
    let (h, g) = effective_channels(ch, &prec, dest);
    Ok(effective_matrices(&h, &g, theta))
}

/// Observation vectors and their per-entry noise variances for the R and S systems.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitObservation {
    pub r_obs: DVector<C64>,
    pub s_obs: DVector<C64>,
    pub r_var: Vec<f64>,
    pub s_var: Vec<f64>,
}

pub fn split_observation(yp: &CMat, var: &DMatrix<f64>, theta: f64) -> SplitObservation {
    let f = cis(-theta);
    let mut out = SplitObservation {
        r_obs: DVector::zeros(6),
        s_obs: DVector::zeros(6),
        r_var: vec![0.0; 6],
        s_var: vec![0.0; 6],
    };
    for r in 0..3 {
        out.r_obs[2 * r] = yp[(r, 0)];
        out.r_obs[2 * r + 1] = yp[(r, 1)].conj();
        out.s_obs[2 * r] = f * yp[(r, 2)];
        out.s_obs[2 * r + 1] = (f * yp[(r, 3)]).conj();
        out.r_var[2 * r] = var[(r, 0)];
        out.r_var[2 * r + 1] = var[(r, 1)];
        out.s_var[2 * r] = var[(r, 2)];
        out.s_var[2 * r + 1] = var[(r, 3)];
    }
    out
}

/// `(p1, p2, p3), (p4, p5, p6)` of one six-symbol message.
pub fn p_symbols(x: &[C64]) -> ([C64; 3], [C64; 3]) {
    let p = |a: f64, b: f64| C64::new(a, b);
    (
        [p(x[0].re, x[2].im), p(x[1].re, x[3].im), p(x[5].re, x[4].im)],
        [p(x[4].re, x[5].im), p(x[2].re, x[0].im), p(x[3].re, x[1].im)],
    )
}

/// Inverse of [`p_symbols`].
pub fn symbols_from_p(pr: &[C64], ps: &[C64]) -> Vec<C64> {
    let x = |a: f64, b: f64| C64::new(a, b);
    vec![
        x(pr[0].re, ps[1].im),
        x(pr[1].re, ps[2].im),
        x(ps[1].re, pr[0].im),
        x(ps[2].re, pr[1].im),
        x(ps[0].re, pr[2].im),
        x(pr[2].re, ps[0].im),
    ]
}

/// Which system carries a real symbol component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    R,
    S,
}

/// Placement of `x^k` inside the R/S systems: `(system, p-index)` of its real
/// part (entering as the real part of that `p`) and of its imaginary part.
pub const SYMBOL_PLACEMENT: [((System, usize), (System, usize)); 6] = [
    ((System::R, 0), (System::S, 1)),
    ((System::R, 1), (System::S, 2)),
    ((System::S, 1), (System::R, 0)),
    ((System::S, 2), (System::R, 1)),
    ((System::S, 0), (System::R, 2)),
    ((System::R, 2), (System::S, 0)),
];

/// A processed frame of any LJJ-family scheme.
#[derive(Debug, Clone)]
pub struct TrialFrame {
    pub channel: ChannelRealization,
    pub messages: Messages,
    pub tx: [CMat; 2],
    pub rx_raw: [CMat; 2],
    pub rx_processed: [CMat; 2],
    pub power_p: f64,
}

/// Full extended-LJJ frame: precode, transmit, propagate, cancel at both receivers.
pub fn ljj3_frame(
    ch: &ChannelRealization,
    code: &LinearDispersionCode,
    msgs: &Messages,
    p: f64,
    noise: Option<&[CMat; 2]>,
) -> Result<TrialFrame> {
    let prec = ljj3_precoders(ch)?;
    let tx = ljj_transmit(code, &prec, msgs)?;
    let rx_raw = propagate(ch, &tx, p, noise);
    let rx_processed = [cancel_rx1(&rx_raw[0], code)?, cancel_rx2(&rx_raw[1], code)?];
    Ok(TrialFrame { channel: ch.clone(), messages: msgs.clone(), tx, rx_raw, rx_processed, power_p: p })
}

/// Stacks the rows of the 2x3 output of the two-antenna scheme, conjugating the
/// entries that carry conjugated desired symbols.
pub fn ljj2_vectorize(y: &CMat, dest: Destination) -> DVector<C64> {
    let conj_col = |c: usize| match dest {
        Destination::Rx1 => c == 1,
        Destination::Rx2 => c != 1,
    };
    DVector::from_fn(6, |i, _| {
        let (r, c) = (i / 3, i % 3);
        if conj_col(c) {
            y[(r, c)].conj()
        } else {
            y[(r, c)]
        }
    })
}

/// The 4x6 zero-forcer removing the aligned interference.
pub fn ljj2_zero_forcer(dest: Destination) -> CMat {
    let rows: [[f64; 6]; 4] = match dest {
        Destination::Rx1 => [
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        ],
        Destination::Rx2 => [
            [0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            [-1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        ],
    };
    CMat::from_fn(4, 6, |r, c| C64::from(rows[r][c]))
}

/// Noise variance of each zero-forced entry for unit-variance input noise.
pub fn ljj2_noise_variance(dest: Destination) -> Vec<f64> {
    let f = ljj2_zero_forcer(dest);
    (0..4).map(|r| f.row(r).iter().map(|z| z.norm_sqr()).sum()).collect()
}

/// Effective 4x4 matrix acting on `(x1, x2)` of both desired messages.
pub fn ljj2_effective_matrix(h: &CMat, g: &CMat) -> CMat {
    let mut r = CMat::zeros(4, 4);
    for (blk, m) in [h, g].into_iter().enumerate() {
        let c = 2 * blk;
        r[(0, c)] = m[(0, 0)];
        r[(0, c + 1)] = m[(0, 1)];
        r[(1, c)] = m[(0, 1)].conj();
        r[(1, c + 1)] = -m[(0, 0)].conj();
        r[(2, c)] = m[(1, 1)].conj();
        r[(2, c + 1)] = -m[(1, 0)].conj();
        r[(3, c)] = m[(1, 0)];
        r[(3, c + 1)] = m[(1, 1)];
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ljj2Output {
    /// `F Y''`.
    pub processed: DVector<C64>,
    /// Unscaled effective matrix; the signal term is `sqrt(3P/4) R x`.
    pub r: CMat,
    pub noise_variance: Vec<f64>,
}

pub fn ljj2_pipeline(ch: &ChannelRealization, prec: &Precoders, y: &CMat, dest: Destination) -> Result<Ljj2Output> {
    if ch.m != 2 || y.shape() != (2, 3) {
        return Err(Error::DimensionMismatch(format!(
            "two-antenna scheme got {} antennas and a {:?} output",
            ch.m,
            y.shape()
        )));
    }
    let (h, g) = effective_channels(ch, prec, dest);
    Ok(Ljj2Output {
        processed: ljj2_zero_forcer(dest) * ljj2_vectorize(y, dest),
        r: ljj2_effective_matrix(&h, &g),
        noise_variance: ljj2_noise_variance(dest),
    })
}

/// Block-diagonal gain over the three-slot extension.
pub fn block_extend(h: &CMat) -> CMat {
    kron(&CMat::identity(3, 3), h)
}

/// JS precoders before normalization, their Frobenius norms, and the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct JsPrecoders {
    pub v: [[CMat; 2]; 2],
    pub norms: [[f64; 2]; 2],
    pub eigenbasis: CMat,
}

impl JsPrecoders {
    /// `V_ik / ||V_ik||_F`.
    pub fn normalized(&self, i: usize, k: usize) -> CMat {
        self.v[i][k].map(|z| z / self.norms[i][k])
    }
}

/// `F = H11^{-1} H21 H22^{-1} H12` on one slot.
pub fn js3_f(ch: &ChannelRealization) -> Result<CMat> {
    let inv = |h: &CMat| inverse(h).map_err(degenerate);
    Ok(inv(&ch.h[0][0])? * &ch.h[1][0] * inv(&ch.h[1][1])? * &ch.h[0][1])
}

pub fn js3_precoders(ch: &ChannelRealization) -> Result<JsPrecoders> {
    if ch.m != 3 {
        return Err(Error::DimensionMismatch(format!("JS scheme needs 3 antennas, got {}", ch.m)));
    }
    let eig = eig_general(&js3_f(ch)?)?;
    let e = kron(&CMat::identity(3, 3), &eig.vectors);
    let sel = |b: [f64; 3]| kron(&CMat::identity(3, 3), &CMat::from_fn(3, 1, |r, _| C64::from(b[r])));
    let v11 = &e * sel([1.0, 1.0, 0.0]);
    let v12 = &e * sel([1.0, 0.0, 1.0]);
    let h = |i: usize, j: usize| block_extend(&ch.h[i][j]);
    let inv = |m: &CMat| inverse(m).map_err(degenerate);
    let v21 = inv(&h(1, 1))? * h(0, 1) * &v11;
    let v22 = inv(&h(1, 0))? * h(0, 0) * &v12;
    let v = [[v11, v12], [v21, v22]];
    let norms = [
        [frobenius(&v[0][0]), frobenius(&v[0][1])],
        [frobenius(&v[1][0]), frobenius(&v[1][1])],
    ];
    Ok(JsPrecoders { v, norms, eigenbasis: e })
}

/// `X_i = sqrt(3/2) sum_k V_ik / ||V_ik||_F X_ik`, one 9-vector per transmitter.
pub fn js3_transmit(prec: &JsPrecoders, msgs: &Messages) -> Result<[DVector<C64>; 2]> {
    let tx = |i: usize| -> Result<DVector<C64>> {
        let mut x = DVector::zeros(9);
        for k in 0..2 {
            if msgs[i][k].len() != 3 {
                return Err(Error::DimensionMismatch(format!("JS message of {} symbols", msgs[i][k].len())));
            }
            x += prec.normalized(i, k) * DVector::from_column_slice(&msgs[i][k]);
        }
        Ok(x * C64::from(JS_POWER_SCALE.sqrt()))
    };
    Ok([tx(0)?, tx(1)?])
}

/// `Y'_j = sqrt(P) sum_i H'_ij X_i + N'_j`.
pub fn js3_receive(
    ch: &ChannelRealization,
    x: &[DVector<C64>; 2],
    p: f64,
    noise: Option<&[DVector<C64>; 2]>,
) -> [DVector<C64>; 2] {
    let s = C64::from(p.sqrt());
    let rx = |j: usize| {
        let mut y = (block_extend(&ch.h[0][j]) * &x[0] + block_extend(&ch.h[1][j]) * &x[1]) * s;
        if let Some(n) = noise {
            y += &n[j];
        }
        y
    };
    [rx(0), rx(1)]
}

/// Joint-decoding system at a receiver: columns for the three desired symbols
/// of Tx-1, the three of Tx-2, and the three aligned interference symbols
/// `z = X_a / n_a + X_b / n_b`, whose weights are returned alongside.
pub fn js3_generator(ch: &ChannelRealization, prec: &JsPrecoders, dest: Destination, p: f64) -> (CMat, [f64; 2]) {
    let j = dest_index(dest);
    let o = 1 - j;
    let scale = C64::from((JS_POWER_SCALE * p).sqrt());
    let h = |i: usize| block_extend(&ch.h[i][j]);
    let mut g = CMat::zeros(9, 9);
    g.columns_mut(0, 3).copy_from(&(h(0) * prec.normalized(0, j) * scale));
    g.columns_mut(3, 3).copy_from(&(h(1) * prec.normalized(1, j) * scale));
    g.columns_mut(6, 3).copy_from(&(h(0) * &prec.v[0][o] * scale));
    (g, [1.0 / prec.norms[0][o], 1.0 / prec.norms[1][o]])
}

/// `{w1 a + w2 b}` over all point pairs, indexed `ia * |B| + ib`.
pub fn minkowski_alphabet(a: &[C64], b: &[C64], w: [f64; 2]) -> Vec<C64> {
    a.iter().flat_map(|&u| b.iter().map(move |&v| u * w[0] + v * w[1])).collect()
}

/// All-zero messages of the right sizes for a scheme.
pub fn zero_messages(scheme: SchemeId) -> Messages {
    let n = scheme.symbols_per_message();
    let z = || vec![ZERO; n];
    [[z(), z()], [z(), z()]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{awgn, sample_channel, SimRng};
    use crate::numerics::{cmat_re, det, numeric_rank, ONE, RANK_TOL};
    use crate::stbc::alamouti_code;

    fn random_msgs(rng: &mut SimRng, n: usize) -> Messages {
        let mut d = || (0..n).map(|_| rng.complex_gaussian(1.0)).collect::<Vec<_>>();
        [[d(), d()], [d(), d()]]
    }

    #[test]
    fn precoders_are_trace_normalized() {
        let mut rng = SimRng::new(3);
        let ch = sample_channel(&mut rng, 3).unwrap();
        let p = ljj3_precoders(&ch).unwrap();
        for v in p.v.iter().flatten() {
            assert!(((v * v.adjoint()).trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn precoder_diagonal_example() {
        let mut rng = SimRng::new(4);
        let mut ch = sample_channel(&mut rng, 3).unwrap();
        ch.h[0][1] = cmat_re(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 4.0]]);
        let v = ljj3_precoders(&ch).unwrap().v[0][0].clone();
        let n = (1.0f64 + 0.25 + 1.0 / 16.0).sqrt();
        let want = cmat_re(&[&[1.0 / n, 0.0, 0.0], &[0.0, 0.5 / n, 0.0], &[0.0, 0.0, 0.25 / n]]);
        assert!(frobenius(&(v - want)) < 1e-14);
        ch.h[0][1] = CMat::identity(3, 3);
        let v = ljj3_precoders(&ch).unwrap().v[0][0].clone();
        assert!(frobenius(&(v - CMat::identity(3, 3) / C64::from(3f64.sqrt()))) < 1e-14);
    }

    #[test]
    fn rx2_noise_variance_sits_on_even_columns() {
        let code = proposed_3tx_code(0.4);
        let v1 = cancelled_noise_variance(&code, Destination::Rx1).unwrap();
        let v2 = cancelled_noise_variance(&code, Destination::Rx2).unwrap();
        for r in 0..3 {
            assert_eq!([v1[(r, 0)], v1[(r, 1)], v1[(r, 2)], v1[(r, 3)]], [1.0, 2.0, 1.0, 2.0]);
            assert!((v2[(r, 0)] - 2.0).abs() < 1e-12 && (v2[(r, 2)] - 2.0).abs() < 1e-12);
            assert_eq!((v2[(r, 1)], v2[(r, 3)]), (1.0, 1.0));
        }
    }

    #[test]
    fn p_symbol_round_trip() {
        let mut rng = SimRng::new(5);
        let x: Vec<C64> = (0..6).map(|_| rng.complex_gaussian(1.0)).collect();
        let (pr, ps) = p_symbols(&x);
        let back = symbols_from_p(&pr, &ps);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn placement_table_matches_p_symbols() {
        for k in 0..6 {
            for (part, v) in [(0, C64::new(1.0, 0.0)), (1, C64::new(0.0, 1.0))] {
                let mut x = vec![ZERO; 6];
                x[k] = v;
                let (pr, ps) = p_symbols(&x);
                let (sys, idx) = if part == 0 { SYMBOL_PLACEMENT[k].0 } else { SYMBOL_PLACEMENT[k].1 };
                let hit = match sys {
                    System::R => pr[idx],
                    System::S => ps[idx],
                };
                // real part enters Re(p), imaginary part enters Im(p)
                assert_eq!(hit, if part == 0 { ONE } else { C64::new(0.0, 1.0) });
            }
        }
    }

    #[test]
    fn r_and_s_reproduce_cancelled_output() {
        let mut rng = SimRng::new(6);
        let theta = 0.9;
        let code = proposed_3tx_code(theta);
        let ch = sample_channel(&mut rng, 3).unwrap();
        let msgs = random_msgs(&mut rng, 6);
        let p = 10.0;
        let f = ljj3_frame(&ch, &code, &msgs, p, None).unwrap();
        let prec = ljj3_precoders(&ch).unwrap();
        for (dest, j) in [(Destination::Rx1, 0), (Destination::Rx2, 1)] {
            let (h, g) = effective_channels(&ch, &prec, dest);
            let (r, s) = effective_matrices(&h, &g, theta);
            let var = cancelled_noise_variance(&code, dest).unwrap();
            let obs = split_observation(&f.rx_processed[j], &var, theta);
            let (p1, p4) = p_symbols(&msgs[0][j]);
            let (q1, q4) = p_symbols(&msgs[1][j]);
            let pr = DVector::from_iterator(6, p1.into_iter().chain(q1));
            let ps = DVector::from_iterator(6, p4.into_iter().chain(q4));
            let k = C64::from((LJJ_POWER_SPLIT * p).sqrt());
            assert!((&obs.r_obs - &r * pr * k).norm() < 1e-9);
            assert!((&obs.s_obs - &s * ps * k).norm() < 1e-9);
        }
    }

    #[test]
    fn ljj2_zero_forcing_both_receivers() {
        let mut rng = SimRng::new(8);
        let code = alamouti_code();
        for _ in 0..50 {
            let ch = sample_channel(&mut rng, 2).unwrap();
            let prec = ljj3_precoders(&ch).unwrap();
            let msgs = random_msgs(&mut rng, 2);
            let p = 7.0;
            let y = propagate(&ch, &ljj_transmit(&code, &prec, &msgs).unwrap(), p, None);
            for (dest, j) in [(Destination::Rx1, 0), (Destination::Rx2, 1)] {
                let out = ljj2_pipeline(&ch, &prec, &y[j], dest).unwrap();
                let x = DVector::from_iterator(4, msgs[0][j].iter().chain(&msgs[1][j]).copied());
                let want = &out.r * x * C64::from((0.75 * p).sqrt());
                assert!((&out.processed - want).norm() < 1e-9);
                assert_eq!(numeric_rank(&out.r, RANK_TOL).unwrap(), 4);
            }
        }
        assert_eq!(ljj2_noise_variance(Destination::Rx1), vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(ljj2_noise_variance(Destination::Rx2), vec![2.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn js_alignment_and_power() {
        let mut rng = SimRng::new(9);
        let ch = sample_channel(&mut rng, 3).unwrap();
        let prec = js3_precoders(&ch).unwrap();
        let h = |i: usize, j: usize| block_extend(&ch.h[i][j]);
        assert!(frobenius(&(h(1, 1) * &prec.v[1][0] - h(0, 1) * &prec.v[0][0])) < 1e-8);
        assert!(frobenius(&(h(1, 0) * &prec.v[1][1] - h(0, 0) * &prec.v[0][1])) < 1e-8);
        let n = 10_000;
        let mut e = 0.0;
        for _ in 0..n {
            let x = js3_transmit(&prec, &random_msgs(&mut rng, 3)).unwrap();
            e += x[0].norm_squared();
        }
        assert!((e / n as f64 - 3.0).abs() < 0.06, "{}", e / n as f64);
    }

    #[test]
    fn js_generator_reproduces_output() {
        let mut rng = SimRng::new(10);
        let ch = sample_channel(&mut rng, 3).unwrap();
        let prec = js3_precoders(&ch).unwrap();
        let msgs = random_msgs(&mut rng, 3);
        let p = 5.0;
        let y = js3_receive(&ch, &js3_transmit(&prec, &msgs).unwrap(), p, None);
        for (dest, j) in [(Destination::Rx1, 0), (Destination::Rx2, 1)] {
            let (g, w) = js3_generator(&ch, &prec, dest, p);
            let o = 1 - j;
            let z: Vec<C64> = (0..3).map(|k| msgs[0][o][k] * w[0] + msgs[1][o][k] * w[1]).collect();
            let u = DVector::from_iterator(9, msgs[0][j].iter().chain(&msgs[1][j]).chain(&z).copied());
            assert!((&y[j] - g * u).norm() < 1e-9);
        }
        let zero = js3_receive(&ch, &js3_transmit(&prec, &zero_messages(SchemeId::Js3)).unwrap(), p, None);
        assert_eq!(zero[0].norm(), 0.0);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in SchemeId::ALL {
            assert_eq!(s.name().parse::<SchemeId>().unwrap(), s);
        }
        assert!("perfect".parse::<SchemeId>().is_err());
        assert_eq!(SchemeId::Ar.effective_angles(1.0, 2.0), (0.0, 0.0));
    }

    #[test]
    fn appendix_r_witness() {
        for theta in [0.0, 0.3, 2.5] {
            let e2 = cis(2.0 * theta);
            let h = cmat_re(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0]]);
            let g = crate::numerics::cmat(&[&[ZERO, ZERO, ZERO], &[ONE, ZERO, ZERO], &[ONE, -e2, ONE]]);
            let (r, _) = effective_matrices(&h, &g, theta);
            assert!((det(&r).unwrap() + 2.0).norm() < 1e-9);
        }
    }

    #[test]
    fn noise_enters_additively() {
        let mut rng = SimRng::new(11);
        let ch = sample_channel(&mut rng, 3).unwrap();
        let x = [awgn(&mut rng, 3, 6, 1.0), awgn(&mut rng, 3, 6, 1.0)];
        let n = [awgn(&mut rng, 3, 6, 1.0), awgn(&mut rng, 3, 6, 1.0)];
        let a = propagate(&ch, &x, 2.0, Some(&n));
        let b = propagate(&ch, &x, 2.0, None);
        assert!(frobenius(&(&a[0] - &b[0] - &n[0])) < 1e-12);
    }
}
