use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;

use xnet_core::analysis::{diversity_slope, BerCurve, BerPoint};
use xnet_core::channel::{awgn, SimRng};
use xnet_core::constellation::{hamming, Constellation, ConstellationKind};
use xnet_core::decoders::{ml_enumerate, sphere_decode, RealLinearModel};
use xnet_core::harness::{emit_csv, parse_csv};
use xnet_core::numerics::C64;
use xnet_core::stbc::{alamouti_code, proposed_3tx_code, sr_4tx_code, LinearDispersionCode};

fn symbol() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
}

fn kind() -> impl Strategy<Value = ConstellationKind> {
    prop_oneof![
        Just(ConstellationKind::Qpsk),
        Just(ConstellationKind::Qam8),
        Just(ConstellationKind::Qam16)
    ]
}

fn cancels(code: &LinearDispersionCode, x: &[C64]) -> f64 {
    let m = code.encode_matrix(x).unwrap();
    let mut worst = 0.0f64;
    for s in code.cancellation().unwrap() {
        for r in 0..code.m() {
            let v = m[(r, s.column)] + s.alpha[r] * m[(s.perm[r], s.column + 1)].conj();
            worst = worst.max(v.norm());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn codewords_cancel_column_pairs(theta in 0.0f64..std::f64::consts::TAU, x in prop::collection::vec(symbol(), 8)) {
        prop_assert!(cancels(&proposed_3tx_code(theta), &x[..6]) < 1e-12);
        prop_assert!(cancels(&sr_4tx_code(theta), &x[..sr_4tx_code(theta).l()]) < 1e-12);
        prop_assert!(cancels(&alamouti_code(), &x[..2]) < 1e-12);
    }

    #[test]
    fn encoding_is_real_linear(
        theta in 0.0f64..std::f64::consts::TAU,
        a in prop::collection::vec(symbol(), 6),
        b in prop::collection::vec(symbol(), 6),
        t in -3.0f64..3.0,
    ) {
        let code = proposed_3tx_code(theta);
        let mix: Vec<C64> = a.iter().zip(&b).map(|(u, v)| u + v * t).collect();
        let lhs = code.encode_matrix(&mix).unwrap();
        let rhs = code.encode_matrix(&a).unwrap() + code.encode_matrix(&b).unwrap() * C64::from(t);
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn gray_labels_roundtrip(k in kind(), phi in -3.2f64..3.2) {
        let c = Constellation::new(k, phi).unwrap();
        for label in 0..c.len() {
            let bits = c.label_bits(label);
            prop_assert_eq!(bits.len(), c.bits_per_symbol());
            prop_assert_eq!(c.bits_to_label(&bits).unwrap(), label);
            prop_assert_eq!(c.label_of(c.point(label)).unwrap(), label);
        }
        prop_assert!((c.average_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_neighbours_differ_in_one_bit(phi in -3.2f64..3.2) {
        let c = Constellation::new(ConstellationKind::Qam16, phi).unwrap();
        let pts = c.points();
        let dmin = (0..16)
            .flat_map(|i| (0..16).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| (pts[i] - pts[j]).norm())
            .fold(f64::INFINITY, f64::min);
        for i in 0..16 {
            for j in 0..16 {
                if i != j && (pts[i] - pts[j]).norm() < dmin * 1.0001 {
                    prop_assert_eq!(hamming(i, j), 1);
                }
            }
        }
    }

    #[test]
    fn slope_recovers_power_law(d in 0.5f64..6.0, a in 0.01f64..10.0, start in 0.0f64..10.0) {
        let points = (0..4)
            .map(|k| {
                let p_db = start + 4.0 * k as f64;
                let ber = a * 10f64.powf(-d * p_db / 10.0);
                let trials = 1u64 << 50;
                BerPoint { p_db, trials, bit_errors: (ber * trials as f64).round() as u64, bits_per_trial: 1 }
            })
            .collect();
        let curve = BerCurve { scheme: "x".into(), constellation: "qpsk".into(), theta: 0.0, phi: 0.0, seed: 0, points };
        prop_assume!(curve.points.iter().all(|p| p.bit_errors > 1000));
        prop_assert!((diversity_slope(&curve, 3).unwrap() - d).abs() < 1e-3);
    }

    #[test]
    fn csv_roundtrip(seed in any::<u64>(), errs in prop::collection::vec((1u64..1_000_000, 0u64..1000), 1..6)) {
        let points = errs
            .iter()
            .enumerate()
            .map(|(k, &(trials, e))| BerPoint { p_db: 2.5 * k as f64, trials, bit_errors: e, bits_per_trial: 48 })
            .collect();
        let curve = BerCurve {
            scheme: "ljj3".into(),
            constellation: "qpsk".into(),
            theta: 0.785,
            phi: 0.5535743588970452,
            seed,
            points,
        };
        prop_assert_eq!(parse_csv(&emit_csv(&curve, false).unwrap()).unwrap(), curve);
    }

    #[test]
    fn trial_streams_are_reproducible(seed in any::<u64>(), stream in any::<u64>(), trial in any::<u64>()) {
        let mut a = SimRng::for_trial(seed, stream, trial);
        let mut b = SimRng::for_trial(seed, stream, trial);
        for _ in 0..8 {
            prop_assert_eq!(a.complex_gaussian(1.0), b.complex_gaussian(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_decoder_matches_enumeration(seed in any::<u64>(), snr in 0.1f64..30.0, n in 1usize..4) {
        let mut rng = SimRng::new(seed);
        let q: Arc<[C64]> = Constellation::new(ConstellationKind::Qam8, 0.3).unwrap().points().into();
        let g = awgn(&mut rng, n + 1, n, 1.0) * C64::from(snr.sqrt());
        let x = DVector::from_fn(n, |_, _| q[rng.below(q.len())]);
        let y = &g * x + awgn(&mut rng, n + 1, 1, 1.0).column(0);
        let m = RealLinearModel::from_complex(&y, &vec![1.0; n + 1], &g, vec![q.clone(); n]).unwrap();
        let s = sphere_decode(&m).unwrap();
        let e = ml_enumerate(&m).unwrap();
        prop_assert_eq!(s.labels, e.labels);
        prop_assert_eq!(s.metric, e.metric);
    }
}
