use std::f64::consts::PI;

use chil_rig::analysis::{
    band_check, harmonic_phasor, inverse_symmetrical_components, symmetrical_components, thd, Band, PhasorTriple,
    SlidingPhasor,
};
use chil_rig::protocol::{decode, encode, DelayChannel, WireFrame};
use chil_rig::sim::SignalFrame;
use num_complex::Complex64;
use proptest::prelude::*;

fn phasor() -> impl Strategy<Value = Complex64> {
    (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn periodic_signal() -> impl Strategy<Value = Vec<f64>> {
    // fundamental plus a few harmonics, 64 samples per period, two periods
    (0.5..2.0f64, prop::collection::vec((-0.3..0.3f64, 0.0..2.0 * PI), 5)).prop_map(|(a1, hs)| {
        (0..128)
            .map(|k| {
                let w = 2.0 * PI * k as f64 / 64.0;
                a1 * w.sin()
                    + hs.iter()
                        .enumerate()
                        .map(|(i, (a, p))| a * ((i + 2) as f64 * w + p).sin())
                        .sum::<f64>()
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn fortescue_round_trip(a in phasor(), b in phasor(), c in phasor()) {
        let pt = PhasorTriple::new(a, b, c);
        let back = inverse_symmetrical_components(&symmetrical_components(&pt));
        let scale = 1.0 + a.norm().max(b.norm()).max(c.norm());
        prop_assert!((back.a - a).norm() <= 1e-12 * scale);
        prop_assert!((back.b - b).norm() <= 1e-12 * scale);
        prop_assert!((back.c - c).norm() <= 1e-12 * scale);
    }

    #[test]
    fn thd_ignores_time_shift(x in periodic_signal(), shift in 0usize..64) {
        let dt = 0.02 / 64.0;
        let base = thd(&x[..64], 50.0, dt, 20).unwrap();
        let shifted = thd(&x[shift..shift + 64], 50.0, dt, 20).unwrap();
        prop_assert!((base - shifted).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn phasor_is_linear(x in periodic_signal(), y in periodic_signal(), k in -5.0..5.0f64) {
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + k * b).collect();
        for h in 1..4 {
            let lhs = harmonic_phasor(&z, h, 64).unwrap();
            let rhs = harmonic_phasor(&x, h, 64).unwrap() + k * harmonic_phasor(&y, h, 64).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-9);
        }
        let sp = SlidingPhasor::new(64);
        let direct = harmonic_phasor(&x[10..74], 1, 64).unwrap();
        prop_assert!((sp.phasor(&x[10..74]) - direct).norm() <= 1e-12);
    }

    #[test]
    fn band_reports_every_excursion(values in prop::collection::vec(0.5..1.5f64, 1..200), settle in 0.0..0.05f64) {
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64 * 1e-3).collect();
        let events = [0.05];
        let verdict = band_check(&times, &values, Band::new(0.9, 1.2), settle, &events).unwrap();
        let in_settle = |t: f64| t >= 0.05 && t < 0.05 + settle;
        for (&t, &v) in times.iter().zip(&values) {
            let outside = !Band::new(0.9, 1.2).contains(v) && !in_settle(t);
            let covered = verdict.violations.iter().any(|r| t >= r.t_start && t <= r.t_end);
            prop_assert_eq!(outside, covered && !in_settle(t));
        }
        prop_assert_eq!(verdict.pass, verdict.violations.is_empty());
    }

    #[test]
    fn wire_round_trip_is_bit_exact(
        tick in 0u64..1_000_000_000,
        values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..12),
    ) {
        let mut frame = SignalFrame::new(tick, tick as f64 * 5e-5);
        for (i, v) in values.iter().enumerate() {
            frame.set(format!("s{i:02}"), *v);
        }
        let bytes = encode(&WireFrame::meas(&frame)).unwrap();
        let back = decode(&bytes).unwrap().to_signal_frame().unwrap();
        prop_assert_eq!(back.tick, frame.tick);
        prop_assert_eq!(back.t.to_bits(), frame.t.to_bits());
        for (k, v) in &frame.signals {
            prop_assert_eq!(back.signals[k].to_bits(), v.to_bits());
        }
    }

    #[test]
    fn delay_channel_is_a_fifo(delay in 0u64..50, sends in prop::collection::vec(0u64..5, 1..60)) {
        let mut ch = DelayChannel::new(delay);
        let mut now = 0;
        let mut sent = Vec::new();
        let mut received = Vec::new();
        for (id, gap) in sends.iter().enumerate() {
            now += gap;
            received.extend(ch.poll(now).into_iter().map(|f: (usize, u64)| (f, now)));
            ch.send(now, (id, now));
            sent.push(id);
        }
        received.extend(ch.poll(now + delay).into_iter().map(|f| (f, now + delay)));
        let order: Vec<usize> = received.iter().map(|((id, _), _)| *id).collect();
        prop_assert_eq!(order, sent);
        for ((_, at), got) in received {
            prop_assert!(got >= at + delay);
        }
    }
}
