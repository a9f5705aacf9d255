use nalgebra::Matrix2;
use proptest::prelude::*;
use qpd_core::cliffords::{clifford_group, unitary_distance, Channel};
use qpd_core::linalg::equatorial_rotation;
use qpd_core::parity::{
    analytic_autocorr, generate_traces, ideal_trace, measure_trace, parse_trace, parse_trace_binary,
    parse_trace_csv, trace_to_binary, trace_to_csv, FidelityModel, ParityTrace, TraceKind, TraceMeta,
    TunnelingModel,
};
use qpd_core::qdyn::Parity;
use qpd_core::rng::stream_rng;
use qpd_core::spectral::{lorentzian, model_psd, welch};

fn fidelity() -> impl Strategy<Value = FidelityModel> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(g, e, m)| FidelityModel::new(g, e, m).unwrap())
}

fn trace() -> impl Strategy<Value = ParityTrace> {
    (
        prop::collection::vec(prop::bool::ANY, 1..300),
        1e-3..1e3f64,
        prop::bool::ANY,
        prop::option::of(any::<u64>()),
        prop::option::of(1e-3..1e3f64),
        prop::option::of(fidelity()),
    )
        .prop_map(|(bits, dt, measured, seed, gamma, fid)| {
            let samples = bits.into_iter().map(|b| if b { 1 } else { -1 }).collect();
            let kind = if measured { TraceKind::Measured } else { TraceKind::Ideal };
            ParityTrace::new(samples, dt, kind).unwrap().with_meta(TraceMeta {
                seed,
                gamma_per_ms: gamma,
                fidelity: fid,
            })
        })
}

proptest! {
    #[test]
    fn csv_round_trip(t in trace()) {
        let text = trace_to_csv(&t);
        prop_assert_eq!(&parse_trace_csv(&text).unwrap(), &t);
        prop_assert_eq!(parse_trace(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn binary_round_trip(t in trace()) {
        let bytes = trace_to_binary(&t);
        prop_assert_eq!(&parse_trace_binary(&bytes).unwrap(), &t);
        prop_assert_eq!(parse_trace(&bytes).unwrap(), t);
    }

    #[test]
    fn truncated_binary_is_rejected(t in trace(), cut in 1usize..16) {
        let bytes = trace_to_binary(&t);
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(parse_trace_binary(&bytes[..keep]).is_err());
    }

    #[test]
    fn readout_and_mapping_are_stochastic(f in fidelity()) {
        for m in [f.readout_matrix(), f.mapping_matrix(), f.total_matrix()] {
            for c in 0..2 {
                prop_assert!((m[(0, c)] + m[(1, c)] - 1.0).abs() < 1e-12);
                prop_assert!(m[(0, c)] >= -1e-15 && m[(1, c)] >= -1e-15);
            }
        }
        prop_assert_eq!(f.mapping_matrix(), f.mapping_matrix().transpose());
    }

    #[test]
    fn correlation_matrix_identities(f in fidelity()) {
        let e = f.correlation_matrix();
        let swing = e[(0, 0)] + e[(1, 1)] - e[(0, 1)] - e[(1, 0)];
        let offset = e[(0, 0)] + e[(1, 1)] + e[(0, 1)] + e[(1, 0)];
        prop_assert!((swing / 4.0 - f.effective_fidelity().powi(2)).abs() < 1e-12);
        prop_assert!((offset / 4.0 - (f.f_e - f.f_g).powi(2)).abs() < 1e-12);
        prop_assert!((e[(0, 1)] - e[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn autocorrelation_ignores_parity_labels(f in fidelity(), lag in -1e5..1e5f64, tau in 0.1..100.0f64) {
        // Relabelling even and odd permutes rows and columns of E.
        let e = f.correlation_matrix();
        let swap = Matrix2::new(0.0, 1.0, 1.0, 0.0);
        let relabelled = swap * e * swap;
        let combos = |m: Matrix2<f64>| (m[(0, 0)] + m[(1, 1)] - m[(0, 1)] - m[(1, 0)], m.sum());
        let (a, b) = (combos(e), combos(relabelled));
        prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        let model = TunnelingModel::from_tau_ms(tau).unwrap();
        prop_assert_eq!(analytic_autocorr(&f, &model, lag), analytic_autocorr(&f, &model, -lag));
        let c = analytic_autocorr(&f, &model, lag);
        prop_assert!(c <= 1.0 + 1e-12 && c >= (f.f_e - f.f_g).powi(2) - 1e-12);
    }

    #[test]
    fn single_shot_accuracy_follows_total_matrix(f in fidelity()) {
        let t = f.total_matrix();
        prop_assert!((f.single_shot_accuracy() - 0.5 * (t[(0, 0)] + t[(1, 1)])).abs() < 1e-15);
        prop_assert!((f.single_shot_accuracy() - 0.5 * (1.0 + f.effective_fidelity())).abs() < 1e-12);
    }

    #[test]
    fn measured_accuracy_matches_model(f in fidelity(), seed in any::<u64>()) {
        let model = TunnelingModel::from_tau_ms(1.0).unwrap();
        let (ideal, measured) = generate_traces(&model, Some(&f), 4.0, 20_000, seed).unwrap();
        let measured = measured.unwrap();
        let hits = ideal.samples().iter().zip(measured.samples()).filter(|(a, b)| a == b).count();
        let rate = hits as f64 / ideal.len() as f64;
        // Conditioned on the realized parity record, samples are independent.
        let t = f.total_matrix();
        let n = ideal.len() as f64;
        let n_even = ideal.samples().iter().filter(|&&v| v == -1).count() as f64;
        let (pe, po) = (t[(0, 0)], t[(1, 1)]);
        let expected = (n_even * pe + (n - n_even) * po) / n;
        let var = n_even * pe * (1.0 - pe) + (n - n_even) * po * (1.0 - po);
        let sigma = (var.sqrt() / n).max(1e-4);
        prop_assert!((rate - expected).abs() < 5.0 * sigma, "rate {} vs {}", rate, expected);
    }

    #[test]
    fn perfect_fidelity_reports_the_parity(seed in any::<u64>(), events in prop::collection::vec(0.0..400.0f64, 0..20)) {
        let mut events = events;
        events.sort_by(f64::total_cmp);
        let ideal = ideal_trace(&events, 4.0, 100, Parity::Even).unwrap();
        let measured = measure_trace(&ideal, &FidelityModel::perfect(), &mut stream_rng(seed, 0));
        prop_assert_eq!(measured.samples(), ideal.samples());
        prop_assert_eq!(ideal.samples()[0], -1);
    }

    #[test]
    fn generation_is_reproducible(seed in any::<u64>()) {
        let model = TunnelingModel::from_tau_ms(0.5).unwrap();
        let f = FidelityModel::paper();
        let a = generate_traces(&model, Some(&f), 4.0, 5_000, seed).unwrap();
        let b = generate_traces(&model, Some(&f), 4.0, 5_000, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn model_psd_scales_with_feff_squared(f in fidelity(), gamma in 1.0..1e4f64, freq in 0.1..1e5f64, k in 0.1..1.0f64) {
        let dt = 4e-6;
        let f_eff = f.effective_fidelity();
        let floor = |fe: f64| (1.0 - fe * fe - (f.f_e - f.f_g).powi(2)) * dt;
        let scaled = k * f_eff;
        let lhs = model_psd(scaled, gamma, &f, dt, freq) - floor(scaled);
        let rhs = k * k * (model_psd(f_eff, gamma, &f, dt, freq) - floor(f_eff));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1e-12));
        prop_assert!((lhs - scaled * scaled * lorentzian(gamma, freq)).abs() <= 1e-9 * lhs.abs().max(1e-12));
    }

    #[test]
    fn welch_is_nonnegative_and_linear_in_power(x in prop::collection::vec(-1.0..1.0f64, 64..512), a in 0.1..10.0f64) {
        let psd = welch(&x, 1e-3, 32, 0.5);
        prop_assert!(psd.values.iter().all(|&v| v >= 0.0));
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        let psd2 = welch(&scaled, 1e-3, 32, 0.5);
        for (u, v) in psd.values.iter().zip(&psd2.values) {
            prop_assert!((v - a * a * u).abs() <= 1e-9 * v.abs().max(1e-12));
        }
    }

    #[test]
    fn clifford_group_is_closed(a in 0usize..24, b in 0usize..24) {
        let g = clifford_group();
        let product = g.get(a).unitary * g.get(b).unitary;
        let c = g.find(&product).expect("closed under multiplication");
        prop_assert_eq!(c, g.mul(a, b));
        let inv = g.inverse(a);
        prop_assert!(unitary_distance(&(g.get(inv).unitary * g.get(a).unitary), &g.get(g.identity()).unitary) < 1e-9);
    }

    #[test]
    fn channels_stay_cptp(
        p in 0.0..=1.0f64,
        t1 in 1.0..200.0f64,
        t2_frac in 0.01..=2.0f64,
        duration in 0.0..1000.0f64,
        angle in -7.0..7.0f64,
        phase in -7.0..7.0f64,
        w in 0.0..=1.0f64,
    ) {
        let u = equatorial_rotation(angle, phase);
        let rotation = Channel::unitary(&u);
        let damping = Channel::damping(duration, t1, t2_frac * t1);
        let dep = Channel::depolarizing(p);
        for c in [&rotation, &damping, &dep] {
            prop_assert!(c.check_cptp(1e-9).is_ok());
        }
        prop_assert!(rotation.then(&damping).then(&dep).check_cptp(1e-9).is_ok());
        prop_assert!(Channel::mixture(&[(w, rotation.clone()), (1.0 - w, damping.clone())]).check_cptp(1e-9).is_ok());
        prop_assert!((rotation.average_fidelity(&u) - 1.0).abs() < 1e-12);
        prop_assert!((dep.average_fidelity(&Matrix2::identity()) - 0.5 * (1.0 + p)).abs() < 1e-12);
    }
}
