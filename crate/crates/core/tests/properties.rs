use num_complex::Complex64;
use proptest::prelude::*;

use onebit::designers::{exhaustive_search, rq_design, svd_sign_design};
use onebit::harness::parse_config_toml;
use onebit::linalg::leading_triplet_default;
use onebit::model::{evaluate_snr, generate_channel, ChannelMatrix, SpinVector, SystemParams};
use onebit::qubo::exchange::{parse_request, parse_response, ExchangeRequest, ExchangeResponse};
use onebit::qubo::{
    binary_to_spin, build_qubo_from_gram, solve_sa, spin_to_binary, BinaryVector, SampleSet, SamplerConfig,
    StageTimings,
};
use onebit::IterControl;

fn spins(n: usize) -> impl Strategy<Value = SpinVector> {
    prop::collection::vec(prop::bool::ANY, n)
        .prop_map(|b| SpinVector::new(b.into_iter().map(|x| if x { 1 } else { -1 }).collect()).unwrap())
}

/// (params, channel, g, f) with dims in 1..=6.
fn system() -> impl Strategy<Value = (SystemParams, ChannelMatrix, SpinVector, SpinVector)> {
    (1usize..=6, 1usize..=6, any::<u64>(), 0.1f64..10.0, 0.1f64..10.0).prop_flat_map(|(n_t, n_r, seed, p, s2)| {
        let params = SystemParams::new(n_t, n_r, p, s2).unwrap();
        let h = generate_channel(&params, seed);
        (Just(params), Just(h), spins(n_r), spins(n_t))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snr_is_sign_symmetric_bitwise((p, h, g, f) in system()) {
        let base = evaluate_snr(&p, &h, &g, &f).unwrap();
        prop_assert_eq!(base.to_bits(), evaluate_snr(&p, &h, &-g.clone(), &f).unwrap().to_bits());
        prop_assert_eq!(base.to_bits(), evaluate_snr(&p, &h, &g, &-f.clone()).unwrap().to_bits());
        prop_assert_eq!(base.to_bits(), evaluate_snr(&p, &h, &-g, &-f).unwrap().to_bits());
    }

    #[test]
    fn snr_respects_eigen_bound((p, h, g, f) in system()) {
        let bound = p.power() * leading_triplet_default(&h).unwrap().sigma1_sq / p.noise_var();
        prop_assert!(evaluate_snr(&p, &h, &g, &f).unwrap() <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn heuristics_never_beat_exhaustive_search((p, h, g, _f) in system()) {
        let es = exhaustive_search(&p, &h).unwrap().snr();
        let svd = svd_sign_design(&p, &h).unwrap().snr();
        let rq = rq_design(&p, &h, &IterControl::default(), &g).unwrap();
        prop_assert!(svd <= es);
        prop_assert!(rq.snr() <= es);
        let trace = rq.trace.as_ref().unwrap();
        prop_assert_eq!(trace.len(), rq.iterations_used);
        prop_assert_eq!(*trace.last().unwrap(), rq.snr());
    }

    #[test]
    fn spin_binary_round_trip(s in (1usize..40).prop_flat_map(spins)) {
        let b = spin_to_binary(&s);
        prop_assert_eq!(binary_to_spin(&b).unwrap(), s);
        prop_assert_eq!(BinaryVector::parse(&b.to_string()).unwrap(), b.clone());
        prop_assert_eq!(b.complement().complement(), b);
    }

    #[test]
    fn qubo_energy_is_complement_invariant((_p, h, g, f) in system()) {
        let inst = build_qubo_from_gram(&onebit::model::objective_gram_f(&h, &g).unwrap()).unwrap();
        let b = spin_to_binary(&f);
        let e = inst.energy(b.as_slice());
        let ec = inst.energy(b.complement().as_slice());
        prop_assert!((e - ec).abs() <= 1e-12 * inst.n() as f64);
        prop_assert!(inst.coeffs().iter().all(|c| c.abs() <= 1.0));
    }

    #[test]
    fn exchange_request_round_trip((_p, h, g, _f) in system(), reads in 1u64..5000, seed in any::<Option<u64>>()) {
        let inst = build_qubo_from_gram(&onebit::model::objective_gram_f(&h, &g).unwrap()).unwrap();
        let req = ExchangeRequest::from_instance(&inst, reads, 20.0, 3.0, seed);
        let back = parse_request(&req.to_json()).unwrap();
        prop_assert_eq!(&back, &req);
        let inst2 = back.to_instance().unwrap();
        for idx in 0..(1u64 << inst.n()).min(64) {
            let b = SpinVector::from_index(inst.n(), idx, 0);
            let bits = spin_to_binary(&b);
            let (e1, e2) = (inst.energy(bits.as_slice()), inst2.energy(bits.as_slice()));
            prop_assert!((e1 - e2).abs() <= 1e-12);
        }
    }

    #[test]
    fn sampler_output_survives_exchange((_p, h, g, _f) in system(), reads in 1u64..200, seed in any::<u64>()) {
        let inst = build_qubo_from_gram(&onebit::model::objective_gram_f(&h, &g).unwrap()).unwrap();
        let cfg = SamplerConfig::new(reads, seed, 10, (0.1, 10.0)).unwrap();
        let ss = solve_sa(&inst, &cfg);
        prop_assert_eq!(ss.total_reads(), reads);
        ss.validate(&inst).unwrap();
        let energies: Vec<f64> = ss.samples().iter().map(|s| s.energy).collect();
        prop_assert!(energies.windows(2).all(|w| w[0] <= w[1]));
        let json = ExchangeResponse::from_sample_set(&ss).to_json();
        let back = parse_response(&json).unwrap().into_sample_set(&inst, reads).unwrap();
        prop_assert_eq!(back.samples(), ss.samples());
    }

    #[test]
    fn from_reads_counts_every_read(reads in prop::collection::vec(prop::collection::vec(0u8..2, 3), 1..50)) {
        let inst = build_qubo_from_gram(&ndarray::array![[2.0, 1.0, 0.0], [1.0, 1.0, -0.5], [0.0, -0.5, 3.0]]).unwrap();
        let n = reads.len() as u64;
        let ss = SampleSet::from_reads(
            &inst,
            reads.into_iter().map(|b| BinaryVector::new(b).unwrap()),
            StageTimings::new(),
        );
        prop_assert_eq!(ss.total_reads(), n);
        ss.validate(&inst).unwrap();
        let p: f64 = ss.ranked_distribution().iter().map(|r| r.2).sum();
        prop_assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel_json_round_trip(n_r in 1usize..5, n_t in 1usize..5, seed in any::<u64>()) {
        let h = generate_channel(&SystemParams::new(n_t, n_r, 1.0, 1.0).unwrap(), seed);
        let json = serde_json::to_string(&h.to_document()).unwrap();
        let back = ChannelMatrix::from_json(&json).unwrap();
        prop_assert_eq!(back.entries(), h.entries());
        prop_assert_eq!(back.seed(), Some(seed));
    }

    #[test]
    fn parsers_never_panic(text in ".{0,200}") {
        let _ = parse_request(&text);
        let _ = parse_response(&text);
        let _ = ChannelMatrix::from_json(&text);
        let _ = parse_config_toml(&text);
    }

    #[test]
    fn request_parser_rejects_out_of_range_indices(n in 1usize..10, i in 0usize..20, j in 0usize..20) {
        let doc = serde_json::json!({
            "n": n, "sense": "min", "coeffs": [[i, j, 1.0]],
            "num_reads": 1, "annealing_time_us": 1.0, "ferromagnetic_coupling": 3.0
        });
        let ok = i <= j && j < n;
        prop_assert_eq!(parse_request(&doc.to_string()).is_ok(), ok);
    }
}

#[test]
fn scalar_channel_snr() {
    let p = SystemParams::new(1, 1, 1.0, 1.0).unwrap();
    let h = ChannelMatrix::new(ndarray::array![[Complex64::new(0.0, 2.0)]]).unwrap();
    let one = SpinVector::ones(1);
    assert_eq!(evaluate_snr(&p, &h, &one, &one).unwrap(), 4.0);
}
