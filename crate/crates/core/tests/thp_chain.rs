//! End-to-end checks of the precoding chain: round trips, power, the
//! interference decomposition and detection.

use rand::Rng;
use thplab::analysis::scaling_targets;
use thplab::channel::{complex_gaussian, RngStream, SystemParams};
use thplab::experiments::{perfect_feedback, thp_sum_rate};
use thplab::numerics::{ComplexVector, C64};
use thplab::quantizer::{draw_feedback, Backend, CellDraw};
use thplab::scheduler::greedy_select;
use thplab::thp::{
    build_precoders, link_level, quantization_interference, receiver_detect, th_encode, transmit_receive_with_noise,
    Constellation,
};

fn random_symbols<R: Rng>(c: &Constellation, len: usize, rng: &mut R) -> (Vec<usize>, ComplexVector) {
    let idx: Vec<usize> = (0..len).map(|_| rng.gen_range(0..c.points().len())).collect();
    let s = ComplexVector::new(idx.iter().map(|&i| c.points()[i]).collect()).unwrap();
    (idx, s)
}

#[test]
fn noise_free_perfect_csi_round_trip() {
    let p = SystemParams::with_power_db(20, 4, 8, 10.0, 16).unwrap();
    let stream = RngStream::new(31, 0);
    let c = Constellation::new(16).unwrap();
    for t in 0..50 {
        let mut rng = stream.rng(t);
        let csi = draw_feedback(&p, Backend::Perfect, &mut rng).unwrap();
        let s = greedy_select(&csi, &p).unwrap();
        let pre = build_precoders(&s, &csi, &p).unwrap();
        let channels: Vec<ComplexVector> = s.selected(&csi).iter().map(|q| q.channel()).collect();
        for _ in 0..20 {
            let (idx, sym) = random_symbols(&c, 4, &mut rng);
            let (x, v) = th_encode(&sym, &pre.b, pre.tau).unwrap();
            let y = transmit_receive_with_noise(&x, &pre, &channels, &[C64::new(0.0, 0.0); 4], &p).unwrap();
            for k in 0..4 {
                assert!((y[k] - v[k]).norm() < 1e-9);
                assert_eq!(receiver_detect(y[k], pre.tau, &c), idx[k]);
            }
        }
    }
}

#[test]
fn modulo_output_power_approaches_its_uniform_value() {
    // Averaged over channel realizations, x_k for k ≥ 2 has power close to
    // the uniform-square value M/(M−1); the first user sends s itself.
    let p = SystemParams::with_power_db(20, 4, 8, 15.0, 16).unwrap();
    let stream = RngStream::new(32, 0);
    let c = Constellation::new(16).unwrap();
    let (realizations, symbols) = (100, 1000);
    let mut power = [0.0; 4];
    for t in 0..realizations {
        let mut rng = stream.rng(t);
        let csi = draw_feedback(&p, Backend::Rvq, &mut rng).unwrap();
        let s = greedy_select(&csi, &p).unwrap();
        let pre = build_precoders(&s, &csi, &p).unwrap();
        for _ in 0..symbols {
            let (_, sym) = random_symbols(&c, 4, &mut rng);
            let (x, _) = th_encode(&sym, &pre.b, pre.tau).unwrap();
            for k in 0..4 {
                power[k] += x[k].norm_sqr() / (realizations * symbols) as f64;
            }
        }
    }
    assert!((power[0] - 1.0).abs() < 0.02);
    for (k, pk) in power.iter().enumerate().skip(1) {
        assert!((pk / (16.0 / 15.0) - 1.0).abs() < 0.03, "position {k}: {pk}");
    }
}

#[test]
fn received_signal_decomposes_into_interference_and_noise() {
    let p = SystemParams::with_power_db(30, 4, 6, 20.0, 64).unwrap();
    let stream = RngStream::new(33, 0);
    let c = Constellation::new(64).unwrap();
    for t in 0..50 {
        let mut rng = stream.rng(t);
        let csi = draw_feedback(&p, Backend::Rvq, &mut rng).unwrap();
        let s = greedy_select(&csi, &p).unwrap();
        let pre = build_precoders(&s, &csi, &p).unwrap();
        let sel = s.selected(&csi);
        let channels: Vec<ComplexVector> = sel.iter().map(|q| q.channel()).collect();
        for _ in 0..20 {
            let (_, sym) = random_symbols(&c, 4, &mut rng);
            let (x, v) = th_encode(&sym, &pre.b, pre.tau).unwrap();
            let noise: Vec<C64> = (0..4).map(|_| complex_gaussian(&mut rng)).collect();
            let y = transmit_receive_with_noise(&x, &pre, &channels, &noise, &p).unwrap();
            let e = quantization_interference(&x, &pre, &sel).unwrap();
            for k in 0..4 {
                assert!((y[k] - v[k] - noise[k] * pre.gains[k] - e[k]).norm() < 1e-10);
            }
        }
    }
}

fn mean_ser(p: &SystemParams, backend: Backend, seed: u64) -> f64 {
    let stream = RngStream::new(seed, 0);
    let runs = 5;
    (0..runs)
        .map(|t| {
            let mut rng = stream.rng(t);
            let csi = draw_feedback(p, backend, &mut rng).unwrap();
            let s = greedy_select(&csi, p).unwrap();
            link_level(&s, &csi, p, 20_000, &mut rng).unwrap().symbol_error_rate
        })
        .sum::<f64>()
        / runs as f64
}

#[test]
fn symbol_errors_vanish_with_fine_feedback_at_high_snr() {
    let qpsk = SystemParams::with_power_db(20, 4, 16, 30.0, 4).unwrap();
    assert!(mean_ser(&qpsk, Backend::Rvq, 34) < 1e-3);
    // With 16-QAM the error rate falls as P and B grow together.
    let steps = [(20.0, 10, Backend::Rvq), (30.0, 16, Backend::Rvq), (40.0, 20, Backend::CellApprox)];
    let sers: Vec<f64> = steps
        .iter()
        .map(|&(db, bits, backend)| mean_ser(&SystemParams::with_power_db(20, 4, bits, db, 16).unwrap(), backend, 34))
        .collect();
    assert!(sers.windows(2).all(|w| w[1] < w[0]), "{sers:?}");
    assert!(sers[2] < 1e-3, "{sers:?}");
}

#[test]
fn zero_cell_parameter_reproduces_perfect_csi() {
    let p = SystemParams::with_power_db(30, 4, 8, 15.0, 256).unwrap();
    let stream = RngStream::new(35, 0);
    for t in 0..50 {
        let mut rng = stream.rng(t);
        let draws: Vec<CellDraw> = (0..30).map(|_| CellDraw::sample(4, &mut rng)).collect();
        let exact: Vec<_> = draws.iter().enumerate().map(|(k, d)| d.csi(k, 0.0)).collect();
        assert!(exact.iter().all(|q| q.sin_sqr == 0.0));
        let perfect = perfect_feedback(&exact).unwrap();
        let a = thp_sum_rate(&exact, &p).unwrap();
        let b = thp_sum_rate(&perfect, &p).unwrap();
        assert!((a - b).abs() < 1e-9 * b, "{a} vs {b}");
        // Coarser cells only lose rate on the same draw.
        let coarse: Vec<_> = draws.iter().enumerate().map(|(k, d)| d.csi(k, p.delta())).collect();
        assert!(thp_sum_rate(&coarse, &p).unwrap() <= a + 1e-9);
    }
}

#[test]
fn quantized_sum_rate_stays_below_the_broadcast_ceiling() {
    let p = SystemParams::with_power_db(100, 4, 8, 15.0, 256).unwrap();
    let ceiling = scaling_targets(100.0, &p).unwrap().bc_ceiling;
    let stream = RngStream::new(36, 0);
    for t in 0..500 {
        let csi = draw_feedback(&p, Backend::Rvq, &mut stream.rng(t)).unwrap();
        let r = thp_sum_rate(&csi, &p).unwrap();
        assert!(r > 0.0 && r <= ceiling, "trial {t}: {r} vs {ceiling}");
    }
}
