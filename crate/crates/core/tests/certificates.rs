mod common;

use common::{engine, example_one_midpoint, example_one_qp, neighborhood_improvement, piece_optimum};
use lpcc_core::gen::gen_random_qp;
use lpcc_core::model::PointTriple;
use lpcc_core::oracle::lpcc_relaxation;
use lpcc_core::pip::Certificate;
use lpcc_core::qp::{qp_local_min_certificate, qp_to_lpcc, KktTriple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIG_M: f64 = 100.0;

/// KKT triples of `qp` found as piece optima of random objectives and of the
/// true objective.
fn kkt_triples(qp: &lpcc_core::qp::QpInstance, count: usize, rng: &mut ChaCha8Rng) -> Vec<KktTriple> {
    let lpcc = qp_to_lpcc(qp, BIG_M).unwrap();
    let lp = lpcc_relaxation(&lpcc);
    let cols = lp.objective.len();
    let mut out: Vec<PointTriple> = Vec::new();
    let mut tries = 0;
    while out.len() < count && tries < 50 * count {
        tries += 1;
        let zero_y: Vec<bool> = (0..lpcc.m()).map(|_| rng.gen_bool(0.5)).collect();
        let objective: Vec<f64> = if tries % 2 == 0 {
            lp.objective.clone()
        } else {
            (0..cols).map(|_| rng.gen_range(-1.0..=1.0)).collect()
        };
        if let Some(t) = piece_optimum(&lpcc, &zero_y, &objective) {
            if !out.iter().any(|o| o.distance_inf(&t) < 1e-9) {
                out.push(t);
            }
        }
    }
    out.iter().map(KktTriple::from_point).collect()
}

#[test]
fn certified_points_have_no_improving_neighbor() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut certified, mut rejected) = (0, 0);
    for seed in 0..6u64 {
        let n = 2 + (seed as usize % 3);
        let m = (2 * n + 1).min(8);
        let qp = gen_random_qp(n, m, false, seed).unwrap();
        for t in kkt_triples(&qp, 8, &mut rng) {
            let c = qp_local_min_certificate(&qp, BIG_M, &t, None, &mut engine(), 60.0).unwrap();
            match c {
                Certificate::Certified => {
                    certified += 1;
                    let gain = neighborhood_improvement(&qp, &t.x, 1e-3, 400, &mut rng);
                    assert!(gain <= 1e-9, "seed {seed}: certified {:?} improves by {gain}", t.x);
                }
                Certificate::NotCertified => rejected += 1,
                Certificate::Indeterminate => panic!("engine ran out of time"),
            }
        }
    }
    assert!(certified > 0 && rejected > 0, "certified {certified}, rejected {rejected}");
}

#[test]
fn interior_kkt_point_of_a_concave_problem_is_never_certified() {
    let qp = example_one_qp();
    let c = qp_local_min_certificate(&qp, BIG_M, &example_one_midpoint(), None, &mut engine(), 60.0).unwrap();
    assert_eq!(c, Certificate::NotCertified);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(neighborhood_improvement(&qp, &[0.5], 1e-3, 40, &mut rng) > 1e-9);
}
