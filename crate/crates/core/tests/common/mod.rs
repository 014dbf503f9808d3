#![allow(dead_code)]

use lpcc_core::bb::{BbConfig, BbEngine};
use lpcc_core::clock::StdClock;
use lpcc_core::lp::{LpStatus, LpTolerances, Simplex};
use lpcc_core::model::{LpccInstance, PointTriple};
use lpcc_core::oracle::lpcc_relaxation;
use lpcc_core::qp::{qp_to_lpcc, KktTriple, QpInstance};
use lpcc_core::Matrix;
use rand::Rng;

/// `min -½(x² - x)` on `[0, 1]`, rows `x >= 0` and `-x >= -1`.
pub fn example_one_qp() -> QpInstance {
    QpInstance::new(
        Matrix::from_vec(1, 1, vec![-1.0]).unwrap(),
        vec![0.5],
        Matrix::from_vec(2, 1, vec![1.0, -1.0]).unwrap(),
        vec![0.0, -1.0],
    )
    .unwrap()
}

pub fn example_one_lpcc() -> LpccInstance {
    qp_to_lpcc(&example_one_qp(), 10.0).unwrap()
}

/// The interior KKT point `x = ½` with zero multipliers.
pub fn example_one_midpoint() -> KktTriple {
    KktTriple {
        x: vec![0.5],
        s: vec![0.5, 0.5],
        lambda: vec![0.0, 0.0],
    }
}

pub fn engine() -> BbEngine<StdClock> {
    BbEngine::new(BbConfig::default(), StdClock::default())
}

/// Optimum of `objective` over the piece where pair `i` has `y_i = 0` when
/// `zero_y[i]` and `z_i = 0` otherwise.
pub fn piece_optimum(inst: &LpccInstance, zero_y: &[bool], objective: &[f64]) -> Option<PointTriple> {
    let (n, m) = (inst.n(), inst.m());
    let mut model = lpcc_relaxation(inst);
    model.objective = objective.to_vec();
    for i in 0..m {
        if zero_y[i] {
            model.upper[n + i] = 0.0;
        } else {
            model.upper[n + m + i] = 0.0;
        }
    }
    let mut lp = Simplex::new(&model, LpTolerances::default()).unwrap();
    let sol = lp.solve().unwrap();
    (sol.status == LpStatus::Optimal).then(|| {
        PointTriple::new(sol.x[..n].to_vec(), sol.x[n..n + m].to_vec(), sol.x[n + m..].to_vec())
    })
}

/// A feasible triple: the optimum of a random objective over a random piece,
/// retried until some piece is feasible.
pub fn random_feasible_triple<R: Rng>(inst: &LpccInstance, rng: &mut R) -> PointTriple {
    let cols = inst.n() + 2 * inst.m();
    loop {
        let zero_y: Vec<bool> = (0..inst.m()).map(|_| rng.gen_bool(0.5)).collect();
        let objective: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if let Some(t) = piece_optimum(inst, &zero_y, &objective) {
            return t;
        }
    }
}

/// Largest decrease of `q` found at feasible points within `radius` (sup
/// norm) of `x`: random directions are clipped to the feasible region and
/// the box, then evaluated at several step lengths.
pub fn neighborhood_improvement<R: Rng>(qp: &QpInstance, x: &[f64], radius: f64, samples: usize, rng: &mut R) -> f64 {
    let n = x.len();
    let base = lpcc_core::qp::qp_objective(qp, x);
    let slack = qp.slack(x);
    let mut best = 0.0f64;
    for s in 0..samples {
        let dir: Vec<f64> = (0..n)
            .map(|j| {
                // every fourth sample moves along a single coordinate
                if s % 4 == 0 {
                    if j == s / 4 % n {
                        if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
                    } else {
                        0.0
                    }
                } else {
                    rng.gen_range(-1.0..=1.0)
                }
            })
            .collect();
        let scale = dir.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            continue;
        }
        let mut t_max = radius / scale;
        for i in 0..qp.m() {
            let rate: f64 = qp.d_mat.row(i).iter().zip(&dir).map(|(a, b)| a * b).sum();
            if rate < 0.0 {
                t_max = t_max.min(slack[i].max(0.0) / -rate);
            }
        }
        for frac in [1.0, 0.5, 0.1, 0.01, 1e-3] {
            let t = t_max * frac;
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            best = best.max(base - lpcc_core::qp::qp_objective(qp, &y));
        }
    }
    best
}
