#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use netcs::experiment::{assemble_row_system, simulate, ExperimentPlan, RowSystem};
use netcs::network::{random_network, Network};
use netcs::recovery::{check_uniqueness, UniquenessReport};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FEASIBLE: f64 = 1e-8;

pub struct RowCase {
    pub net: Network,
    pub sys: RowSystem,
    pub k: usize,
    pub report: UniquenessReport,
}

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone().svd(true, true).solve(b, 1e-14).expect("svd solve")
}

fn rel_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a * x - b).norm() / b.norm().max(1.0)
}

/// Exhaustive search over supports of `x1` with every column of `A2` kept,
/// solving the unprojected joint system. Returns `None` when the sparsest
/// feasible support is not unique or nothing with at most `k` entries fits.
pub fn joint_l0(a1: &DMatrix<f64>, a2: &DMatrix<f64>, b: &DVector<f64>, k: usize) -> Option<(DVector<f64>, DVector<f64>)> {
    let n1 = a1.ncols();
    let n2 = a2.ncols();
    for size in 0..=k.min(n1) {
        let mut found: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
        for subset in subsets(n1, size) {
            let mut cols: Vec<DVector<f64>> = subset.iter().map(|&c| a1.column(c).into_owned()).collect();
            cols.extend(a2.column_iter().map(|c| c.into_owned()));
            let a = DMatrix::from_columns(&cols);
            let z = lstsq(&a, b);
            if rel_residual(&a, &z, b) < FEASIBLE && subset.iter().enumerate().all(|(t, _)| z[t].abs() > 1e-9) {
                let mut x1 = DVector::zeros(n1);
                for (t, &c) in subset.iter().enumerate() {
                    x1[c] = z[t];
                }
                found.push((x1, z.rows(size, n2).into_owned()));
            }
        }
        match found.len() {
            0 => continue,
            1 => return found.pop(),
            _ => return None,
        }
    }
    None
}

pub fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for c in start..n {
            cur.push(c);
            rec(c + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::new(), &mut out);
    out
}

pub fn random_plans(p: usize, m: usize, l: usize, rng: &mut ChaCha8Rng) -> Vec<ExperimentPlan> {
    (0..m)
        .map(|_| {
            let mut inputs = index::sample(rng, p, l).into_vec();
            inputs.sort_unstable();
            let magnitudes = inputs.iter().map(|_| rng.random_range(0.5..=1.5)).collect();
            ExperimentPlan::new(inputs, magnitudes)
        })
        .collect()
}

/// Random network, random experiments with at least `2k + 1` of them, and a
/// row whose input was applied (so its `A2` column is nonzero).
pub fn random_row_case(seed: u64) -> RowCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.random_range(4..=12usize);
    let k = rng.random_range(1..=3usize.min(p - 1));
    let net = random_network(p, k, 0.5, rng.random()).expect("network");
    let m = rng.random_range(2 * k + 1..=(2 * k + 1).max(p + 2));
    let l = rng.random_range(1..=p);
    let plans = random_plans(p, m, l, &mut rng);
    let data = simulate(&net, &plans).expect("simulate");
    let perturbed: Vec<usize> = (0..p).filter(|&i| data.usage[i] > 0).collect();
    let row = perturbed[rng.random_range(0..perturbed.len())];
    let sys = assemble_row_system(&data, row).expect("row system");
    let report = check_uniqueness(&sys.a1, &sys.a2, k, 1e-8);
    RowCase { net, sys, k, report }
}

pub fn true_x(case: &RowCase) -> (DVector<f64>, f64) {
    let q0 = case.net.q0();
    let i = case.sys.row;
    let row: Vec<f64> = q0.row(i).iter().copied().collect();
    (case.sys.gather(&row), case.net.p0()[(i, i)])
}

pub fn residual(a1: &DMatrix<f64>, a2: &DMatrix<f64>, b: &DVector<f64>, x1: &DVector<f64>, x2: &DVector<f64>) -> f64 {
    (a1 * x1 + a2 * x2 - b).norm() / b.norm().max(1.0)
}

pub fn nnz(x: &DVector<f64>) -> usize {
    x.iter().filter(|v| **v != 0.0).count()
}
