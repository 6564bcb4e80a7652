use clap::Args;
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillgap::nn::{grad_check, Init, LinearHead, TcnConfig, TcnHead};
use skillgap::ot::{emd_exact, emd_sinkhorn, ground_cost, PointCloud, SinkhornOptions};
use skillgap::Matrix;

use crate::error::CliError;

/// Quick numerical checks of the solvers and the reverse passes.
#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PointCloud<f64> {
    PointCloud::uniform(Matrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))).expect("finite uniform cloud")
}

fn assignment_oracle(rng: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let d = rng.random_range(1..=4);
        let plan = emd_exact(&cloud(rng, n, d), &cloud(rng, n, d))?;
        let best = (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().map(|(i, &j)| plan.ground_cost[(i, j)]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            / n as f64;
        worst = worst.max((plan.cost - best).abs());
    }
    Ok(Check { name: "exact EMD vs assignment oracle", passed: worst <= 1e-9, detail: format!("max |diff| {worst:.1e}") })
}

fn metric_axioms(rng: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..30 {
        let n = rng.random_range(1..=8);
        let (a, b, c) = (cloud(rng, n, 3), cloud(rng, n, 3), cloud(rng, n, 3));
        let ab = emd_exact(&a, &b)?.cost;
        let ba = emd_exact(&b, &a)?.cost;
        let slack = emd_exact(&a, &c)?.cost - ab - emd_exact(&b, &c)?.cost;
        worst = worst.max(slack).max((ab - ba).abs() - 1e-9).max(emd_exact(&a, &a)?.cost);
    }
    Ok(Check { name: "EMD symmetry, identity, triangle", passed: worst <= 1e-7, detail: format!("worst violation {worst:.1e}") })
}

fn sinkhorn_fidelity(rng: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let (mut worst_rel, mut worst_marg) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let (a, b) = (cloud(rng, 32, 4), cloud(rng, 32, 4));
        let exact = emd_exact(&a, &b)?.cost;
        let eps = 1e-3 * ground_cost(&a, &b)?.mean_value();
        let r = emd_sinkhorn(&a, &b, &SinkhornOptions::new(eps))?;
        worst_rel = worst_rel.max((r.plan.cost - exact).abs() / exact);
        worst_marg = worst_marg.max(if r.converged { r.marginal_error } else { f64::INFINITY });
    }
    Ok(Check {
        name: "Sinkhorn vs exact at eps = 1e-3 mean cost",
        passed: worst_rel <= 0.02 && worst_marg <= 1e-9,
        detail: format!("max rel {worst_rel:.1e}, max marginal {worst_marg:.1e}"),
    })
}

fn gradients(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let label = rng.random_range(0..2);
        let linear = LinearHead::<f64>::new(4, 2, Init::Uniform, rng);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(grad_check(&linear, x.as_slice(), label, 1e-5));
        for len in [1, 5, 40] {
            let tcn = TcnHead::<f64>::new(4, 2, &TcnConfig { layers: 3, channels: 5 }, Init::Uniform, rng);
            let seq = Matrix::from_fn(len, 4, |_, _| rng.random_range(-1.0..1.0));
            worst = worst.max(grad_check(&tcn, &seq, label, 3e-6));
        }
    }
    Check { name: "analytic vs finite-difference gradients", passed: worst <= 1e-4, detail: format!("max rel {worst:.1e}") }
}

pub fn run(args: &SelftestArgs) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let checks = [assignment_oracle(&mut rng)?, metric_axioms(&mut rng)?, sinkhorn_fidelity(&mut rng)?, gradients(&mut rng)];
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}
