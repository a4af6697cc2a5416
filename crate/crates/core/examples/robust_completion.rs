//! Robust completion: 30% of entries missing, 10% of the rest corrupted.
//! Prints the feasibility residual every ten iterations.

use lowrank::data::{generate_planted, PlantedSpec};
use lowrank::metrics::{outlier_auc, relative_error};
use lowrank::rmc::solve_rmc_observed;
use lowrank::SolverConfig;

fn main() -> lowrank::Result<()> {
    let problem = generate_planted(&PlantedSpec::new(200, 200, 5).spikes(0.1, 1.0).observed(0.7).seed(3))?;
    let cfg = SolverConfig::default().with_rank(10).with_lambda(200f64.sqrt());

    let mut max_multiplier: f64 = 0.0;
    let result = solve_rmc_observed(&problem.d_obs, &problem.mask, &cfg, |it| {
        max_multiplier = max_multiplier.max(it.y.max_abs());
    })?;

    for rec in result.trace.iter().filter(|r| r.iter % 10 == 0) {
        println!("iter {:4}  residual {:.3e}  alpha {:.3e}", rec.iter, rec.residual, rec.alpha);
    }
    println!("{} after {} iterations", result.termination, result.iterations());
    println!("relative error {:.3e}", relative_error(&result.low_rank(), &problem.l0)?);
    println!("outlier AUC    {:.4}", outlier_auc(&result.s, &problem.s0, &problem.mask)?);
    println!("max |Y|        {max_multiplier:.6}");
    Ok(())
}
