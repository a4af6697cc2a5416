//! Separate a fully observed low-rank matrix from sparse spikes.
//!
//! cargo run --release --example rpca_planted

use lowrank::data::{generate_planted, PlantedSpec};
use lowrank::metrics::{outlier_auc, relative_error};
use lowrank::rmc::solve_rpca;
use lowrank::SolverConfig;

fn main() -> lowrank::Result<()> {
    let problem = generate_planted(&PlantedSpec::new(150, 120, 4).spikes(0.1, 1.0).seed(1))?;
    let result = solve_rpca(&problem.d_obs, &SolverConfig::default().with_rank(8))?;

    println!("{} after {} iterations", result.termination, result.iterations());
    println!("relative error of L: {:.3e}", relative_error(&result.low_rank(), &problem.l0)?);
    println!("outlier AUC:         {:.4}", outlier_auc(&result.s, &problem.s0, &problem.mask)?);
    Ok(())
}
