//! Start with an overestimated rank and let the solver shrink it.

use lowrank::data::{generate_planted, PlantedSpec};
use lowrank::rmc::solve_rmc;
use lowrank::SolverConfig;

fn main() -> lowrank::Result<()> {
    let problem = generate_planted(&PlantedSpec::new(200, 200, 5).spikes(0.1, 1.0).observed(0.7).seed(2))?;
    for start in [6, 10, 15] {
        let cfg = SolverConfig {
            adjust_rank: true,
            ..SolverConfig::default().with_rank(start).with_lambda(200f64.sqrt())
        };
        let result = solve_rmc(&problem.d_obs, &problem.mask, &cfg)?;
        match &result.rank_reduction {
            Some(r) => println!("d={start}: reduced {} -> {} at iteration {} (gap {:.2e})", r.from, r.to, r.iter, r.gap),
            None => println!("d={start}: no reduction"),
        }
    }
    Ok(())
}
