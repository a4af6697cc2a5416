//! Recover L and S from 75% as many random linear measurements as entries.

use lowrank::cpcp::solve_cpcp;
use lowrank::data::{generate_planted, PlantedSpec};
use lowrank::measure::{draw_random_subspace, subspace_forward};
use lowrank::metrics::relative_error;
use lowrank::SolverConfig;

fn main() -> lowrank::Result<()> {
    let (m, n) = (30, 30);
    let p = 3 * m * n / 4;
    let problem = generate_planted(&PlantedSpec::new(m, n, 3).spikes(0.05, 1.0).seed(1))?;
    let op = draw_random_subspace(m, n, p, 101)?;
    let y = subspace_forward(&problem.d_obs, &op)?;

    let result = solve_cpcp(&y, &op, &SolverConfig::cpcp_default())?;
    let last = result.trace.last().unwrap();
    println!("{p} measurements of a {m}x{n} matrix");
    println!("{} after {} iterations, change ratio {:.2e}", result.termination, result.iterations(), last.stop_ratio.unwrap_or(f64::NAN));
    println!("relative error of L: {:.3e}", relative_error(&result.low_rank(), &problem.l0)?);
    Ok(())
}
