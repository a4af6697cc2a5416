//! Write a planted problem to text files, solve from disk, and score the result.

use lowrank::data::{generate_planted, PlantedSpec};
use lowrank::io::{load_mask, load_matrix, save_mask, save_matrix, save_trace};
use lowrank::metrics::{outlier_auc, relative_error};
use lowrank::rmc::solve_rmc;
use lowrank::SolverConfig;

fn main() -> lowrank::Result<()> {
    let dir = std::env::temp_dir().join("lowrank-example");
    std::fs::create_dir_all(&dir).map_err(|source| lowrank::Error::Io { path: dir.clone(), source })?;

    let problem = generate_planted(&PlantedSpec::new(80, 60, 3).spikes(0.05, 1.0).observed(0.8).seed(5))?;
    save_matrix(dir.join("d_obs.txt"), &problem.d_obs)?;
    save_mask(dir.join("mask.txt"), &problem.mask)?;

    let d_obs = load_matrix(dir.join("d_obs.txt"))?;
    let mask = load_mask(dir.join("mask.txt"))?;
    let result = solve_rmc(&d_obs, &mask, &SolverConfig::default().with_rank(6))?;
    save_matrix(dir.join("l.txt"), &result.low_rank())?;
    save_trace(dir.join("trace.csv"), &result.trace, false)?;

    println!("files in {}", dir.display());
    println!("relerr {:.6e}", relative_error(&result.low_rank(), &problem.l0)?);
    println!("auc    {:.6}", outlier_auc(&result.s, &problem.s0, &problem.mask)?);
    Ok(())
}
