//! Matrix completion on ratings with a 9:1 train/test split.
//!
//! With no argument a synthetic 1-5 star dataset is generated. Otherwise the
//! argument is a ratings file (`user item rating`, MovieLens `::` lines also work).

use lowrank::data::{generate_ratings, load_ratings, RatingSpec};
use lowrank::metrics::rmse;
use lowrank::rmc::solve_mc;
use lowrank::{DenseMatrix, SolverConfig};

fn main() -> lowrank::Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(path) => load_ratings(path)?,
        None => generate_ratings(&RatingSpec {
            users: 300,
            items: 200,
            rank: 5,
            density: 0.2,
            noise: 0.3,
            seed: 4,
        })?,
    };
    let split = ds.split(0);
    let (d, mask) = ds.to_matrix(&split.train)?;
    println!("{} users, {} items, {} train, {} test", ds.num_users, ds.num_items, split.train.len(), split.test.len());

    let mean = split.train.iter().map(|r| r.value).sum::<f64>() / split.train.len() as f64;
    let baseline = DenseMatrix::from_fn(ds.num_users, ds.num_items, |_, _| mean);
    println!("global mean      RMSE {:.4}", rmse(&baseline, &split.test)?);

    // The default trace-norm weight sqrt(max(m, n)) is tuned for sparse
    // outliers and is far too strong for completion.
    for rank in [5, 10, 20] {
        let cfg = SolverConfig::default().with_rank(rank).with_lambda(3.0);
        let result = solve_mc(&d, &mask, &cfg)?;
        println!("d = {rank:<3}          RMSE {:.4}", rmse(&result.low_rank(), &split.test)?);
    }
    Ok(())
}
