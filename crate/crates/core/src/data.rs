//! Synthetic problem generators and rating-data ingestion.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::svd_thin;
use crate::matrix::DenseMatrix;
use crate::measure::{mask_project, ObservationMask};

/// A low-rank plus sparse instance with known ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedProblem {
    /// Ground-truth low-rank matrix, exactly rank `rank`.
    pub l0: DenseMatrix,
    /// Planted spikes of magnitude `±magnitude`.
    pub s0: DenseMatrix,
    pub mask: ObservationMask,
    /// `P_Ω(l0 + s0)`.
    pub d_obs: DenseMatrix,
    pub rank: usize,
    pub seed: u64,
}

/// Parameters for [`generate_planted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Probability that an entry carries a spike.
    pub spike_frac: f64,
    pub magnitude: f64,
    /// Probability that an entry is observed.
    pub obs_frac: f64,
    pub seed: u64,
}

impl PlantedSpec {
    pub fn new(rows: usize, cols: usize, rank: usize) -> Self {
        Self {
            rows,
            cols,
            rank,
            spike_frac: 0.0,
            magnitude: 1.0,
            obs_frac: 1.0,
            seed: 0,
        }
    }

    pub fn spikes(mut self, frac: f64, magnitude: f64) -> Self {
        self.spike_frac = frac;
        self.magnitude = magnitude;
        self
    }

    pub fn observed(mut self, frac: f64) -> Self {
        self.obs_frac = frac;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Draws a planted instance.
///
/// `l0 = A Bᵀ / √r` with standard normal `A` (`m x r`) and `B` (`n x r`), so
/// entries have unit variance. Each entry independently carries a spike with
/// probability `spike_frac` (uniform random sign) and is observed with
/// probability `obs_frac`. Random draws happen in a fixed order, so equal
/// seeds give bit-identical problems.
pub fn generate_planted(spec: &PlantedSpec) -> Result<PlantedProblem> {
    let PlantedSpec {
        rows: m,
        cols: n,
        rank: r,
        spike_frac,
        magnitude,
        obs_frac,
        seed,
    } = *spec;
    if m == 0 || n == 0 || r == 0 || r > m.min(n) {
        return Err(Error::Argument(format!(
            "need 1 <= rank <= min(rows, cols), got rank {r} for {m}x{n}"
        )));
    }
    for (name, f) in [("spike_frac", spike_frac), ("obs_frac", obs_frac)] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::Argument(format!("{name} must lie in [0, 1], got {f}")));
        }
    }
    if !magnitude.is_finite() || magnitude < 0.0 {
        return Err(Error::Argument(format!(
            "spike magnitude must be finite and nonnegative, got {magnitude}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (r as f64).sqrt();
    let l0 = loop {
        let a = DenseMatrix::from_fn(m, r, |_, _| StandardNormal.sample(&mut rng));
        let b = DenseMatrix::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
        let l0 = a.matmul_tr(&b).scale(scale);
        if svd_thin(&l0)?.rank() == r {
            break l0;
        }
    };

    let s0 = DenseMatrix::from_fn(m, n, |_, _| {
        let spike = rng.random_bool(spike_frac);
        let positive = rng.random_bool(0.5);
        match (spike, positive) {
            (false, _) => 0.0,
            (true, true) => magnitude,
            (true, false) => -magnitude,
        }
    });
    let marker = (0..m * n).map(|_| rng.random_bool(obs_frac)).collect();
    let mask = ObservationMask::from_marker(m, n, marker);
    let d_obs = mask_project(&l0.add(&s0), &mask)?;

    Ok(PlantedProblem {
        l0,
        s0,
        mask,
        d_obs,
        rank: r,
        seed,
    })
}

impl PlantedProblem {
    /// Outlier labels on Ω in mask order: `true` where a spike was planted.
    pub fn outlier_labels(&self) -> Vec<bool> {
        self.mask
            .indices()
            .iter()
            .map(|&ij| self.s0[ij] != 0.0)
            .collect()
    }
}

/// One `(user, item, value)` observation with dense 0-based indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingDataset {
    pub ratings: Vec<Rating>,
    pub num_users: usize,
    pub num_items: usize,
    /// Lines that overwrote an earlier `(user, item)` pair.
    pub duplicates: usize,
}

/// A seeded train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingSplit {
    pub train: Vec<Rating>,
    pub test: Vec<Rating>,
}

/// Fraction of ratings assigned to the training side.
pub const TRAIN_FRACTION: f64 = 0.9;

impl RatingDataset {
    /// Builds a dataset from raw triplets, keeping the last value for a
    /// repeated `(user, item)` pair.
    pub fn from_ratings(num_users: usize, num_items: usize, raw: Vec<Rating>) -> Result<Self> {
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut ratings: Vec<Rating> = Vec::with_capacity(raw.len());
        let mut duplicates = 0;
        for r in raw {
            if r.user >= num_users || r.item >= num_items {
                return Err(Error::Dimension(format!(
                    "rating ({}, {}) outside {num_users}x{num_items}",
                    r.user, r.item
                )));
            }
            if !r.value.is_finite() {
                return Err(Error::NonFinite("rating value"));
            }
            match seen.get(&(r.user, r.item)) {
                Some(&pos) => {
                    ratings[pos] = r;
                    duplicates += 1;
                }
                None => {
                    seen.insert((r.user, r.item), ratings.len());
                    ratings.push(r);
                }
            }
        }
        Ok(Self {
            ratings,
            num_users,
            num_items,
            duplicates,
        })
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Shuffles with `seed` and puts the first `⌈0.9 N⌉` ratings in train.
    pub fn split(&self, seed: u64) -> RatingSplit {
        let mut shuffled = self.ratings.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((shuffled.len() as f64) * TRAIN_FRACTION).ceil() as usize;
        let test = shuffled.split_off(n_train.min(shuffled.len()));
        RatingSplit {
            train: shuffled,
            test,
        }
    }

    /// Dense matrix with the given ratings filled in, plus their mask.
    pub fn to_matrix(&self, ratings: &[Rating]) -> Result<(DenseMatrix, ObservationMask)> {
        let mut m = DenseMatrix::zeros(self.num_users, self.num_items);
        let mut idx = Vec::with_capacity(ratings.len());
        for r in ratings {
            m[(r.user, r.item)] = r.value;
            idx.push((r.user, r.item));
        }
        let mask = ObservationMask::new(self.num_users, self.num_items, idx)?;
        Ok((m, mask))
    }
}

/// Reads `user item rating [timestamp]` lines separated by `::`, commas, or
/// whitespace. External ids are mapped to dense 0-based indices in
/// ascending id order. Blank lines and `#` comments are skipped.
pub fn load_ratings(path: impl AsRef<Path>) -> Result<RatingDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut raw: Vec<(u64, u64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if line.contains("::") {
            line.split("::").map(str::trim).collect()
        } else if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::parse(
                path,
                lineno + 1,
                format!("expected 3 or 4 fields, found {}", fields.len()),
            ));
        }
        let id = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::parse(path, lineno + 1, format!("bad {what} id {s:?}")))
        };
        let user = id(fields[0], "user")?;
        let item = id(fields[1], "item")?;
        let value = fields[2]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(path, lineno + 1, format!("bad rating {:?}", fields[2])))?;
        raw.push((user, item, value));
    }
    if raw.is_empty() {
        return Err(Error::parse(path, 0, "no ratings in file"));
    }

    let dense = |ids: Vec<u64>| -> BTreeMap<u64, usize> {
        let mut ids = ids;
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().enumerate().map(|(k, id)| (id, k)).collect()
    };
    let users = dense(raw.iter().map(|r| r.0).collect());
    let items = dense(raw.iter().map(|r| r.1).collect());
    let ratings = raw
        .iter()
        .map(|&(u, i, value)| Rating {
            user: users[&u],
            item: items[&i],
            value,
        })
        .collect();
    RatingDataset::from_ratings(users.len(), items.len(), ratings)
}

/// Parameters for [`generate_ratings`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingSpec {
    pub users: usize,
    pub items: usize,
    pub rank: usize,
    /// Probability that a user rated an item.
    pub density: f64,
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

/// Synthetic ratings on a 1–5 scale: `3 + A Bᵀ / √r` plus Gaussian noise,
/// clipped to `[1, 5]`, observed on a random subset of entries.
pub fn generate_ratings(spec: &RatingSpec) -> Result<RatingDataset> {
    let RatingSpec {
        users,
        items,
        rank,
        density,
        noise,
        seed,
    } = *spec;
    if rank == 0 || rank > users.min(items) {
        return Err(Error::Argument(format!(
            "need 1 <= rank <= min(users, items), got {rank}"
        )));
    }
    if !(0.0..=1.0).contains(&density) || !(noise >= 0.0) {
        return Err(Error::Argument("density must lie in [0, 1] and noise be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DenseMatrix::from_fn(users, rank, |_, _| StandardNormal.sample(&mut rng));
    let b = DenseMatrix::from_fn(items, rank, |_, _| StandardNormal.sample(&mut rng));
    let truth = a.matmul_tr(&b).scale(1.0 / (rank as f64).sqrt());
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::Argument(e.to_string()))?;
    let mut ratings = Vec::new();
    for u in 0..users {
        for i in 0..items {
            let e: f64 = jitter.sample(&mut rng);
            if rng.random_bool(density) {
                ratings.push(Rating {
                    user: u,
                    item: i,
                    value: (3.0 + truth[(u, i)] + e).clamp(1.0, 5.0),
                });
            }
        }
    }
    RatingDataset::from_ratings(users, items, ratings)
}
