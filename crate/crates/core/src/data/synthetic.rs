use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{City, CityTable, Dataset, MobilityData, TimeSeriesPanel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticOptions {
    pub n: usize,
    pub blocks: usize,
    pub seed: u64,
    pub weeks: usize,
}

impl SyntheticOptions {
    pub fn new(n: usize, blocks: usize, seed: u64) -> Self {
        SyntheticOptions {
            n,
            blocks,
            seed,
            weeks: 8,
        }
    }
}

/// A generated dataset together with the block each city was planted in.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub planted: Vec<usize>,
}

/// Balanced contiguous blocks: city `i` goes to block `i * blocks / n`.
fn block_of(i: usize, n: usize, blocks: usize) -> usize {
    i * blocks / n
}

/// Dataset with planted block structure in the commuter matrices: heavy
/// flows inside a block, sparse light flows across blocks. Fixed regions are
/// the planted blocks. Deterministic in `seed`.
pub fn generate_synthetic(n: usize, blocks: usize, seed: u64) -> Result<SyntheticDataset> {
    generate_synthetic_with(&SyntheticOptions::new(n, blocks, seed))
}

pub fn generate_synthetic_with(opts: &SyntheticOptions) -> Result<SyntheticDataset> {
    let SyntheticOptions { n, blocks, seed, weeks } = *opts;
    if blocks == 0 || n < blocks {
        return Err(Error::invalid(format!(
            "need n >= blocks >= 1 (got n={n}, blocks={blocks})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<usize> = (0..n).map(|i| block_of(i, n, blocks)).collect();

    let population: Vec<u64> = (0..n).map(|_| rng.gen_range(50_000..250_000)).collect();

    let mut commute = Array2::zeros((n, n));
    let mut education = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if planted[i] == planted[j] {
                commute[[i, j]] = rng.gen_range(100.0..400.0f64).round();
                education[[i, j]] = rng.gen_range(20.0..80.0f64).round();
            } else if rng.gen_bool(0.3) {
                commute[[i, j]] = rng.gen_range(0.0..3.0f64).round();
            }
        }
    }

    // Blocks sit on a circle of radius 150 km; cities jitter around the centre.
    let mut xy = Vec::with_capacity(n);
    for &b in &planted {
        let (cx, cy) = if blocks == 1 {
            (0.0, 0.0)
        } else {
            let a = std::f64::consts::TAU * b as f64 / blocks as f64;
            (150.0 * a.cos(), 150.0 * a.sin())
        };
        xy.push((cx + rng.gen_range(-30.0..30.0), cy + rng.gen_range(-30.0..30.0)));
    }
    let mut distance = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy) = (xy[i].0 - xy[j].0, xy[i].1 - xy[j].1);
            let d = (1.25 * (dx * dx + dy * dy).sqrt() + 2.0).round();
            distance[[i, j]] = d;
            distance[[j, i]] = d;
        }
    }

    let cities = CityTable::new(
        (0..n)
            .map(|i| City {
                code: 4_300_000 + i as i64,
                name: format!("City {i:03}"),
                population: population[i],
                lat: -30.0 + xy[i].1 / 111.0,
                lon: -53.0 + xy[i].0 / 96.0,
                region: planted[i],
            })
            .collect(),
    )?;

    let baseline: Array1<f64> = (0..n).map(|_| round4(rng.gen_range(0.25..0.35))).collect();
    let block_iso: Vec<Vec<f64>> = (0..blocks)
        .map(|_| (0..weeks).map(|_| rng.gen_range(0.05..0.45)).collect())
        .collect();
    let mut isolation = Array2::zeros((n, weeks));
    for i in 0..n {
        for t in 0..weeks {
            let rel = (block_iso[planted[i]][t] + rng.gen_range(-0.02..0.02f64)).max(0.0);
            isolation[[i, t]] = round4(baseline[i] + (1.0 - baseline[i]) * rel);
        }
    }

    let beds: Vec<f64> = population
        .iter()
        .map(|&p| {
            if p > 100_000 {
                (p as f64 / 10_000.0 * rng.gen_range(1.0..3.0)).round()
            } else if rng.gen_bool(0.5) {
                rng.gen_range(0.0..6.0f64).round()
            } else {
                0.0
            }
        })
        .collect();
    let block_free: Vec<Vec<f64>> = (0..blocks)
        .map(|_| (0..weeks).map(|_| rng.gen_range(0.1..0.6)).collect())
        .collect();
    let mut icu_total = Array2::zeros((n, weeks));
    let mut icu_available = Array2::zeros((n, weeks));
    for i in 0..n {
        for t in 0..weeks {
            icu_total[[i, t]] = beds[i];
            icu_available[[i, t]] = (beds[i] * block_free[planted[i]][t]).round();
        }
    }

    let growth: Vec<f64> = (0..blocks).map(|_| rng.gen_range(0.9..1.3)).collect();
    let mut cases = Array2::zeros((n, weeks));
    let mut deaths = Array2::zeros((n, weeks));
    for i in 0..n {
        for t in 0..weeks {
            let c = (population[i] as f64 * 1e-4 * growth[planted[i]].powi(t as i32) * rng.gen_range(0.5..1.5)).round();
            cases[[i, t]] = c;
            deaths[[i, t]] = (c * 0.02 * rng.gen_range(0.5..1.5)).round();
        }
    }

    let panel = TimeSeriesPanel::new(weeks)
        .with_isolation(isolation, baseline)?
        .with_icu(icu_total, icu_available)?
        .with_cases(cases)?
        .with_deaths(deaths)?;
    let dataset = Dataset::new(cities, MobilityData::new(commute, education, distance)?, panel)?;
    Ok(SyntheticDataset { dataset, planted })
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}
