//! Deterministic sample sets: dyadic grids plus a seeded random cloud.
//!
//! Random coordinates are snapped to multiples of `2^-SNAP_BITS` so that
//! every sample stays dyadic and halving it is exact in binary floating point.

use aqlab::mappings::Tuple;
use aqlab::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SampleConfig;
use crate::CliError;

fn vector(coords: Vec<f64>) -> Vector {
    Vector::new(coords).expect("sample coordinates are finite")
}

pub const SNAP_BITS: i32 = 24;
const MAX_GRID_POINTS: usize = 1 << 20;

/// Coordinates `k / 2^depth` with `|k / 2^depth| ≤ range`, ascending.
pub fn dyadic_axis(depth: u32, range: f64) -> Vec<f64> {
    let step = (-(depth as f64)).exp2();
    let n = (range / step).floor() as i64;
    (-n..=n).map(|k| k as f64 * step).collect()
}

fn product(axis: &[f64], dim: usize) -> Result<Vec<Vector>, CliError> {
    let count = axis.len().checked_pow(dim as u32).filter(|c| *c <= MAX_GRID_POINTS);
    let count = count.ok_or_else(|| {
        CliError::Config(format!("grid of {} points per axis in dimension {dim} is too large", axis.len()))
    })?;
    let mut out = Vec::with_capacity(count);
    let mut idx = vec![0usize; dim];
    for _ in 0..count {
        out.push(vector(idx.iter().map(|&i| axis[i]).collect()));
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < axis.len() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(out)
}

/// All sample sets of an experiment, generated once per run.
#[derive(Debug, Clone)]
pub struct Samples {
    /// Grid points followed by the random cloud.
    pub points: Vec<Vector>,
    /// `(x, z)` over the point grid, then random pairs.
    pub pairs: Vec<(Vector, Vector)>,
    /// 4-tuples over the tuple grid, then random tuples.
    pub tuples: Vec<Tuple>,
}

struct Cloud {
    rng: ChaCha8Rng,
    range: f64,
    dim: usize,
}

impl Cloud {
    fn vector(&mut self) -> Vector {
        let scale = f64::from(SNAP_BITS).exp2();
        vector(
            (0..self.dim)
                .map(|_| (self.rng.gen_range(-self.range..=self.range) * scale).round() / scale)
                .collect(),
        )
    }
}

impl Samples {
    pub fn generate(cfg: &SampleConfig, dim: usize, seed_override: Option<u64>) -> Result<Self, CliError> {
        let grid = product(&dyadic_axis(cfg.depth, cfg.range), dim)?;
        let seed = seed_override.or(cfg.seed).unwrap_or(0);
        let mut cloud = Cloud {
            rng: ChaCha8Rng::seed_from_u64(seed),
            range: cfg.range,
            dim,
        };

        let mut points = grid.clone();
        let random_points: Vec<Vector> = (0..cfg.random_count).map(|_| cloud.vector()).collect();
        points.extend(random_points.iter().cloned());

        let mut pairs = Vec::with_capacity(grid.len() * grid.len() + cfg.random_count);
        for x in &grid {
            for z in &grid {
                pairs.push((x.clone(), z.clone()));
            }
        }
        for x in &random_points {
            pairs.push((x.clone(), cloud.vector()));
        }

        let tuple_grid = product(&dyadic_axis(cfg.tuple_depth, cfg.range), dim)?;
        let n = tuple_grid.len();
        if n.checked_pow(4).map_or(true, |c| c > 4 * MAX_GRID_POINTS) {
            return Err(CliError::Config(format!("tuple grid of {n}^4 tuples is too large")));
        }
        let mut tuples = Vec::with_capacity(n.pow(4) + cfg.random_tuples);
        for a in &tuple_grid {
            for b in &tuple_grid {
                for c in &tuple_grid {
                    for d in &tuple_grid {
                        tuples.push([a.clone(), b.clone(), c.clone(), d.clone()]);
                    }
                }
            }
        }
        for _ in 0..cfg.random_tuples {
            tuples.push([cloud.vector(), cloud.vector(), cloud.vector(), cloud.vector()]);
        }
        Ok(Samples { points, pairs, tuples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(random: usize, seed: u64) -> SampleConfig {
        SampleConfig {
            depth: 1,
            range: 1.0,
            random_count: random,
            seed: Some(seed),
            tuple_depth: 0,
            random_tuples: random,
        }
    }

    #[test]
    fn axis_is_symmetric_and_dyadic() {
        assert_eq!(dyadic_axis(1, 1.0), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(dyadic_axis(3, 2.0).len(), 33);
        assert_eq!(dyadic_axis(0, 0.5), vec![0.0]);
    }

    #[test]
    fn grid_sizes() {
        let s = Samples::generate(&cfg(0, 1), 1, None).unwrap();
        assert_eq!(s.points.len(), 5);
        assert_eq!(s.pairs.len(), 25);
        assert_eq!(s.tuples.len(), 81);
        let s2 = Samples::generate(&cfg(0, 1), 2, None).unwrap();
        assert_eq!(s2.points.len(), 25);
        assert_eq!(s2.points[1].coords(), &[-1.0, -0.5]);
    }

    #[test]
    fn cloud_is_seeded_and_dyadic() {
        let a = Samples::generate(&cfg(10, 7), 2, None).unwrap();
        let b = Samples::generate(&cfg(10, 7), 2, None).unwrap();
        let c = Samples::generate(&cfg(10, 7), 2, Some(8)).unwrap();
        assert_eq!(a.points, b.points);
        assert_ne!(a.points, c.points);
        let scale = f64::from(SNAP_BITS).exp2();
        for v in &a.points {
            for &t in v.coords() {
                assert_eq!((t * scale).fract(), 0.0);
                assert!(t.abs() <= 1.0);
            }
        }
    }
}
