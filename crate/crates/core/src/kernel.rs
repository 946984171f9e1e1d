//! O(n^2) pair kernels.
//!
//! Every particle's sum runs over partners in ascending index order, so the
//! serial and parallel variants produce bit-identical results: parallelism
//! only distributes whole rows across threads, it never reorders a sum.

use crate::error::{Error, Result};
use crate::model::Vec3;

/// Below this particle count the parallel dispatch costs more than it saves.
pub const PARALLEL_THRESHOLD: usize = 64;

#[inline]
fn acceleration_row(i: usize, positions: &[Vec3]) -> Result<Vec3> {
    let xi = positions[i];
    let mut acc = Vec3::zeros();
    for (j, xj) in positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = xi - xj;
        let r2 = d.norm_squared();
        if r2 == 0.0 {
            return Err(Error::DegenerateConfiguration {
                i: i.min(j),
                j: i.max(j),
            });
        }
        let inv_r = 1.0 / r2.sqrt();
        acc += d * (inv_r * inv_r * inv_r);
    }
    Ok(acc)
}

#[inline]
fn potential_row(i: usize, positions: &[Vec3]) -> Result<f64> {
    let xi = positions[i];
    let mut sum = 0.0;
    for (j, xj) in positions.iter().enumerate().skip(i + 1) {
        let r2 = (xi - xj).norm_squared();
        if r2 == 0.0 {
            return Err(Error::DegenerateConfiguration { i, j });
        }
        sum += 1.0 / r2.sqrt();
    }
    Ok(sum)
}

pub fn accelerations_serial(positions: &[Vec3]) -> Result<Vec<Vec3>> {
    (0..positions.len())
        .map(|i| acceleration_row(i, positions))
        .collect()
}

#[cfg(feature = "parallel")]
pub fn accelerations_parallel(positions: &[Vec3]) -> Result<Vec<Vec3>> {
    use rayon::prelude::*;
    (0..positions.len())
        .into_par_iter()
        .map(|i| acceleration_row(i, positions))
        .collect()
}

/// Unordered-pair sum of inverse separations, row by row.
pub fn potential_energy_serial(positions: &[Vec3]) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..positions.len() {
        total += potential_row(i, positions)?;
    }
    Ok(total)
}

#[cfg(feature = "parallel")]
pub fn potential_energy_parallel(positions: &[Vec3]) -> Result<f64> {
    use rayon::prelude::*;
    let rows: Vec<f64> = (0..positions.len())
        .into_par_iter()
        .map(|i| potential_row(i, positions))
        .collect::<Result<_>>()?;
    // rows are reduced serially so the result matches the serial kernel
    Ok(rows.into_iter().fold(0.0, |acc, r| acc + r))
}

pub fn accelerations(positions: &[Vec3]) -> Result<Vec<Vec3>> {
    #[cfg(feature = "parallel")]
    if positions.len() >= PARALLEL_THRESHOLD {
        return accelerations_parallel(positions);
    }
    accelerations_serial(positions)
}

pub fn potential_energy(positions: &[Vec3]) -> Result<f64> {
    #[cfg(feature = "parallel")]
    if positions.len() >= PARALLEL_THRESHOLD {
        return potential_energy_parallel(positions);
    }
    potential_energy_serial(positions)
}

#[cfg(all(test, feature = "parallel"))]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()) * 10.0)
            .collect()
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        for n in [1, 2, 7, 65, 200] {
            let x = cloud(n, n as u64);
            assert_eq!(accelerations_serial(&x).unwrap(), accelerations_parallel(&x).unwrap());
            assert_eq!(
                potential_energy_serial(&x).unwrap().to_bits(),
                potential_energy_parallel(&x).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn parallel_reports_degeneracy() {
        let mut x = cloud(100, 3);
        x[70] = x[12];
        assert!(matches!(
            accelerations_parallel(&x),
            Err(Error::DegenerateConfiguration { i: 12, j: 70 })
        ));
    }
}
