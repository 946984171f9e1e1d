//! The n-body system in first-order form on the flat phase-space vector
//! `[x_1, .., x_n, v_1, .., v_n]`.

use crate::error::Result;
use crate::kernel;
use crate::model::Vec3;

pub(crate) trait Derivative {
    fn eval(&self, y: &[f64]) -> Result<Vec<f64>>;
}

pub(crate) struct NBody;

pub(crate) fn unpack_positions(y: &[f64]) -> Vec<Vec3> {
    triples(&y[..y.len() / 2])
}

pub(crate) fn triples(flat: &[f64]) -> Vec<Vec3> {
    flat.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

pub(crate) fn flat_accelerations(y: &[f64]) -> Result<Vec<f64>> {
    let acc = kernel::accelerations(&unpack_positions(y))?;
    Ok(acc.iter().flat_map(|a| a.iter().copied()).collect())
}

impl Derivative for NBody {
    fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        let half = y.len() / 2;
        let mut out = Vec::with_capacity(y.len());
        out.extend_from_slice(&y[half..]);
        out.extend(flat_accelerations(y)?);
        Ok(out)
    }
}
