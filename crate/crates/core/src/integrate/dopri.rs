//! Dormand-Prince 5(4) tableau, single step and continuous extension.

use super::system::Derivative;
use crate::error::Result;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension (Hairer, Norsett & Wanner, dopri5)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Result of one attempted step from `y0` with step `h`.
pub(crate) struct DopriStep {
    pub y1: Vec<f64>,
    /// Derivative at `y1` (first stage of the next step).
    pub k7: Vec<f64>,
    /// Local error estimate per component.
    pub err: Vec<f64>,
    stages: [Vec<f64>; 6],
}

fn combine(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        let hc = h * c;
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += hc * ki;
        }
    }
    out
}

/// `k1` is the derivative at `y0` (FSAL).
pub(crate) fn step<F: Derivative>(f: &F, y0: &[f64], k1: &[f64], h: f64) -> Result<DopriStep> {
    let k2 = f.eval(&combine(y0, h, &[(A21, k1)]))?;
    let k3 = f.eval(&combine(y0, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f.eval(&combine(y0, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f.eval(&combine(
        y0,
        h,
        &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)],
    ))?;
    let k6 = f.eval(&combine(
        y0,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ))?;
    let y1 = combine(
        y0,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = f.eval(&y1)?;
    let err = (0..y0.len())
        .map(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        })
        .collect();
    Ok(DopriStep {
        y1,
        k7,
        err,
        stages: [k1.to_vec(), k2, k3, k4, k5, k6],
    })
}

impl DopriStep {
    /// Fourth-order continuous extension at `theta` in [0, 1] of the step.
    pub(crate) fn dense(&self, y0: &[f64], h: f64, theta: f64) -> Vec<f64> {
        let [k1, _, k3, k4, k5, k6] = &self.stages;
        let k7 = &self.k7;
        let t1 = 1.0 - theta;
        (0..y0.len())
            .map(|i| {
                let ydiff = self.y1[i] - y0[i];
                let bspl = h * k1[i] - ydiff;
                let r4 = ydiff - h * k7[i] - bspl;
                let r5 = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
                y0[i] + theta * (ydiff + t1 * (bspl + theta * (r4 + t1 * r5)))
            })
            .collect()
    }
}

/// Root-mean-square of `err_i / (atol + rtol * max(|y0_i|, |y1_i|))`.
pub(crate) fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / err.len() as f64).sqrt()
}
