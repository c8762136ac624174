//! Strong-order estimation by step refinement with shared Brownian paths.
//!
//! For every path a fine Brownian path is drawn on the reference grid. Coarse
//! increments are sums of the fine ones, so all step sizes integrate the same
//! realisation. The error at each step size is the root-mean-square over paths
//! of the Euclidean distance between the coarse and reference endpoints; the
//! order is the least-squares slope of log₂ error against log₂ Δt.

use rayon::prelude::*;

use super::{advance, path_rng, standard_normals, Increments, Scheme, SimError};
use crate::model::{ModelParams, NoiseIntensities, State};
use crate::stats::least_squares_slope;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub scheme: Scheme,
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
}

fn ratio(coarse: f64, fine: f64) -> Result<usize, SimError> {
    let r = coarse / fine;
    let m = r.round();
    if m < 1.0 || (r - m).abs() > 1e-9 * r {
        return Err(SimError::InvalidConfig(format!(
            "step {coarse} is not an integer multiple of {fine}"
        )));
    }
    Ok(m as usize)
}

#[allow(clippy::too_many_arguments)]
pub fn strong_convergence(
    scheme: Scheme,
    p: &ModelParams,
    n: &NoiseIntensities,
    initial: State,
    t_final: f64,
    dts: &[f64],
    dt_ref: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ConvergenceStudy, SimError> {
    if dts.len() < 2 || n_paths == 0 {
        return Err(SimError::InvalidConfig(
            "need at least two step sizes and one path".into(),
        ));
    }
    let n_fine = ratio(t_final, dt_ref)?;
    let factors = dts
        .iter()
        .map(|dt| ratio(*dt, dt_ref))
        .collect::<Result<Vec<_>, _>>()?;
    if factors.iter().any(|m| n_fine % m != 0) {
        return Err(SimError::InvalidConfig(
            "t_final must be a multiple of every step size".into(),
        ));
    }

    let integrate = |fine: &[Increments], m: usize| -> Result<State, SimError> {
        let h = dt_ref * m as f64;
        let mut s = initial;
        for (k, chunk) in fine.chunks(m).enumerate() {
            let mut dw = [0.0; 4];
            for inc in chunk {
                for (acc, v) in dw.iter_mut().zip(inc) {
                    *acc += v;
                }
            }
            s = advance(scheme, &s, p, n, h, &dw);
            if !s.is_finite() {
                return Err(SimError::NonFinite {
                    step: k + 1,
                    time: (k + 1) as f64 * h,
                    state: s,
                });
            }
        }
        Ok(s)
    };

    let sq_dt = dt_ref.sqrt();
    let per_path: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(seed, path as u64);
            let fine: Vec<Increments> = (0..n_fine)
                .map(|_| standard_normals(&mut rng).map(|v| v * sq_dt))
                .collect();
            let reference = integrate(&fine, 1)?;
            factors
                .iter()
                .map(|m| integrate(&fine, *m).map(|s| s.distance_sq(&reference)))
                .collect()
        })
        .collect::<Result<_, SimError>>()?;

    let errors: Vec<f64> = (0..dts.len())
        .map(|i| (per_path.iter().map(|e| e[i]).sum::<f64>() / n_paths as f64).sqrt())
        .collect();
    let log_dt: Vec<f64> = dts.iter().map(|d| d.log2()).collect();
    let log_err: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let order = least_squares_slope(&log_dt, &log_err).unwrap_or(f64::NAN);
    Ok(ConvergenceStudy {
        scheme,
        dts: dts.to_vec(),
        errors,
        order,
    })
}
