use serde::{Deserialize, Serialize};

use super::{logistic, DpObservation, ModelError, SigmoidParams};

/// Midpoint grid (start, end, count).
pub const GRID_MIDPOINTS: (f64, f64, usize) = (0.2, 0.8, 61);
/// Slope grid, log-spaced (start, end, count).
pub const GRID_SLOPES: (f64, f64, usize) = (2.0, 40.0, 40);

const MAX_ITERATIONS: usize = 5000;
const SIMPLEX_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: SigmoidParams,
    /// Sum of squared residuals.
    pub residual: f64,
    /// All observed DP equal: midpoint and slope are not identifiable.
    pub degenerate: bool,
    pub iterations: usize,
}

/// (midpoint, slope) pairs of the initialization grid.
pub fn fit_grid() -> Vec<(f64, f64)> {
    let (m0, m1, mn) = GRID_MIDPOINTS;
    let (s0, s1, sn) = GRID_SLOPES;
    let mut out = Vec::with_capacity(mn * sn);
    for i in 0..mn {
        let m = m0 + (m1 - m0) * i as f64 / (mn - 1) as f64;
        for j in 0..sn {
            let s = s0 * (s1 / s0).powf(j as f64 / (sn - 1) as f64);
            out.push((m, s));
        }
    }
    out
}

/// Least-squares residual at (midpoint, slope) with dp_max at its optimum (>= 0).
pub fn profiled_residual(obs: &[DpObservation], midpoint: f64, slope: f64) -> (f64, f64) {
    let shape: Vec<f64> = obs
        .iter()
        .map(|o| logistic(slope * (o.sti - midpoint)))
        .collect();
    let sy: f64 = obs.iter().zip(&shape).map(|(o, s)| o.dp * s).sum();
    let ss: f64 = shape.iter().map(|s| s * s).sum();
    let dp_max = if ss > 0.0 { (sy / ss).max(0.0) } else { 0.0 };
    let residual = obs
        .iter()
        .zip(&shape)
        .map(|(o, s)| (o.dp - dp_max * s).powi(2))
        .sum();
    (residual, dp_max)
}

pub fn fit_sigmoid(observations: &[DpObservation]) -> Result<FitResult, ModelError> {
    if observations.len() < 3 {
        return Err(ModelError::InsufficientData(format!(
            "{} observations, need at least 3",
            observations.len()
        )));
    }
    let first = observations[0].sti;
    if observations.iter().all(|o| o.sti == first) {
        return Err(ModelError::InsufficientData(
            "need at least 2 distinct STI values".into(),
        ));
    }
    for o in observations {
        DpObservation::new(o.sti, o.dp)?;
    }
    let degenerate = observations.iter().all(|o| o.dp == observations[0].dp);

    let (mut best, mut best_r) = ((0.0, 0.0), f64::INFINITY);
    for (m, s) in fit_grid() {
        let (r, _) = profiled_residual(observations, m, s);
        if r < best_r {
            best_r = r;
            best = (m, s);
        }
    }

    // local refinement over (midpoint, ln slope)
    let objective = |x: [f64; 2]| -> f64 {
        if !(x[0] > 0.0 && x[0] < 1.0) || !x[1].is_finite() || x[1].abs() > 10.0 {
            return f64::INFINITY;
        }
        profiled_residual(observations, x[0], x[1].exp()).0
    };
    let (x, r, iterations) = nelder_mead(objective, [best.0, best.1.ln()], [0.02, 0.1]);
    let (midpoint, slope, residual) = if r <= best_r {
        (x[0], x[1].exp(), r)
    } else {
        (best.0, best.1, best_r)
    };
    let (_, dp_max) = profiled_residual(observations, midpoint, slope);
    Ok(FitResult {
        params: SigmoidParams {
            dp_max,
            midpoint,
            slope,
        },
        residual,
        degenerate,
        iterations,
    })
}

fn nelder_mead(
    f: impl Fn([f64; 2]) -> f64,
    start: [f64; 2],
    step: [f64; 2],
) -> ([f64; 2], f64, usize) {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut values = simplex.map(&f);
    let lerp =
        |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let mut it = 0;
    while it < MAX_ITERATIONS {
        it += 1;
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        let size = simplex[1..]
            .iter()
            .map(|v| {
                (v[0] - simplex[0][0])
                    .abs()
                    .max((v[1] - simplex[0][1]).abs())
            })
            .fold(0.0, f64::max);
        if size < SIMPLEX_TOLERANCE {
            break;
        }
        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] {
                lerp(centroid, reflected, 0.5)
            } else {
                lerp(centroid, simplex[2], 0.5)
            };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    (simplex[best], values[best], it)
}
