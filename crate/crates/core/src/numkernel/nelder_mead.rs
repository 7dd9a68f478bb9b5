use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Converged once every vertex lies within `xtol` (max-norm) of the best.
    pub xtol: f64,
    /// ... and the function spread across the simplex is at most `ftol`.
    pub ftol: f64,
    pub max_iter: usize,
    /// Relative size of the initial simplex; zero coordinates use `zero_step`.
    pub initial_step: f64,
    pub zero_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            xtol: 1e-8,
            ftol: 1e-8,
            max_iter: 2000,
            initial_step: 0.05,
            zero_step: 0.00025,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    /// `false` when the iteration cap was hit; `x` is then the best point seen.
    pub converged: bool,
}

/// Derivative-free simplex minimisation.
pub fn nelder_mead<F>(mut objective: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return Err(Error::invalid("nelder_mead needs at least one parameter"));
    }
    let f0 = objective(x0);
    if !f0.is_finite() {
        return Err(Error::invalid("objective is not finite at the starting point"));
    }

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut values = vec![f0];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] = if v[i] != 0.0 {
            v[i] * (1.0 + opts.initial_step)
        } else {
            opts.zero_step
        };
        values.push(objective(&v));
        simplex.push(v);
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();
    while iterations < opts.max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let size = simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = values.iter().map(|f| (f - values[best]).abs()).fold(0.0, f64::max);
        if size <= opts.xtol && spread <= opts.ftol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(opts.reflection);
        let fr = objective(&xr);
        if fr < values[best] {
            let xe = along(opts.reflection * opts.expansion);
            let fe = objective(&xe);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[worst] {
            let xc = along(opts.reflection * opts.contraction);
            let fc = objective(&xc);
            (xc, fc)
        } else {
            let xc = along(-opts.contraction);
            let fc = objective(&xc);
            (xc, fc)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &i in order.iter().skip(1) {
            for (x, a) in simplex[i].iter_mut().zip(&anchor) {
                *x = a + opts.shrink * (*x - a);
            }
            values[i] = objective(&simplex[i]);
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Ok(NelderMeadResult {
        x: simplex[best].clone(),
        fx: values[best],
        iterations,
        converged,
    })
}
