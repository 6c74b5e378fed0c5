use serde::{Deserialize, Serialize};

use crate::error::{invalid, QrcError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NelderMeadOptions {
    pub max_iters: usize,
    /// Stop once every vertex lies within this sup-norm distance of the best.
    pub tolerance: f64,
    /// Edge length of the initial simplex along each axis.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tolerance: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Best value after each iteration (index 0 is the initial simplex).
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn eval<F: FnMut(&[f64]) -> Result<f64>>(f: &mut F, x: &[f64], count: &mut usize) -> Result<f64> {
    *count += 1;
    let v = f(x)?;
    if !v.is_finite() {
        return Err(QrcError::NonFiniteCost { theta: x.to_vec() });
    }
    Ok(v)
}

fn along(base: &[f64], dir_from: &[f64], t: f64) -> Vec<f64> {
    // base + t (base - dir_from)
    base.iter().zip(dir_from).map(|(b, w)| b + t * (b - w)).collect()
}

/// Derivative-free minimization with the standard simplex moves.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    if n == 0 {
        return Err(invalid("theta0", "empty parameter vector"));
    }
    if !(opts.initial_step > 0.0) {
        return Err(invalid("initial_step", "must be positive"));
    }
    let mut count = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(&mut f, x0, &mut count)?));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&mut f, &x, &mut count)?;
        simplex.push((x, v));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);
    let mut history = vec![simplex[0].1];
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < opts.tolerance {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let (worst, f_worst) = simplex[n].clone();
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;
        let xr = along(&centroid, &worst, REFLECT);
        let fr = eval(&mut f, &xr, &mut count)?;
        let mut shrink = false;
        if fr < f_best {
            let xe = along(&centroid, &worst, REFLECT * EXPAND);
            let fe = eval(&mut f, &xe, &mut count)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < f_second {
            simplex[n] = (xr, fr);
        } else if fr < f_worst {
            let xc = along(&centroid, &worst, REFLECT * CONTRACT);
            let fc = eval(&mut f, &xc, &mut count)?;
            if fc <= fr {
                simplex[n] = (xc, fc);
            } else {
                shrink = true;
            }
        } else {
            let xc = along(&centroid, &worst, -CONTRACT);
            let fc = eval(&mut f, &xc, &mut count)?;
            if fc < f_worst {
                simplex[n] = (xc, fc);
            } else {
                shrink = true;
            }
        }
        if shrink {
            let best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + SHRINK * (v - b)).collect();
                let v = eval(&mut f, &x, &mut count)?;
                *vertex = (x, v);
            }
        }
        order(&mut simplex);
        history.push(simplex[0].1);
    }
    let (x, value) = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        x,
        value,
        history,
        evaluations: count,
        converged,
    })
}
