//! Localized entropy `𝓗(w) = sup{h(μ) : rv(μ) = w}` at interior points of the
//! rotation set, through the convex dual `inf_v [P(v·Φ) − v·w]`.
//!
//! The dual's gradient is `rv(μ_{v·Φ}) − w`, so every evaluation is one
//! transfer solve. Minimization is gradient descent with Barzilai–Borwein
//! steps and step halving, from several starting points.

use std::cell::Cell;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::rotation_polytope_periodic;
use crate::maximizing::support_value;
use crate::symbolic::{Direction, PotentialTable};
use crate::transfer::{
    measure_entropy, measure_integral, solve_transfer, ScalarPotential, DEFAULT_MAX_ITER,
};

#[derive(Clone, Copy, Debug)]
pub struct LocalizedEntropyOptions {
    /// Target for `‖rv(μ_v) − w‖` and for the duality gap.
    pub tol: f64,
    /// Total transfer solves across all starts.
    pub max_solves: usize,
    /// Period used for the planar interior check.
    pub interior_period: usize,
    /// Minimal distance from the boundary of the inner approximation.
    pub interior_margin: f64,
    pub transfer_tol: f64,
}

impl Default for LocalizedEntropyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_solves: 500,
            interior_period: 6,
            interior_margin: 1e-9,
            transfer_tol: 1e-13,
        }
    }
}

/// Dual optimum with its certificate.
#[derive(Clone, Debug, Serialize)]
pub struct LocalizedEntropy {
    /// `inf_v [P(v·Φ) − v·w]`.
    pub value: f64,
    /// Entropy of the equilibrium state at the minimizer.
    pub entropy: f64,
    pub v_star: Vec<f64>,
    pub rv_star: Vec<f64>,
    /// `‖rv(μ_{v*}) − w‖`.
    pub residual: f64,
    pub solves: usize,
}

struct Eval {
    dual: f64,
    grad: Vec<f64>,
    entropy: f64,
    rv: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_interior(phi: &PotentialTable, w: &[f64], opts: &LocalizedEntropyOptions) -> Result<()> {
    let m = phi.dim();
    if w.len() != m {
        return Err(Error::contract(format!(
            "point has {} coordinates, potential has {m}",
            w.len()
        )));
    }
    match m {
        2 => {
            let poly = rotation_polytope_periodic(phi, opts.interior_period)?;
            match poly.interior_margin([w[0], w[1]]) {
                Some(margin) if margin > opts.interior_margin => Ok(()),
                _ => Err(Error::domain(format!(
                    "({}, {}) is not interior to the rotation polygon at period {}",
                    w[0], w[1], opts.interior_period
                ))),
            }
        }
        _ => {
            // exact support values along ± coordinate axes
            for k in 0..m {
                for sign in [1.0, -1.0] {
                    let mut e = vec![0.0; m];
                    e[k] = sign;
                    let alpha = Direction::new(&e)?;
                    let s = support_value(phi, &alpha)?;
                    if s - alpha.dot(w) <= opts.interior_margin {
                        return Err(Error::domain(format!(
                            "coordinate {k} of the point is not interior to the rotation set"
                        )));
                    }
                }
            }
            Ok(())
        }
    }
}

/// Localized entropy at an interior point `w` of the rotation set.
pub fn localized_entropy(
    phi: &PotentialTable,
    w: &[f64],
    opts: &LocalizedEntropyOptions,
) -> Result<LocalizedEntropy> {
    if !(opts.tol > 0.0) || opts.max_solves == 0 {
        return Err(Error::contract(
            "tolerance and solve budget must be positive",
        ));
    }
    check_interior(phi, w, opts)?;
    let m = phi.dim();

    let solves = Cell::new(0usize);
    let evaluate = |v: &[f64]| -> Result<Eval> {
        solves.set(solves.get() + 1);
        let alpha = Direction::new(v).ok();
        let sol = match alpha {
            Some(a) => solve_transfer(
                &phi.contract(&a, norm(v))?,
                opts.transfer_tol,
                DEFAULT_MAX_ITER,
            )?,
            None => solve_transfer(
                &ScalarPotential::constant(phi.alphabet_size(), phi.range(), 0.0)?,
                opts.transfer_tol,
                DEFAULT_MAX_ITER,
            )?,
        };
        let rv = measure_integral(&sol.markov, phi)?;
        let grad: Vec<f64> = rv.iter().zip(w).map(|(a, b)| a - b).collect();
        Ok(Eval {
            dual: sol.pressure - dot(v, w),
            grad,
            entropy: measure_entropy(&sol.markov),
            rv,
        })
    };

    let mut starts = vec![vec![0.0; m]];
    for k in 0..m.min(2) {
        for sign in [1.0, -1.0] {
            let mut s = vec![0.0; m];
            s[k] = sign;
            starts.push(s);
        }
    }

    let mut best: Option<(Vec<f64>, Eval)> = None;
    let mut last_residual = f64::INFINITY;
    'starts: for start in starts {
        if solves.get() >= opts.max_solves {
            break;
        }
        let mut v = start;
        let mut cur = evaluate(&v)?;
        let mut step = 1.0;
        loop {
            let gnorm = norm(&cur.grad);
            last_residual = last_residual.min(gnorm);
            // both ‖rv − w‖ and the gap |v·(rv − w)| below tol
            if gnorm <= opts.tol / (1.0 + norm(&v)).max(1.0) {
                let better = best.as_ref().map_or(true, |(_, b)| cur.dual < b.dual);
                if better {
                    best = Some((v, cur));
                }
                continue 'starts;
            }
            if norm(&v) > 1e6 {
                return Err(Error::domain(
                    "dual minimizer diverges; the point is on or outside the boundary",
                ));
            }
            if solves.get() >= opts.max_solves {
                break 'starts;
            }
            let trial_v: Vec<f64> = v.iter().zip(&cur.grad).map(|(x, g)| x - step * g).collect();
            let trial = evaluate(&trial_v)?;
            let armijo = trial.dual <= cur.dual - 1e-4 * step * gnorm * gnorm;
            let flat = trial.dual <= cur.dual + 1e-14 * (1.0 + cur.dual.abs())
                && norm(&trial.grad) < gnorm;
            if armijo || flat {
                let dv: Vec<f64> = trial_v.iter().zip(&v).map(|(a, b)| a - b).collect();
                let dg: Vec<f64> = trial
                    .grad
                    .iter()
                    .zip(&cur.grad)
                    .map(|(a, b)| a - b)
                    .collect();
                let curvature = dot(&dv, &dg);
                step = if curvature > 0.0 {
                    (dot(&dv, &dv) / curvature).clamp(1e-6, 1e6)
                } else {
                    (2.0 * step).min(1e6)
                };
                v = trial_v;
                cur = trial;
            } else {
                step *= 0.5;
                if step < 1e-14 {
                    continue 'starts;
                }
            }
        }
    }

    match best {
        Some((v, e)) => Ok(LocalizedEntropy {
            value: e.dual,
            entropy: e.entropy,
            residual: norm(&e.grad),
            v_star: v,
            rv_star: e.rv,
            solves: solves.get(),
        }),
        None => Err(Error::Iteration {
            solver: "localized entropy dual descent",
            iterations: solves.get(),
            residual: last_residual,
            at_t: None,
        }),
    }
}
