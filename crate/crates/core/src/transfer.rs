//! Transfer matrices of scalar finite-range potentials on the de Bruijn
//! graph: pressure, Perron eigendata and the stationary Gibbs–Markov chain
//! realizing the equilibrium state.
//!
//! The matrix `M[u→v] = exp(ψ(uv') − c)` is built with `c = max ψ` so that
//! its largest entry is one; the pressure is reported as `c + log λ`. The
//! Perron value is bracketed by the Collatz–Wielandt quotients
//! `min (Mx)_i/x_i ≤ λ ≤ max (Mx)_i/x_i`, and iteration stops once the
//! bracket is relatively narrower than the tolerance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolic::{DeBruijn, Direction, PotentialTable, MAX_RANGE};

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Exponents below this are clamped before exponentiation, keeping every
/// de Bruijn edge strictly positive.
const LOG_FLOOR: f64 = -700.0;
/// Relative shift `A + s·λI` used when plain iteration stalls. At low
/// temperature the normalized matrix is close to a permutation on the
/// maximizing cycles, and only a shift comparable to λ breaks the rotation.
const STALL_SHIFT: f64 = 1.0;
const STALL_WINDOW: usize = 200;

/// A real-valued potential depending on the first `r` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarPotential {
    q: usize,
    r: usize,
    values: Vec<f64>,
}

impl ScalarPotential {
    pub fn new(q: usize, r: usize, values: Vec<f64>) -> Result<Self> {
        let graph = DeBruijn::new(q, r)?;
        if values.len() != graph.num_edges() {
            return Err(Error::contract(format!(
                "scalar potential over {q} symbols with range {r} needs {} values, got {}",
                graph.num_edges(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("potential values must be finite"));
        }
        Ok(Self { q, r, values })
    }

    pub fn constant(q: usize, r: usize, c: f64) -> Result<Self> {
        let n = DeBruijn::new(q, r)?.num_edges();
        Self::new(q, r, vec![c; n])
    }

    pub fn alphabet_size(&self) -> usize {
        self.q
    }

    pub fn range(&self) -> usize {
        self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn graph(&self) -> DeBruijn {
        DeBruijn::new(self.q, self.r).expect("validated on construction")
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.q, self.r, self.values.iter().map(|v| s * v).collect())
    }

    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.q, self.r, self.values.iter().map(|v| v + c).collect())
    }

    /// Pointwise `s·self + (1-s)·other`.
    pub fn mix(&self, other: &Self, s: f64) -> Result<Self> {
        if self.q != other.q || self.r != other.r {
            return Err(Error::contract(
                "mixed potentials must share alphabet and range",
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| s * a + (1.0 - s) * b)
            .collect();
        Self::new(self.q, self.r, values)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// As a one-dimensional potential table.
    pub fn to_table(&self) -> PotentialTable {
        PotentialTable::new(self.q, self.r, 1, self.values.clone()).expect("same shape")
    }
}

/// Stationary Markov chain on the de Bruijn graph of range `r`.
///
/// `transition[e]` is the probability of edge `e` given its source state;
/// `stationary[u]` is the mass of state `u`. The probability of the length-`r`
/// cylinder `e` is `stationary[source(e)] * transition[e]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkovMeasure {
    q: usize,
    r: usize,
    stationary: Vec<f64>,
    transition: Vec<f64>,
}

impl MarkovMeasure {
    /// Build a chain from edge probabilities, solving for a stationary vector.
    pub fn from_transitions(q: usize, r: usize, transition: Vec<f64>) -> Result<Self> {
        let graph = DeBruijn::new(q, r)?;
        if transition.len() != graph.num_edges() {
            return Err(Error::contract(format!(
                "transition table needs {} entries, got {}",
                graph.num_edges(),
                transition.len()
            )));
        }
        for u in 0..graph.num_states() {
            let row = &transition[graph.out_edges(u)];
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::contract(format!(
                    "row {u} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::contract(format!("row {u} sums to {sum}, not 1")));
            }
        }
        let stationary = stationary_vector(&graph, &transition)?;
        Ok(Self {
            q,
            r,
            stationary,
            transition,
        })
    }

    /// The Bernoulli measure with symbol probabilities `probs`.
    pub fn bernoulli(probs: &[f64]) -> Result<Self> {
        Self::from_transitions(probs.len(), 1, probs.to_vec())
    }

    pub fn alphabet_size(&self) -> usize {
        self.q
    }

    pub fn range(&self) -> usize {
        self.r
    }

    pub fn graph(&self) -> DeBruijn {
        DeBruijn::new(self.q, self.r).expect("validated on construction")
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    /// Mass of the length-`r` cylinder with index `edge`.
    pub fn cylinder_mass(&self, edge: usize) -> f64 {
        self.stationary[edge / self.q] * self.transition[edge]
    }

    /// Largest violation of row-stochasticity and of stationarity.
    pub fn defects(&self) -> (f64, f64) {
        let g = self.graph();
        let mut row_defect = 0.0f64;
        for u in 0..g.num_states() {
            let s: f64 = self.transition[g.out_edges(u)].iter().sum();
            row_defect = row_defect.max((s - 1.0).abs());
        }
        let mut pushed = vec![0.0; g.num_states()];
        for e in 0..g.num_edges() {
            pushed[g.target(e)] += self.cylinder_mass(e);
        }
        let stat_defect = pushed
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (row_defect, stat_defect)
    }
}

fn stationary_vector(graph: &DeBruijn, transition: &[f64]) -> Result<Vec<f64>> {
    let n = graph.num_states();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let max_iter = 1_000_000;
    let mut change = f64::INFINITY;
    for _ in 0..max_iter {
        // lazy step (π + πP)/2 removes periodicity
        next.iter_mut().zip(&pi).for_each(|(x, p)| *x = 0.5 * p);
        for e in 0..graph.num_edges() {
            next[graph.target(e)] += 0.5 * pi[graph.source(e)] * transition[e];
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        change = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if change <= 1e-16 {
            return Ok(pi);
        }
    }
    Err(Error::Iteration {
        solver: "stationary distribution",
        iterations: max_iter,
        residual: change,
        at_t: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolverFlag {
    /// Plain power iteration stalled; the result came from the shifted matrix.
    Shifted,
}

/// Perron data of a scalar potential and its equilibrium Gibbs–Markov chain.
#[derive(Clone, Debug)]
pub struct TransferSolution {
    pub pressure: f64,
    /// Log-domain normalization: the maximum cycle mean of ψ.
    pub shift: f64,
    /// Perron value of the scaled matrix, so `pressure = shift + ln(eigenvalue)`.
    pub eigenvalue: f64,
    /// Right eigenvector of the gauged matrix with entries
    /// `exp(ψ(e) − shift + right_gauge(target) − right_gauge(source))`; the
    /// eigenvector of the plain matrix is `right_eigvec · exp(right_gauge)`.
    pub right_eigvec: Vec<f64>,
    /// Left eigenvector of `exp(ψ(e) − shift + left_gauge(source) − left_gauge(target))`;
    /// the plain one is `left_eigvec · exp(left_gauge)`.
    pub left_eigvec: Vec<f64>,
    pub right_gauge: Vec<f64>,
    pub left_gauge: Vec<f64>,
    pub markov: MarkovMeasure,
    pub iterations: usize,
    /// Final relative width of the Collatz–Wielandt bracket.
    pub residual: f64,
    pub flags: Vec<SolverFlag>,
}

struct Perron {
    value: f64,
    vector: Vec<f64>,
    iterations: usize,
    residual: f64,
    shifted: bool,
}

/// Power iteration for a primitive nonnegative operator given by `apply`.
fn perron_iteration<F>(
    n: usize,
    apply: F,
    start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    solver: &'static str,
) -> Result<Perron>
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut x: Vec<f64> = match start {
        Some(s) if s.len() == n && s.iter().all(|v| *v > 0.0 && v.is_finite()) => s.to_vec(),
        _ => vec![1.0; n],
    };
    let top = x.iter().copied().fold(0.0, f64::max);
    x.iter_mut().for_each(|v| *v /= top);

    let mut y = vec![0.0; n];
    let mut shift = 0.0;
    let mut best_gap = f64::INFINITY;
    let mut checkpoint_gap = f64::INFINITY;
    let mut gap = f64::INFINITY;

    for it in 1..=max_iter {
        apply(&x, &mut y);
        if shift > 0.0 {
            y.iter_mut().zip(&x).for_each(|(a, b)| *a += shift * b);
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut ymax = 0.0f64;
        for (a, b) in y.iter().zip(&x) {
            let ratio = a / b;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            ymax = ymax.max(*a);
        }
        if !(ymax > 0.0) || !ymax.is_finite() {
            return Err(Error::Iteration {
                solver,
                iterations: it,
                residual: f64::NAN,
                at_t: None,
            });
        }
        gap = (hi - lo) / hi;
        best_gap = best_gap.min(gap);
        for (xi, yi) in x.iter_mut().zip(&y) {
            // keep entries representable as normal floats
            *xi = (yi / ymax).max(f64::MIN_POSITIVE);
        }
        if gap <= tol {
            return Ok(Perron {
                value: 0.5 * (hi + lo) - shift,
                vector: x,
                iterations: it,
                residual: gap,
                shifted: shift > 0.0,
            });
        }
        if it % STALL_WINDOW == 0 {
            if shift == 0.0 && best_gap > 0.5 * checkpoint_gap {
                shift = STALL_SHIFT * hi;
            }
            checkpoint_gap = best_gap;
        }
    }
    Err(Error::Iteration {
        solver,
        iterations: max_iter,
        residual: gap,
        at_t: None,
    })
}

/// Warm-start vectors carried between nearby potentials, stored as logs in
/// the coordinates of ψ itself so they survive a change of normalization.
#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    pub log_right: Vec<f64>,
    pub log_left: Vec<f64>,
}

impl TransferSolution {
    pub fn warm_start(&self) -> WarmStart {
        let logs =
            |v: &[f64], gauge: &[f64]| v.iter().zip(gauge).map(|(x, g)| x.ln() + g).collect();
        WarmStart {
            log_right: logs(&self.right_eigvec, &self.right_gauge),
            log_left: logs(&self.left_eigvec, &self.left_gauge),
        }
    }
}

/// Exponentiate a log-vector after moving its maximum to zero.
fn from_logs(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = v.collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter().map(|x| (x - top).max(LOG_FLOOR).exp()).collect()
}

/// Pressure and equilibrium state of `psi`.
pub fn solve_transfer(
    psi: &ScalarPotential,
    tol: f64,
    max_iter: usize,
) -> Result<TransferSolution> {
    solve_transfer_warm(psi, tol, max_iter, None)
}

/// [`solve_transfer`] started from the eigenvectors of a nearby problem.
pub fn solve_transfer_warm(
    psi: &ScalarPotential,
    tol: f64,
    max_iter: usize,
    warm: Option<&WarmStart>,
) -> Result<TransferSolution> {
    if !(tol > 0.0) {
        return Err(Error::contract("tolerance must be positive"));
    }
    let g = psi.graph();
    // Gauge ψ by c = max cycle mean and a longest-path coboundary so every
    // weight is at most 1 and every state has a weight-1 edge on the side
    // being iterated; then 1 ≤ λ ≤ q and eigenvector entries stay within a
    // few powers of q of each other whatever the temperature.
    let gauges = crate::maximizing::gauges(&crate::maximizing::WeightedDeBruijn::from_scalar(psi));
    let shift = gauges.value;
    let (rg, lg) = (gauges.backward, gauges.forward);
    let gauged = |gauge: &[f64], sign: f64| -> Vec<f64> {
        psi.values
            .iter()
            .enumerate()
            .map(|(e, v)| {
                (v - shift + sign * (gauge[g.target(e)] - gauge[g.source(e)]))
                    .max(LOG_FLOOR)
                    .exp()
            })
            .collect()
    };
    let weights = gauged(&rg, 1.0);
    let left_weights = gauged(&lg, -1.0);
    let n = g.num_states();
    let usable = |v: &[f64]| v.len() == n && v.iter().all(|x| x.is_finite());
    let warm_right = warm
        .filter(|w| usable(&w.log_right))
        .map(|w| from_logs(w.log_right.iter().zip(&rg).map(|(x, g)| x - g)));
    let warm_left = warm
        .filter(|w| usable(&w.log_left))
        .map(|w| from_logs(w.log_left.iter().zip(&lg).map(|(x, g)| x - g)));

    let right = perron_iteration(
        n,
        |x, y| {
            for (u, yu) in y.iter_mut().enumerate() {
                *yu = g.out_edges(u).map(|e| weights[e] * x[g.target(e)]).sum();
            }
        },
        warm_right.as_deref(),
        tol,
        max_iter,
        "transfer (right eigenvector)",
    )?;
    let left = perron_iteration(
        n,
        |x, y| {
            for (v, yv) in y.iter_mut().enumerate() {
                *yv = g
                    .in_edges(v)
                    .map(|e| x[g.source(e)] * left_weights[e])
                    .sum();
            }
        },
        warm_left.as_deref(),
        tol,
        max_iter,
        "transfer (left eigenvector)",
    )?;

    let lambda = right.value;
    let r = &right.vector;
    let l = &left.vector;
    let mut transition = vec![0.0; g.num_edges()];
    for u in 0..n {
        let edges = g.out_edges(u);
        let mut row_sum = 0.0;
        for e in edges.clone() {
            let p = weights[e] * r[g.target(e)] / (lambda * r[u]);
            transition[e] = p;
            row_sum += p;
        }
        for e in edges {
            transition[e] /= row_sum;
        }
    }
    let mut stationary = from_logs((0..n).map(|u| l[u].ln() + lg[u] + r[u].ln() + rg[u]));
    let total: f64 = stationary.iter().sum();
    stationary.iter_mut().for_each(|p| *p /= total);

    let mut flags = Vec::new();
    if right.shifted || left.shifted {
        flags.push(SolverFlag::Shifted);
    }
    Ok(TransferSolution {
        pressure: shift + lambda.ln(),
        shift,
        eigenvalue: lambda,
        right_eigvec: right.vector,
        right_gauge: rg,
        left_gauge: lg,
        left_eigvec: left.vector,
        markov: MarkovMeasure {
            q: psi.q,
            r: psi.r,
            stationary,
            transition,
        },
        iterations: right.iterations + left.iterations,
        residual: right.residual.max(left.residual),
        flags,
    })
}

/// Entropy `-Σ_u π_u Σ_v p(u→v) log p(u→v)` of the chain.
pub fn measure_entropy(mu: &MarkovMeasure) -> f64 {
    let g = mu.graph();
    let mut h = 0.0;
    for (u, &pi) in mu.stationary.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        let row: f64 = g
            .out_edges(u)
            .map(|e| mu.transition[e])
            .filter(|&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum();
        h -= pi * row;
    }
    h
}

fn check_readable(mu: &MarkovMeasure, q: usize, range: usize) -> Result<usize> {
    if q != mu.q {
        return Err(Error::contract(format!(
            "potential over {q} symbols, measure over {}",
            mu.q
        )));
    }
    if range > mu.r {
        return Err(Error::contract(format!(
            "potential range {range} exceeds the measure's range {}",
            mu.r
        )));
    }
    Ok(q.pow((mu.r - range) as u32))
}

/// Rotation vector `(∫φ_1 dμ, …, ∫φ_m dμ)`. A potential of shorter range is
/// read on the leading symbols of each cylinder.
pub fn measure_integral(mu: &MarkovMeasure, phi: &PotentialTable) -> Result<Vec<f64>> {
    let drop = check_readable(mu, phi.alphabet_size(), phi.range())?;
    let mut acc = vec![0.0; phi.dim()];
    for e in 0..mu.transition.len() {
        let mass = mu.cylinder_mass(e);
        if mass == 0.0 {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(phi.value(e / drop)) {
            *a += mass * v;
        }
    }
    Ok(acc)
}

/// `∫ψ dμ` for a scalar potential.
pub fn scalar_integral(mu: &MarkovMeasure, psi: &ScalarPotential) -> Result<f64> {
    let drop = check_readable(mu, psi.q, psi.r)?;
    Ok((0..mu.transition.len())
        .map(|e| mu.cylinder_mass(e) * psi.values[e / drop])
        .sum())
}

/// One temperature of an annealing run.
#[derive(Clone, Debug)]
pub struct AnnealEntry {
    pub t: f64,
    pub rv: Vec<f64>,
    pub entropy: f64,
    pub pressure: f64,
    pub flags: Vec<SolverFlag>,
    /// The equilibrium chain, when retained.
    pub markov: Option<MarkovMeasure>,
}

/// Equilibrium states of `t·(α·Φ)` along an increasing schedule.
#[derive(Clone, Debug)]
pub struct AnnealingTrace {
    pub schedule: Vec<f64>,
    pub entries: Vec<AnnealEntry>,
}

/// Which equilibrium chains an annealing run keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Retain {
    All,
    Last,
    None,
}

#[derive(Clone, Copy, Debug)]
pub struct AnnealOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub retain: Retain,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            retain: Retain::All,
        }
    }
}

pub(crate) fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::contract("schedule is empty"));
    }
    if schedule.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::contract(
            "schedule values must be finite and nonnegative",
        ));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::contract("schedule must be strictly increasing"));
    }
    Ok(())
}

/// Solve for the equilibrium state of `t·(α·Φ)` at every `t` of the schedule.
pub fn anneal(phi: &PotentialTable, alpha: &Direction, schedule: &[f64]) -> Result<AnnealingTrace> {
    anneal_with(phi, alpha, schedule, &AnnealOptions::default())
}

pub fn anneal_with(
    phi: &PotentialTable,
    alpha: &Direction,
    schedule: &[f64],
    opts: &AnnealOptions,
) -> Result<AnnealingTrace> {
    check_schedule(schedule)?;
    debug_assert!(phi.range() <= MAX_RANGE);
    let base = phi.contract(alpha, 1.0)?;
    let mut entries = Vec::with_capacity(schedule.len());
    let mut warm: Option<WarmStart> = None;
    for (k, &t) in schedule.iter().enumerate() {
        let psi = base.scaled(t)?;
        let sol = solve_transfer_warm(&psi, opts.tol, opts.max_iter, warm.as_ref())
            .map_err(|e| e.at_t(t))?;
        let rv = measure_integral(&sol.markov, phi)?;
        let entropy = measure_entropy(&sol.markov);
        warm = Some(sol.warm_start());
        let keep = match opts.retain {
            Retain::All => true,
            Retain::Last => k + 1 == schedule.len(),
            Retain::None => false,
        };
        entries.push(AnnealEntry {
            t,
            rv,
            entropy,
            pressure: sol.pressure,
            flags: sol.flags,
            markov: keep.then_some(sol.markov),
        });
    }
    Ok(AnnealingTrace {
        schedule: schedule.to_vec(),
        entries,
    })
}
