//! Zero-temperature limits: equilibrium states of `t·(α·Φ)` as `t → ∞`.
//!
//! Limits of rotation vectors land on the supporting hyperplane `H_α`, and the
//! entropy tends to the largest entropy available on the face `F_α`. This
//! module runs the schedule, decides convergence, decomposes the last chain
//! into closed classes and checks those statements against the polygon.

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{face_of_direction, Face2, Polygon2};
use crate::maximizing::{max_cycle_mean, support_value, WeightedDeBruijn};
use crate::symbolic::{Direction, PotentialTable};
use crate::transfer::{
    check_schedule, measure_entropy, measure_integral, solve_transfer_warm, MarkovMeasure,
    SolverFlag, WarmStart, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

#[derive(Clone, Debug)]
pub struct GroundStateOptions {
    pub t0: f64,
    pub growth: f64,
    pub t_max: f64,
    /// Increment bound for convergence (three consecutive steps).
    pub rv_tol: f64,
    /// Transition probabilities below this are dropped when finding classes.
    pub edge_tol: f64,
    /// Radius for clustering accumulation points.
    pub cluster_tol: f64,
    /// Stop at the first converged point instead of running to `t_max`.
    pub stop_on_convergence: bool,
    pub transfer_tol: f64,
    pub max_iter: usize,
    /// When given (and `m = 2`), the report includes the face of this polygon.
    pub polygon: Option<Polygon2>,
    pub face_entropy: bool,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            t0: 1.0,
            growth: 1.5,
            t_max: 400.0,
            rv_tol: 1e-9,
            edge_tol: 1e-12,
            cluster_tol: 1e-6,
            stop_on_convergence: false,
            transfer_tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            polygon: None,
            face_entropy: true,
        }
    }
}

impl GroundStateOptions {
    /// `t₀·g^k` below `t_max`, then `t_max` itself.
    pub fn schedule(&self) -> Result<Vec<f64>> {
        if !(self.t0 > 0.0)
            || !(self.growth > 1.0)
            || !(self.t_max >= self.t0)
            || !self.t_max.is_finite()
        {
            return Err(Error::contract(format!(
                "schedule needs 0 < t0 ≤ t_max and growth > 1 (t0 = {}, growth = {}, t_max = {})",
                self.t0, self.growth, self.t_max
            )));
        }
        for (name, v) in [
            ("rv_tol", self.rv_tol),
            ("edge_tol", self.edge_tol),
            ("cluster_tol", self.cluster_tol),
            ("transfer_tol", self.transfer_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::contract(format!("{name} must be positive")));
            }
        }
        let mut s = Vec::new();
        let mut t = self.t0;
        while t < self.t_max * (1.0 - 1e-12) {
            s.push(t);
            t *= self.growth;
        }
        s.push(self.t_max);
        check_schedule(&s)?;
        Ok(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub rv: Vec<f64>,
    pub entropy: f64,
    pub pressure: f64,
    /// `support − α·rv ≥ 0`: distance to the supporting hyperplane.
    pub distance: f64,
}

/// A closed communicating class of the thresholded transition graph.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedClass {
    /// Sorted state indices (words of length `r − 1`).
    pub states: Vec<usize>,
    /// Symbols read by the edges inside the class.
    pub symbols: Vec<u8>,
    pub mass: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateReport {
    pub direction: Direction,
    pub converged: bool,
    pub limit_rv: Vec<f64>,
    pub limit_entropy: f64,
    /// `max_{w ∈ Rot(Φ)} α·w`.
    pub support: f64,
    pub face: Option<Face2>,
    pub face_entropy: Option<f64>,
    pub chain_limit: MarkovMeasure,
    pub closed_class_weights: Vec<ClosedClass>,
    /// Stationary mass outside every closed class.
    pub transient_mass: f64,
    pub trace: Vec<TracePoint>,
    /// Distinct rv values over the tail of the trace.
    pub accumulation_points: Vec<Vec<f64>>,
    pub flags: Vec<SolverFlag>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Follow the equilibrium states of `t·(α·Φ)` along the schedule.
pub fn ground_state(
    phi: &PotentialTable,
    alpha: &Direction,
    opts: &GroundStateOptions,
) -> Result<GroundStateReport> {
    if alpha.dim() != phi.dim() {
        return Err(Error::contract(format!(
            "direction has dimension {}, potential has {}",
            alpha.dim(),
            phi.dim()
        )));
    }
    let schedule = opts.schedule()?;
    let support = support_value(phi, alpha)?;
    let base = phi.contract(alpha, 1.0)?;

    let mut trace: Vec<TracePoint> = Vec::with_capacity(schedule.len());
    let mut flags = Vec::new();
    let mut chain = None;
    let mut converged = false;
    let mut small_steps = 0;
    let mut warm: Option<WarmStart> = None;
    for &t in &schedule {
        let sol = solve_transfer_warm(
            &base.scaled(t)?,
            opts.transfer_tol,
            opts.max_iter,
            warm.as_ref(),
        )
        .map_err(|e| e.at_t(t))?;
        warm = Some(sol.warm_start());
        let rv_new = measure_integral(&sol.markov, phi)?;
        if let Some(TracePoint { rv, .. }) = trace.last() {
            if dist(rv, &rv_new) <= opts.rv_tol {
                small_steps += 1;
            } else {
                small_steps = 0;
            }
        }
        converged = small_steps >= 3;
        for f in &sol.flags {
            if !flags.contains(f) {
                flags.push(*f);
            }
        }
        trace.push(TracePoint {
            t,
            distance: support - alpha.dot(&rv_new),
            rv: rv_new,
            entropy: measure_entropy(&sol.markov),
            pressure: sol.pressure,
        });
        chain = Some(sol.markov);
        if converged && opts.stop_on_convergence {
            break;
        }
    }
    let chain = chain.expect("the last entry keeps its chain");
    let last = trace.last().expect("nonempty schedule");
    let (closed, transient_mass) = closed_classes(&chain, opts.edge_tol);

    let tail = (trace.len() / 4).max(3).min(trace.len());
    let mut accumulation_points: Vec<Vec<f64>> = Vec::new();
    for p in &trace[trace.len() - tail..] {
        if accumulation_points
            .iter()
            .all(|c| dist(c, &p.rv) > opts.cluster_tol)
        {
            accumulation_points.push(p.rv.clone());
        }
    }
    if converged {
        accumulation_points = vec![last.rv.clone()];
    }

    let face = match (&opts.polygon, phi.dim()) {
        (Some(poly), 2) => Some(face_of_direction(poly, alpha)?),
        _ => None,
    };
    let face_entropy = if opts.face_entropy {
        Some(face_entropy_sup(phi, alpha)?)
    } else {
        None
    };
    Ok(GroundStateReport {
        direction: alpha.clone(),
        converged,
        limit_rv: last.rv.clone(),
        limit_entropy: last.entropy,
        support,
        face,
        face_entropy,
        chain_limit: chain,
        closed_class_weights: closed,
        transient_mass,
        accumulation_points,
        flags,
        trace,
    })
}

/// Bottom strongly connected components of the graph of transitions with
/// probability at least `edge_tol`, with their stationary masses.
pub fn closed_classes(mu: &MarkovMeasure, edge_tol: f64) -> (Vec<ClosedClass>, f64) {
    let g = mu.graph();
    let n = g.num_states();
    let mut dg = DiGraph::<usize, ()>::with_capacity(n, mu.transition().len());
    let nodes: Vec<_> = (0..n).map(|s| dg.add_node(s)).collect();
    for (e, &p) in mu.transition().iter().enumerate() {
        if p >= edge_tol {
            dg.add_edge(nodes[g.source(e)], nodes[g.target(e)], ());
        }
    }
    let mut comp = vec![0usize; n];
    let sccs = kosaraju_scc(&dg);
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            comp[v.index()] = c;
        }
    }
    let mut closed = Vec::new();
    let mut inside = 0.0;
    let q = g.num_edges() / n;
    for (c, members) in sccs.iter().enumerate() {
        let leaves = members
            .iter()
            .any(|v| dg.neighbors(*v).any(|w| comp[w.index()] != c));
        if leaves {
            continue;
        }
        let mut states: Vec<usize> = members.iter().map(|v| v.index()).collect();
        states.sort_unstable();
        let mut symbols = Vec::new();
        for &s in &states {
            for e in g.out_edges(s) {
                let sym = (e % q) as u8;
                if mu.transition()[e] >= edge_tol && !symbols.contains(&sym) {
                    symbols.push(sym);
                }
            }
            if g.num_states() == 1 {
                break;
            }
        }
        symbols.sort_unstable();
        let mass: f64 = states.iter().map(|&s| mu.stationary()[s]).sum();
        inside += mass;
        closed.push(ClosedClass {
            states,
            symbols,
            mass,
        });
    }
    closed.sort_by(|a, b| a.states.cmp(&b.states));
    (closed, (1.0 - inside).max(0.0))
}

/// Topological entropy of the subshift carried by the maximizing edges of
/// `α·Φ`: the log spectral radius of their 0/1 adjacency matrix.
pub fn face_entropy_sup(phi: &PotentialTable, alpha: &Direction) -> Result<f64> {
    let psi = phi.contract(alpha, 1.0)?;
    let wg = WeightedDeBruijn::from_scalar(&psi);
    let opt = max_cycle_mean(&wg);
    let g = wg.graph();
    let mut dg = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..g.num_states()).map(|_| dg.add_node(())).collect();
    for &e in &opt.optimal_edges {
        dg.add_edge(nodes[g.source(e)], nodes[g.target(e)], ());
    }
    let mut best: f64 = 0.0;
    for members in kosaraju_scc(&dg) {
        let local: std::collections::HashMap<usize, usize> = members
            .iter()
            .enumerate()
            .map(|(i, v)| (v.index(), i))
            .collect();
        let edges: Vec<(usize, usize)> = members
            .iter()
            .flat_map(|v| {
                dg.neighbors(*v)
                    .filter_map(|w| local.get(&w.index()).map(|&j| (local[&v.index()], j)))
                    .collect::<Vec<_>>()
            })
            .collect();
        if edges.is_empty() {
            continue;
        }
        best = best.max(spectral_radius(members.len(), &edges)?);
    }
    if best < 1.0 {
        // the witness cycle always gives radius at least 1
        return Err(Error::contract("optimal subgraph carries no cycle"));
    }
    Ok(best.ln())
}

/// Perron root of an irreducible 0/1 matrix (power iteration on `A + I`,
/// which is primitive).
fn spectral_radius(n: usize, edges: &[(usize, usize)]) -> Result<f64> {
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    for it in 0..DEFAULT_MAX_ITER {
        y.copy_from_slice(&x);
        for &(u, v) in edges {
            y[u] += x[v];
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in y.iter().zip(&x) {
            let r = a / b;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let norm = y.iter().cloned().fold(0.0, f64::max);
        for (a, b) in x.iter_mut().zip(&y) {
            *a = b / norm;
        }
        if (hi - lo) <= 1e-14 * hi {
            return Ok(0.5 * (hi + lo) - 1.0);
        }
        if it + 1 == DEFAULT_MAX_ITER {
            return Err(Error::Iteration {
                solver: "adjacency spectral radius",
                iterations: it + 1,
                residual: (hi - lo) / hi,
                at_t: None,
            });
        }
    }
    unreachable!()
}

/// Outcome of checking a report against a polygon.
#[derive(Clone, Debug, Serialize)]
pub struct GroundStateCheck {
    /// Distance of each trace rv to the polygon's supporting line.
    pub distances: Vec<f64>,
    pub final_distance: f64,
    /// Distance of `limit_rv` to the face.
    pub face_distance: f64,
    pub entropy_gap: Option<f64>,
    pub findings: Vec<String>,
    pub passed: bool,
}

/// Limits lie on the supporting line and face, with the face's entropy.
pub fn verify_ground_state(
    report: &GroundStateReport,
    poly: &Polygon2,
    tol: f64,
) -> GroundStateCheck {
    let alpha = &report.direction;
    let mut findings = Vec::new();
    if alpha.dim() != 2 {
        return GroundStateCheck {
            distances: vec![],
            final_distance: f64::NAN,
            face_distance: f64::NAN,
            entropy_gap: None,
            findings: vec!["the check needs a planar potential".into()],
            passed: false,
        };
    }
    let h = poly.support(alpha);
    let distances: Vec<f64> = report
        .trace
        .iter()
        .map(|p| (h - alpha.dot(&p.rv)).abs())
        .collect();
    let final_distance = *distances.last().unwrap_or(&f64::INFINITY);
    if !(final_distance <= tol) {
        findings.push(format!(
            "final distance to the supporting line is {final_distance:e} > {tol:e}"
        ));
    }
    let limit = [report.limit_rv[0], report.limit_rv[1]];
    let face_distance = match face_of_direction(poly, alpha) {
        Ok(face) => face.distance(limit),
        Err(e) => {
            findings.push(format!("no face: {e}"));
            f64::INFINITY
        }
    };
    if !(face_distance <= tol) {
        findings.push(format!("limit rv is {face_distance:e} away from the face"));
    }
    let entropy_gap = report
        .face_entropy
        .map(|h| (report.limit_entropy - h).abs());
    if let Some(gap) = entropy_gap {
        if !(gap <= tol) {
            findings.push(format!(
                "limit entropy differs from the face entropy by {gap:e}"
            ));
        }
    }
    if !report.converged {
        findings.push("the trace did not converge".into());
    }
    GroundStateCheck {
        passed: findings.is_empty(),
        distances,
        final_distance,
        face_distance,
        entropy_gap,
        findings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example1::{example1_potential, Example1Params};
    use crate::geometry::rotation_polytope_periodic;
    use approx::assert_abs_diff_eq;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn schedules() {
        let s = GroundStateOptions::default().schedule().unwrap();
        assert_eq!(s[0], 1.0);
        assert_eq!(*s.last().unwrap(), 400.0);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(s.len(), 16); // 1.5^14 < 400 < 1.5^15
        let bad = GroundStateOptions {
            growth: 1.0,
            ..Default::default()
        };
        assert!(bad.schedule().is_err());
        let bad = GroundStateOptions {
            rv_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.schedule().is_err());
    }

    #[test]
    fn bernoulli_limit() {
        let phi = PotentialTable::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        let alpha = Direction::new(&[1.0]).unwrap();
        let rep = ground_state(&phi, &alpha, &GroundStateOptions::default()).unwrap();
        assert!(rep.converged);
        assert_abs_diff_eq!(rep.limit_rv[0], 1.0, epsilon = 1e-12);
        assert!(rep.limit_entropy < 1e-12);
        assert_eq!(rep.closed_class_weights.len(), 1);
        assert_eq!(rep.closed_class_weights[0].symbols, vec![1]);
        assert_abs_diff_eq!(rep.closed_class_weights[0].mass, 1.0, epsilon = 1e-12);
        assert_eq!(rep.face_entropy, Some(0.0));
        assert_eq!(rep.accumulation_points.len(), 1);
    }

    #[test]
    fn constant_potential_never_moves() {
        let phi = PotentialTable::new(3, 2, 2, [0.3, -0.2].repeat(9)).unwrap();
        let alpha = Direction::from_angle(0.7);
        let rep = ground_state(&phi, &alpha, &GroundStateOptions::default()).unwrap();
        assert!(rep.converged);
        assert_abs_diff_eq!(rep.limit_rv[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.limit_rv[1], -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.limit_entropy, 3f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(rep.face_entropy.unwrap(), 3f64.ln(), epsilon = 1e-12);
        assert_eq!(rep.closed_class_weights.len(), 1);
        assert_eq!(rep.closed_class_weights[0].states, vec![0, 1, 2]);
    }

    #[test]
    fn planar_bernoulli_segment() {
        let phi = PotentialTable::new(2, 1, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let poly = rotation_polytope_periodic(&phi, 4).unwrap();
        let alpha = Direction::new(&[1.0, 0.0]).unwrap();
        let opts = GroundStateOptions {
            polygon: Some(poly.clone()),
            ..Default::default()
        };
        let rep = ground_state(&phi, &alpha, &opts).unwrap();
        let check = verify_ground_state(&rep, &poly, 1e-6);
        assert!(check.passed, "{:?}", check.findings);
        assert_eq!(rep.face.unwrap().points, vec![[1.0, 0.0]]);
        // a deliberately wrong report is flagged, not panicked on
        let mut wrong = ground_state(
            &phi,
            &alpha,
            &GroundStateOptions {
                t_max: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        wrong.face_entropy = Some(1.0);
        let check = verify_ground_state(&wrong, &poly, 1e-6);
        assert!(!check.passed && check.findings.len() >= 2);
    }

    #[test]
    fn face_entropy_examples() {
        let phi = PotentialTable::new(2, 2, 1, vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        let alpha = Direction::new(&[1.0]).unwrap();
        assert_abs_diff_eq!(
            face_entropy_sup(&phi, &alpha).unwrap(),
            LN2,
            epsilon = 1e-12
        );
        // golden-mean shift: words "11" penalized
        let phi = PotentialTable::new(2, 2, 1, vec![0.0, 0.0, 0.0, -1.0]).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(
            face_entropy_sup(&phi, &alpha).unwrap(),
            golden.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_class_limit_on_a_small_truncation() {
        let p = Example1Params::preset("prop56", 6).unwrap();
        let phi = example1_potential(&p).unwrap().table;
        let alpha = Direction::new(&[-1.0, 0.0]).unwrap();
        let rep = ground_state(&phi, &alpha, &GroundStateOptions::default()).unwrap();
        assert!(rep.converged);
        assert_abs_diff_eq!(rep.face_entropy.unwrap(), LN2, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.limit_entropy, LN2, epsilon = 1e-6);
        assert!(rep.limit_rv[0].abs() < 1e-6 && rep.limit_rv[1].abs() < 1e-10);
        assert_eq!(rep.closed_class_weights.len(), 2);
        for (c, class) in rep.closed_class_weights.iter().enumerate() {
            assert_eq!(class.states.len(), 32);
            assert_abs_diff_eq!(class.mass, 0.5, epsilon = 1e-8);
            let expected: Vec<u8> = if c == 0 { vec![0, 1] } else { vec![2, 3] };
            assert_eq!(class.symbols, expected);
        }
        assert!(rep.transient_mass < 1e-10);
    }
}
