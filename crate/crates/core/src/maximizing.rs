//! Ergodic optimization at zero temperature: the maximum cycle mean of a
//! weighted de Bruijn graph, a witnessing periodic orbit, and the subgraph
//! of edges that lie on maximum-mean cycles.
//!
//! Graphs with at most [`KARP_MAX_STATES`] states use Karp's recurrence;
//! larger ones (the Example 5.1 truncations at depth ≥ 7) use Howard's
//! policy iteration, whose value is the exact mean of a concrete cycle.

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;

use crate::error::Result;
use crate::symbolic::{DeBruijn, Direction, PeriodicOrbit, PotentialTable};
use crate::transfer::ScalarPotential;

/// Karp's table is `(V+1) × V`; above this many states Howard is used.
pub const KARP_MAX_STATES: usize = 1024;
/// Band for optimal-edge membership after reweighting.
pub const DEFAULT_EDGE_TOL: f64 = 1e-9;

/// De Bruijn graph of range `r` with one weight per edge (length-`r` word).
#[derive(Clone, Debug)]
pub struct WeightedDeBruijn {
    graph: DeBruijn,
    weights: Vec<f64>,
}

impl WeightedDeBruijn {
    pub fn new(q: usize, r: usize, weights: Vec<f64>) -> Result<Self> {
        let psi = ScalarPotential::new(q, r, weights)?;
        Ok(Self::from_scalar(&psi))
    }

    pub fn from_scalar(psi: &ScalarPotential) -> Self {
        Self {
            graph: psi.graph(),
            weights: psi.values().to_vec(),
        }
    }

    pub fn graph(&self) -> DeBruijn {
        self.graph
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cycle_mean(&self, edges: &[usize]) -> f64 {
        edges.iter().map(|&e| self.weights[e]).sum::<f64>() / edges.len() as f64
    }

    fn scale(&self) -> f64 {
        self.weights.iter().fold(1.0f64, |m, w| m.max(w.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaxMeanMethod {
    Karp,
    Howard,
}

#[derive(Clone, Debug)]
pub struct MaxMeanResult {
    /// Mean weight of `witness_cycle`, the maximum over all cycles.
    pub value: f64,
    pub witness_cycle: PeriodicOrbit,
    /// Sorted edge indices lying on cycles of the tight subgraph.
    pub optimal_edges: Vec<usize>,
    pub method: MaxMeanMethod,
}

/// Maximum cycle mean with the default optimal-edge band.
pub fn max_cycle_mean(g: &WeightedDeBruijn) -> MaxMeanResult {
    max_cycle_mean_with_tol(g, DEFAULT_EDGE_TOL)
}

pub fn max_cycle_mean_with_tol(g: &WeightedDeBruijn, edge_tol: f64) -> MaxMeanResult {
    let n = g.graph.num_states();
    let (method, value, witness, potential) = if n <= KARP_MAX_STATES {
        let k = karp(g);
        (MaxMeanMethod::Karp, k.value, k.witness, k.potential)
    } else {
        let h = howard(g);
        (MaxMeanMethod::Howard, h.value, h.witness, h.potential)
    };
    let optimal_edges = critical_edges(g, value, &potential, edge_tol);
    MaxMeanResult {
        value,
        witness_cycle: witness,
        optimal_edges,
        method,
    }
}

/// Maximum cycle mean `c` with longest-path potentials in the graph
/// reweighted by `w − c`, both rooted at a state of a maximizing cycle:
/// `forward[v] ≥ forward[u] + w(e) − c` and `backward[u] ≥ w(e) − c + backward[v]`
/// for every edge `e: u → v`, each state having a tight in-edge (forward) and
/// a tight out-edge (backward).
pub(crate) struct Gauges {
    pub value: f64,
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

pub(crate) fn gauges(g: &WeightedDeBruijn) -> Gauges {
    let db = g.graph;
    let n = db.num_states();
    let s = if n <= KARP_MAX_STATES {
        karp(g)
    } else {
        howard(g)
    };
    let c = s.value;
    let root = db.source(db.orbit_edges(&s.witness)[0]);
    let relax = |forward: bool| {
        let mut d = vec![f64::NEG_INFINITY; n];
        d[root] = 0.0;
        // no positive cycles, so at most n rounds; the cap also bounds
        // roundoff creep around cycles of mean c
        for _ in 0..=n {
            let mut changed = false;
            for e in 0..db.num_edges() {
                let (from, to) = if forward {
                    (db.source(e), db.target(e))
                } else {
                    (db.target(e), db.source(e))
                };
                if d[from] > f64::NEG_INFINITY {
                    let cand = d[from] + g.weights[e] - c;
                    if cand > d[to] {
                        d[to] = cand;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        d
    };
    Gauges {
        value: c,
        forward: relax(true),
        backward: relax(false),
    }
}

/// Offset of the supporting hyperplane of the rotation set with outward
/// normal `alpha`: `max_{w ∈ Rot(Φ)} α·w`.
pub fn support_value(phi: &PotentialTable, alpha: &Direction) -> Result<f64> {
    let psi = phi.contract(alpha, 1.0)?;
    Ok(max_cycle_mean(&WeightedDeBruijn::from_scalar(&psi)).value)
}

/// Value, witness and a potential `h` with `h(v) ≥ h(u) + w(u→v) − value`
/// on every edge, tight on maximum-mean cycles.
struct Solved {
    value: f64,
    witness: PeriodicOrbit,
    potential: Vec<f64>,
}

fn karp(g: &WeightedDeBruijn) -> Solved {
    let db = g.graph;
    let n = db.num_states();
    // d[k][v]: heaviest walk of exactly k edges from state 0 to v
    let mut d = vec![f64::NEG_INFINITY; (n + 1) * n];
    let mut parent = vec![u32::MAX; (n + 1) * n];
    d[0] = 0.0;
    for k in 1..=n {
        let (prev, cur) = d.split_at_mut(k * n);
        let prev = &prev[(k - 1) * n..];
        let cur = &mut cur[..n];
        let par = &mut parent[k * n..(k + 1) * n];
        for (v, (cv, pv)) in cur.iter_mut().zip(par.iter_mut()).enumerate() {
            for e in db.in_edges(v) {
                let u = db.source(e);
                if prev[u] == f64::NEG_INFINITY {
                    continue;
                }
                let cand = prev[u] + g.weights[e];
                if cand > *cv {
                    *cv = cand;
                    *pv = e as u32;
                }
            }
        }
    }

    let row = |k: usize| &d[k * n..(k + 1) * n];
    let mut best = f64::NEG_INFINITY;
    let mut best_v = 0;
    for v in 0..n {
        let dn = row(n)[v];
        if dn == f64::NEG_INFINITY {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| row(k)[v] > f64::NEG_INFINITY)
            .map(|k| (dn - row(k)[v]) / (n - k) as f64)
            .fold(f64::INFINITY, f64::min);
        if worst > best {
            best = worst;
            best_v = v;
        }
    }

    // walk of length n into best_v, then split it into simple cycles
    let mut walk_edges = Vec::with_capacity(n);
    let mut v = best_v;
    for k in (1..=n).rev() {
        let e = parent[k * n + v] as usize;
        walk_edges.push(e);
        v = db.source(e);
    }
    walk_edges.reverse();
    let scale = g.scale();
    let mut candidates: Vec<(PeriodicOrbit, f64)> = split_cycles(&db, &walk_edges)
        .into_iter()
        .map(|c| (db.cycle_orbit(&c), g.cycle_mean(&c)))
        .filter(|(_, m)| (m - best).abs() <= 1e-12 * scale)
        .collect();
    candidates.sort_by(|a, b| a.0.shortlex_key().cmp(&b.0.shortlex_key()));

    // longest-path potential in the graph reweighted by −best
    let mut potential = vec![f64::NEG_INFINITY; n];
    for k in 0..=n {
        for (p, dk) in potential.iter_mut().zip(row(k)) {
            if *dk > f64::NEG_INFINITY {
                *p = p.max(dk - k as f64 * best);
            }
        }
    }

    match candidates.into_iter().next() {
        Some((witness, mean)) => Solved {
            value: mean,
            witness,
            potential,
        },
        None => {
            // roundoff kept every walk cycle outside the band
            let h = howard(g);
            Solved {
                value: h.value,
                witness: h.witness,
                potential,
            }
        }
    }
}

/// Decompose a walk (consecutive edges) into the simple cycles it closes.
fn split_cycles(db: &DeBruijn, walk: &[usize]) -> Vec<Vec<usize>> {
    let mut cycles = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut pos = vec![usize::MAX; db.num_states()];
    if let Some(&first) = walk.first() {
        pos[db.source(first)] = 0;
    }
    let mut states = vec![walk.first().map(|&e| db.source(e)).unwrap_or(0)];
    for &e in walk {
        let v = db.target(e);
        stack.push(e);
        if pos[v] != usize::MAX {
            let start = pos[v];
            let cyc: Vec<usize> = stack.drain(start..).collect();
            for s in states.drain(start + 1..) {
                pos[s] = usize::MAX;
            }
            cycles.push(cyc);
        } else {
            pos[v] = states.len();
            states.push(v);
        }
    }
    cycles
}

fn howard(g: &WeightedDeBruijn) -> Solved {
    let db = g.graph;
    let n = db.num_states();
    let scale = g.scale();
    let eps = 1e-13 * scale;

    // initial policy: heaviest outgoing edge
    let mut policy: Vec<usize> = (0..n)
        .map(|u| {
            db.out_edges(u)
                .max_by(|&a, &b| g.weights[a].total_cmp(&g.weights[b]).then(b.cmp(&a)))
                .expect("every state has successors")
        })
        .collect();
    let mut eta = vec![0.0; n];
    let mut bias = vec![0.0; n];
    let mut cycle_roots: Vec<usize> = Vec::new();

    let max_rounds = 10 * n + 100;
    for _ in 0..max_rounds {
        evaluate_policy(g, &policy, &mut eta, &mut bias, &mut cycle_roots);

        let mut changed = false;
        for u in 0..n {
            let cur = policy[u];
            let mut best_e = cur;
            let mut best_eta = eta[db.target(cur)];
            for e in db.out_edges(u) {
                let et = eta[db.target(e)];
                if et > best_eta + eps {
                    best_eta = et;
                    best_e = e;
                }
            }
            if best_e != cur {
                policy[u] = best_e;
                changed = true;
            }
        }
        if changed {
            continue;
        }
        for u in 0..n {
            let cur = policy[u];
            let value_of = |e: usize| g.weights[e] - eta[u] + bias[db.target(e)];
            let mut best_e = cur;
            let mut best_val = value_of(cur);
            for e in db.out_edges(u) {
                if (eta[db.target(e)] - eta[u]).abs() > eps {
                    continue;
                }
                let val = value_of(e);
                if val > best_val + eps {
                    best_val = val;
                    best_e = e;
                }
            }
            if best_e != cur {
                policy[u] = best_e;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // witness: among optimal policy cycles, the shortlex-smallest orbit
    let mut best: Option<(PeriodicOrbit, f64)> = None;
    let top = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &root in &cycle_roots {
        let mut edges = vec![policy[root]];
        let mut v = db.target(policy[root]);
        while v != root {
            edges.push(policy[v]);
            v = db.target(policy[v]);
        }
        let mean = g.cycle_mean(&edges);
        if mean < top - 1e-12 * scale {
            continue;
        }
        let orbit = db.cycle_orbit(&edges);
        let better = match &best {
            None => true,
            Some((o, m)) => {
                mean > m + 1e-12 * scale
                    || ((mean - m).abs() <= 1e-12 * scale
                        && orbit.shortlex_key() < o.shortlex_key())
            }
        };
        if better {
            best = Some((orbit, mean));
        }
    }
    let (witness, value) = best.expect("a policy graph always contains a cycle");

    // bias is future-oriented: bias[u] ≥ w(u→v) − value + bias[v];
    // negate to get the forward potential used by `critical_edges`
    let potential = bias.iter().map(|b| -b).collect();
    Solved {
        value,
        witness,
        potential,
    }
}

/// Gain (`eta`) and bias of a fixed policy; records one root per policy cycle.
fn evaluate_policy(
    g: &WeightedDeBruijn,
    policy: &[usize],
    eta: &mut [f64],
    bias: &mut [f64],
    cycle_roots: &mut Vec<usize>,
) {
    let db = g.graph;
    let n = policy.len();
    let next = |u: usize| db.target(policy[u]);
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut mark = vec![0u8; n];
    let mut path: Vec<usize> = Vec::new();
    cycle_roots.clear();
    for start in 0..n {
        if mark[start] != 0 {
            continue;
        }
        path.clear();
        let mut u = start;
        while mark[u] == 0 {
            mark[u] = 1;
            path.push(u);
            u = next(u);
        }
        let mut tail_end = path.len();
        if mark[u] == 1 {
            // closed a new cycle at u
            let at = path.iter().position(|&x| x == u).expect("u is on the path");
            let cyc = &path[at..];
            let mean = cyc.iter().map(|&x| g.weights[policy[x]]).sum::<f64>() / cyc.len() as f64;
            let root = cyc.iter().copied().min().expect("nonempty cycle");
            cycle_roots.push(root);
            eta[root] = mean;
            bias[root] = 0.0;
            mark[root] = 2;
            // walk backwards around the cycle from root
            let len = cyc.len();
            let ridx = cyc.iter().position(|&x| x == root).expect("root on cycle");
            for step in 1..len {
                let x = cyc[(ridx + len - step) % len];
                let y = next(x);
                eta[x] = mean;
                bias[x] = g.weights[policy[x]] - mean + bias[y];
                mark[x] = 2;
            }
            tail_end = at;
        }
        for &x in path[..tail_end].iter().rev() {
            let y = next(x);
            eta[x] = eta[y];
            bias[x] = g.weights[policy[x]] - eta[y] + bias[y];
            mark[x] = 2;
        }
    }
}

/// Edges tight for the potential (`h(u) + w − value ≥ h(v) − tol`) that lie in
/// a strongly connected component of the tight subgraph.
fn critical_edges(g: &WeightedDeBruijn, value: f64, potential: &[f64], tol: f64) -> Vec<usize> {
    let db = g.graph;
    let n = db.num_states();
    let tight: Vec<usize> = (0..db.num_edges())
        .filter(|&e| {
            let (u, v) = (db.source(e), db.target(e));
            potential[u].is_finite()
                && potential[v].is_finite()
                && potential[u] + g.weights[e] - value >= potential[v] - tol
        })
        .collect();
    let mut sub: DiGraph<(), usize, u32> = DiGraph::with_capacity(n, tight.len());
    for _ in 0..n {
        sub.add_node(());
    }
    for &e in &tight {
        sub.add_edge(
            (db.source(e) as u32).into(),
            (db.target(e) as u32).into(),
            e,
        );
    }
    let mut component = vec![usize::MAX; n];
    for (c, members) in kosaraju_scc(&sub).into_iter().enumerate() {
        for m in members {
            component[m.index()] = c;
        }
    }
    let mut out: Vec<usize> = tight
        .into_iter()
        .filter(|&e| component[db.source(e)] == component[db.target(e)])
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{enumerate_periodic_orbits, Word};

    fn orbit(s: &str, q: usize) -> PeriodicOrbit {
        PeriodicOrbit::new(&Word::new(s.bytes().map(|b| b - b'0').collect(), q).unwrap())
    }

    #[test]
    fn fixed_point_wins() {
        // w(11) = 1, else 0
        let g = WeightedDeBruijn::new(2, 2, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let res = max_cycle_mean(&g);
        assert_eq!(res.value, 1.0);
        assert_eq!(res.witness_cycle, orbit("1", 2));
        assert_eq!(res.optimal_edges, vec![3]);
        assert_eq!(res.method, MaxMeanMethod::Karp);
    }

    #[test]
    fn two_cycle_wins() {
        let g = WeightedDeBruijn::new(2, 2, vec![0.0, 3.0, 3.0, 0.0]).unwrap();
        let res = max_cycle_mean(&g);
        assert_eq!(res.value, 3.0);
        assert_eq!(res.witness_cycle, orbit("01", 2));
        assert_eq!(res.optimal_edges, vec![1, 2]);
    }

    #[test]
    fn constant_weights_make_everything_optimal() {
        let g = WeightedDeBruijn::new(3, 2, vec![2.5; 9]).unwrap();
        let res = max_cycle_mean(&g);
        assert_eq!(res.value, 2.5);
        assert_eq!(res.optimal_edges, (0..9).collect::<Vec<_>>());
        assert_eq!(res.witness_cycle, orbit("0", 3));
    }

    #[test]
    fn range_one_graph() {
        let g = WeightedDeBruijn::new(3, 1, vec![0.2, 0.9, -1.0]).unwrap();
        let res = max_cycle_mean(&g);
        assert_eq!(res.value, 0.9);
        assert_eq!(res.witness_cycle, orbit("1", 3));
        assert_eq!(res.optimal_edges, vec![1]);
    }

    #[test]
    fn support_values_of_the_simplex() {
        let phi = PotentialTable::new(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let s = support_value(&phi, &Direction::new(&[1.0, 0.0]).unwrap()).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        let s = support_value(&phi, &Direction::new(&[1.0, 1.0]).unwrap()).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        let s = support_value(&phi, &Direction::new(&[-1.0, 0.0]).unwrap()).unwrap();
        assert!(s.abs() < 1e-15);
    }

    /// Brute-force maximum over all periodic orbits up to the given period.
    fn brute(g: &WeightedDeBruijn, max_period: usize) -> f64 {
        let db = g.graph();
        enumerate_periodic_orbits(db.q, max_period)
            .unwrap()
            .iter()
            .map(|o| g.cycle_mean(&db.orbit_edges(o)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn lcg_weights(seed: u64, n: usize) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
            })
            .collect()
    }

    #[test]
    fn howard_agrees_with_karp() {
        for seed in 0..30u64 {
            for (q, r) in [(2usize, 3usize), (3, 3), (2, 6), (4, 4)] {
                let n = q * q.pow(r as u32 - 1);
                let g = WeightedDeBruijn::new(q, r, lcg_weights(seed, n)).unwrap();
                let k = karp(&g);
                let h = howard(&g);
                assert!((k.value - h.value).abs() < 1e-12, "seed {seed} q {q} r {r}");
                assert!((g.cycle_mean(&g.graph().orbit_edges(&k.witness)) - k.value).abs() < 1e-12);
                let crit_k = critical_edges(&g, k.value, &k.potential, DEFAULT_EDGE_TOL);
                let crit_h = critical_edges(&g, h.value, &h.potential, DEFAULT_EDGE_TOL);
                assert_eq!(crit_k, crit_h);
            }
        }
    }

    #[test]
    fn witness_edges_are_optimal_and_optimal_cycles_have_top_mean() {
        for seed in 0..20u64 {
            let g = WeightedDeBruijn::new(2, 3, lcg_weights(seed, 8)).unwrap();
            let res = max_cycle_mean(&g);
            let db = g.graph();
            for e in db.orbit_edges(&res.witness_cycle) {
                assert!(res.optimal_edges.contains(&e));
            }
            for o in enumerate_periodic_orbits(2, 4).unwrap() {
                let edges = db.orbit_edges(&o);
                if edges.iter().all(|e| res.optimal_edges.contains(e)) {
                    assert!(g.cycle_mean(&edges) >= res.value - DEFAULT_EDGE_TOL);
                }
            }
            assert!((brute(&g, 4) - res.value).abs() < 1e-12);
        }
    }

    #[test]
    fn split_cycles_recovers_loops() {
        let db = DeBruijn::new(2, 2).unwrap();
        // 0 →(00) 0 →(01) 1 →(11) 1 →(10) 0
        let cycles = split_cycles(&db, &[0, 1, 3, 2]);
        assert_eq!(cycles, vec![vec![0], vec![3], vec![1, 2]]);
    }
}
