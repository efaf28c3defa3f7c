//! The four-symbol example whose rotation set has a non-exposed extreme
//! point: a polygon with infinitely many vertices `w_i(j)` accumulating at
//! `w_i(∞)`, truncated at a finite depth.
//!
//! Symbols split into `S₁ = {0,1}` and `S₂ = {2,3}`. A sequence whose first
//! `n` symbols lie in the class of its first symbol gets
//!
//! * `w(0) = (a, 0)` if `n < λ`,
//! * `v_i(n + 1 − λ) = (x_i(k), ℓ_i(x_i(k)))` if `λ ≤ n ≤ K − 2`,
//! * `w_i(∞) = (0, ℓ_i(0))` if `n ≥ K − 1` (the truncation rule).
//!
//! So the vertices `w_i(j)` present at depth `K` are those with `j ≤ K − 1`.
//!
//! The `x_i(k)` underflow quickly, so all evaluations of `ℓ` go through
//! `ln x`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolic::{checked_size, PotentialTable, Word};

/// Largest supported truncation depth (`4^K ≤ 2^24`).
pub const MAX_DEPTH: usize = 12;

/// `ln x(k) = intercept − rate·k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpRule {
    pub intercept: f64,
    pub rate: f64,
}

impl ExpRule {
    pub fn ln_x(&self, k: usize) -> f64 {
        self.intercept - self.rate * k as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        self.ln_x(k).exp()
    }

    /// `Σ_{k≥1} x(k)`.
    pub fn total(&self) -> f64 {
        self.x(1) / (1.0 - (-self.rate).exp())
    }
}

/// `ℓ(x) = sign·(offset − 1/ln x)`, with `ℓ(0) = sign·offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogProfile {
    pub offset: f64,
    pub sign: f64,
}

impl LogProfile {
    pub fn at_ln(&self, ln_x: f64) -> f64 {
        // ln 0 = −∞ gives the limit value
        self.sign * (self.offset - 1.0 / ln_x)
    }

    pub fn at_zero(&self) -> f64 {
        self.sign * self.offset
    }

    fn negated(&self) -> Self {
        Self {
            offset: self.offset,
            sign: -self.sign,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example1Params {
    pub a: f64,
    pub lambda: usize,
    pub x: [ExpRule; 2],
    pub ell: [LogProfile; 2],
    pub depth: usize,
}

pub const PRESETS: [&str; 2] = ["prop55", "prop56"];

impl Example1Params {
    /// Named parameter sets; `prop55` has `ℓ₁(0) = 1/130`, `prop56` has `ℓ₁(0) = 0`.
    pub fn preset(name: &str, depth: usize) -> Result<Self> {
        let offset = match name {
            "prop55" => 1.0 / 130.0,
            "prop56" => 0.0,
            _ => {
                return Err(Error::contract(format!(
                    "unknown preset {name:?} (expected one of {PRESETS:?})"
                )))
            }
        };
        let x = ExpRule {
            intercept: 7.0,
            rate: 10.0,
        };
        let l1 = LogProfile { offset, sign: 1.0 };
        let p = Self {
            a: (-2.0f64).exp(),
            lambda: 3,
            x: [x, x],
            ell: [l1, l1.negated()],
            depth,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 3 {
            return Err(Error::contract(format!(
                "λ = {} must be at least 3",
                self.lambda
            )));
        }
        if self.depth <= self.lambda {
            return Err(Error::contract(format!(
                "depth {} must exceed λ = {}",
                self.depth, self.lambda
            )));
        }
        if self.depth > MAX_DEPTH {
            return Err(Error::Capacity {
                what: "truncation depth",
                requested: self.depth as u128,
                limit: MAX_DEPTH as u128,
            });
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::contract("a must be positive"));
        }
        for (i, rule) in self.x.iter().enumerate() {
            if !(rule.rate > 0.0) || !rule.intercept.is_finite() {
                return Err(Error::contract(format!(
                    "x_{} must decrease exponentially",
                    i + 1
                )));
            }
            if !(rule.total() < self.a) {
                return Err(Error::contract(format!(
                    "Σ x_{}(k) = {} is not below a = {}",
                    i + 1,
                    rule.total(),
                    self.a
                )));
            }
        }
        Ok(())
    }

    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        let p = Self {
            depth,
            ..self.clone()
        };
        p.validate()?;
        Ok(p)
    }

    fn idx(i: usize) -> Result<usize> {
        match i {
            1 | 2 => Ok(i - 1),
            _ => Err(Error::contract(format!("class index {i} is not 1 or 2"))),
        }
    }

    pub fn w0(&self) -> [f64; 2] {
        [self.a, 0.0]
    }

    /// `v_i(k)` for `k ≥ 1`.
    pub fn v(&self, i: usize, k: usize) -> Result<[f64; 2]> {
        let c = Self::idx(i)?;
        if k == 0 {
            return Err(Error::contract("v_i(k) needs k ≥ 1"));
        }
        let ln_x = self.x[c].ln_x(k);
        Ok([ln_x.exp(), self.ell[c].at_ln(ln_x)])
    }

    /// `w_i(∞) = (0, ℓ_i(0))`.
    pub fn w_inf(&self, i: usize) -> Result<[f64; 2]> {
        Ok([0.0, self.ell[Self::idx(i)?].at_zero()])
    }

    /// Numerical checks of the hypotheses behind the vertex description.
    pub fn audit(&self) -> HypothesisAudit {
        let x_sum_below_a = self.x.iter().all(|r| r.total() < self.a);
        let mut vertex_condition = [false; 2];
        let mut profile_shape = [true; 2];
        for c in 0..2 {
            let (l, r) = (self.ell[c], self.x[c]);
            let (l1, l2) = (l.at_ln(r.ln_x(1)), l.at_ln(r.ln_x(2)));
            let sign = if c == 0 { -1.0 } else { 1.0 };
            vertex_condition[c] = sign * l1 < sign * (self.lambda as f64 + 1.0) * l2;
            // monotone in the right direction and concave (c = 0) / convex
            // (c = 1) along a grid on (0, a]
            let grid: Vec<f64> = (0..=64)
                .map(|s| self.a.ln() - 0.5 * s as f64)
                .rev()
                .collect();
            let xs: Vec<f64> = grid.iter().map(|g| g.exp()).collect();
            let ys: Vec<f64> = grid.iter().map(|&g| l.at_ln(g)).collect();
            let bend = -sign;
            for k in 1..xs.len() {
                let rising = (ys[k] - ys[k - 1]) * bend;
                if !(rising >= 0.0) || !(ys[k] * bend >= 0.0) {
                    profile_shape[c] = false;
                }
            }
            for k in 1..xs.len() - 1 {
                let s0 = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
                let s1 = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
                if (s1 - s0) * bend > 0.0 {
                    profile_shape[c] = false;
                }
            }
        }
        HypothesisAudit {
            x_sum_below_a,
            vertex_condition,
            profile_shape,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisAudit {
    /// `Σ_k x_i(k) < a` for both classes.
    pub x_sum_below_a: bool,
    /// `(−1)^i ℓ_i(x_i(1)) < (−1)^i (λ+1) ℓ_i(x_i(2))`.
    pub vertex_condition: [bool; 2],
    /// Sign, monotonicity and concavity/convexity of `ℓ_i` on a grid.
    pub profile_shape: [bool; 2],
}

impl HypothesisAudit {
    pub fn all(&self) -> bool {
        self.x_sum_below_a
            && self.vertex_condition.iter().all(|&b| b)
            && self.profile_shape.iter().all(|&b| b)
    }
}

/// Truncated potential together with the size of what truncation hides.
#[derive(Clone, Debug)]
pub struct Example1Potential {
    pub table: PotentialTable,
    /// `max_i ‖v_i(K − λ) − w_i(∞)‖`: the largest change any deeper
    /// truncation makes to a value.
    pub truncation_bound: f64,
}

fn class_of(s: u8) -> usize {
    if s < 2 {
        0
    } else {
        1
    }
}

/// Range-`K` potential on four symbols.
pub fn example1_potential(p: &Example1Params) -> Result<Example1Potential> {
    p.validate()?;
    let k = p.depth;
    checked_size("example potential table", 4, k)?;
    // per class: value for each leading run length n = 1..=K
    let mut by_run = [vec![[0.0; 2]; k + 1], vec![[0.0; 2]; k + 1]];
    for c in 0..2 {
        for n in 1..=k {
            by_run[c][n] = if n < p.lambda {
                p.w0()
            } else if n + 1 < k {
                p.v(c + 1, n + 1 - p.lambda)?
            } else {
                p.w_inf(c + 1)?
            };
        }
    }
    let table = PotentialTable::from_fn(4, k, 2, |w| {
        let c = class_of(w[0]);
        let n = w.iter().take_while(|&&s| class_of(s) == c).count();
        by_run[c][n].to_vec()
    })?;
    let mut bound: f64 = 0.0;
    for i in 1..=2 {
        let v = p.v(i, k - p.lambda)?;
        let w = p.w_inf(i)?;
        bound = bound.max((v[0] - w[0]).hypot(v[1] - w[1]));
    }
    Ok(Example1Potential {
        table,
        truncation_bound: bound,
    })
}

/// `w_i(j)`: the rotation vector of the period-`j` orbit whose generator has
/// `j − 1` leading symbols in `S_i`.
pub fn vertex_formula(i: usize, j: usize, p: &Example1Params) -> Result<[f64; 2]> {
    let lambda = p.lambda;
    if j < lambda {
        return Err(Error::contract(format!(
            "vertex index j = {j} is below λ = {lambda}"
        )));
    }
    let w0 = p.w0();
    let lf = lambda as f64;
    if j == lambda {
        let vi = p.v(i, 1)?;
        let vo = p.v(3 - i, 1)?;
        let (ci, co) = ((3 - i) as f64, i as f64);
        let f = |d: usize| (3.0 * (lf - 1.0) * w0[d] + ci * vi[d] + co * vo[d]) / (3.0 * lf);
        return Ok([f(0), f(1)]);
    }
    let mut s = [lf * w0[0], lf * w0[1]];
    for k in 1..=j - lambda {
        let v = p.v(i, k)?;
        s[0] += v[0];
        s[1] += v[1];
    }
    Ok([s[0] / j as f64, s[1] / j as f64])
}

/// Slope of the chord from `w_i(∞)` to `w_i(j)`.
pub fn vertex_slope(i: usize, j: usize, p: &Example1Params) -> Result<f64> {
    if j <= p.lambda {
        return Err(Error::contract(format!("slope needs j > λ, got {j}")));
    }
    let w = vertex_formula(i, j, p)?;
    let inf = p.w_inf(i)?;
    Ok((w[1] - inf[1]) / (w[0] - inf[0]))
}

/// Symbolwise swap `0↔2`, `1↔3`.
pub fn symmetry_t(w: &Word) -> Result<Word> {
    if w.alphabet_size() != 4 {
        return Err(Error::contract("the symmetry acts on four symbols"));
    }
    Word::new(w.symbols().iter().map(|&s| (s + 2) % 4).collect(), 4)
}

/// `Φ(T w) = (φ₁(w), −φ₂(w))` exactly, for every word.
pub fn check_symmetry(phi: &PotentialTable) -> bool {
    if phi.alphabet_size() != 4 || phi.dim() != 2 {
        return false;
    }
    let r = phi.range();
    (0..phi.len()).all(|idx| {
        let w = Word::from_index(idx, 4, r);
        let tw = symmetry_t(&w).expect("four symbols");
        let (a, b) = (phi.value(idx), phi.value(tw.index()));
        b[0] == a[0] && b[1] == -a[1]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// `w₁(j)` decreases in both coordinates and `w₂(j)` decreases in x,
    /// increases in y, across the whole range.
    pub monotone: bool,
    /// First `j` where monotonicity fails.
    pub first_violation: Option<usize>,
    /// The sufficient condition for the threshold to be `λ`.
    pub sufficient_condition: bool,
}

/// Monotone approach of the vertices to `w_i(∞)` for `j ∈ range` (comparing
/// `w_i(j)` with `w_i(j+1)`).
pub fn monotonicity_check(
    p: &Example1Params,
    range: std::ops::RangeInclusive<usize>,
) -> Result<MonotonicityReport> {
    if *range.start() <= p.lambda || *range.end() > 10_000 || range.is_empty() {
        return Err(Error::contract(format!(
            "j range must lie within [λ+1, 10^4], got {range:?}"
        )));
    }
    let audit = p.audit();
    let mut first_violation = None;
    // running sums keep this linear in the range length
    let mut sums = [[0.0f64; 2]; 2];
    let lambda = p.lambda;
    let w0 = p.w0();
    for (c, sum) in sums.iter_mut().enumerate() {
        for k in 1..=*range.start() - lambda {
            let v = p.v(c + 1, k)?;
            sum[0] += v[0];
            sum[1] += v[1];
        }
    }
    let vertex = |sum: &[f64; 2], j: usize| {
        let l = lambda as f64;
        [
            (sum[0] + l * w0[0]) / j as f64,
            (sum[1] + l * w0[1]) / j as f64,
        ]
    };
    'outer: for j in range {
        for c in 0..2 {
            let cur = vertex(&sums[c], j);
            let v = p.v(c + 1, j + 1 - lambda)?;
            sums[c][0] += v[0];
            sums[c][1] += v[1];
            let next = vertex(&sums[c], j + 1);
            let dy = if c == 0 {
                cur[1] - next[1]
            } else {
                next[1] - cur[1]
            };
            if !(cur[0] - next[0] > 0.0 && dy > 0.0) {
                first_violation = Some(j);
                break 'outer;
            }
        }
    }
    Ok(MonotonicityReport {
        monotone: first_violation.is_none(),
        first_violation,
        sufficient_condition: audit.vertex_condition.iter().all(|&b| b),
    })
}

/// Names a point as `w(0)`, `w_i(j)` (for `λ ≤ j ≤ max_j`) or `w_i(∞)`.
pub fn label_point(p: &Example1Params, w: [f64; 2], max_j: usize, tol: f64) -> Option<String> {
    let close = |u: [f64; 2]| (u[0] - w[0]).abs() <= tol && (u[1] - w[1]).abs() <= tol;
    if close(p.w0()) {
        return Some("w(0)".into());
    }
    for i in 1..=2 {
        if close(p.w_inf(i).ok()?) {
            return Some(format!("w{i}(inf)"));
        }
        for j in p.lambda..=max_j {
            if close(vertex_formula(i, j, p).ok()?) {
                return Some(format!("w{i}({j})"));
            }
        }
    }
    None
}
