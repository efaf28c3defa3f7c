//! Words, periodic orbits, de Bruijn indexing and finite-range vector
//! potentials on the one-sided full shift over `q` symbols.
//!
//! A word `s_0 s_1 … s_{n-1}` is encoded as the base-`q` integer with `s_0`
//! as the most significant digit, so lexicographic and numeric order agree.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of words (or table rows) any enumeration may produce.
pub const MAX_TABLE: u128 = 1 << 24;
/// Largest word length handled by the enumerators.
pub const MAX_RANGE: usize = 16;

pub(crate) fn checked_size(what: &'static str, q: usize, r: usize) -> Result<usize> {
    let requested = (q as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    if requested > MAX_TABLE {
        return Err(Error::Capacity {
            what,
            requested,
            limit: MAX_TABLE,
        });
    }
    Ok(requested as usize)
}

fn check_alphabet(q: usize) -> Result<()> {
    if !(2..=u8::MAX as usize).contains(&q) {
        return Err(Error::contract(format!(
            "alphabet size must lie in [2, 255], got {q}"
        )));
    }
    Ok(())
}

/// A finite word over `{0, …, q-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<u8>,
    q: u8,
}

impl Word {
    pub fn new(symbols: Vec<u8>, q: usize) -> Result<Self> {
        check_alphabet(q)?;
        if symbols.is_empty() {
            return Err(Error::contract("words have length at least 1"));
        }
        if let Some(s) = symbols.iter().find(|&&s| s as usize >= q) {
            return Err(Error::contract(format!(
                "symbol {s} outside alphabet of size {q}"
            )));
        }
        Ok(Self {
            symbols,
            q: q as u8,
        })
    }

    /// Decode the base-`q` integer `index` as a word of length `len`.
    pub fn from_index(index: usize, q: usize, len: usize) -> Self {
        let mut symbols = vec![0u8; len];
        let mut rest = index;
        for slot in symbols.iter_mut().rev() {
            *slot = (rest % q) as u8;
            rest /= q;
        }
        Self {
            symbols,
            q: q as u8,
        }
    }

    pub fn index(&self) -> usize {
        word_index(&self.symbols, self.q as usize)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> usize {
        self.q as usize
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Cyclic rotation by `k` places to the left.
    pub fn rotate(&self, k: usize) -> Self {
        let mut symbols = self.symbols.clone();
        let n = symbols.len();
        symbols.rotate_left(k % n);
        Self { symbols, q: self.q }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q <= 10 {
            for s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

pub(crate) fn word_index(symbols: &[u8], q: usize) -> usize {
    symbols.iter().fold(0usize, |acc, &s| acc * q + s as usize)
}

/// All `q^r` words of length `r`, in lexicographic order.
pub fn enumerate_words(q: usize, r: usize) -> Result<Vec<Word>> {
    check_alphabet(q)?;
    if r == 0 || r > MAX_RANGE {
        return Err(Error::contract(format!(
            "word length must lie in [1, {MAX_RANGE}], got {r}"
        )));
    }
    let n = checked_size("word enumeration", q, r)?;
    Ok((0..n).map(|i| Word::from_index(i, q, r)).collect())
}

/// The orbit of a periodic point, stored by its canonical generator: the
/// lexicographically least rotation of a primitive block.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PeriodicOrbit {
    generator: Word,
}

impl PeriodicOrbit {
    /// Orbit of the periodic point `w w w …`. The block is reduced to its
    /// minimal period and rotated into canonical position.
    pub fn new(block: &Word) -> Self {
        let s = block.symbols();
        let n = s.len();
        let period = (1..=n)
            .find(|&p| n % p == 0 && (p..n).all(|i| s[i] == s[i - p]))
            .unwrap_or(n);
        let primitive = Word {
            symbols: s[..period].to_vec(),
            q: block.q,
        };
        let generator = (0..period)
            .map(|k| primitive.rotate(k))
            .min()
            .expect("period is at least one");
        Self { generator }
    }

    pub fn generator(&self) -> &Word {
        &self.generator
    }

    pub fn period(&self) -> usize {
        self.generator.len()
    }

    /// Ordering used for reproducible tie-breaking: shorter period first,
    /// then lexicographic.
    pub fn shortlex_key(&self) -> (usize, &[u8]) {
        (self.period(), self.generator.symbols())
    }
}

impl fmt::Display for PeriodicOrbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})^∞", self.generator)
    }
}

/// One canonical representative for every periodic orbit of minimal period
/// at most `max_period`, ordered by period and then lexicographically.
///
/// Canonical generators are exactly the Lyndon words, produced here by
/// Duval's successor rule.
pub fn enumerate_periodic_orbits(q: usize, max_period: usize) -> Result<Vec<PeriodicOrbit>> {
    check_alphabet(q)?;
    if max_period == 0 {
        return Ok(Vec::new());
    }
    checked_size("periodic orbit enumeration", q, max_period)?;

    let mut by_period: Vec<Vec<PeriodicOrbit>> = vec![Vec::new(); max_period + 1];
    let top = (q - 1) as u8;
    let mut w: Vec<u8> = vec![0];
    loop {
        let n = w.len();
        by_period[n].push(PeriodicOrbit {
            generator: Word {
                symbols: w.clone(),
                q: q as u8,
            },
        });
        // Duval: repeat w to length max_period, strip trailing maximal
        // symbols, increment the last symbol.
        let mut next: Vec<u8> = (0..max_period).map(|i| w[i % n]).collect();
        while next.last() == Some(&top) {
            next.pop();
        }
        match next.last_mut() {
            Some(last) => *last += 1,
            None => break,
        }
        w = next;
    }
    Ok(by_period.into_iter().flatten().collect())
}

/// The invariant measure equidistributed on the orbit: every cyclic shift of
/// the generator with weight `1/p`.
pub fn orbit_measure_weights(orbit: &PeriodicOrbit) -> Vec<(Word, f64)> {
    let p = orbit.period();
    let weight = 1.0 / p as f64;
    (0..p)
        .map(|k| (orbit.generator.rotate(k), weight))
        .collect()
}

/// A unit vector in `R^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    components: Vec<f64>,
}

impl Direction {
    /// Normalize a nonzero vector.
    pub fn new(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::contract("direction must be a finite nonzero vector"));
        }
        Ok(Self {
            components: v.iter().map(|x| x / norm).collect(),
        })
    }

    /// Direction at angle `theta` in the plane.
    pub fn from_angle(theta: f64) -> Self {
        Self {
            components: vec![theta.cos(), theta.sin()],
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.components.iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

/// A vector-valued potential depending on the first `range` coordinates.
///
/// `values` is row-major: the vector for word index `i` occupies
/// `values[i*dim .. (i+1)*dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTable {
    q: usize,
    range: usize,
    dim: usize,
    values: Vec<f64>,
}

impl PotentialTable {
    pub fn new(q: usize, range: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        check_alphabet(q)?;
        if range == 0 || range > MAX_RANGE {
            return Err(Error::contract(format!(
                "range must lie in [1, {MAX_RANGE}], got {range}"
            )));
        }
        if dim == 0 {
            return Err(Error::contract("potential dimension must be positive"));
        }
        let rows = checked_size("potential table", q, range)?;
        if values.len() != rows * dim {
            return Err(Error::contract(format!(
                "expected {} values ({rows} words × {dim}), got {}",
                rows * dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("potential values must be finite"));
        }
        Ok(Self {
            q,
            range,
            dim,
            values,
        })
    }

    /// Build a table by evaluating `f` on every word of length `range`.
    pub fn from_fn<F>(q: usize, range: usize, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[u8]) -> Vec<f64>,
    {
        check_alphabet(q)?;
        let rows = checked_size("potential table", q, range.max(1))?;
        let mut values = Vec::with_capacity(rows * dim);
        let mut symbols = vec![0u8; range];
        for i in 0..rows {
            let mut rest = i;
            for slot in symbols.iter_mut().rev() {
                *slot = (rest % q) as u8;
                rest /= q;
            }
            let v = f(&symbols);
            if v.len() != dim {
                return Err(Error::contract(format!(
                    "potential closure returned {} components, expected {dim}",
                    v.len()
                )));
            }
            values.extend(v);
        }
        Self::new(q, range, dim, values)
    }

    pub fn alphabet_size(&self) -> usize {
        self.q
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on the word with base-`q` index `index`.
    pub fn value(&self, index: usize) -> &[f64] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    pub fn value_of(&self, word: &Word) -> Result<&[f64]> {
        if word.len() != self.range || word.alphabet_size() != self.q {
            return Err(Error::contract(format!(
                "word {word} does not index a range-{} table over {} symbols",
                self.range, self.q
            )));
        }
        Ok(self.value(word.index()))
    }

    /// The scalar potential `α·Φ` (scaled by `t`).
    pub fn contract(&self, alpha: &Direction, t: f64) -> Result<crate::transfer::ScalarPotential> {
        if alpha.dim() != self.dim {
            return Err(Error::contract(format!(
                "direction has {} components, potential has {}",
                alpha.dim(),
                self.dim
            )));
        }
        let values = self
            .values
            .chunks_exact(self.dim)
            .map(|row| t * alpha.dot(row))
            .collect();
        crate::transfer::ScalarPotential::new(self.q, self.range, values)
    }

    /// Coordinate `i` as a scalar potential.
    pub fn component(&self, i: usize) -> Result<crate::transfer::ScalarPotential> {
        if i >= self.dim {
            return Err(Error::contract(format!(
                "component {i} out of range for dimension {}",
                self.dim
            )));
        }
        let values = self
            .values
            .chunks_exact(self.dim)
            .map(|row| row[i])
            .collect();
        crate::transfer::ScalarPotential::new(self.q, self.range, values)
    }

    /// Coordinatewise bounds of the value set.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for row in self.values.chunks_exact(self.dim) {
            for (k, &v) in row.iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        (lo, hi)
    }
}

/// Rotation vector of the periodic-orbit measure: the average of `Φ` over
/// the length-`range` windows of the periodic word starting at each position
/// of one period.
pub fn periodic_orbit_rv(orbit: &PeriodicOrbit, phi: &PotentialTable) -> Result<Vec<f64>> {
    if orbit.generator.alphabet_size() != phi.q {
        return Err(Error::contract(format!(
            "orbit over {} symbols, potential over {}",
            orbit.generator.alphabet_size(),
            phi.q
        )));
    }
    Ok(periodic_rv_unchecked(orbit.generator.symbols(), phi))
}

pub(crate) fn periodic_rv_unchecked(block: &[u8], phi: &PotentialTable) -> Vec<f64> {
    let p = block.len();
    let r = phi.range;
    let q = phi.q;
    let mut acc = vec![0.0; phi.dim];
    for k in 0..p {
        let idx = (0..r).fold(0usize, |a, i| a * q + block[(k + i) % p] as usize);
        for (a, v) in acc.iter_mut().zip(phi.value(idx)) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= p as f64);
    acc
}

/// Index arithmetic on the de Bruijn graph whose states are words of length
/// `r-1` and whose edges are words of length `r`.
///
/// Edge `e` runs from state `e / q` to state `e mod q^(r-1)`. For `r = 1`
/// there is one state carrying `q` self-loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeBruijn {
    pub q: usize,
    pub r: usize,
    states: usize,
}

impl DeBruijn {
    pub fn new(q: usize, r: usize) -> Result<Self> {
        check_alphabet(q)?;
        if r == 0 || r > MAX_RANGE {
            return Err(Error::contract(format!(
                "range must lie in [1, {MAX_RANGE}], got {r}"
            )));
        }
        checked_size("de Bruijn edge set", q, r)?;
        Ok(Self {
            q,
            r,
            states: q.pow(r as u32 - 1),
        })
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_edges(&self) -> usize {
        self.states * self.q
    }

    #[inline]
    pub fn source(&self, edge: usize) -> usize {
        edge / self.q
    }

    #[inline]
    pub fn target(&self, edge: usize) -> usize {
        edge % self.states
    }

    /// Edges leaving `state`, one per appended symbol.
    #[inline]
    pub fn out_edges(&self, state: usize) -> std::ops::Range<usize> {
        state * self.q..(state + 1) * self.q
    }

    /// Edges entering `state`, one per prepended symbol.
    #[inline]
    pub fn in_edges(&self, state: usize) -> impl Iterator<Item = usize> {
        let states = self.states;
        (0..self.q).map(move |s| s * states + state)
    }

    /// Convert a closed walk given as a sequence of edges into its orbit.
    pub fn cycle_orbit(&self, edges: &[usize]) -> PeriodicOrbit {
        let symbols: Vec<u8> = edges.iter().map(|&e| (e % self.q) as u8).collect();
        PeriodicOrbit::new(&Word {
            symbols,
            q: self.q as u8,
        })
    }

    /// Edges traversed by the periodic orbit, one per position of the period.
    pub fn orbit_edges(&self, orbit: &PeriodicOrbit) -> Vec<usize> {
        let block = orbit.generator.symbols();
        let p = block.len();
        (0..p)
            .map(|k| (0..self.r).fold(0usize, |a, i| a * self.q + block[(k + i) % p] as usize))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn w(s: &str, q: usize) -> Word {
        Word::new(s.bytes().map(|b| b - b'0').collect(), q).unwrap()
    }

    #[test]
    fn words_in_lexicographic_order() {
        let ws = enumerate_words(2, 1).unwrap();
        assert_eq!(ws, vec![w("0", 2), w("1", 2)]);
        let ws = enumerate_words(2, 2).unwrap();
        let names: Vec<String> = ws.iter().map(|x| x.to_string()).collect();
        assert_eq!(names, ["00", "01", "10", "11"]);
        let ws = enumerate_words(4, 3).unwrap();
        assert_eq!(ws.len(), 64);
        assert_eq!(ws[0].to_string(), "000");
        assert_eq!(ws[63].to_string(), "333");
        for (i, x) in ws.iter().enumerate() {
            assert_eq!(x.index(), i);
        }
    }

    #[test]
    fn enumeration_caps() {
        assert!(matches!(enumerate_words(2, 25), Err(Error::Contract(_))));
        assert!(matches!(
            enumerate_words(5, 11),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(enumerate_words(1, 3), Err(Error::Contract(_))));
        assert!(matches!(
            enumerate_periodic_orbits(4, 13),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn word_validation() {
        assert!(Word::new(vec![], 2).is_err());
        assert!(Word::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn small_orbit_lists() {
        let o = enumerate_periodic_orbits(2, 1).unwrap();
        let g: Vec<String> = o.iter().map(|x| x.generator().to_string()).collect();
        assert_eq!(g, ["0", "1"]);
        let o = enumerate_periodic_orbits(2, 2).unwrap();
        let g: Vec<String> = o.iter().map(|x| x.generator().to_string()).collect();
        assert_eq!(g, ["0", "1", "01"]);
    }

    /// Orbits of exact period p by brute force: primitive words modulo rotation.
    fn brute_orbits(q: usize, p: usize) -> BTreeSet<Vec<u8>> {
        let mut out = BTreeSet::new();
        for i in 0..q.pow(p as u32) {
            let word = Word::from_index(i, q, p);
            let s = word.symbols();
            let primitive = (1..p).all(|d| p % d != 0 || (d..p).any(|k| s[k] != s[k - d]));
            if primitive {
                let least = (0..p).map(|k| word.rotate(k)).min().unwrap();
                out.insert(least.symbols().to_vec());
            }
        }
        out
    }

    #[test]
    fn orbit_counts_match_brute_force() {
        for q in [2usize, 3, 4] {
            let max_p = if q == 2 { 8 } else { 5 };
            let orbits = enumerate_periodic_orbits(q, max_p).unwrap();
            for p in 1..=max_p {
                let got: BTreeSet<Vec<u8>> = orbits
                    .iter()
                    .filter(|o| o.period() == p)
                    .map(|o| o.generator().symbols().to_vec())
                    .collect();
                assert_eq!(got, brute_orbits(q, p), "q={q} p={p}");
            }
        }
        let four = enumerate_periodic_orbits(2, 4)
            .unwrap()
            .into_iter()
            .filter(|o| o.period() == 4)
            .count();
        assert_eq!(four, 3);
    }

    #[test]
    fn orbit_counts_satisfy_necklace_identity() {
        // Σ_{p | P} p·N(p) = q^P: every word of length P is a period-P point.
        for p_max in 1..=6 {
            let orbits = enumerate_periodic_orbits(2, p_max).unwrap();
            let total: usize = orbits
                .iter()
                .filter(|o| p_max % o.period() == 0)
                .map(|o| o.period())
                .sum();
            assert_eq!(total, 1 << p_max);
        }
    }

    #[test]
    fn orbit_canonicalization() {
        let o = PeriodicOrbit::new(&w("1010", 2));
        assert_eq!(o.generator().to_string(), "01");
        let o = PeriodicOrbit::new(&w("100", 2));
        assert_eq!(o.generator().to_string(), "001");
        assert_eq!(o.period(), 3);
    }

    #[test]
    fn orbit_weights() {
        let ws = orbit_measure_weights(&PeriodicOrbit::new(&w("01", 2)));
        let names: Vec<(String, f64)> = ws.iter().map(|(x, p)| (x.to_string(), *p)).collect();
        assert_eq!(names, vec![("01".into(), 0.5), ("10".into(), 0.5)]);
        let ws = orbit_measure_weights(&PeriodicOrbit::new(&w("0", 2)));
        assert_eq!(ws, vec![(w("0", 2), 1.0)]);
        let ws = orbit_measure_weights(&PeriodicOrbit::new(&w("001", 2)));
        assert_eq!(ws.len(), 3);
        assert!((ws.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orbit_rotation_vectors() {
        let simplex = PotentialTable::new(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let rv = periodic_orbit_rv(&PeriodicOrbit::new(&w("01", 2)), &simplex).unwrap();
        assert_eq!(rv, vec![0.5, 0.5]);
        let rv = periodic_orbit_rv(&PeriodicOrbit::new(&w("0", 2)), &simplex).unwrap();
        assert_eq!(rv, vec![1.0, 0.0]);

        // Φ(ab) = a·b on {0,1}^2
        let prod = PotentialTable::from_fn(2, 2, 1, |s| vec![(s[0] * s[1]) as f64]).unwrap();
        let rv = periodic_orbit_rv(&PeriodicOrbit::new(&w("01", 2)), &prod).unwrap();
        assert_eq!(rv, vec![0.0]);
        let rv = periodic_orbit_rv(&PeriodicOrbit::new(&w("1", 2)), &prod).unwrap();
        assert_eq!(rv, vec![1.0]);
    }

    #[test]
    fn table_validation() {
        assert!(PotentialTable::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(PotentialTable::new(2, 1, 1, vec![0.0, f64::NAN]).is_err());
        assert!(PotentialTable::new(2, 1, 0, vec![]).is_err());
    }

    #[test]
    fn de_bruijn_indexing() {
        let g = DeBruijn::new(3, 3).unwrap();
        assert_eq!(g.num_states(), 9);
        for e in 0..g.num_edges() {
            let word = Word::from_index(e, 3, 3);
            let s = word.symbols();
            assert_eq!(g.source(e), word_index(&s[..2], 3));
            assert_eq!(g.target(e), word_index(&s[1..], 3));
            assert!(g.out_edges(g.source(e)).contains(&e));
            assert!(g.in_edges(g.target(e)).any(|x| x == e));
        }
        let g1 = DeBruijn::new(2, 1).unwrap();
        assert_eq!(g1.num_states(), 1);
        assert_eq!(g1.target(1), 0);
    }

    #[test]
    fn orbit_edges_round_trip() {
        let g = DeBruijn::new(2, 3).unwrap();
        for o in enumerate_periodic_orbits(2, 6).unwrap() {
            let edges = g.orbit_edges(&o);
            assert_eq!(g.cycle_orbit(&edges), o);
            for k in 0..edges.len() {
                assert_eq!(g.target(edges[k]), g.source(edges[(k + 1) % edges.len()]));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn table_strategy() -> impl Strategy<Value = PotentialTable> {
            (2usize..=3, 1usize..=3, 1usize..=3).prop_flat_map(|(q, r, m)| {
                let n = q.pow(r as u32) * m;
                proptest::collection::vec(-5.0f64..5.0, n)
                    .prop_map(move |v| PotentialTable::new(q, r, m, v).unwrap())
            })
        }

        proptest! {
            #[test]
            fn rv_is_rotation_invariant_and_bounded(
                phi in table_strategy(),
                raw in proptest::collection::vec(0u8..3, 1..8),
                shift in 0usize..8,
            ) {
                let q = phi.alphabet_size();
                let block: Vec<u8> = raw.iter().map(|s| s % q as u8).collect();
                let word = Word::new(block, q).unwrap();
                let a = periodic_rv_unchecked(word.symbols(), &phi);
                let b = periodic_rv_unchecked(word.rotate(shift).symbols(), &phi);
                let (lo, hi) = phi.bounds();
                for k in 0..phi.dim() {
                    prop_assert!((a[k] - b[k]).abs() < 1e-12);
                    prop_assert!(a[k] >= lo[k] - 1e-12 && a[k] <= hi[k] + 1e-12);
                }
                let canon = periodic_orbit_rv(&PeriodicOrbit::new(&word), &phi).unwrap();
                for k in 0..phi.dim() {
                    prop_assert!((a[k] - canon[k]).abs() < 1e-12);
                }
            }
        }
    }
}
