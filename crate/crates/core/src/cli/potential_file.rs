//! Potentials on disk: a TOML document with `alphabet_size`, `range`, `dim`
//! and a `[values]` table keyed by base-q digit strings.
//!
//! ```toml
//! alphabet_size = 2
//! range = 1
//! dim = 1
//!
//! [values]
//! 0 = [0.0]
//! 1 = [1.0]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::symbolic::{PotentialTable, Word};

/// Digits used for word keys; alphabets up to 36 symbols.
const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// How many missing or unknown words an error message lists.
const LIST_LIMIT: usize = 16;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    alphabet_size: usize,
    range: usize,
    dim: usize,
    values: BTreeMap<String, Vec<f64>>,
}

fn word_key(w: &Word) -> String {
    w.symbols()
        .iter()
        .map(|&s| DIGITS[s as usize] as char)
        .collect()
}

fn listing(words: &[String]) -> String {
    let mut s = words
        .iter()
        .take(LIST_LIMIT)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if words.len() > LIST_LIMIT {
        s.push_str(&format!(" and {} more", words.len() - LIST_LIMIT));
    }
    s
}

/// Serialize a table; [`parse_potential`] reads it back bit-for-bit.
pub fn write_potential(phi: &PotentialTable) -> Result<String, CliError> {
    if phi.alphabet_size() > DIGITS.len() {
        return Err(CliError::Config(format!(
            "alphabet size {} has no digit-string encoding",
            phi.alphabet_size()
        )));
    }
    let values = (0..phi.len())
        .map(|i| {
            let w = Word::from_index(i, phi.alphabet_size(), phi.range());
            (word_key(&w), phi.value(i).to_vec())
        })
        .collect();
    let file = PotentialFile {
        alphabet_size: phi.alphabet_size(),
        range: phi.range(),
        dim: phi.dim(),
        values,
    };
    toml::to_string(&file).map_err(|e| CliError::Config(e.to_string()))
}

pub fn parse_potential(text: &str, origin: &str) -> Result<PotentialTable, CliError> {
    let parse_err = |msg: String| CliError::Parse {
        origin: origin.to_string(),
        msg,
    };
    let file: PotentialFile = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let (q, r, m) = (file.alphabet_size, file.range, file.dim);
    if q == 0 || q > DIGITS.len() {
        return Err(parse_err(format!(
            "alphabet_size = {q} is outside 1..={}",
            DIGITS.len()
        )));
    }
    if r == 0 || m == 0 {
        return Err(parse_err("range and dim must be positive".into()));
    }
    crate::symbolic::checked_size("potential table", q, r)?;
    let mut values = Vec::with_capacity(q.pow(r as u32) * m);
    let mut missing = Vec::new();
    let mut seen = 0usize;
    for i in 0..q.pow(r as u32) {
        let key = word_key(&Word::from_index(i, q, r));
        match file.values.get(&key) {
            Some(v) if v.len() == m => {
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(parse_err(format!("values.{key}: entry {x} is not finite")));
                }
                values.extend_from_slice(v);
                seen += 1;
            }
            Some(v) => {
                return Err(parse_err(format!(
                    "values.{key}: {} components, expected dim = {m}",
                    v.len()
                )))
            }
            None => {
                missing.push(key);
                values.extend(std::iter::repeat(0.0).take(m));
            }
        }
    }
    if !missing.is_empty() {
        return Err(parse_err(format!(
            "values table is missing {} word(s): {}",
            missing.len(),
            listing(&missing)
        )));
    }
    if seen != file.values.len() {
        let unknown: Vec<String> = file
            .values
            .keys()
            .filter(|k| k.len() != r || !k.bytes().all(|b| DIGITS[..q].contains(&b)))
            .cloned()
            .collect();
        return Err(parse_err(format!(
            "values table has word(s) that are not length-{r} words over {q} symbols: {}",
            listing(&unknown)
        )));
    }
    Ok(PotentialTable::new(q, r, m, values)?)
}

pub fn read_potential(path: &Path) -> Result<PotentialTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
        origin: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_potential(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_the_documented_layout() {
        let text = "alphabet_size = 2\nrange = 1\ndim = 1\n\n[values]\n0 = [0.0]\n1 = [1.0]\n";
        let phi = parse_potential(text, "inline").unwrap();
        assert_eq!(phi.values(), &[0.0, 1.0]);
    }

    #[test]
    fn missing_words_are_named() {
        let text = "alphabet_size = 2\nrange = 2\ndim = 1\n[values]\n00 = [0.0]\n11 = [1.0]\n";
        let err = parse_potential(text, "inline").unwrap_err().to_string();
        assert!(err.contains("missing 2 word(s): 01, 10"), "{err}");
    }

    #[test]
    fn bad_documents() {
        for (text, needle) in [
            ("alphabet_size = 2\nrange = 1\ndim = 2\n[values]\n0 = [0.0]\n1 = [1.0, 2.0]\n", "values.0"),
            ("alphabet_size = 2\nrange = 1\ndim = 1\n[values]\n0 = [0.0]\n1 = [1.0]\n2 = [1.0]\n", "2"),
            ("alphabet_size = 2\nrange = 1\n[values]\n0 = [0.0]\n1 = [1.0]\n", "dim"),
            ("alphabet_size = 2\nrange = 1\ndim = 1\n[values]\n0 = [0.0\n", "line"),
            ("alphabet_size = 2\nrange = 1\ndim = 1\nextra = 3\n[values]\n0 = [0.0]\n1 = [1.0]\n", "extra"),
        ] {
            let err = parse_potential(text, "inline").unwrap_err();
            assert!(matches!(err, CliError::Parse { .. }));
            assert!(err.to_string().contains(needle), "{needle}: {err}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(
            q in 2usize..=4,
            r in 1usize..=3,
            m in 1usize..=2,
            seed in proptest::collection::vec(any::<f64>(), 128),
        ) {
            let n = q.pow(r as u32) * m;
            let values: Vec<f64> = seed.iter().cycle().take(n)
                .map(|x| if x.is_finite() { *x } else { -0.0 })
                .collect();
            let phi = PotentialTable::new(q, r, m, values).unwrap();
            let back = parse_potential(&write_potential(&phi).unwrap(), "rt").unwrap();
            let bits = |t: &PotentialTable| t.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&phi));
            prop_assert_eq!((back.alphabet_size(), back.range(), back.dim()), (q, r, m));
        }
    }
}
