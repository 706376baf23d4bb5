//! Shannon entropy and multivariate information measures of small discrete
//! joint distributions, in bits.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of the probability sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Joint distribution over one to three discrete variables. Outcome labels
/// are kept as strings; only their equality matters.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    outcomes: Vec<Vec<String>>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Label {
    Text(String),
    Number(serde_json::Number),
    Bool(bool),
}

impl Label {
    fn into_string(self) -> String {
        match self {
            Label::Text(s) => s,
            Label::Number(n) => n.to_string(),
            Label::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Outcome {
    Tuple(Vec<Label>),
    Single(Label),
}

#[derive(Deserialize)]
struct Entry {
    outcome: Outcome,
    p: f64,
}

impl DiscreteDistribution {
    /// Validates arity (1 to 3, equal for every outcome), distinct outcomes,
    /// finite nonnegative probabilities and a total of 1 within
    /// [`SUM_TOLERANCE`]. Errors name the offending 1-based row.
    pub fn new(outcomes: Vec<Vec<String>>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::LengthMismatch {
                left: outcomes.len(),
                right: probs.len(),
            });
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        let arity = outcomes[0].len();
        let mut seen = HashSet::new();
        for (k, (o, &p)) in outcomes.iter().zip(&probs).enumerate() {
            let row = k + 1;
            if !(1..=3).contains(&o.len()) {
                return Err(Error::Row {
                    row,
                    message: format!("outcome has {} variables, expected 1 to 3", o.len()),
                });
            }
            if o.len() != arity {
                return Err(Error::Row {
                    row,
                    message: format!("outcome has {} variables, first row has {arity}", o.len()),
                });
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Row {
                    row,
                    message: format!("probability {p} is not a finite nonnegative number"),
                });
            }
            if !seen.insert(o) {
                return Err(Error::Row {
                    row,
                    message: format!("duplicate outcome ({})", o.join(", ")),
                });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(DiscreteDistribution { outcomes, probs })
    }

    /// Convenience constructor from integer-coded outcomes.
    pub fn from_coded<const K: usize>(rows: &[([i64; K], f64)]) -> Result<Self> {
        let outcomes = rows
            .iter()
            .map(|(o, _)| o.iter().map(|v| v.to_string()).collect())
            .collect();
        Self::new(outcomes, rows.iter().map(|r| r.1).collect())
    }

    /// JSON array of `{"outcome": [x1, ...] | x, "p": prob}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let entries: Vec<Entry> = serde_json::from_str(s)?;
        let (outcomes, probs) = entries
            .into_iter()
            .map(|e| {
                let o = match e.outcome {
                    Outcome::Tuple(v) => v.into_iter().map(Label::into_string).collect(),
                    Outcome::Single(l) => vec![l.into_string()],
                };
                (o, e.p)
            })
            .unzip();
        Self::new(outcomes, probs)
    }

    /// CSV with a header; the last column is the probability, the others
    /// are the variables.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let width = rdr.headers()?.len();
        if !(2..=4).contains(&width) {
            return Err(Error::InvalidDistribution(format!(
                "expected 1 to 3 variable columns plus a probability column, got {width} columns"
            )));
        }
        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let row = k + 1;
            let rec = rec.map_err(|e| Error::Row {
                row,
                message: e.to_string(),
            })?;
            let cell = &rec[width - 1];
            let p: f64 = cell.parse().map_err(|_| Error::Row {
                row,
                message: format!("cannot parse probability {cell:?}"),
            })?;
            outcomes.push(rec.iter().take(width - 1).map(str::to_owned).collect());
            probs.push(p);
        }
        Self::new(outcomes, probs)
    }

    /// Reads JSON for a `.json` extension, CSV otherwise.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::from_json_str(&text),
            _ => Self::from_csv_reader(text.as_bytes()),
        }
    }

    pub fn arity(&self) -> usize {
        self.outcomes[0].len()
    }

    pub fn outcomes(&self) -> &[Vec<String>] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probabilities of the marginal over `vars` (0-based variable indices).
    pub fn marginal(&self, vars: &[usize]) -> Result<Vec<f64>> {
        if vars.is_empty() {
            return Err(Error::InvalidParameter("empty variable subset".into()));
        }
        let mut uniq = HashSet::new();
        for &v in vars {
            if v >= self.arity() {
                return Err(Error::InvalidParameter(format!(
                    "variable {v} out of range for {} variable(s)",
                    self.arity()
                )));
            }
            if !uniq.insert(v) {
                return Err(Error::InvalidParameter(format!("variable {v} listed twice")));
            }
        }
        let mut acc: BTreeMap<Vec<&str>, f64> = BTreeMap::new();
        for (o, &p) in self.outcomes.iter().zip(&self.probs) {
            let key = vars.iter().map(|&v| o[v].as_str()).collect();
            *acc.entry(key).or_insert(0.0) += p;
        }
        Ok(acc.into_values().collect())
    }

    fn require_arity(&self, n: usize) -> Result<()> {
        if self.arity() == n {
            Ok(())
        } else {
            Err(Error::Arity {
                expected: n.to_string(),
                got: self.arity(),
            })
        }
    }

    fn h(&self, vars: &[usize]) -> f64 {
        entropy_bits(&self.marginal(vars).expect("valid subset"))
    }
}

/// `-Σ p log2 p` with `0·log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Entropy in bits of the marginal over `vars`.
pub fn shannon_entropy(d: &DiscreteDistribution, vars: &[usize]) -> Result<f64> {
    Ok(entropy_bits(&d.marginal(vars)?))
}

/// `T12 = H1 + H2 - H12`.
pub fn mutual_information_2(d: &DiscreteDistribution) -> Result<f64> {
    d.require_arity(2)?;
    Ok(d.h(&[0]) + d.h(&[1]) - d.h(&[0, 1]))
}

/// `T123 = H1 + H2 + H3 - H12 - H13 - H23 + H123`; can be negative.
pub fn configurational_information_3(d: &DiscreteDistribution) -> Result<f64> {
    d.require_arity(3)?;
    Ok(d.h(&[0]) + d.h(&[1]) + d.h(&[2]) - d.h(&[0, 1]) - d.h(&[0, 2]) - d.h(&[1, 2])
        + d.h(&[0, 1, 2]))
}

/// `R12 = -T12` for two variables, `R123 = T123` for three.
pub fn mutual_redundancy(d: &DiscreteDistribution) -> Result<f64> {
    mutual_redundancy_scaled(d, 1.0)
}

/// As [`mutual_redundancy`] with the generalized pair relation
/// `R12 = -alpha·T12`; `alpha` does not enter the three-variable case.
pub fn mutual_redundancy_scaled(d: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be finite, got {alpha}")));
    }
    match d.arity() {
        2 => Ok(-alpha * mutual_information_2(d)?),
        3 => configurational_information_3(d),
        got => Err(Error::Arity {
            expected: "2 or 3".into(),
            got,
        }),
    }
}

/// `(h_max - h)/h_max`.
pub fn redundancy_fraction(h: f64, h_max: f64) -> Result<f64> {
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("h_max must be positive, got {h_max}")));
    }
    if !(h >= 0.0 && h <= h_max) {
        return Err(Error::InvalidParameter(format!("h = {h} outside [0, {h_max}]")));
    }
    Ok((h_max - h) / h_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynergyVectors {
    pub p: [f64; 3],
    pub q: [f64; 3],
}

/// `|P|² - |Q|²`.
pub fn synergy_balance(v: &SynergyVectors) -> f64 {
    let sq = |x: &[f64; 3]| x.iter().map(|c| c * c).sum::<f64>();
    sq(&v.p) - sq(&v.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xor() -> DiscreteDistribution {
        DiscreteDistribution::from_coded(&[
            ([0, 0, 0], 0.25),
            ([0, 1, 1], 0.25),
            ([1, 0, 1], 0.25),
            ([1, 1, 0], 0.25),
        ])
        .unwrap()
    }

    fn triplicated() -> DiscreteDistribution {
        DiscreteDistribution::from_coded(&[([0, 0, 0], 0.5), ([1, 1, 1], 0.5)]).unwrap()
    }

    /// Brute-force oracle over the full cube: sums p log p of each marginal
    /// by direct enumeration of all index combinations.
    fn brute_t123(p: &[[[f64; 2]; 2]; 2]) -> f64 {
        let h = |f: &dyn Fn(usize, usize, usize) -> (usize, usize, usize)| {
            let mut m = [[[0.0; 2]; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let (a, b, c) = f(i, j, k);
                        m[a][b][c] += p[i][j][k];
                    }
                }
            }
            let mut s = 0.0;
            for row in m.iter().flatten().flatten() {
                if *row > 0.0 {
                    s -= row * row.log2();
                }
            }
            s
        };
        h(&|i, _, _| (i, 0, 0)) + h(&|_, j, _| (j, 0, 0)) + h(&|_, _, k| (k, 0, 0))
            - h(&|i, j, _| (i, j, 0))
            - h(&|i, _, k| (i, k, 0))
            - h(&|_, j, k| (j, k, 0))
            + h(&|i, j, k| (i, j, k))
    }

    #[test]
    fn entropy_examples() {
        let uni = DiscreteDistribution::from_coded(&[([0], 0.25), ([1], 0.25), ([2], 0.25), ([3], 0.25)]).unwrap();
        assert_eq!(shannon_entropy(&uni, &[0]).unwrap(), 2.0);
        let point = DiscreteDistribution::from_coded(&[([0], 1.0), ([1], 0.0)]).unwrap();
        assert_eq!(shannon_entropy(&point, &[0]).unwrap(), 0.0);
        let d = DiscreteDistribution::from_coded(&[([0], 0.5), ([1], 0.25), ([2], 0.25)]).unwrap();
        assert!((shannon_entropy(&d, &[0]).unwrap() - 1.5).abs() < 1e-15);
        assert!(shannon_entropy(&d, &[]).is_err());
        assert!(shannon_entropy(&d, &[1]).is_err());
    }

    #[test]
    fn pair_examples() {
        let indep = DiscreteDistribution::from_coded(&[
            ([0, 0], 0.25),
            ([0, 1], 0.25),
            ([1, 0], 0.25),
            ([1, 1], 0.25),
        ])
        .unwrap();
        assert!(mutual_information_2(&indep).unwrap().abs() < 1e-12);
        assert!(mutual_redundancy(&indep).unwrap().abs() < 1e-12);
        let same = DiscreteDistribution::from_coded(&[([0, 0], 0.5), ([1, 1], 0.5)]).unwrap();
        assert!((mutual_information_2(&same).unwrap() - 1.0).abs() < 1e-12);
        assert!((mutual_redundancy(&same).unwrap() + 1.0).abs() < 1e-12);
        assert!((mutual_redundancy_scaled(&same, 2.5).unwrap() + 2.5).abs() < 1e-12);

        let c = DiscreteDistribution::from_coded(&[
            ([0, 0], 0.375),
            ([1, 1], 0.375),
            ([0, 1], 0.125),
            ([1, 0], 0.125),
        ])
        .unwrap();
        let h12 = 2.0 * 0.375 * (8.0f64 / 3.0).log2() + 2.0 * 0.125 * 3.0;
        assert!((h12 - 1.8113).abs() < 1e-4);
        assert!((mutual_information_2(&c).unwrap() - (2.0 - h12)).abs() < 1e-12);
        assert!((mutual_information_2(&c).unwrap() - 0.1887).abs() < 1e-4);
        assert!(matches!(mutual_information_2(&xor()), Err(Error::Arity { got: 3, .. })));
    }

    #[test]
    fn triple_examples() {
        let t = configurational_information_3(&xor()).unwrap();
        assert!((t + 1.0).abs() < 1e-12, "{t}");
        assert!((mutual_redundancy(&xor()).unwrap() + 1.0).abs() < 1e-12);
        let t = configurational_information_3(&triplicated()).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let mut cube = [[[0.0; 2]; 2]; 2];
        for (o, &p) in xor().outcomes().iter().zip(xor().probs()) {
            let i: Vec<usize> = o.iter().map(|s| s.parse().unwrap()).collect();
            cube[i[0]][i[1]][i[2]] = p;
        }
        assert!((brute_t123(&cube) + 1.0).abs() < 1e-12);
        let mut rows = vec![];
        for k in 0..8 {
            rows.push(([k & 1, (k >> 1) & 1, (k >> 2) & 1], 0.125));
        }
        let indep = DiscreteDistribution::from_coded(&rows).unwrap();
        assert!(configurational_information_3(&indep).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fraction_and_balance() {
        assert_eq!(redundancy_fraction(2.0, 2.0).unwrap(), 0.0);
        assert_eq!(redundancy_fraction(0.0, 2.0).unwrap(), 1.0);
        assert_eq!(redundancy_fraction(1.5, 2.0).unwrap(), 0.25);
        assert!(redundancy_fraction(2.5, 2.0).is_err());
        assert!(redundancy_fraction(0.0, 0.0).is_err());
        let v = SynergyVectors { p: [1.0, 2.0, 2.0], q: [2.0, 2.0, 1.0] };
        assert_eq!(synergy_balance(&v), 0.0);
        let v = SynergyVectors { p: [1.0, 0.0, 0.0], q: [0.0; 3] };
        assert_eq!(synergy_balance(&v), 1.0);
    }

    #[test]
    fn parsing() {
        let j = r#"[{"outcome":[0,0,0],"p":0.25},{"outcome":[0,1,1],"p":0.25},
                    {"outcome":["1","0","1"],"p":0.25},{"outcome":[1,1,0],"p":0.25}]"#;
        let d = DiscreteDistribution::from_json_str(j).unwrap();
        assert!((configurational_information_3(&d).unwrap() + 1.0).abs() < 1e-12);
        let s = DiscreteDistribution::from_json_str(r#"[{"outcome":"a","p":1}]"#).unwrap();
        assert_eq!(s.arity(), 1);

        let csv = "x1,x2,p\n0,0,0.5\n1,1,0.5\n";
        let d = DiscreteDistribution::from_csv_reader(csv.as_bytes()).unwrap();
        assert!((mutual_information_2(&d).unwrap() - 1.0).abs() < 1e-12);

        let bad = "x1,x2,p\n0,0,0.5\n1,1,abc\n";
        let e = DiscreteDistribution::from_csv_reader(bad.as_bytes()).unwrap_err();
        assert!(e.to_string().starts_with("row 2:"), "{e}");
        let neg = "x1,p\n0,1.5\n1,-0.5\n";
        let e = DiscreteDistribution::from_csv_reader(neg.as_bytes()).unwrap_err();
        assert!(e.to_string().starts_with("row 2:"), "{e}");
        let dup = "x1,p\n0,0.5\n0,0.5\n";
        assert!(DiscreteDistribution::from_csv_reader(dup.as_bytes()).is_err());
        let short = "x1,p\n0,0.5\n1,0.4\n";
        assert!(matches!(
            DiscreteDistribution::from_csv_reader(short.as_bytes()),
            Err(Error::InvalidDistribution(_))
        ));
        let ok = "x1,p\n0,0.5\n1,0.5000000000005\n";
        assert!(DiscreteDistribution::from_csv_reader(ok.as_bytes()).is_ok());
    }

    fn simplex(weights: Vec<f64>) -> Vec<f64> {
        let s: f64 = weights.iter().sum();
        weights.iter().map(|w| w / s).collect()
    }

    fn pair(p: &[f64], rows: usize, cols: usize) -> DiscreteDistribution {
        let mut outcomes = vec![];
        for i in 0..rows {
            for j in 0..cols {
                outcomes.push(vec![i.to_string(), j.to_string()]);
            }
        }
        DiscreteDistribution::new(outcomes, p.to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn mutual_information_nonnegative(w in prop::collection::vec(0.0f64..1.0, 12)) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3);
            let d = pair(&simplex(w), 3, 4);
            prop_assert!(mutual_information_2(&d).unwrap() >= -1e-9);
        }

        #[test]
        fn entropy_ignores_labels(w in prop::collection::vec(0.01f64..1.0, 2..10), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let p = simplex(w);
            let labels: Vec<Vec<String>> = (0..p.len()).map(|k| vec![format!("o{k}")]).collect();
            let mut perm = labels.clone();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = DiscreteDistribution::new(labels, p.clone()).unwrap();
            let b = DiscreteDistribution::new(perm, p).unwrap();
            prop_assert!((shannon_entropy(&a, &[0]).unwrap() - shannon_entropy(&b, &[0]).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn measures_are_continuous(w in prop::collection::vec(0.0f64..1.0, 8), from in 0usize..8, to in 0usize..8) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3 && from != to);
            let eps: f64 = 1e-6;
            let p = simplex(w);
            let mut q = p.clone();
            let moved = eps.min(q[from]);
            q[from] -= moved;
            q[to] += moved;
            let mk = |v: &[f64]| {
                let outcomes = (0..8).map(|k| vec![(k & 1).to_string(), ((k >> 1) & 1).to_string(), ((k >> 2) & 1).to_string()]).collect();
                DiscreteDistribution::new(outcomes, v.to_vec()).unwrap()
            };
            let bound = 20.0 * eps * (1.0 / eps).log2();
            let (a, b) = (mk(&p), mk(&q));
            prop_assert!((configurational_information_3(&a).unwrap() - configurational_information_3(&b).unwrap()).abs() < bound);
            prop_assert!((shannon_entropy(&a, &[0, 1, 2]).unwrap() - shannon_entropy(&b, &[0, 1, 2]).unwrap()).abs() < bound);
        }
    }
}
