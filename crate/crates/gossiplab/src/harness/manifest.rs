//! Run manifests: flat `key = value` text that fully determines a run.
//!
//! The format is deliberately minimal — one typed key per line, `#` comments,
//! no nesting — so the parser stays dependency-free and every diagnostic can
//! name the offending key. Serialization writes keys in a fixed order, and
//! `parse(serialize(m)) == m`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{HarnessError, Result};

/// Which problem family a run draws from.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    HeterogeneousQuadratic {
        d: usize,
        l: f64,
        mu: f64,
        b_sq: f64,
        sigma_sq: f64,
    },
    PlQuadraticPair {
        d: usize,
        l: f64,
        mu: f64,
        lambda: f64,
        v: i8,
        sigma_sq: f64,
    },
    SplitZeroChain {
        d: usize,
        l: f64,
        lambda: f64,
        /// Blocking probability of the oracle; `1` keeps it exact.
        p: f64,
    },
    NesterovSplitting {
        l: f64,
        mu: f64,
        delta: f64,
    },
}

impl ProblemSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ProblemSpec::HeterogeneousQuadratic { .. } => "heterogeneous_quadratic",
            ProblemSpec::PlQuadraticPair { .. } => "pl_quadratic_pair",
            ProblemSpec::SplitZeroChain { .. } => "split_zero_chain",
            ProblemSpec::NesterovSplitting { .. } => "nesterov_splitting",
        }
    }
}

/// Where the weight matrix comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum TopologySpec {
    Constructed { beta: f64 },
    FromFile { path: String },
}

/// A fully specified experiment. Two equal manifests produce byte-identical
/// output files.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub problem: ProblemSpec,
    pub n: usize,
    pub topology: TopologySpec,
    pub algorithm: String, // "dsgd" | "mg_dsgd"
    pub regime: String,    // "nonconvex" | "pl"
    pub t_budget: usize,
    pub seed: u64,
    pub out_dir: Option<String>,
    /// Overrides; when absent the schedules fill them in.
    pub gamma: Option<f64>,
    pub rounds: Option<usize>,
    /// Initial gap when the problem has no known optimum.
    pub delta: Option<f64>,
    /// Consensus start `x0 * ones`; zero when absent.
    pub x0: Option<f64>,
}

impl Manifest {
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("name", self.name.clone());
        put("problem", self.problem.family().into());
        put("n", self.n.to_string());
        match &self.problem {
            ProblemSpec::HeterogeneousQuadratic {
                d,
                l,
                mu,
                b_sq,
                sigma_sq,
            } => {
                put("d", d.to_string());
                put("l", l.to_string());
                put("mu", mu.to_string());
                put("b_sq", b_sq.to_string());
                put("sigma_sq", sigma_sq.to_string());
            }
            ProblemSpec::PlQuadraticPair {
                d,
                l,
                mu,
                lambda,
                v,
                sigma_sq,
            } => {
                put("d", d.to_string());
                put("l", l.to_string());
                put("mu", mu.to_string());
                put("lambda", lambda.to_string());
                put("v", v.to_string());
                put("sigma_sq", sigma_sq.to_string());
            }
            ProblemSpec::SplitZeroChain { d, l, lambda, p } => {
                put("d", d.to_string());
                put("l", l.to_string());
                put("lambda", lambda.to_string());
                put("p", p.to_string());
            }
            ProblemSpec::NesterovSplitting { l, mu, delta } => {
                put("l", l.to_string());
                put("mu", mu.to_string());
                put("problem_delta", delta.to_string());
            }
        }
        match &self.topology {
            TopologySpec::Constructed { beta } => put("beta", beta.to_string()),
            TopologySpec::FromFile { path } => put("matrix_file", path.clone()),
        }
        put("algorithm", self.algorithm.clone());
        put("regime", self.regime.clone());
        put("t_budget", self.t_budget.to_string());
        put("seed", self.seed.to_string());
        if let Some(dir) = &self.out_dir {
            put("out_dir", dir.clone());
        }
        if let Some(g) = self.gamma {
            put("gamma", g.to_string());
        }
        if let Some(r) = self.rounds {
            put("rounds", r.to_string());
        }
        if let Some(d) = self.delta {
            put("delta", d.to_string());
        }
        if let Some(x) = self.x0 {
            put("x0", x.to_string());
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(HarnessError::Manifest(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = k.trim().to_string();
            if kv.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(HarnessError::Manifest(format!("duplicate key `{key}`")));
            }
        }

        let known = [
            "name",
            "problem",
            "n",
            "d",
            "l",
            "mu",
            "b_sq",
            "sigma_sq",
            "lambda",
            "v",
            "p",
            "problem_delta",
            "beta",
            "matrix_file",
            "algorithm",
            "regime",
            "t_budget",
            "seed",
            "out_dir",
            "gamma",
            "rounds",
            "delta",
            "x0",
        ];
        for key in kv.keys() {
            if !known.contains(&key.as_str()) {
                return Err(HarnessError::Manifest(format!("unknown key `{key}`")));
            }
        }

        let get = |key: &str| -> Result<&String> {
            kv.get(key)
                .ok_or_else(|| HarnessError::Manifest(format!("missing key `{key}`")))
        };
        fn typed<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
            raw.parse().map_err(|_| {
                HarnessError::Manifest(format!("key `{key}`: cannot parse `{raw}`"))
            })
        }
        let req_usize = |key: &str| -> Result<usize> { typed(key, get(key)?) };
        let req_f64 = |key: &str| -> Result<f64> { typed(key, get(key)?) };
        let opt_f64 = |key: &str| -> Result<Option<f64>> {
            kv.get(key).map(|raw| typed(key, raw)).transpose()
        };

        let family = get("problem")?.clone();
        let problem = match family.as_str() {
            "heterogeneous_quadratic" => ProblemSpec::HeterogeneousQuadratic {
                d: req_usize("d")?,
                l: req_f64("l")?,
                mu: req_f64("mu")?,
                b_sq: req_f64("b_sq")?,
                sigma_sq: req_f64("sigma_sq")?,
            },
            "pl_quadratic_pair" => ProblemSpec::PlQuadraticPair {
                d: req_usize("d")?,
                l: req_f64("l")?,
                mu: req_f64("mu")?,
                lambda: req_f64("lambda")?,
                v: typed("v", get("v")?)?,
                sigma_sq: req_f64("sigma_sq")?,
            },
            "split_zero_chain" => ProblemSpec::SplitZeroChain {
                d: req_usize("d")?,
                l: req_f64("l")?,
                lambda: req_f64("lambda")?,
                p: req_f64("p")?,
            },
            "nesterov_splitting" => ProblemSpec::NesterovSplitting {
                l: req_f64("l")?,
                mu: req_f64("mu")?,
                delta: req_f64("problem_delta")?,
            },
            other => {
                return Err(HarnessError::Manifest(format!(
                    "key `problem`: unknown family `{other}`"
                )))
            }
        };

        let topology = match (kv.get("beta"), kv.get("matrix_file")) {
            (Some(raw), None) => TopologySpec::Constructed {
                beta: typed("beta", raw)?,
            },
            (None, Some(path)) => TopologySpec::FromFile { path: path.clone() },
            (Some(_), Some(_)) => {
                return Err(HarnessError::Manifest(
                    "keys `beta` and `matrix_file` are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(HarnessError::Manifest(
                    "missing key `beta` (or `matrix_file`)".into(),
                ))
            }
        };

        let algorithm = get("algorithm")?.clone();
        if algorithm != "dsgd" && algorithm != "mg_dsgd" {
            return Err(HarnessError::Manifest(format!(
                "key `algorithm`: expected dsgd|mg_dsgd, got `{algorithm}`"
            )));
        }
        let regime = get("regime")?.clone();
        if regime != "nonconvex" && regime != "pl" {
            return Err(HarnessError::Manifest(format!(
                "key `regime`: expected nonconvex|pl, got `{regime}`"
            )));
        }

        Ok(Manifest {
            name: get("name")?.clone(),
            problem,
            n: req_usize("n")?,
            topology,
            algorithm,
            regime,
            t_budget: req_usize("t_budget")?,
            seed: typed("seed", get("seed")?)?,
            out_dir: kv.get("out_dir").cloned(),
            gamma: opt_f64("gamma")?,
            rounds: kv.get("rounds").map(|raw| typed("rounds", raw)).transpose()?,
            delta: opt_f64("delta")?,
            x0: opt_f64("x0")?,
        })
    }

    /// FNV-1a hash of the canonical serialization; names output files.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.serialize().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Manifest {
        Manifest {
            name: "demo".into(),
            problem: ProblemSpec::HeterogeneousQuadratic {
                d: 20,
                l: 1.0,
                mu: 0.1,
                b_sq: 0.5,
                sigma_sq: 1.0,
            },
            n: 16,
            topology: TopologySpec::Constructed { beta: 0.95 },
            algorithm: "mg_dsgd".into(),
            regime: "nonconvex".into(),
            t_budget: 1000,
            seed: 7,
            out_dir: None,
            gamma: None,
            rounds: None,
            delta: Some(1.0),
            x0: Some(0.25),
        }
    }

    #[test]
    fn round_trip() {
        let m = sample();
        let back = Manifest::parse(&m.serialize()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn round_trip_other_families() {
        for problem in [
            ProblemSpec::PlQuadraticPair {
                d: 5,
                l: 1.0,
                mu: 0.25,
                lambda: 1.5,
                v: -1,
                sigma_sq: 2.0,
            },
            ProblemSpec::SplitZeroChain {
                d: 40,
                l: 456.0,
                lambda: 1.0,
                p: 0.75,
            },
            ProblemSpec::NesterovSplitting {
                l: 4.0,
                mu: 1.0,
                delta: 1.0,
            },
        ] {
            let mut m = sample();
            m.problem = problem;
            let back = Manifest::parse(&m.serialize()).unwrap();
            assert_eq!(m, back);
        }
    }

    #[test]
    fn diagnostics_name_the_key() {
        let mut text = sample().serialize();
        text.push_str("bogus = 1\n");
        let err = Manifest::parse(&text).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");

        let text = sample().serialize().replace("n = 16", "n = sixteen");
        let err = Manifest::parse(&text).unwrap_err().to_string();
        assert!(err.contains("`n`"), "{err}");

        let text = sample().serialize().replace("beta = 0.95\n", "");
        let err = Manifest::parse(&text).unwrap_err().to_string();
        assert!(err.contains("beta"), "{err}");
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let a = sample();
        let mut b = sample();
        assert_eq!(a.hash(), b.hash());
        b.seed = 8;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!("# experiment\n\n{}\n# trailing\n", sample().serialize());
        assert_eq!(Manifest::parse(&text).unwrap(), sample());
    }
}
