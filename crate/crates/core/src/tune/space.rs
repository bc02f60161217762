use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// A sampled hyperparameter assignment, by name.
pub type Config = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    /// Uniform over a discrete list.
    Choice { values: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    /// `exp` of a uniform draw over `[ln lo, ln hi)`.
    Loguniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

/// Largest float below `x`, for `x > 0`.
fn below(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

impl ParamSpec {
    pub fn choice(name: &str, values: &[f64]) -> Self {
        Self {
            name: name.into(),
            kind: ParamKind::Choice {
                values: values.to_vec(),
            },
        }
    }

    pub fn uniform(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            kind: ParamKind::Uniform { lo, hi },
        }
    }

    pub fn loguniform(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            kind: ParamKind::Loguniform { lo, hi },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(format!("parameter '{}': {msg}", self.name)));
        match &self.kind {
            ParamKind::Choice { values } => {
                if values.is_empty() {
                    return bad("choice list is empty".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("choice values must be finite".into());
                }
            }
            ParamKind::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("needs finite lo < hi, got [{lo}, {hi})"));
                }
            }
            ParamKind::Loguniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo < hi) {
                    return bad(format!("needs finite 0 < lo < hi, got [{lo}, {hi})"));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, v: f64) -> bool {
        match &self.kind {
            ParamKind::Choice { values } => values.contains(&v),
            ParamKind::Uniform { lo, hi } | ParamKind::Loguniform { lo, hi } => *lo <= v && v < *hi,
        }
    }

    pub(crate) fn sample(&self, rng: &mut seed::Rng) -> f64 {
        match &self.kind {
            ParamKind::Choice { values } => values[rng.gen_range(0..values.len())],
            ParamKind::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
            ParamKind::Loguniform { lo, hi } => rng.gen_range(lo.ln()..hi.ln()).exp().clamp(*lo, below(*hi)),
        }
    }
}

pub fn validate_space(space: &[ParamSpec]) -> Result<()> {
    for (i, p) in space.iter().enumerate() {
        p.validate()?;
        if space[..i].iter().any(|q| q.name == p.name) {
            return Err(Error::Parameter(format!("parameter '{}' declared twice", p.name)));
        }
    }
    Ok(())
}

/// Draws every parameter independently; deterministic in `(space, seed)`.
pub fn sample_random(space: &[ParamSpec], seed_value: u64) -> Config {
    let mut rng = seed::rng_for(seed_value, &[seed::name_key("random-search")]);
    space.iter().map(|p| (p.name.clone(), p.sample(&mut rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_choice() {
        let space = [ParamSpec::choice("max_depth", &[5.0])];
        for s in 0..20 {
            assert_eq!(sample_random(&space, s)["max_depth"], 5.0);
        }
    }

    #[test]
    fn validation() {
        assert!(ParamSpec::choice("a", &[]).validate().is_err());
        assert!(ParamSpec::uniform("a", 1.0, 1.0).validate().is_err());
        assert!(ParamSpec::loguniform("a", 0.0, 1.0).validate().is_err());
        assert!(ParamSpec::uniform("a", 0.0, f64::INFINITY).validate().is_err());
        assert!(validate_space(&[ParamSpec::uniform("a", 0.0, 1.0), ParamSpec::uniform("a", 0.0, 2.0)]).is_err());
    }

    #[test]
    fn serde_uses_kind_tags() {
        let json = r#"[{"name":"max_depth","kind":"choice","values":[2,3]},
                       {"name":"learning_rate","kind":"loguniform","lo":0.01,"hi":0.3}]"#;
        let space: Vec<ParamSpec> = serde_json::from_str(json).unwrap();
        assert_eq!(space[0], ParamSpec::choice("max_depth", &[2.0, 3.0]));
        assert_eq!(space[1], ParamSpec::loguniform("learning_rate", 0.01, 0.3));
    }

    #[test]
    fn loguniform_is_uniform_in_log_space() {
        let spec = [ParamSpec::loguniform("lr", 0.01, 0.3)];
        let (lo, hi) = (0.01f64.ln(), 0.3f64.ln());
        let mut u: Vec<f64> = (0..10_000)
            .map(|s| {
                let v = sample_random(&spec, s)["lr"];
                assert!((0.01..0.3).contains(&v));
                (v.ln() - lo) / (hi - lo)
            })
            .collect();
        u.sort_by(f64::total_cmp);
        let n = u.len() as f64;
        let ks = u
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic.
        assert!(ks < 1.63 / n.sqrt(), "KS = {ks}");
    }

    proptest! {
        #[test]
        fn samples_respect_bounds(seed_value in any::<u64>(), lo in -10.0f64..10.0, width in 1e-6f64..50.0) {
            let space = [
                ParamSpec::uniform("u", lo, lo + width),
                ParamSpec::loguniform("l", lo.abs() + 1e-3, lo.abs() + 1e-3 + width),
                ParamSpec::choice("c", &[1.0, 3.0, 7.0]),
            ];
            let c = sample_random(&space, seed_value);
            for p in &space {
                prop_assert!(p.contains(c[&p.name]));
            }
            prop_assert_eq!(c, sample_random(&space, seed_value));
        }
    }
}
