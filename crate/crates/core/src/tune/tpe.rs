//! Tree-structured Parzen estimator.
//!
//! Past trials are split into a good set (the lowest `⌈αn⌉` scores) and a
//! bad set. Each dimension gets two one-dimensional densities, `l` from the
//! good set and `g` from the bad set, and the suggestion is the candidate
//! drawn from `l` with the largest `Σ ln l - ln g`.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::space::{sample_random, Config, ParamKind, ParamSpec};
use super::TuningHistory;
use crate::seed::{self, Rng};
use crate::stats::special::normal_sf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeSettings {
    /// Fraction of trials forming the good set.
    pub alpha: f64,
    /// Trials drawn at random before the model is used.
    pub n_startup: usize,
    pub n_candidates: usize,
}

impl Default for TpeSettings {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            n_startup: 10,
            n_candidates: 24,
        }
    }
}

/// Trial indices of the good and bad sets. Ties keep insertion order.
pub fn tpe_split_history(history: &TuningHistory, alpha: f64) -> (Vec<usize>, Vec<usize>) {
    let scores: Vec<f64> = history.trials().iter().map(|t| t.score).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let exact = alpha * scores.len() as f64;
    let n_good = if (exact - exact.round()).abs() < 1e-9 {
        exact.round()
    } else {
        exact.ceil()
    } as usize;
    let bad = order.split_off(n_good.min(order.len()));
    (order, bad)
}

/// Mixture of truncated Gaussians on `[lo, hi]` plus one uniform component,
/// all equally weighted.
struct Parzen {
    lo: f64,
    hi: f64,
    mus: Vec<f64>,
    sigmas: Vec<f64>,
}

fn normal_cdf(z: f64) -> f64 {
    1.0 - normal_sf(z)
}

impl Parzen {
    fn new(lo: f64, hi: f64, points: &[f64]) -> Self {
        let mut mus = points.to_vec();
        mus.sort_by(f64::total_cmp);
        let floor = (hi - lo) / 100.0;
        let sigmas = (0..mus.len())
            .map(|i| {
                let left = if i == 0 { lo } else { mus[i - 1] };
                let right = if i + 1 == mus.len() { hi } else { mus[i + 1] };
                (mus[i] - left).max(right - mus[i]).max(floor)
            })
            .collect();
        Self { lo, hi, mus, sigmas }
    }

    fn components(&self) -> f64 {
        (self.mus.len() + 1) as f64
    }

    fn density(&self, x: f64) -> f64 {
        let mut total = 1.0 / (self.hi - self.lo);
        for (&mu, &s) in self.mus.iter().zip(&self.sigmas) {
            let mass = normal_cdf((self.hi - mu) / s) - normal_cdf((self.lo - mu) / s);
            let z = (x - mu) / s;
            let pdf = (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            total += pdf / mass.max(1e-300);
        }
        total / self.components()
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        let k = rng.gen_range(0..self.mus.len() + 1);
        if k == self.mus.len() {
            return rng.gen_range(self.lo..self.hi);
        }
        let (mu, s) = (self.mus[k], self.sigmas[k]);
        for _ in 0..1000 {
            let z: f64 = StandardNormal.sample(rng);
            let x = mu + s * z;
            if self.lo <= x && x < self.hi {
                return x;
            }
        }
        mu.clamp(self.lo, self.hi)
    }
}

/// Count-plus-one smoothed categorical over choice indices.
fn categorical(n_values: usize, indices: &[usize]) -> Vec<f64> {
    let mut w = vec![1.0; n_values];
    for &i in indices {
        w[i] += 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn draw_index(weights: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

enum Dim {
    Continuous { l: Parzen, g: Parzen, log: bool, lo: f64, hi: f64 },
    Choice { values: Vec<f64>, l: Vec<f64>, g: Vec<f64> },
}

impl Dim {
    fn build(spec: &ParamSpec, good: &[f64], bad: &[f64]) -> Self {
        match &spec.kind {
            ParamKind::Choice { values } => {
                let idx = |v: &[f64]| -> Vec<usize> {
                    v.iter().filter_map(|x| values.iter().position(|c| c == x)).collect()
                };
                Dim::Choice {
                    values: values.clone(),
                    l: categorical(values.len(), &idx(good)),
                    g: categorical(values.len(), &idx(bad)),
                }
            }
            ParamKind::Uniform { lo, hi } | ParamKind::Loguniform { lo, hi } => {
                let log = matches!(spec.kind, ParamKind::Loguniform { .. });
                let map = |x: f64| if log { x.ln() } else { x };
                let (a, b) = (map(*lo), map(*hi));
                let pts = |v: &[f64]| -> Vec<f64> { v.iter().map(|&x| map(x)).collect() };
                Dim::Continuous {
                    l: Parzen::new(a, b, &pts(good)),
                    g: Parzen::new(a, b, &pts(bad)),
                    log,
                    lo: *lo,
                    hi: *hi,
                }
            }
        }
    }

    /// Draws from `l`; returns the value and its `ln l - ln g`.
    fn propose(&self, rng: &mut Rng) -> (f64, f64) {
        match self {
            Dim::Choice { values, l, g } => {
                let i = draw_index(l, rng);
                (values[i], l[i].ln() - g[i].ln())
            }
            Dim::Continuous { l, g, log, lo, hi } => {
                let x = l.sample(rng);
                let score = l.density(x).ln() - g.density(x).ln();
                let v = if *log { x.exp() } else { x };
                (v.clamp(*lo, f64::from_bits(hi.to_bits() - 1)), score)
            }
        }
    }
}

/// Next configuration to evaluate. Falls back to [`sample_random`] while the
/// history is shorter than `settings.n_startup`.
pub fn tpe_suggest(space: &[ParamSpec], history: &TuningHistory, settings: &TpeSettings, seed_value: u64) -> Config {
    if history.trials().len() < settings.n_startup.max(1) {
        return sample_random(space, seed_value);
    }
    let (good, bad) = tpe_split_history(history, settings.alpha);
    let values = |set: &[usize], name: &str| -> Vec<f64> {
        set.iter().filter_map(|&i| history.trials()[i].config.get(name).copied()).collect()
    };
    let dims: Vec<Dim> = space
        .iter()
        .map(|p| Dim::build(p, &values(&good, &p.name), &values(&bad, &p.name)))
        .collect();
    let mut rng = seed::rng_for(seed_value, &[seed::name_key("tpe")]);
    let mut best: Option<(f64, Config)> = None;
    for _ in 0..settings.n_candidates.max(1) {
        let mut config = Config::new();
        let mut score = 0.0;
        for (p, d) in space.iter().zip(&dims) {
            let (v, s) = d.propose(&mut rng);
            config.insert(p.name.clone(), v);
            score += s;
        }
        if best.as_ref().map_or(true, |(b, _)| score > *b) {
            best = Some((score, config));
        }
    }
    best.map(|(_, c)| c).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tune::Trial;
    use proptest::prelude::*;

    fn history(scores: &[f64]) -> TuningHistory {
        let mut h = TuningHistory::default();
        for (i, &s) in scores.iter().enumerate() {
            h.push(Trial::new([("x".to_string(), i as f64)].into_iter().collect(), s, vec![s], 0.0, None));
        }
        h
    }

    #[test]
    fn split_sizes() {
        let scores: Vec<f64> = (0..20).map(|i| ((i * 7) % 20) as f64).collect();
        let (good, bad) = tpe_split_history(&history(&scores), 0.25);
        assert_eq!(good.len(), 5);
        assert_eq!(bad.len(), 15);
        assert!(good.iter().all(|&i| scores[i] < 5.0));
        let (good, bad) = tpe_split_history(&history(&[3.0]), 0.25);
        assert_eq!((good, bad.len()), (vec![0], 0));
        let (good, _) = tpe_split_history(&history(&[1.0; 9]), 0.25);
        assert_eq!(good, vec![0, 1, 2]);
    }

    #[test]
    fn parzen_integrates_to_one() {
        let p = Parzen::new(-5.0, 5.0, &[-4.9, 0.0, 0.3, 2.0]);
        let n = 200_000;
        let h = 10.0 / n as f64;
        let total: f64 = (0..n).map(|i| p.density(-5.0 + (i as f64 + 0.5) * h) * h).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        let empty = Parzen::new(0.0, 2.0, &[]);
        assert_eq!(empty.density(1.0), 0.5);
    }

    #[test]
    fn bandwidths_use_neighbours_and_bounds() {
        let p = Parzen::new(0.0, 10.0, &[2.0, 3.0, 9.95]);
        let expected = [2.0, 6.95, 6.95];
        assert!(p.sigmas.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
        let p = Parzen::new(0.0, 10.0, &[5.0, 5.0]);
        assert_eq!(p.sigmas, vec![5.0, 5.0]);
        let p = Parzen::new(0.0, 10.0, &[0.0, 0.0, 0.0]);
        assert_eq!(p.sigmas, vec![0.1, 0.1, 10.0]);
    }

    #[test]
    fn startup_and_determinism() {
        let space = [ParamSpec::uniform("x", -5.0, 5.0), ParamSpec::choice("c", &[1.0, 2.0])];
        let empty = TuningHistory::default();
        let c = tpe_suggest(&space, &empty, &TpeSettings::default(), 4);
        assert_eq!(c, sample_random(&space, 4));
        let mut h = TuningHistory::default();
        for s in 0..12 {
            let cfg = sample_random(&space, s);
            let score = (cfg["x"] - 2.0).powi(2) + cfg["c"];
            h.push(Trial::new(cfg, score, vec![score], 0.0, None));
        }
        let a = tpe_suggest(&space, &h, &TpeSettings::default(), 99);
        assert_eq!(a, tpe_suggest(&space, &h, &TpeSettings::default(), 99));
        assert!(space.iter().all(|p| p.contains(a[&p.name])));
    }

    fn best_of(space: &[ParamSpec], f: &dyn Fn(&Config) -> f64, n: usize, seed_value: u64, tpe: bool) -> f64 {
        let mut h = TuningHistory::default();
        for t in 0..n {
            let s = seed::derive_seed(seed_value, &[t as u64]);
            let cfg = if tpe {
                tpe_suggest(space, &h, &TpeSettings::default(), s)
            } else {
                sample_random(space, s)
            };
            let score = f(&cfg);
            h.push(Trial::new(cfg, score, vec![score], 0.0, None));
        }
        h.best().unwrap().score
    }

    #[test]
    fn beats_random_on_a_quadratic() {
        let space = [ParamSpec::uniform("x", -5.0, 5.0)];
        let f = |c: &Config| (c["x"] - 2.0).powi(2);
        let wins = (0..40)
            .filter(|&s| best_of(&space, &f, 50, 1000 + s, true) <= best_of(&space, &f, 50, 5000 + s, false))
            .count();
        assert!(wins >= 24, "{wins}/40");
    }

    proptest! {
        #[test]
        fn suggestions_stay_in_bounds(seed_value in any::<u64>(), n in 10usize..30) {
            let space = [
                ParamSpec::loguniform("lr", 0.01, 0.3),
                ParamSpec::uniform("u", 0.0, 3.0),
                ParamSpec::choice("d", &[2.0, 3.0, 5.0]),
            ];
            let mut h = TuningHistory::default();
            for t in 0..n {
                let cfg = sample_random(&space, seed_value.wrapping_add(t as u64));
                let score = cfg["lr"] * cfg["u"] - cfg["d"];
                h.push(Trial::new(cfg, score, vec![], 0.0, None));
            }
            let c = tpe_suggest(&space, &h, &TpeSettings::default(), seed_value);
            for p in &space {
                prop_assert!(p.contains(c[&p.name]), "{} = {}", p.name, c[&p.name]);
            }
            let (good, bad) = tpe_split_history(&h, 0.25);
            prop_assert_eq!(good.len() + bad.len(), n);
            prop_assert_eq!(good.len(), (0.25 * n as f64).ceil() as usize);
        }
    }
}
