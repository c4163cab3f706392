use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Agent, MarketInstance};
use crate::value::Value;

const RULE_EPS: f64 = 1e-9;

/// Parameters of the synthetic market family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Number of agents.
    pub n: usize,
    /// Units held or demanded per agent.
    pub k: usize,
    /// Fraction of water available; agents with `i/n >= 1 - delta` sell.
    pub delta: f64,
    /// Correlation between seniority and being high-value.
    pub lambda: f64,
    /// Slope of high-value agents; low-value agents use `1 - beta_h`.
    pub beta_h: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n == 0 {
            problems.push("n must be at least 1".to_string());
        }
        if self.k == 0 {
            problems.push("k must be at least 1".to_string());
        }
        let mut range = |name: &str, x: f64, lo: f64, hi: f64| {
            if !(lo..=hi).contains(&x) {
                problems.push(format!("{name} = {x} is outside [{lo}, {hi}]"));
            }
        };
        range("delta", self.delta, 0.0, 1.0);
        range("lambda", self.lambda, 0.0, 1.0);
        range("beta_h", self.beta_h, 0.5, 1.0);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Agent `i` (1-based) sells iff `i/n >= 1 - delta`; never when `delta = 0`.
    pub fn is_seller(&self, i: usize) -> bool {
        self.delta > 0.0 && i as f64 / self.n as f64 >= 1.0 - self.delta - RULE_EPS
    }

    /// Probability that agent `i` is high-value.
    pub fn p_high(&self, i: usize) -> f64 {
        let x = i as f64 / self.n as f64;
        self.lambda * x + (1.0 - self.lambda) * (1.0 - x)
    }

    /// Class draw for agent `i`. Each agent reads its own ChaCha8 stream
    /// (stream number `i`) of the configured seed, so the uniform draw of an
    /// agent does not depend on how many other agents exist.
    pub fn is_high_value(&self, i: usize) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng.random::<f64>() < self.p_high(i)
    }
}

/// Builds the synthetic instance for `cfg`. Agents are `a1..an`; larger
/// index means more senior. Compatibility is complete.
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<MarketInstance> {
    cfg.validate()?;
    let mut sellers = Vec::new();
    let mut buyers = Vec::new();
    for i in 1..=cfg.n {
        let beta = if cfg.is_high_value(i) { cfg.beta_h } else { 1.0 - cfg.beta_h };
        let id = format!("a{i}");
        if cfg.is_seller(i) {
            let units = (1..=cfg.k).map(|l| Value::from_f64(beta * l as f64)).collect();
            sellers.push(Agent::new(id, i as u32, units));
        } else {
            let units = (1..=cfg.k).map(|l| Value::from_f64(beta * (cfg.k - l + 1) as f64)).collect();
            buyers.push(Agent::new(id, i as u32, units));
        }
    }
    MarketInstance::complete(sellers, buyers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n: usize, delta: f64, lambda: f64) -> SyntheticConfig {
        SyntheticConfig { n, k: 5, delta, lambda, beta_h: 0.9, seed: 7 }
    }

    fn ids(agents: &[Agent]) -> Vec<String> {
        agents.iter().map(|a| a.id.to_string()).collect()
    }

    #[test]
    fn half_availability_sellers() {
        let inst = gen_synthetic(&cfg(10, 0.5, 0.0)).unwrap();
        assert_eq!(ids(inst.sellers()), ["a5", "a6", "a7", "a8", "a9", "a10"]);
        assert_eq!(inst.buyers().len(), 4);
        assert_eq!(inst.compat_len(), 24);
    }

    #[test]
    fn extremes_have_one_side_empty() {
        let all = gen_synthetic(&cfg(10, 1.0, 0.3)).unwrap();
        assert!(all.buyers().is_empty());
        assert_eq!(all.sellers().len(), 10);
        let none = gen_synthetic(&cfg(10, 0.0, 0.3)).unwrap();
        assert!(none.sellers().is_empty());
        assert_eq!(none.buyers().len(), 10);
    }

    #[test]
    fn balanced_lambda_is_even_odds() {
        let c = cfg(7, 0.5, 0.5);
        for i in 1..=7 {
            assert!((c.p_high(i) - 0.5).abs() < 1e-12);
        }
        let c = cfg(10, 0.5, 1.0);
        assert!((c.p_high(10) - 1.0).abs() < 1e-12);
        assert!((c.p_high(1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn slopes_and_orders() {
        let inst = gen_synthetic(&SyntheticConfig { beta_h: 1.0, lambda: 1.0, ..cfg(4, 0.5, 1.0) }).unwrap();
        // lambda = 1: p_high(4) = 1, so a4 is high-value with slope 1
        let a4 = inst.sellers().iter().find(|a| a.id.as_str() == "a4").unwrap();
        assert_eq!(a4.units, (1..=5).map(Value::from_int).collect::<Vec<_>>());
        assert!(inst.is_monotone());
    }

    #[test]
    fn rejects_bad_ranges() {
        for bad in [
            SyntheticConfig { delta: 1.5, ..cfg(5, 0.0, 0.0) },
            SyntheticConfig { lambda: -0.1, ..cfg(5, 0.0, 0.0) },
            SyntheticConfig { beta_h: 0.4, ..cfg(5, 0.0, 0.0) },
            SyntheticConfig { n: 0, ..cfg(5, 0.0, 0.0) },
        ] {
            assert!(matches!(gen_synthetic(&bad), Err(Error::Validation(_))), "{bad:?}");
        }
    }

    #[test]
    fn draws_stable_across_n() {
        // with lambda = 0.5 the threshold is constant, so the class depends only on the stream
        let a = cfg(6, 0.0, 0.5);
        let b = cfg(20, 0.0, 0.5);
        for i in 1..=6 {
            assert_eq!(a.is_high_value(i), b.is_high_value(i));
        }
    }

    proptest! {
        #[test]
        fn deterministic_and_monotone(n in 1usize..15, k in 1usize..6, delta in 0.0f64..=1.0,
                                      lambda in 0.0f64..=1.0, beta_h in 0.5f64..=1.0, seed: u64) {
            let c = SyntheticConfig { n, k, delta, lambda, beta_h, seed };
            let x = gen_synthetic(&c).unwrap();
            let y = gen_synthetic(&c).unwrap();
            prop_assert_eq!(&x, &y);
            prop_assert!(x.is_monotone());
            prop_assert_eq!(x.sellers().len() + x.buyers().len(), n);
        }
    }
}
