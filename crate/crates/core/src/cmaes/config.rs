use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// A learning rate: either a fixed value or resolved from the standard formulas at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Auto,
    Fixed(f64),
}

impl Rate {
    pub fn fixed(self) -> Option<f64> {
        match self {
            Rate::Auto => None,
            Rate::Fixed(v) => Some(v),
        }
    }

    fn or(self, auto: f64) -> f64 {
        self.fixed().unwrap_or(auto)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rate::Auto => s.serialize_str("auto"),
            Rate::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Rate::Fixed(v)),
            Repr::Text(t) if t == "auto" => Ok(Rate::Auto),
            Repr::Text(t) => Err(de::Error::custom(format!("expected a number or \"auto\", got \"{t}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mirrored {
    None,
    Mirrored,
    MirroredPairwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsScheme {
    Default,
    Equal,
    HalfPowerLambda,
}

impl Mirrored {
    pub const ALL: [Mirrored; 3] = [Mirrored::None, Mirrored::Mirrored, Mirrored::MirroredPairwise];
}

impl WeightsScheme {
    pub const ALL: [WeightsScheme; 3] = [
        WeightsScheme::Default,
        WeightsScheme::Equal,
        WeightsScheme::HalfPowerLambda,
    ];
}

/// Names and domains of the seven numeric hyperparameters, in canonical order.
pub const CONTINUOUS_DOMAINS: [(&str, f64, f64); 7] = [
    ("lambda", 5.0, 50.0),
    ("parent_ratio", 0.3, 0.5),
    ("sigma0", 0.1, 0.5),
    ("lr_sigma", 0.0, 1.0),
    ("lr_cma", 0.0, 1.0),
    ("lr_rank_mu", 0.0, 0.35),
    ("lr_rank_one", 0.0, 0.35),
];

/// Names and category counts of the four categorical hyperparameters, in canonical order.
pub const CATEGORICAL_SIZES: [(&str, usize); 4] = [
    ("active", 2),
    ("mirrored", 3),
    ("threshold_convergence", 2),
    ("weights_scheme", 3),
];

/// One point of the modular CMA-ES configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub lambda: usize,
    pub parent_ratio: f64,
    pub sigma0: f64,
    pub lr_sigma: Rate,
    pub lr_cma: Rate,
    pub lr_rank_mu: Rate,
    pub lr_rank_one: Rate,
    pub active: bool,
    pub mirrored: Mirrored,
    pub threshold_convergence: bool,
    pub weights_scheme: WeightsScheme,
}

/// The standard configuration: `λ = 4 + ⌊3 ln d⌋`, half the offspring as parents, and
/// every learning rate resolved automatically.
pub fn default_config(dimension: usize) -> Configuration {
    let d = dimension.max(1) as f64;
    Configuration {
        lambda: 4 + (3.0 * d.ln()).floor() as usize,
        parent_ratio: 0.5,
        sigma0: 0.2,
        lr_sigma: Rate::Auto,
        lr_cma: Rate::Auto,
        lr_rank_mu: Rate::Auto,
        lr_rank_one: Rate::Auto,
        active: false,
        mirrored: Mirrored::None,
        threshold_convergence: false,
        weights_scheme: WeightsScheme::Default,
    }
}

fn check(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(Error::param(format!("{name} = {v} outside [{lo}, {hi}]")))
    }
}

impl Configuration {
    /// Check every field against its domain.
    pub fn validate(&self) -> Result<()> {
        let (_, lo, hi) = CONTINUOUS_DOMAINS[0];
        if self.lambda < lo as usize || self.lambda > hi as usize {
            return Err(Error::param(format!("lambda = {} outside [{lo}, {hi}]", self.lambda)));
        }
        let numeric = [
            Some(self.parent_ratio),
            Some(self.sigma0),
            self.lr_sigma.fixed(),
            self.lr_cma.fixed(),
            self.lr_rank_mu.fixed(),
            self.lr_rank_one.fixed(),
        ];
        for (v, (name, lo, hi)) in numeric.iter().zip(&CONTINUOUS_DOMAINS[1..]) {
            if let Some(v) = v {
                check(name, *v, *lo, *hi)?;
            }
        }
        if self.mu() < 1 {
            return Err(Error::param("parent count must be at least 1"));
        }
        Ok(())
    }

    /// Number of parents `round(parent_ratio · λ)`, at least 1.
    pub fn mu(&self) -> usize {
        ((self.parent_ratio * self.lambda as f64).round() as usize).clamp(1, self.lambda)
    }

    /// The numeric hyperparameters in [`CONTINUOUS_DOMAINS`] order, or `None` if a rate is `Auto`.
    pub fn continuous_values(&self) -> Option<[f64; 7]> {
        Some([
            self.lambda as f64,
            self.parent_ratio,
            self.sigma0,
            self.lr_sigma.fixed()?,
            self.lr_cma.fixed()?,
            self.lr_rank_mu.fixed()?,
            self.lr_rank_one.fixed()?,
        ])
    }

    /// Replace the numeric hyperparameters; λ is rounded and everything is clamped to its domain.
    pub fn with_continuous(&self, v: [f64; 7]) -> Configuration {
        let c = |i: usize| {
            let (_, lo, hi) = CONTINUOUS_DOMAINS[i];
            if v[i].is_finite() {
                v[i].clamp(lo, hi)
            } else {
                lo
            }
        };
        Configuration {
            lambda: c(0).round() as usize,
            parent_ratio: c(1),
            sigma0: c(2),
            lr_sigma: Rate::Fixed(c(3)),
            lr_cma: Rate::Fixed(c(4)),
            lr_rank_mu: Rate::Fixed(c(5)),
            lr_rank_one: Rate::Fixed(c(6)),
            ..self.clone()
        }
    }

    /// Category indices in [`CATEGORICAL_SIZES`] order.
    pub fn categorical_indices(&self) -> [usize; 4] {
        [
            self.active as usize,
            Mirrored::ALL.iter().position(|m| *m == self.mirrored).unwrap(),
            self.threshold_convergence as usize,
            WeightsScheme::ALL.iter().position(|w| *w == self.weights_scheme).unwrap(),
        ]
    }

    /// Replace the categorical hyperparameters from indices (out-of-range indices clamp).
    pub fn with_categorical(&self, idx: [usize; 4]) -> Configuration {
        Configuration {
            active: idx[0].min(1) == 1,
            mirrored: Mirrored::ALL[idx[1].min(2)],
            threshold_convergence: idx[2].min(1) == 1,
            weights_scheme: WeightsScheme::ALL[idx[3].min(2)],
            ..self.clone()
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

/// Normalized recombination weights for `mu` parents.
pub fn recombination_weights(scheme: WeightsScheme, mu: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=mu)
        .map(|i| match scheme {
            WeightsScheme::Default => (mu as f64 + 0.5).ln() - (i as f64).ln(),
            WeightsScheme::Equal => 1.0,
            WeightsScheme::HalfPowerLambda => 0.5f64.powi(i as i32),
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Variance-effective selection mass `(Σw)² / Σw²` of normalized weights.
pub fn mu_eff(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    s * s / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Number of candidates that take part in selection: the better half of each
/// mirrored pair under pairwise selection, every offspring otherwise.
pub(crate) fn selectable(cfg: &Configuration) -> usize {
    match cfg.mirrored {
        Mirrored::MirroredPairwise => cfg.lambda.div_ceil(2),
        _ => cfg.lambda,
    }
}

pub(crate) fn effective_mu(cfg: &Configuration) -> usize {
    cfg.mu().min(selectable(cfg))
}

/// Resolved strategy constants for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningRates {
    pub c_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub mu_eff: f64,
}

/// Learning rates for `cfg` in dimension `d`: fixed values are used as given, `Auto`
/// entries take the standard CMA-ES defaults.
pub fn learning_rates(cfg: &Configuration, dimension: usize) -> LearningRates {
    let d = dimension as f64;
    let w = recombination_weights(cfg.weights_scheme, effective_mu(cfg));
    let me = mu_eff(&w);
    let c_sigma = (me + 2.0) / (d + me + 5.0);
    let c_c = (4.0 + me / d) / (d + 4.0 + 2.0 * me / d);
    let c_1 = 2.0 / ((d + 1.3).powi(2) + me);
    let c_mu = (1.0 - c_1).min(2.0 * (me - 2.0 + 1.0 / me) / ((d + 2.0).powi(2) + me));
    let c_1 = cfg.lr_rank_one.or(c_1);
    LearningRates {
        c_sigma: cfg.lr_sigma.or(c_sigma),
        c_c: cfg.lr_cma.or(c_c),
        c_1,
        c_mu: cfg.lr_rank_mu.or(c_mu),
        mu_eff: me,
    }
}

/// Replace every `Auto` rate by its standard value for dimension `d`.
pub fn resolve_auto_rates(cfg: &Configuration, dimension: usize) -> Configuration {
    let r = learning_rates(cfg, dimension);
    Configuration {
        lr_sigma: Rate::Fixed(r.c_sigma),
        lr_cma: Rate::Fixed(r.c_c),
        lr_rank_mu: Rate::Fixed(r.c_mu),
        lr_rank_one: Rate::Fixed(r.c_1),
        ..cfg.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lambda() {
        assert_eq!(default_config(5).lambda, 8);
        assert_eq!(default_config(20).lambda, 12);
        assert_eq!(default_config(2).lambda, 6);
        assert_eq!(default_config(5).mu(), 4);
    }

    #[test]
    fn weights_are_normalized() {
        for scheme in WeightsScheme::ALL {
            for mu in 1..30 {
                let w = recombination_weights(scheme, mu);
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(w.windows(2).all(|p| p[0] >= p[1]));
            }
        }
        assert_eq!(mu_eff(&recombination_weights(WeightsScheme::Equal, 4)), 4.0);
    }

    #[test]
    fn auto_rates_match_formulas() {
        let cfg = default_config(5);
        let r = learning_rates(&cfg, 5);
        let w = recombination_weights(WeightsScheme::Default, 4);
        let me = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
        assert!((r.c_1 - 2.0 / (6.3f64.powi(2) + me)).abs() < 1e-15);
        assert!(r.c_mu <= 1.0 - r.c_1);
        let resolved = resolve_auto_rates(&cfg, 5);
        assert_eq!(resolved.lr_rank_one, Rate::Fixed(r.c_1));
        // zero is literal, not auto
        let off = Configuration {
            lr_rank_mu: Rate::Fixed(0.0),
            ..cfg
        };
        assert_eq!(learning_rates(&off, 5).c_mu, 0.0);
    }

    #[test]
    fn json_shape() {
        let cfg = default_config(5);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"lr_sigma\":\"auto\""), "{text}");
        assert!(text.contains("\"mirrored\":\"none\""));
        let back: Configuration = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let fixed = cfg.with_continuous([27.0, 0.4, 0.3, 0.5, 0.25, 0.1, 0.2]);
        let back: Configuration = serde_json::from_str(&serde_json::to_string(&fixed).unwrap()).unwrap();
        assert_eq!(back, fixed);
        assert!(serde_json::from_str::<Rate>("\"fast\"").is_err());
    }

    #[test]
    fn domain_validation() {
        let cfg = default_config(5);
        assert!(cfg.validate().is_ok());
        let bad = Configuration {
            sigma0: 0.6,
            ..cfg.clone()
        };
        assert!(bad.validate().is_err());
        let bad = Configuration {
            lr_rank_one: Rate::Fixed(0.4),
            ..cfg
        };
        assert!(bad.validate().is_err());
    }
}
