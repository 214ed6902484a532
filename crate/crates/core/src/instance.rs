//! Problem instances: `min f(x)` over `{x in domain : G(x) ⪰ 0}`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, check_dim};
use crate::matpoly::SymPolyMatrix;
use crate::oracle::sample_ball;
use crate::poly::{MultiPoly, monomial_basis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// The hypercube vertices `{0, 1}^n`.
    Binary,
    /// The closed unit ball.
    Ball,
}

impl std::str::FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Domain::Binary),
            "ball" => Ok(Domain::Ball),
            _ => Err(Error::InvalidArgument(format!("unknown domain {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub n: usize,
    pub objective: MultiPoly,
    #[serde(rename = "G")]
    pub g: SymPolyMatrix,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<SymPolyMatrix>>,
    #[serde(default)]
    pub normalize: bool,
}

impl Instance {
    pub fn new(objective: MultiPoly, g: SymPolyMatrix, domain: Domain) -> Result<Self> {
        let inst = Instance {
            n: objective.n(),
            objective,
            g,
            domain,
            blocks: None,
            normalize: false,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.n, self.objective.n())?;
        check_dim(self.n, self.g.n())?;
        for b in self.blocks.iter().flatten() {
            check_dim(self.n, b.n())?;
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, deg: u32, density: f64) -> MultiPoly {
    let mut p = MultiPoly::zero(n);
    for m in monomial_basis(n, deg, false) {
        if rng.random::<f64>() < density {
            let c: f64 = rng.random_range(-1.0..1.0);
            p.add_term(m, (c * 100.0).round() / 100.0);
        }
    }
    p
}

/// A seeded random instance with a nonempty feasible set and a normalized
/// `G` (degree two entries, objective of degree at most three).
///
/// The constant diagonal of `G` is shifted so that a random domain point is
/// strictly feasible; `G` is then divided by its coefficient bound.
pub fn random_instance(domain: Domain, n: usize, m: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective = loop {
        let f = random_poly(&mut rng, n, 3, 0.4);
        if f.degree() > 0 {
            break f;
        }
    };
    let mut upper = Vec::with_capacity(m);
    for i in 0..m {
        upper.push((i..m).map(|_| random_poly(&mut rng, n, 2, 0.5)).collect());
    }
    let g = SymPolyMatrix::from_upper(upper).expect("square upper triangle");
    let x0: Vec<f64> = match domain {
        Domain::Binary => (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect(),
        Domain::Ball => sample_ball(n, &mut rng).into_iter().map(|v| v * 0.5).collect(),
    };
    let lam = g.min_eig(&x0).expect("dimensions agree");
    let shift = (0.05 - lam).max(0.0) + rng.random_range(0.0..0.3);
    let shift = (shift * 100.0).round() / 100.0;
    let diag: Vec<f64> = vec![shift; m];
    let g = SymPolyMatrix::from_full(
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let e = g.get(i, j);
                        if i == j { e + &MultiPoly::constant(n, diag[i]) } else { e.clone() }
                    })
                    .collect()
            })
            .collect(),
    )
    .expect("symmetric");
    let scale = g.sufficient_scale(1.0);
    let g = if scale > 1.0 { g.scale(1.0 / scale) } else { g };
    Instance {
        n,
        objective,
        g,
        domain,
        blocks: None,
        normalize: false,
    }
}

/// `count` seeded instances cycling through `n in {2, 3, 4}` and
/// `m in {1, 2, 3}` (binary) or `n in {2, 3}`, `m in {1, 2}` (ball).
pub fn random_suite(domain: Domain, count: usize, seed: u64) -> Vec<Instance> {
    (0..count)
        .map(|i| {
            let (n, m) = match domain {
                Domain::Binary => (2 + i % 3, 1 + (i / 3) % 3),
                Domain::Ball => (2 + i % 2, 1 + (i / 2) % 2),
            };
            random_instance(domain, n, m, seed.wrapping_add(i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_unknown_keys() {
        let x = MultiPoly::var(1, 0);
        let g = SymPolyMatrix::scalar(&x.scale(2.0) - &MultiPoly::constant(1, 1.0));
        let inst = Instance::new(x, g, Domain::Binary).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        let mut v: serde_json::Value = serde_json::from_str(&inst.to_json()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(Instance::from_json(&v.to_string()).is_err());
        v.as_object_mut().unwrap().remove("extra");
        v["n"] = serde_json::json!(2);
        assert!(Instance::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn random_instances_are_feasible_and_normalized() {
        for inst in random_suite(Domain::Binary, 9, 11) {
            assert!(inst.g.sufficient_scale(1.0) <= 1.0 + 1e-12);
            assert!(crate::oracle::brute_force_binary(&inst.objective, &inst.g).is_ok());
            assert!(inst.objective.degree() <= 3 && inst.g.degree() <= 2);
        }
        assert_eq!(random_instance(Domain::Ball, 2, 2, 5), random_instance(Domain::Ball, 2, 2, 5));
    }
}
