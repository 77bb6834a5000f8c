use serde::{Deserialize, Serialize};

use super::constants::sigma_sq;
use crate::error::{Error, Result};

/// Even polynomial `V(z) = Σ_j a_j z^{2j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    a: Vec<f64>,
    validated: bool,
}

/// Named potentials, re-tuned for each `α` so that `ā_1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `ā_2 = 0.1`.
    TunedQuartic,
    /// `a_3 = 0.01`, `ā_2 = 0.1`.
    TunedSextic,
    /// `a_3 = 0.01`, `a_2 = -1`: the averaged polynomial is negative at 0.
    ViolatingSextic,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quartic" | "tuned-quartic" => Ok(Preset::TunedQuartic),
            "sextic" | "tuned-sextic" => Ok(Preset::TunedSextic),
            "violating" | "violating-sextic" => Ok(Preset::ViolatingSextic),
            other => Err(Error::Config(format!("unknown preset '{other}'"))),
        }
    }
}

impl Preset {
    pub fn spec(self, alpha: f64) -> PotentialSpec {
        let s2 = sigma_sq(alpha);
        let raw = match self {
            Preset::TunedQuartic => vec![0.0, 0.0, 0.1],
            Preset::TunedSextic => vec![0.0, 0.0, 0.1 - 15.0 * 0.01 * s2, 0.01],
            Preset::ViolatingSextic => vec![0.0, 0.0, -1.0, 0.01],
        };
        PotentialSpec::new(raw)
            .expect("preset coefficients are well formed")
            .tune_criticality(alpha)
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::TunedQuartic => "tuned-quartic",
            Preset::TunedSextic => "tuned-sextic",
            Preset::ViolatingSextic => "violating-sextic",
        }
    }
}

/// Outcome of checking the criticality and positivity conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub alpha: f64,
    pub a_bar: Vec<f64>,
    pub a_bar_1: f64,
    pub bifurcation_ok: bool,
    /// Minimum of `Σ_{j≥2} ā_j z^{2(j-2)}` over the check grid.
    pub min_averaged: f64,
    pub argmin_z: f64,
    pub z_max: f64,
    pub positivity_ok: bool,
    pub leading_ok: bool,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const TOL_BIFURCATION: f64 = 1e-10;

/// Name used in reports for the averaged positivity condition.
pub const POSITIVITY_CONDITION: &str = "averaged-positivity";
pub const BIFURCATION_CONDITION: &str = "bifurcation";
pub const LEADING_CONDITION: &str = "leading-coefficient";

fn double_factorial(n: i64) -> f64 {
    let mut r = 1.0;
    let mut t = n;
    while t > 1 {
        r *= t as f64;
        t -= 2;
    }
    r
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl PotentialSpec {
    /// Coefficients `a_0..a_m` of `z^0, z^2, ..., z^{2m}`.
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidPotential("no coefficients".into()));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        Ok(Self {
            a,
            validated: false,
        })
    }

    /// Coefficients with a given degree `2m`, checked against `a.len()`.
    pub fn with_degree(degree: usize, a: Vec<f64>) -> Result<Self> {
        if degree % 2 != 0 || degree / 2 + 1 != a.len() {
            return Err(Error::InvalidPotential(format!(
                "degree {degree} needs {} coefficients, got {}",
                degree / 2 + 1,
                a.len()
            )));
        }
        Self::new(a)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn m(&self) -> usize {
        self.a.len() - 1
    }

    pub fn degree(&self) -> usize {
        2 * self.m()
    }

    pub fn validated(&self) -> bool {
        self.validated
    }

    pub fn eval(&self, z: f64) -> f64 {
        let z2 = z * z;
        self.a.iter().rev().fold(0.0, |acc, c| acc * z2 + c)
    }

    /// `ā_j = (1/(2j)!) Σ_{k≥j} (2k)!/(2k-2j)!! a_k v^{k-j}`, i.e.
    /// `E[V^{(2j)}(N(0, v))] / (2j)!`.
    pub fn averaged_coeffs(&self, var: f64) -> Vec<f64> {
        let m = self.m();
        (0..=m)
            .map(|j| {
                // C(2k, 2j) (2k-2j-1)!! is exactly 1 at k = j
                (j..=m)
                    .map(|k| {
                        binomial(2 * k, 2 * j)
                            * double_factorial(2 * (k - j) as i64 - 1)
                            * self.a[k]
                            * var.powi((k - j) as i32)
                    })
                    .sum()
            })
            .collect()
    }

    /// `E[V''(N(0, v))]`.
    pub fn mean_second_derivative(&self, var: f64) -> f64 {
        2.0 * self.averaged_coeffs(var).get(1).copied().unwrap_or(0.0)
    }

    /// Solve `ā_1(a_1) = 0` at `σ²(α)` for `a_1`, keeping the other coefficients.
    pub fn tune_criticality(&self, alpha: f64) -> Self {
        let mut a = self.a.clone();
        if a.len() < 2 {
            a.push(0.0);
        }
        let abar = Self {
            a: a.clone(),
            validated: false,
        }
        .averaged_coeffs(sigma_sq(alpha));
        a[1] -= abar[1];
        Self {
            a,
            validated: false,
        }
    }

    pub fn validate(&self, alpha: f64) -> ValidationReport {
        let abar = self.averaged_coeffs(sigma_sq(alpha));
        let m = self.m();
        let a_bar_1 = abar.get(1).copied().unwrap_or(0.0);
        let bifurcation_ok = a_bar_1.abs() <= TOL_BIFURCATION;
        let leading_ok = m >= 2 && self.a[m] > 0.0;
        let poly = |z: f64| -> f64 {
            let w = z * z;
            (2..=m).rev().fold(0.0, |acc, j| acc * w + abar[j])
        };
        // every root of the polynomial in w = z² lies below Cauchy's bound
        let cauchy = if leading_ok {
            1.0 + (2..m).map(|j| (abar[j] / abar[m]).abs()).fold(0.0, f64::max)
        } else {
            0.0
        };
        let z_max = 10f64.max(cauchy.sqrt().ceil());
        let steps = (z_max / 0.1).round() as usize;
        let (mut min_averaged, mut argmin_z) = (f64::INFINITY, 0.0);
        for i in 0..=steps {
            let z = i as f64 * 0.1;
            let v = poly(z);
            if v < min_averaged {
                min_averaged = v;
                argmin_z = z;
            }
        }
        if m < 2 {
            min_averaged = f64::NEG_INFINITY;
        }
        let positivity_ok = min_averaged > 0.0;
        let mut failures = Vec::new();
        if !leading_ok {
            failures.push(format!(
                "{LEADING_CONDITION}: need degree ≥ 4 and a_m > 0"
            ));
        }
        if !bifurcation_ok {
            failures.push(format!(
                "{BIFURCATION_CONDITION}: |ā_1| = {:.3e} exceeds {TOL_BIFURCATION:e}",
                a_bar_1.abs()
            ));
        }
        if !positivity_ok {
            failures.push(format!(
                "{POSITIVITY_CONDITION}: Σ_{{j≥2}} ā_j z^(2(j-2)) = {min_averaged:.6} at z = {argmin_z:.1}"
            ));
        }
        ValidationReport {
            alpha,
            a_bar: abar,
            a_bar_1,
            bifurcation_ok,
            min_averaged,
            argmin_z,
            z_max,
            positivity_ok,
            leading_ok,
            failures,
        }
    }

    /// Validated copy, or the first failing condition.
    pub fn validated_for(&self, alpha: f64) -> Result<Self> {
        let r = self.validate(alpha);
        if !r.leading_ok {
            return Err(Error::InvalidPotential(r.failures[0].clone()));
        }
        if !r.positivity_ok {
            return Err(Error::NotPositive(
                r.failures
                    .iter()
                    .find(|f| f.starts_with(POSITIVITY_CONDITION))
                    .cloned()
                    .unwrap_or_default(),
            ));
        }
        if !r.bifurcation_ok {
            return Err(Error::InvalidPotential(r.failures[0].clone()));
        }
        Ok(Self {
            a: self.a.clone(),
            validated: true,
        })
    }

    /// Value of `Σ_{j≥2} ā_j θ^{2(j-2)}` at variance `σ²(α)`.
    pub fn averaged_positivity_at(&self, alpha: f64, theta: f64) -> f64 {
        let abar = self.averaged_coeffs(sigma_sq(alpha));
        let w = theta * theta;
        (2..=self.m()).rev().fold(0.0, |acc, j| acc * w + abar[j])
    }
}
