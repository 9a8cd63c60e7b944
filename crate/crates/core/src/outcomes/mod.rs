//! Potential-outcome models `f(w, x, u) + noise` under anonymous interference.
//!
//! `w` is the unit's own treatment, `x` the fraction of treated neighbours and
//! `u` the unit's latent type.

pub mod expr;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use expr::Expr;

/// Finite-difference step used when no analytic derivative is available.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    #[default]
    Symbolic,
    Numeric,
}

/// Named outcome forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum OutcomeForm {
    /// `w x / pi^2`.
    Figure2 { pi: f64 },
    /// `(w + u x)^2 / 2`.
    SquareMix,
    /// `cos(3 w x)`.
    Cos3,
    /// `-e^u cos(3 w x)`.
    NegExpCos,
    /// `(1 + w) e^x`.
    ExpLinear,
    /// `(1 + u)^2 (1 + w) e^x / 5`.
    PolyExp,
    /// `direct * w + spillover * x`.
    Linear { direct: f64, spillover: f64 },
    /// Free-form expression in `w`, `x`, `u` and named parameters.
    Expression {
        expr: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        #[serde(default)]
        derivative: DerivativeMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    #[serde(flatten)]
    pub form: OutcomeForm,
    /// Standard deviation of the additive Gaussian noise.
    #[serde(default)]
    pub noise_sd: f64,
}

#[derive(Debug)]
struct Compiled {
    value: Expr,
    slope: Option<Expr>,
}

#[derive(Debug, Clone)]
pub struct OutcomeModel {
    spec: OutcomeSpec,
    compiled: Option<Arc<Compiled>>,
}

impl PartialEq for OutcomeModel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

fn check_x(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "treated-neighbour fraction",
            value: x,
            expected: "[0, 1]",
        })
    }
}

impl OutcomeModel {
    pub fn new(spec: OutcomeSpec) -> Result<Self> {
        if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
            return Err(Error::Domain {
                what: "noise_sd",
                value: spec.noise_sd,
                expected: "finite and >= 0",
            });
        }
        let compiled = match &spec.form {
            OutcomeForm::Figure2 { pi } => {
                check_probability("figure2 pi", *pi)?;
                None
            }
            OutcomeForm::Expression {
                expr,
                params,
                derivative,
            } => {
                let value = expr::parse(expr, params)?;
                let slope = match derivative {
                    DerivativeMode::Symbolic => Some(value.d_dx()),
                    DerivativeMode::Numeric => None,
                };
                Some(Arc::new(Compiled { value, slope }))
            }
            _ => None,
        };
        Ok(Self { spec, compiled })
    }

    pub fn from_form(form: OutcomeForm, noise_sd: f64) -> Result<Self> {
        Self::new(OutcomeSpec { form, noise_sd })
    }

    pub fn spec(&self) -> &OutcomeSpec {
        &self.spec
    }

    pub fn noise_sd(&self) -> f64 {
        self.spec.noise_sd
    }

    /// Same deterministic part, different noise level.
    pub fn with_noise(&self, noise_sd: f64) -> Result<Self> {
        Self::new(OutcomeSpec {
            form: self.spec.form.clone(),
            noise_sd,
        })
    }

    /// Deterministic part of the outcome.
    pub fn mean(&self, treated: bool, x: f64, u: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.mean_unchecked(treated, x, u))
    }

    /// `mean` without the domain check, for hot loops over valid fractions.
    #[inline]
    pub fn mean_unchecked(&self, treated: bool, x: f64, u: f64) -> f64 {
        let w = if treated { 1.0 } else { 0.0 };
        match &self.spec.form {
            OutcomeForm::Figure2 { pi } => w * x / (pi * pi),
            OutcomeForm::SquareMix => 0.5 * (w + u * x).powi(2),
            OutcomeForm::Cos3 => (3.0 * w * x).cos(),
            OutcomeForm::NegExpCos => -u.exp() * (3.0 * w * x).cos(),
            OutcomeForm::ExpLinear => (1.0 + w) * x.exp(),
            OutcomeForm::PolyExp => 0.2 * (1.0 + u).powi(2) * (1.0 + w) * x.exp(),
            OutcomeForm::Linear { direct, spillover } => direct * w + spillover * x,
            OutcomeForm::Expression { .. } => self.compiled.as_ref().unwrap().value.eval(w, x, u),
        }
    }

    /// Partial derivative in `x`: analytic when known, otherwise a finite difference.
    pub fn partial_x(&self, treated: bool, x: f64, u: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.partial_x_unchecked(treated, x, u))
    }

    #[inline]
    pub fn partial_x_unchecked(&self, treated: bool, x: f64, u: f64) -> f64 {
        let w = if treated { 1.0 } else { 0.0 };
        match &self.spec.form {
            OutcomeForm::Figure2 { pi } => w / (pi * pi),
            OutcomeForm::SquareMix => u * (w + u * x),
            OutcomeForm::Cos3 => -3.0 * w * (3.0 * w * x).sin(),
            OutcomeForm::NegExpCos => 3.0 * w * u.exp() * (3.0 * w * x).sin(),
            OutcomeForm::ExpLinear => (1.0 + w) * x.exp(),
            OutcomeForm::PolyExp => 0.2 * (1.0 + u).powi(2) * (1.0 + w) * x.exp(),
            OutcomeForm::Linear { spillover, .. } => *spillover,
            OutcomeForm::Expression { .. } => match &self.compiled.as_ref().unwrap().slope {
                Some(d) => d.eval(w, x, u),
                None => self.finite_difference_x(treated, x, u),
            },
        }
    }

    /// Central difference with step [`FD_STEP`]; second-order one-sided stencils near the ends of `[0, 1]`.
    pub fn finite_difference_x(&self, treated: bool, x: f64, u: f64) -> f64 {
        let h = FD_STEP;
        let f = |t: f64| self.mean_unchecked(treated, t, u);
        if x - h < 0.0 {
            (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
        } else if x + h > 1.0 {
            (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h)
        } else {
            (f(x + h) - f(x - h)) / (2.0 * h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn figure2_values() {
        let m = OutcomeModel::from_form(OutcomeForm::Figure2 { pi: 0.7 }, 1.0).unwrap();
        assert!((m.mean(true, 0.7, 0.0).unwrap() - 0.7 / 0.49).abs() < 1e-12);
        assert!((m.partial_x(true, 0.3, 0.5).unwrap() - 1.0 / 0.49).abs() < 1e-12);
        assert_eq!(m.partial_x(false, 0.3, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn preset_values() {
        let cos3 = OutcomeModel::from_form(OutcomeForm::Cos3, 0.2).unwrap();
        assert_eq!(cos3.mean(false, 0.5, 0.1).unwrap(), 1.0);
        let d = cos3.partial_x(true, 0.2, 0.1).unwrap();
        assert!((d - (-3.0 * 0.6f64.sin())).abs() < 1e-12);
        assert!((d + 1.693927).abs() < 1e-6);
        let sq = OutcomeModel::from_form(OutcomeForm::SquareMix, 0.2).unwrap();
        assert!((sq.mean(true, 0.4, 0.5).unwrap() - 0.72).abs() < 1e-12);
    }

    #[test]
    fn domain_checked() {
        let m = OutcomeModel::from_form(OutcomeForm::Cos3, 0.0).unwrap();
        assert!(matches!(m.mean(true, 1.5, 0.0), Err(Error::Domain { .. })));
        assert!(m.partial_x(true, -0.1, 0.0).is_err());
        assert!(OutcomeModel::from_form(OutcomeForm::Cos3, -1.0).is_err());
    }

    #[test]
    fn analytic_matches_finite_difference_for_presets() {
        let grid = [0.0, 1e-6, 0.1, 0.37, 0.5, 0.81, 1.0 - 1e-6, 1.0];
        for name in presets::names() {
            let m = presets::lookup(name).unwrap().outcome;
            for treated in [false, true] {
                for &x in &grid {
                    for &u in &[0.0, 0.3, 0.99] {
                        let an = m.partial_x(treated, x, u).unwrap();
                        let fd = m.finite_difference_x(treated, x, u);
                        assert!((an - fd).abs() <= 1e-6 * (1.0 + an.abs()), "{name} {treated} {x} {u}: {an} {fd}");
                    }
                }
            }
        }
    }

    #[test]
    fn expression_models() {
        let form = OutcomeForm::Expression {
            expr: "0.5 * (w + u * x)^2".into(),
            params: BTreeMap::new(),
            derivative: DerivativeMode::Symbolic,
        };
        let e = OutcomeModel::from_form(form, 0.0).unwrap();
        let p = OutcomeModel::from_form(OutcomeForm::SquareMix, 0.0).unwrap();
        for &(t, x, u) in &[(true, 0.4, 0.5), (false, 0.9, 0.2)] {
            assert!((e.mean(t, x, u).unwrap() - p.mean(t, x, u).unwrap()).abs() < 1e-14);
            assert!((e.partial_x(t, x, u).unwrap() - p.partial_x(t, x, u).unwrap()).abs() < 1e-12);
        }
        let numeric = OutcomeForm::Expression {
            expr: "exp(x) * k".into(),
            params: [("k".to_string(), 2.0)].into_iter().collect(),
            derivative: DerivativeMode::Numeric,
        };
        let m = OutcomeModel::from_form(numeric, 0.0).unwrap();
        for x in [0.0, 0.5, 1.0] {
            assert!((m.partial_x(true, x, 0.0).unwrap() - 2.0 * f64::exp(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = OutcomeSpec {
            form: OutcomeForm::Figure2 { pi: 0.7 },
            noise_sd: 1.0,
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"form":"figure2","pi":0.7,"noise_sd":1.0}"#);
        assert_eq!(serde_json::from_str::<OutcomeSpec>(&text).unwrap(), spec);
    }
}
