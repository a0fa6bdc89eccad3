//! Construction parameters of the inflation data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(lambda, beta, gamma, zeta)` plus the realized azimuthal wavenumber.
///
/// `m` is `round(lambda^gamma)` so that `cos(m theta)` is single valued; the
/// exponent actually realized is [`ParamSet::gamma_eff`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub m: u64,
}

impl ParamSet {
    pub const MIN_LAMBDA: f64 = 4.0;

    /// Validated parameter set with `m = round(lambda^gamma)`.
    pub fn new(lambda: f64, beta: f64, gamma: f64, zeta: f64) -> Result<Self> {
        let m = lambda.powf(gamma).round();
        let p = Self {
            lambda,
            beta,
            gamma,
            zeta,
            m: if m.is_finite() && m >= 0.0 { m as u64 } else { 0 },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |constraint, value| Err(Error::Constraint { constraint, value });
        if !(self.lambda.is_finite() && self.lambda >= Self::MIN_LAMBDA) {
            return fail("lambda >= 4", self.lambda);
        }
        if !(self.beta > 3.0 && self.beta < 4.0) {
            return fail("beta in (3, 4)", self.beta);
        }
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return fail("gamma > 1", self.gamma);
        }
        if !(self.zeta > 0.0 && self.zeta < 5.0 - self.beta) {
            return fail("zeta in (0, 5 - beta)", self.zeta);
        }
        let nominal = self.lambda.powf(self.gamma).round();
        if self.m as f64 != nominal {
            return fail("m = round(lambda^gamma)", self.m as f64);
        }
        if self.m < 2 {
            return fail("m >= 2", self.m as f64);
        }
        Ok(())
    }

    /// Realized oscillation exponent `ln m / ln lambda`.
    pub fn gamma_eff(&self) -> f64 {
        (self.m as f64).ln() / self.lambda.ln()
    }

    /// Inflation time `lambda^(-zeta)`.
    pub fn inflation_time(&self) -> f64 {
        self.lambda.powf(-self.zeta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constraint(r: Result<ParamSet>) -> &'static str {
        match r {
            Err(Error::Constraint { constraint, .. }) => constraint,
            other => panic!("expected constraint error, got {other:?}"),
        }
    }

    #[test]
    fn realizes_rounded_wavenumber() {
        let p = ParamSet::new(16.0, 3.5, 1.2, 1.47).unwrap();
        // 16^1.2 = 27.86
        assert_eq!(p.m, 28);
        assert!((p.gamma_eff() - 28f64.ln() / 16f64.ln()).abs() < 1e-15);
        assert_eq!(ParamSet::new(4.0, 3.5, 1.2, 1.47).unwrap().m, 5);
    }

    #[test]
    fn each_constraint_is_named() {
        assert_eq!(constraint(ParamSet::new(2.0, 3.5, 1.2, 1.0)), "lambda >= 4");
        assert_eq!(constraint(ParamSet::new(8.0, 5.0, 1.2, 1.0)), "beta in (3, 4)");
        assert_eq!(constraint(ParamSet::new(8.0, 4.0, 1.2, 0.5)), "beta in (3, 4)");
        assert_eq!(constraint(ParamSet::new(8.0, 3.5, 1.0, 1.0)), "gamma > 1");
        assert_eq!(constraint(ParamSet::new(8.0, 3.5, 1.2, 1.5)), "zeta in (0, 5 - beta)");
        assert_eq!(constraint(ParamSet::new(8.0, 3.5, 1.2, 0.0)), "zeta in (0, 5 - beta)");
        let mut p = ParamSet::new(8.0, 3.5, 1.2, 1.0).unwrap();
        p.m += 1;
        assert_eq!(constraint(p.validate().map(|_| p)), "m = round(lambda^gamma)");
    }

    #[test]
    fn inflation_time_examples() {
        let p = ParamSet::new(32.0, 3.5, 1.2, 1.46).unwrap();
        assert!((p.inflation_time() - 32f64.powf(-1.46)).abs() < 1e-18);
        assert!((p.inflation_time() - 6.34e-3).abs() < 1e-5);
        let q = ParamSet::new(10.0, 3.5, 1.2, 1.0).unwrap();
        assert!((q.inflation_time() - 0.1).abs() < 1e-15);
        let r = ParamSet::new(10.0, 3.5, 1.2, 1e-12).unwrap();
        assert!((r.inflation_time() - 1.0).abs() < 1e-10);
    }
}
