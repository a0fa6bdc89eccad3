//! Exact rational certification of the admissible `(beta, gamma, zeta)`
//! region. Floats appear only when rendering.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Q = BigRational;

pub const BETA_RANGE: &str = "beta_range";
pub const GAMMA_LOWER: &str = "gamma_lower";
pub const ZETA_RANGE: &str = "zeta_range";
pub const GAMMA_UPPER_BARU: &str = "gamma_upper_baru";
pub const GAMMA_UPPER_PERTURBATION: &str = "gamma_upper_perturbation";
pub const GAMMA_UPPER_COMBINED: &str = "gamma_upper_combined";
pub const ZETA_LOWER_BARU: &str = "zeta_lower_baru";
pub const ZETA_LOWER_PERTURBATION: &str = "zeta_lower_perturbation";
pub const ZETA_LOWER_COMBINED: &str = "zeta_lower_combined";
pub const ZETA_UPPER: &str = "zeta_upper";
pub const ZETA_INTERVAL_EMPTY: &str = "zeta_interval_empty";

fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `"3.5"`, `"-1.25e-3"`, `"7/2"` or `"4"` exactly.
pub fn parse_rational(text: &str) -> Result<Q> {
    let t = text.trim();
    let bad = || Error::Parse(format!("not an exact decimal or fraction: {text:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(k) => (&t[..k], t[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = digits.split_once('.').unwrap_or((digits, ""));
    if ip.is_empty() && fp.is_empty() || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("0{ip}{fp}").parse().map_err(|_| bad())?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut q = Q::from_integer(all);
    if scale >= 0 {
        q *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -q } else { q })
}

/// `a/b` in lowest terms (`a` for integers).
pub fn format_rational(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// One named inequality and whether it holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub passed: bool,
}

fn beta_in_range(beta: &Q) -> bool {
    *beta > int(3) && *beta < int(4)
}

/// `3 < beta < 4`, `gamma > 1`, `0 < zeta < 5 - beta`, each reported.
pub fn base_constraints(beta: &Q, gamma: &Q, zeta: &Q) -> Vec<ConstraintCheck> {
    vec![
        ConstraintCheck {
            name: BETA_RANGE,
            passed: beta_in_range(beta),
        },
        ConstraintCheck {
            name: GAMMA_LOWER,
            passed: *gamma > int(1),
        },
        ConstraintCheck {
            name: ZETA_RANGE,
            passed: zeta.is_positive() && *zeta < int(5) - beta,
        },
    ]
}

fn require_beta(beta: &Q) -> Result<()> {
    if beta_in_range(beta) {
        Ok(())
    } else {
        Err(Error::Constraint {
            constraint: "beta in (3, 4)",
            value: to_f64(beta),
        })
    }
}

/// Non-strict lower bound on zeta from the carrier velocity estimate:
/// `((5 - beta)(4 + beta) + (4 - beta) gamma) / (5 + beta)`.
pub fn zeta_lb_baru(beta: &Q, gamma: &Q) -> Result<Q> {
    require_beta(beta)?;
    Ok(((int(5) - beta) * (int(4) + beta) + (int(4) - beta) * gamma) / (int(5) + beta))
}

/// Strict lower bound from the perturbation estimate:
/// `(10 gamma (4 - beta) + 36 (5 - beta)) / 41`.
pub fn zeta_lb_perturb(beta: &Q, gamma: &Q) -> Result<Q> {
    require_beta(beta)?;
    Ok((int(10) * gamma * (int(4) - beta) + int(36) * (int(5) - beta)) / int(41))
}

/// Strict combined bound:
/// `(10/41) gamma (4 - beta) + max(36/41, (4 + beta)/(5 + beta)) (5 - beta)`.
pub fn zeta_lb_combined(beta: &Q, gamma: &Q) -> Result<Q> {
    require_beta(beta)?;
    let c = frac(36, 41).max((int(4) + beta) / (int(5) + beta));
    Ok(frac(10, 41) * gamma * (int(4) - beta) + c * (int(5) - beta))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaWindows {
    /// `(5 - beta) / (4 - beta)`.
    pub baru: Q,
    /// `(5 - beta) / (2 (4 - beta))`.
    pub perturbation: Q,
    /// `41 (5 - beta) / (10 (5 + beta)(4 - beta))`.
    pub combined: Q,
}

impl GammaWindows {
    /// Smaller of the perturbation and combined bounds.
    pub fn min(&self) -> &Q {
        if self.perturbation <= self.combined {
            &self.perturbation
        } else {
            &self.combined
        }
    }

    fn named(&self) -> [(&'static str, &Q); 3] {
        [
            (GAMMA_UPPER_BARU, &self.baru),
            (GAMMA_UPPER_PERTURBATION, &self.perturbation),
            (GAMMA_UPPER_COMBINED, &self.combined),
        ]
    }
}

pub fn gamma_windows(beta: &Q) -> Result<GammaWindows> {
    require_beta(beta)?;
    let five = int(5) - beta;
    let four = int(4) - beta;
    Ok(GammaWindows {
        baru: five.clone() / four.clone(),
        perturbation: five.clone() / (int(2) * four.clone()),
        combined: int(41) * five / (int(10) * (int(5) + beta) * four),
    })
}

/// Open or half-open interval of admissible zeta; the upper end `5 - beta`
/// is always excluded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaInterval {
    pub lower: Q,
    pub lower_strict: bool,
    pub upper: Q,
}

impl ZetaInterval {
    pub fn contains(&self, zeta: &Q) -> bool {
        let above = if self.lower_strict {
            *zeta > self.lower
        } else {
            *zeta >= self.lower
        };
        above && *zeta < self.upper
    }

    pub fn midpoint(&self) -> Q {
        (self.lower.clone() + self.upper.clone()) / int(2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionVerdict {
    pub admissible: bool,
    /// Present iff admissible.
    pub zeta_interval: Option<ZetaInterval>,
    /// Failing constraints for inadmissible pairs; the active zeta bounds
    /// for admissible ones.
    pub binding_constraints: Vec<&'static str>,
    pub values: BTreeMap<&'static str, Q>,
}

/// Verdict for one `(beta, gamma)` pair.
pub fn admissible(beta: &Q, gamma: &Q) -> RegionVerdict {
    let mut values = BTreeMap::new();
    let mut failed = Vec::new();
    if !beta_in_range(beta) {
        return RegionVerdict {
            admissible: false,
            zeta_interval: None,
            binding_constraints: vec![BETA_RANGE],
            values,
        };
    }
    if *gamma <= int(1) {
        failed.push(GAMMA_LOWER);
    }
    let windows = gamma_windows(beta).expect("beta checked");
    for (name, bound) in windows.named() {
        values.insert(name, bound.clone());
        if gamma >= bound {
            failed.push(name);
        }
    }
    let lbs = [
        (ZETA_LOWER_BARU, zeta_lb_baru(beta, gamma).expect("beta checked"), false),
        (ZETA_LOWER_PERTURBATION, zeta_lb_perturb(beta, gamma).expect("beta checked"), true),
        (ZETA_LOWER_COMBINED, zeta_lb_combined(beta, gamma).expect("beta checked"), true),
    ];
    let upper = int(5) - beta;
    values.insert(ZETA_UPPER, upper.clone());
    let mut lower = Q::zero();
    let mut lower_strict = true;
    let mut active: Vec<&'static str> = Vec::new();
    for (name, v, strict) in &lbs {
        values.insert(name, v.clone());
        if *v > lower {
            lower = v.clone();
            lower_strict = *strict;
            active = vec![name];
        } else if *v == lower {
            lower_strict |= *strict;
            active.push(name);
        }
    }
    if lower >= upper {
        failed.push(ZETA_INTERVAL_EMPTY);
    }
    if failed.is_empty() {
        active.push(ZETA_UPPER);
        RegionVerdict {
            admissible: true,
            zeta_interval: Some(ZetaInterval {
                lower,
                lower_strict,
                upper,
            }),
            binding_constraints: active,
            values,
        }
    } else {
        RegionVerdict {
            admissible: false,
            zeta_interval: None,
            binding_constraints: failed,
            values,
        }
    }
}

/// One row of a sweep table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionRow {
    pub beta: Q,
    pub gamma: Q,
    pub verdict: RegionVerdict,
}

/// Verdicts over the Cartesian product, beta-major.
pub fn region_sweep(beta_grid: &[Q], gamma_grid: &[Q]) -> Vec<RegionRow> {
    let mut rows = Vec::with_capacity(beta_grid.len() * gamma_grid.len());
    for b in beta_grid {
        for g in gamma_grid {
            rows.push(RegionRow {
                beta: b.clone(),
                gamma: g.clone(),
                verdict: admissible(b, g),
            });
        }
    }
    rows
}

#[derive(Serialize)]
struct CsvRow {
    beta: String,
    gamma: String,
    beta_float: f64,
    gamma_float: f64,
    admissible: bool,
    zeta_lower: String,
    zeta_lower_float: Option<f64>,
    zeta_lower_strict: Option<bool>,
    zeta_upper: String,
    zeta_upper_float: Option<f64>,
    binding: String,
}

/// Exact-fraction columns with float renderings beside them.
pub fn write_region_csv<W: Write>(out: W, rows: &[RegionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        let iv = r.verdict.zeta_interval.as_ref();
        w.serialize(CsvRow {
            beta: format_rational(&r.beta),
            gamma: format_rational(&r.gamma),
            beta_float: to_f64(&r.beta),
            gamma_float: to_f64(&r.gamma),
            admissible: r.verdict.admissible,
            zeta_lower: iv.map(|i| format_rational(&i.lower)).unwrap_or_default(),
            zeta_lower_float: iv.map(|i| to_f64(&i.lower)),
            zeta_lower_strict: iv.map(|i| i.lower_strict),
            zeta_upper: iv.map(|i| format_rational(&i.upper)).unwrap_or_default(),
            zeta_upper_float: iv.map(|i| to_f64(&i.upper)),
            binding: r.verdict.binding_constraints.join(";"),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// A cell where `zeta > combined` fails to imply one of the separate bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImplicationViolation {
    pub beta: Q,
    pub gamma: Q,
    pub bound: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImplicationReport {
    pub cells: usize,
    pub violations: Vec<ImplicationViolation>,
}

/// Checks, cell by cell, that every zeta above the combined bound also
/// satisfies the carrier and perturbation bounds. Since the combined bound
/// is strict this holds iff it is at least both of them.
pub fn check_implication(beta_grid: &[Q], gamma_grid: &[Q]) -> Result<ImplicationReport> {
    let mut violations = Vec::new();
    let mut cells = 0;
    for b in beta_grid {
        for g in gamma_grid {
            cells += 1;
            let c = zeta_lb_combined(b, g)?;
            if c < zeta_lb_baru(b, g)? {
                violations.push(ImplicationViolation {
                    beta: b.clone(),
                    gamma: g.clone(),
                    bound: ZETA_LOWER_BARU,
                });
            }
            if c < zeta_lb_perturb(b, g)? {
                violations.push(ImplicationViolation {
                    beta: b.clone(),
                    gamma: g.clone(),
                    bound: ZETA_LOWER_PERTURBATION,
                });
            }
        }
    }
    Ok(ImplicationReport { cells, violations })
}

/// The dense check grid: `beta = 3 + i/101`, `gamma = 1 + j/50`, `i, j in 1..=100`.
pub fn dense_grid() -> (Vec<Q>, Vec<Q>) {
    let betas = (1..=100).map(|i| int(3) + frac(i, 101)).collect();
    let gammas = (1..=100).map(|j| int(1) + frac(j, 50)).collect();
    (betas, gammas)
}

/// `lo, lo + step, ...` up to and including `hi` when it lands exactly.
pub fn rational_range(lo: &Q, hi: &Q, step: &Q) -> Result<Vec<Q>> {
    if !step.is_positive() || hi < lo {
        return Err(Error::InvalidArgument(format!(
            "bad range {}..{} step {}",
            format_rational(lo),
            format_rational(hi),
            format_rational(step)
        )));
    }
    let mut out = Vec::new();
    let mut x = lo.clone();
    while x <= *hi {
        out.push(x.clone());
        x += step;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Q {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_exact_decimals() {
        assert_eq!(q("3.5"), frac(7, 2));
        assert_eq!(q("7/2"), frac(7, 2));
        assert_eq!(q("-1.25e-3"), frac(-1, 800));
        assert_eq!(q("1e2"), int(100));
        assert_eq!(q(".5"), frac(1, 2));
        assert_eq!(q("0.1") * int(3), frac(3, 10));
        for bad in ["", "abc", "1/0", "1.2.3", "e5", "--1"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
        assert_eq!(format_rational(&frac(60, 41)), "60/41");
        assert_eq!(format_rational(&int(3)), "3");
    }

    #[test]
    fn base_constraint_examples() {
        let all = |b: &str, g: &str, z: &str| -> Vec<bool> {
            base_constraints(&q(b), &q(g), &q(z)).iter().map(|c| c.passed).collect()
        };
        assert_eq!(all("3.5", "1.2", "1.0"), vec![true, true, true]);
        assert_eq!(all("4.0", "1.2", "0.5"), vec![false, true, true]);
        assert_eq!(all("3.5", "1.2", "1.5"), vec![true, true, false]);
    }

    #[test]
    fn lower_bound_examples() {
        let (b, g) = (q("3.5"), q("1.2"));
        assert_eq!(zeta_lb_baru(&b, &g).unwrap(), q("11.85") / q("8.5"));
        assert_eq!(zeta_lb_perturb(&b, &g).unwrap(), frac(60, 41));
        assert!(frac(60, 41) < frac(3, 2));
        let c = zeta_lb_combined(&b, &g).unwrap();
        assert_eq!(c, frac(6, 41) + frac(45, 34));
        assert!((to_f64(&c) - 1.469871).abs() < 5e-7);
        assert!(zeta_lb_baru(&int(4), &g).is_err());
    }

    #[test]
    fn gamma_window_examples() {
        let w = gamma_windows(&q("3.5")).unwrap();
        assert_eq!(w.baru, int(3));
        assert_eq!(w.perturbation, frac(3, 2));
        assert_eq!(w.combined, q("61.5") / q("42.5"));
        assert_eq!(w.min(), &w.combined);
    }

    #[test]
    fn verdict_examples() {
        let v = admissible(&q("3.5"), &q("1.2"));
        assert!(v.admissible);
        let iv = v.zeta_interval.unwrap();
        assert_eq!(iv.lower, frac(6, 41) + frac(45, 34));
        assert!(iv.lower_strict);
        assert_eq!(iv.upper, frac(3, 2));
        assert_eq!(v.binding_constraints, vec![ZETA_LOWER_COMBINED, ZETA_UPPER]);

        let v = admissible(&q("3.5"), &q("1.45"));
        assert!(!v.admissible);
        // The combined gamma window is where the combined zeta bound meets 5 - beta.
        assert_eq!(v.binding_constraints, vec![GAMMA_UPPER_COMBINED, ZETA_INTERVAL_EMPTY]);

        let v = admissible(&q("3.5"), &q("1.0"));
        assert!(!v.admissible);
        assert_eq!(v.binding_constraints, vec![GAMMA_LOWER]);

        let v = admissible(&q("3.5"), &q("2"));
        assert!(v.binding_constraints.contains(&GAMMA_UPPER_PERTURBATION));
        assert!(admissible(&q("4"), &q("1.2")).binding_constraints == vec![BETA_RANGE]);
    }

    #[test]
    fn sweep_has_admissible_gamma_per_beta() {
        let betas = vec![q("3.1"), q("3.5"), q("3.9")];
        let gammas = rational_range(&q("1.01"), &q("2"), &q("0.01")).unwrap();
        assert_eq!(gammas.len(), 100);
        let rows = region_sweep(&betas, &gammas);
        for b in &betas {
            assert!(rows.iter().any(|r| &r.beta == b && r.verdict.admissible));
        }
        let single = region_sweep(&[q("3.5")], &[q("1.2")]);
        assert_eq!(single[0].verdict, admissible(&q("3.5"), &q("1.2")));
    }

    #[test]
    fn midpoint_passes_each_bound() {
        let (betas, gammas) = dense_grid();
        for r in region_sweep(&betas, &gammas).iter().filter(|r| r.verdict.admissible) {
            let z = r.verdict.zeta_interval.as_ref().unwrap().midpoint();
            assert!(base_constraints(&r.beta, &r.gamma, &z).iter().all(|c| c.passed));
            assert!(z >= zeta_lb_baru(&r.beta, &r.gamma).unwrap());
            assert!(z > zeta_lb_perturb(&r.beta, &r.gamma).unwrap());
        }
    }

    #[test]
    fn dense_implication_holds() {
        let (b, g) = dense_grid();
        let rep = check_implication(&b, &g).unwrap();
        assert_eq!(rep.cells, 10_000);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations.first());
    }

    #[test]
    fn csv_renders_fractions() {
        let rows = region_sweep(&[q("3.5")], &[q("1.2"), q("1.0")]);
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("beta,gamma,beta_float,gamma_float,admissible,zeta_lower"));
        assert!(lines[1].starts_with("7/2,6/5,3.5,1.2,true,"));
        assert!(lines[1].ends_with(",3/2,1.5,zeta_lower_combined;zeta_upper"));
        assert!(lines[2].ends_with(",false,,,,,,gamma_lower"));
    }
}
