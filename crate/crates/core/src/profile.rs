//! Compactly supported radial profiles on `(1, 4)`.
//!
//! * `g(rho) = exp(-1 / ((rho - 1)(4 - rho)))` on `(1, 4)`.
//! * `h' = chi - c * phi` where `chi` is a smooth plateau equal to one on
//!   `[2, 3]` and supported in `(1.5, 3.5)`, `phi` is a bump supported in
//!   `(3.55, 3.95)` and `c` makes `h'` integrate to zero, so that
//!   `h(rho) = int_1^rho h'` vanishes again at `rho = 4`.

/// Gauss-Legendre 8-point rule on `[-1, 1]`.
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

pub const SUPPORT_START: f64 = 1.0;
pub const SUPPORT_END: f64 = 4.0;

const PLATEAU_RISE: (f64, f64) = (1.5, 2.0);
const PLATEAU_FALL: (f64, f64) = (3.0, 3.5);
const LOBE_CENTER: f64 = 3.75;
const LOBE_HALF_WIDTH: f64 = 0.2;

/// Panels used to tabulate `h`.
const H_PANELS: usize = 3000;

fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn composite(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * w;
            gauss_legendre(lo, lo + w, &f)
        })
        .sum()
}

/// `exp(-1/x)` for `x > 0`, zero otherwise.
#[inline]
fn kernel(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

#[inline]
fn kernel_prime(x: f64) -> f64 {
    if x > 0.0 {
        kernel(x) / (x * x)
    } else {
        0.0
    }
}

/// Smoothstep: 0 for `x <= 0`, 1 for `x >= 1`, smooth in between.
#[inline]
fn smoothstep(x: f64) -> f64 {
    let a = kernel(x);
    let b = kernel(1.0 - x);
    a / (a + b)
}

#[inline]
fn smoothstep_prime(x: f64) -> f64 {
    let a = kernel(x);
    let b = kernel(1.0 - x);
    let s = a + b;
    (kernel_prime(x) * b + a * kernel_prime(1.0 - x)) / (s * s)
}

/// Standard bump `exp(-1/(1 - x^2))` on `(-1, 1)`.
#[inline]
fn bump(x: f64) -> f64 {
    let q = 1.0 - x * x;
    if q > 0.0 {
        (-1.0 / q).exp()
    } else {
        0.0
    }
}

#[inline]
fn bump_prime(x: f64) -> f64 {
    let q = 1.0 - x * x;
    if q > 0.0 {
        bump(x) * (-2.0 * x / (q * q))
    } else {
        0.0
    }
}

/// Radial profiles `g`, `h`, `h'` (and a few derivatives) used by the
/// initial data and the carrier solution.
#[derive(Clone, Debug)]
pub struct BumpProfile {
    lobe_weight: f64,
    panel_width: f64,
    h_cumulative: Vec<f64>,
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self::new()
    }
}

impl BumpProfile {
    pub fn new() -> Self {
        let plateau_mass = composite(PLATEAU_RISE.0, PLATEAU_FALL.1, 800, plateau);
        let lobe_mass = composite(
            LOBE_CENTER - LOBE_HALF_WIDTH,
            LOBE_CENTER + LOBE_HALF_WIDTH,
            400,
            lobe,
        );
        let lobe_weight = plateau_mass / lobe_mass;
        let panel_width = (SUPPORT_END - SUPPORT_START) / H_PANELS as f64;
        let mut h_cumulative = Vec::with_capacity(H_PANELS + 1);
        let mut acc = 0.0;
        h_cumulative.push(0.0);
        for p in 0..H_PANELS {
            let lo = SUPPORT_START + p as f64 * panel_width;
            acc += gauss_legendre(lo, lo + panel_width, |r| plateau(r) - lobe_weight * lobe(r));
            h_cumulative.push(acc);
        }
        Self {
            lobe_weight,
            panel_width,
            h_cumulative,
        }
    }

    /// Weight `c` of the compensating lobe in `h' = chi - c * phi`.
    pub fn lobe_weight(&self) -> f64 {
        self.lobe_weight
    }

    pub fn g(&self, rho: f64) -> f64 {
        let q = (rho - SUPPORT_START) * (SUPPORT_END - rho);
        if q > 0.0 {
            (-1.0 / q).exp()
        } else {
            0.0
        }
    }

    pub fn g_prime(&self, rho: f64) -> f64 {
        let q = (rho - SUPPORT_START) * (SUPPORT_END - rho);
        if q > 0.0 {
            self.g(rho) * (SUPPORT_START + SUPPORT_END - 2.0 * rho) / (q * q)
        } else {
            0.0
        }
    }

    pub fn g_second(&self, rho: f64) -> f64 {
        let q = (rho - SUPPORT_START) * (SUPPORT_END - rho);
        if q > 0.0 {
            let dq = SUPPORT_START + SUPPORT_END - 2.0 * rho;
            let w = dq / (q * q);
            let dw = (-2.0 * q - 2.0 * dq * dq) / (q * q * q);
            self.g(rho) * (w * w + dw)
        } else {
            0.0
        }
    }

    pub fn h_prime(&self, rho: f64) -> f64 {
        plateau(rho) - self.lobe_weight * lobe(rho)
    }

    pub fn h_second(&self, rho: f64) -> f64 {
        plateau_prime(rho) - self.lobe_weight * lobe_prime(rho)
    }

    /// `h(rho) = int_1^rho h'`, exactly zero outside `(1, 4)`.
    pub fn h(&self, rho: f64) -> f64 {
        if !(rho > SUPPORT_START && rho < SUPPORT_END) {
            return 0.0;
        }
        let offset = (rho - SUPPORT_START) / self.panel_width;
        let p = (offset.floor() as usize).min(H_PANELS - 1);
        let lo = SUPPORT_START + p as f64 * self.panel_width;
        self.h_cumulative[p] + gauss_legendre(lo, rho, |r| self.h_prime(r))
    }

    /// Angular-velocity profile `h'(rho) / rho`.
    pub fn h_tilde(&self, rho: f64) -> f64 {
        if rho > 0.0 {
            self.h_prime(rho) / rho
        } else {
            0.0
        }
    }

    /// `d/drho (h'(rho) / rho)`.
    pub fn h_tilde_prime(&self, rho: f64) -> f64 {
        if rho > 0.0 {
            (self.h_second(rho) * rho - self.h_prime(rho)) / (rho * rho)
        } else {
            0.0
        }
    }
}

fn plateau(rho: f64) -> f64 {
    let w_rise = PLATEAU_RISE.1 - PLATEAU_RISE.0;
    let w_fall = PLATEAU_FALL.1 - PLATEAU_FALL.0;
    smoothstep((rho - PLATEAU_RISE.0) / w_rise) * smoothstep((PLATEAU_FALL.1 - rho) / w_fall)
}

fn plateau_prime(rho: f64) -> f64 {
    let w_rise = PLATEAU_RISE.1 - PLATEAU_RISE.0;
    let w_fall = PLATEAU_FALL.1 - PLATEAU_FALL.0;
    let up = (rho - PLATEAU_RISE.0) / w_rise;
    let down = (PLATEAU_FALL.1 - rho) / w_fall;
    smoothstep_prime(up) / w_rise * smoothstep(down) - smoothstep(up) * smoothstep_prime(down) / w_fall
}

fn lobe(rho: f64) -> f64 {
    bump((rho - LOBE_CENTER) / LOBE_HALF_WIDTH)
}

fn lobe_prime(rho: f64) -> f64 {
    bump_prime((rho - LOBE_CENTER) / LOBE_HALF_WIDTH) / LOBE_HALF_WIDTH
}
