//! Globally adaptive 15-point Gauss–Kronrod quadrature.
//!
//! Finite intervals are integrated directly; the real line and the positive
//! half-line are mapped onto finite intervals first.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 5_000;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// ∫ₐᵇ f over a finite interval to `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite ({a}, {b})")));
    }
    let mut panels = vec![gk15(&mut f, a, b)];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Numerical("integrand produced a non-finite value".into()));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                error,
                intervals: panels.len(),
            });
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: estimate {value}, error {error}"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(&mut f, p.a, mid));
        panels.push(gk15(&mut f, mid, p.b));
    }
}

/// ∫ f over ℝ via `x = t / (1 - t²)`.
pub fn integrate_real_line(mut f: impl FnMut(f64) -> f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    integrate(
        move |t| {
            let d = 1.0 - t * t;
            let x = t / d;
            let v = f(x) * (1.0 + t * t) / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -1.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// ∫₀^∞ f via `x = eˢ`, which also tames integrable singularities at 0.
pub fn integrate_positive(mut f: impl FnMut(f64) -> f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    integrate_real_line(
        move |s| {
            let x = s.exp();
            if x == 0.0 || !x.is_finite() {
                0.0
            } else {
                f(x) * x
            }
        },
        abs_tol,
        rel_tol,
    )
}
