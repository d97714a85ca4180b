//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

struct Interval {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    ((kronrod * h), ((kronrod - gauss) * h).norm())
}

/// Integrate `f` over `[a, b]` with a finite interval.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Integration {
                estimate: total,
                error: total_err,
                evaluations,
            });
        }
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.norm()) {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Integration {
                estimate: total,
                error: total_err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        heap.push(Interval {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Interval {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // Re-sum the error estimate to avoid drift from repeated subtraction.
        total_err = heap.iter().map(|i| i.error).sum();
    }
    let value = heap.iter().map(|i| i.value).sum();
    Ok(QuadResult {
        value,
        error: total_err,
        evaluations,
    })
}

/// Integrate over consecutive breakpoints, summing the pieces.
pub fn integrate_pieces<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    let mut out = QuadResult {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
        evaluations: 0,
    };
    for w in breakpoints.windows(2) {
        let r = integrate(&mut f, w[0], w[1], opts)?;
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| Complex64::new(x.powi(5), 2.0 * x), 0.0, 2.0, QuadOptions::default())
            .unwrap();
        assert!((r.value - Complex64::new(64.0 / 6.0, 4.0)).norm() < 1e-12);
    }

    #[test]
    fn oscillatory_and_singular() {
        let opts = QuadOptions::default();
        let r = integrate(|x| Complex64::new(0.0, 50.0 * x).exp(), 0.0, 1.0, opts).unwrap();
        let exact = (Complex64::new(0.0, 50.0).exp() - 1.0) / Complex64::new(0.0, 50.0);
        assert!((r.value - exact).norm() < 1e-11);
        // Integrable endpoint singularity 1/√x.
        let r = integrate(|x| Complex64::new(1.0 / x.sqrt(), 0.0), 0.0, 1.0, opts).unwrap();
        assert!((r.value.re - 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_reported() {
        let r = integrate(|x| Complex64::new(1.0 / x, 0.0), -1.0, 1.0, QuadOptions::default());
        assert!(matches!(r, Err(Error::Integration { .. })));
    }
}
