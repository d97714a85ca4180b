//! Free-space dyadic Green's function: real-space form, Weyl (in-plane momentum)
//! components at z = 0, and their Gaussian-regularized counterparts.
//!
//! Sign convention: `G(r) = −(δ + ∂∂/k²) e^{ikr}/(4πr)` so that the lattice
//! coupling is `+(3πΓ0/k)·G`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Vec2;
use crate::special::{causal_sqrt, erfi_minus_i_scaled};

pub type Tensor3 = [[Complex64; 3]; 3];

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn zero_tensor() -> Tensor3 {
    [[ZERO; 3]; 3]
}

pub fn diagonal(d: [Complex64; 3]) -> Tensor3 {
    let mut t = zero_tensor();
    for i in 0..3 {
        t[i][i] = d[i];
    }
    t
}

pub fn add_assign(t: &mut Tensor3, other: &Tensor3) {
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] += other[i][j];
        }
    }
}

pub fn add_scaled(t: &mut Tensor3, other: &Tensor3, s: Complex64) {
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] += other[i][j] * s;
        }
    }
}

pub fn scale(t: &Tensor3, s: Complex64) -> Tensor3 {
    let mut out = *t;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

pub fn sub(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let mut out = *a;
    add_scaled(&mut out, b, Complex64::new(-1.0, 0.0));
    out
}

pub fn transpose(t: &Tensor3) -> Tensor3 {
    let mut out = zero_tensor();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = t[j][i];
        }
    }
    out
}

pub fn max_abs(t: &Tensor3) -> f64 {
    t.iter()
        .flat_map(|r| r.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

/// Real-space Green's tensor for `r ≠ 0` (the contact term is not included).
pub fn greens_real(r: [f64; 3], k: f64) -> Result<Tensor3> {
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    if !(r2 > 0.0) {
        return Err(Error::Domain(
            "greens_real is undefined at r = 0; use regularized_source for the self term".into(),
        ));
    }
    let rn = r2.sqrt();
    let kr = k * rn;
    let pref = -Complex64::new(0.0, kr).exp() / (4.0 * PI * rn);
    let inv = 1.0 / kr;
    let a = pref * Complex64::new(1.0 - inv * inv, inv);
    let b = pref * Complex64::new(-1.0 + 3.0 * inv * inv, -3.0 * inv);
    let mut g = zero_tensor();
    for i in 0..3 {
        for j in i..3 {
            let mut v = b * (r[i] * r[j] / r2);
            if i == j {
                v += a;
            }
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

/// In-plane Green's tensor for a separation vector in the z = 0 plane.
pub fn greens_planar(rho: Vec2, k: f64) -> Result<Tensor3> {
    greens_real([rho.x, rho.y, 0.0], k)
}

/// Fluctuation-averaged Green's function at the source, `G*(0) = value·δ`.
pub fn regularized_source(k: f64, a_ho: f64) -> Result<Complex64> {
    if !(a_ho > 0.0) {
        return Err(Error::Domain(format!(
            "regularized source needs a_ho > 0 (got {a_ho}); point atoms use the cutoff-independent combination"
        )));
    }
    let u = k * a_ho;
    let scaled = erfi_minus_i_scaled(Complex64::new(u / SQRT_2, 0.0));
    let contact = (u * u - 0.5) / ((PI / 2.0).sqrt() * u * u * u);
    Ok((scaled - contact) * (k / (6.0 * PI)))
}

/// One sample of the regularized Weyl decomposition.
#[derive(Clone, Copy, Debug)]
pub struct WeylSample {
    pub p: Vec2,
    pub g: Tensor3,
    pub lambda: Complex64,
    pub c: f64,
    pub i0: Complex64,
    pub i2: Complex64,
}

/// Default relative light-circle guard: `|p − k| < guard·k` is rejected.
pub const LIGHT_GUARD: f64 = 1e-6;

/// `g*(p; 0)` with Gaussian cutoff width `a_ho` (`a_ho = 0` gives the bare Weyl
/// components, with the divergent contact constant of ℐ2 dropped).
pub fn weyl_regularized(p: Vec2, k: f64, a_ho: f64, guard: f64) -> Result<WeylSample> {
    let p2 = p.norm_sqr();
    let pn = p2.sqrt();
    if (pn - k).abs() < guard * k {
        return Err(Error::LightCircle { p: pn, k });
    }
    let lam = causal_sqrt(Complex64::new(k * k - p2, 0.0));
    let c = (-0.5 * a_ho * a_ho * p2).exp() / (2.0 * PI * k * k);
    let scaled = erfi_minus_i_scaled(lam * (a_ho / SQRT_2));
    let i0 = scaled * (c * PI) / lam;
    let i2 = if a_ho > 0.0 {
        (scaled * lam * PI - (2.0 * PI).sqrt() / a_ho) * c
    } else {
        scaled * lam * (PI * c)
    };
    let mut g = zero_tensor();
    g[0][0] = i0 * (k * k - p.x * p.x);
    g[1][1] = i0 * (k * k - p.y * p.y);
    g[2][2] = if a_ho > 0.0 {
        i0 * (k * k) - i2
    } else {
        // k²ℐ0 − ℐ2 combined analytically: Cπ(−i)p²/Λ.
        Complex64::new(0.0, -PI * c) * p2 / lam
    };
    g[0][1] = i0 * (-p.x * p.y);
    g[1][0] = g[0][1];
    Ok(WeylSample {
        p,
        g,
        lambda: lam,
        c,
        i0,
        i2,
    })
}
