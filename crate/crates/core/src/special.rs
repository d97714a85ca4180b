//! Error-function combinations that appear in the regularized Green's functions.

use errorfunctions::{ComplexErrorFunctions, RealErrorFunctions};
use num_complex::Complex64;

/// `e^{-z²}(erfi(z) − i)`, written as `−i·w(z)` so that neither factor overflows.
///
/// For purely imaginary `z = iy` this is `−i·erfcx(y)`, evaluated with the real
/// routine to keep the result exactly imaginary.
pub fn erfi_minus_i_scaled(z: Complex64) -> Complex64 {
    if z.re == 0.0 {
        return Complex64::new(0.0, -z.im.erfcx());
    }
    if z.im == 0.0 {
        // w(x) = e^{-x²} + i·Im w(x) for real x.
        let x = z.re;
        return Complex64::new(x.w_im(), -(-x * x).exp());
    }
    -Complex64::i() * z.w()
}

/// Principal square root with the cut placed so that `Re ≥ 0` and `Im ≥ 0` for a
/// real argument of either sign.
pub fn causal_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return if z.re >= 0.0 {
            Complex64::new(z.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-z.re).sqrt())
        };
    }
    let s = z.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}
