//! Shared numerical kernels: compensated summation, the stable
//! `(e^x - 1)/x` family, adaptive quadrature and Brent root bracketing.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("quadrature did not converge on [{a}, {b}] (requested tol {tol})")]
    QuadratureFailure { a: f64, b: f64, tol: f64 },
    #[error("root finder: no sign change on [{a}, {b}]")]
    NotBracketed { a: f64, b: f64 },
    #[error("root finder did not converge within {0} iterations")]
    RootFailure(usize),
}

/// Kahan compensated accumulator. Keeps long prefix sums accurate at
/// n = 10^7 where a naive fold loses digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// `g(x) = (e^x - 1)/x` with the convention `g(0) = 1`.
#[inline]
pub fn exp_ratio(x: f64) -> f64 {
    1.0 + exp_ratio_m1(x)
}

/// `g(x) - 1 = (e^x - 1 - x)/x`, evaluated without cancellation.
///
/// The direct form loses all precision near 0 (the numerator is ~x^2/2),
/// so below 1e-4 we switch to the series x/2 + x^2/6 + x^3/24 + x^4/120.
#[inline]
pub fn exp_ratio_m1(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        x / 2.0 * (1.0 + x / 3.0 * (1.0 + x / 4.0 * (1.0 + x / 5.0)))
    } else {
        (x.exp_m1() - x) / x
    }
}

/// Adaptive Simpson quadrature with interval bisection.
///
/// The integrand must be finite on [a, b]; endpoints where the analytic
/// integrand is defined by a limit should be passed as closures that
/// return that limit.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, NumericError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut acc = KahanSum::new();
    adaptive_step(&f, a, b, fa, fm, fb, whole, tol, 60, &mut acc)
        .map_err(|_| NumericError::QuadratureFailure { a, b, tol })?;
    Ok(acc.value())
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc: &mut KahanSum,
) -> Result<(), ()> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || m == a || m == b {
        acc.add(left + right + delta / 15.0);
        return Ok(());
    }
    if depth == 0 {
        return Err(());
    }
    adaptive_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, acc)?;
    adaptive_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, acc)
}

/// Brent's method on a bracketing interval [a, b] with f(a)·f(b) ≤ 0.
pub fn brent<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64, NumericError> {
    let mut a = a;
    let mut b = b;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(NumericError::NotBracketed { a, b });
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..max_iter {
        if fb == 0.0 || (b - a).abs() < xtol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !((lo.min(b) < s && s < lo.max(b))
            && (!mflag || (s - b).abs() < 0.5 * (b - c).abs())
            && (mflag || (s - b).abs() < 0.5 * (c - d).abs()));
        if cond {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Err(NumericError::RootFailure(max_iter))
}
