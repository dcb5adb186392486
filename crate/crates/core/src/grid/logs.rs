use crate::{Error, Result};

/// `Log(t) = log2(100 + t)`.
#[inline]
pub fn log100(t: f64) -> f64 {
    (100.0 + t).log2()
}

/// Iterated logarithm `Log^n(t)`.
///
/// `Log^1 = Log` and `Log^n(t) = Log(100 + Log^{n-1}(t))`, so every level past
/// the first adds two hundreds inside the outer `log2`.
pub fn iterated_log(n: u32, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("iterated_log needs n >= 1".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("iterated_log needs t >= 0, got {t}")));
    }
    let mut v = log100(t);
    for _ in 1..n {
        v = log100(100.0 + v);
    }
    Ok(v)
}

/// `log2(max(x, 2))`, so nested raw logs stay at least 1.
#[inline]
pub fn clog2(x: f64) -> f64 {
    x.max(2.0).log2()
}
