//! Bracketing bisection for monotone scalar equations on `[0, ∞)`.
//!
//! Every solver in this crate reduces to finding the zero of a strictly
//! increasing function whose value at the origin is non-positive. The bracket
//! is grown by doubling from `[0, 1]`, then halved until its width drops below
//! `tol` relative to the upper end.

use crate::error::{Error, Result};

/// Cap on the number of bracket doublings.
pub const MAX_BRACKET_DOUBLINGS: u32 = 128;
/// Cap on the number of bisection steps after the bracket is found.
pub const MAX_BISECTIONS: u32 = 200;
/// Default relative tolerance for all solvers.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A located root together with the work it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: f64,
    /// Function evaluations spent (doublings plus bisections).
    pub iterations: u32,
}

/// Finds `[lo, hi]` with `f(lo) <= 0 <= f(hi)` by doubling `hi` from 1.
///
/// `f` must be increasing with `f(0) <= 0`.
pub fn bracket_increasing<F>(f: &mut F) -> Result<(f64, f64, u32)>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut iterations = 0;
    loop {
        let v = f(hi);
        if v.is_nan() {
            return Err(Error::SolverFailure { lo, hi, iterations });
        }
        if v >= 0.0 {
            return Ok((lo, hi, iterations));
        }
        if iterations >= MAX_BRACKET_DOUBLINGS {
            return Err(Error::SolverFailure { lo, hi, iterations });
        }
        lo = hi;
        hi *= 2.0;
        iterations += 1;
    }
}

/// Bisects an increasing `f` on a valid bracket `[lo, hi]`.
pub fn bisect_increasing<F>(f: &mut F, mut lo: f64, mut hi: f64, tol: f64) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    let mut iterations = 0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket is down to adjacent floats
            break;
        }
        if iterations >= MAX_BISECTIONS {
            return Err(Error::SolverFailure { lo, hi, iterations });
        }
        iterations += 1;
        let v = f(mid);
        if v.is_nan() {
            return Err(Error::SolverFailure { lo, hi, iterations });
        }
        if v == 0.0 {
            return Ok(Root { value: mid, iterations });
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        value: 0.5 * (lo + hi),
        iterations,
    })
}

/// Zero of an increasing function on `[0, ∞)`; returns 0 when `f(0) >= 0`.
pub fn solve_increasing<F>(mut f: F, tol: f64) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid("tol", format!("must lie in (0, 1), got {tol}")));
    }
    let at_zero = f(0.0);
    if at_zero.is_nan() {
        return Err(Error::SolverFailure {
            lo: 0.0,
            hi: 0.0,
            iterations: 0,
        });
    }
    if at_zero >= 0.0 {
        return Ok(Root {
            value: 0.0,
            iterations: 1,
        });
    }
    let (lo, hi, doublings) = bracket_increasing(&mut f)?;
    let mut root = bisect_increasing(&mut f, lo, hi, tol)?;
    root.iterations += doublings + 1;
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = solve_increasing(|x| x * x - 2.0, 1e-14).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn large_root_needs_doublings() {
        let r = solve_increasing(|x| x - 1e9, 1e-12).unwrap();
        assert!((r.value / 1e9 - 1.0).abs() < 1e-11);
        assert!(r.iterations > 30);
    }

    #[test]
    fn tiny_root_resolved_relatively() {
        let r = solve_increasing(|x| x - 1e-30, 1e-12).unwrap();
        assert!((r.value / 1e-30 - 1.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn nonnegative_at_origin_returns_zero() {
        assert_eq!(solve_increasing(|x| x, 1e-12).unwrap().value, 0.0);
        assert_eq!(solve_increasing(|x| x + 1.0, 1e-12).unwrap().value, 0.0);
    }

    #[test]
    fn unbounded_below_fails_with_bracket() {
        match solve_increasing(|_| -1.0, 1e-12) {
            Err(Error::SolverFailure { iterations, hi, .. }) => {
                assert_eq!(iterations, MAX_BRACKET_DOUBLINGS);
                assert!(hi > 1e38);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn nan_is_a_failure() {
        assert!(solve_increasing(|x| if x > 4.0 { f64::NAN } else { -1.0 }, 1e-12).is_err());
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(solve_increasing(|x| x - 1.0, 0.0).is_err());
        assert!(solve_increasing(|x| x - 1.0, 1.5).is_err());
    }
}
