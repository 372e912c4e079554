//! Model RB parameters and the arithmetic that turns them into concrete
//! instance dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported tuple space `d^k` per constraint. Relations are stored
/// as bitsets over this space.
pub const MAX_TUPLE_SPACE: u64 = 1 << 24;

/// The five Model RB constants plus the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Number of variables.
    pub n: usize,
    /// Domain growth exponent: `d = n^alpha`.
    pub alpha: f64,
    /// Constraint density: `m = r n ln d`.
    pub r: f64,
    /// Constraint tightness: each relation permits `(1 - p) d^k` tuples.
    pub p: f64,
    /// Constraint arity.
    pub k: usize,
    pub seed: u64,
}

impl Params {
    pub fn new(n: usize, alpha: f64, r: f64, p: f64, k: usize, seed: u64) -> Self {
        Params {
            n,
            alpha,
            r,
            p,
            k,
            seed,
        }
    }

    /// Same parameters with `r` replaced by [`calibrate_r`].
    pub fn calibrated(n: usize, alpha: f64, p: f64, k: usize, seed: u64) -> Result<Self> {
        let r = calibrate_r(n, alpha, p, k)?;
        Ok(Params::new(n, alpha, r, p, k, seed))
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Params { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::param(
                "alpha",
                format!("must be a positive finite number, got {}", self.alpha),
            ));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::param(
                "r",
                format!("must be a positive finite number, got {}", self.r),
            ));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::param(
                "p",
                format!("must lie strictly between 0 and 1, got {}", self.p),
            ));
        }
        if self.k < 2 {
            return Err(Error::param("k", format!("must be at least 2, got {}", self.k)));
        }
        if self.k > self.n {
            return Err(Error::param(
                "k",
                format!("arity {} exceeds the number of variables {}", self.k, self.n),
            ));
        }
        Ok(())
    }
}

/// Concrete sizes realized from [`Params`] after rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    /// Domain size.
    pub d: usize,
    /// Number of constraints.
    pub m: usize,
    /// Permitted tuples per constraint.
    pub relation_size: usize,
    /// `1 - relation_size / d^k`; replaces the nominal `p` in every exact formula.
    pub realized_tightness: f64,
    /// `d^k`.
    pub tuple_space: usize,
    /// `r n ln d` before rounding.
    pub m_exact: f64,
}

impl Dimensions {
    /// Overrides the constraint count. Only experiments' test hooks use this;
    /// `m = 0` is allowed here and nowhere else.
    pub fn with_constraint_count(self, m: usize) -> Self {
        Dimensions { m, ..self }
    }

    /// Probability that a fixed assignment satisfies one random constraint.
    pub fn satisfaction_probability(&self) -> f64 {
        self.relation_size as f64 / self.tuple_space as f64
    }

    /// `ln(d^n q^m)` with `q` the realized satisfaction probability.
    pub fn ln_expected_solution_count(&self, n: usize) -> f64 {
        n as f64 * (self.d as f64).ln() + self.m as f64 * self.satisfaction_probability().ln()
    }

    pub fn expected_solution_count(&self, n: usize) -> f64 {
        self.ln_expected_solution_count(n).exp()
    }
}

fn round_half_away(x: f64) -> f64 {
    // f64::round rounds half-way cases away from zero
    x.round()
}

fn domain_size(n: usize, alpha: f64) -> Result<usize> {
    let raw = round_half_away((n as f64).powf(alpha));
    if !raw.is_finite() || raw > u32::MAX as f64 {
        return Err(Error::param("alpha", format!("domain size {n}^{alpha} is too large")));
    }
    Ok((raw as usize).max(2))
}

fn tuple_space(d: usize, k: usize) -> Result<usize> {
    let overflow = || Error::TupleSpaceOverflow {
        d: d as u64,
        k,
        max: MAX_TUPLE_SPACE,
    };
    let exp = u32::try_from(k).map_err(|_| overflow())?;
    let space = (d as u64).checked_pow(exp).ok_or_else(overflow)?;
    if space > MAX_TUPLE_SPACE {
        return Err(overflow());
    }
    Ok(space as usize)
}

fn relation_size(p: f64, tuple_space: usize) -> usize {
    let raw = round_half_away((1.0 - p) * tuple_space as f64);
    (raw as usize).clamp(1, tuple_space - 1)
}

/// Realizes `d`, `m` and the relation size from the model constants.
///
/// `d = max(2, round(n^alpha))`, `m = max(1, round(r n ln d))` and
/// `relation_size = clamp(round((1 - p) d^k), 1, d^k - 1)`, all rounding half
/// away from zero.
pub fn derive_dimensions(params: &Params) -> Result<Dimensions> {
    params.validate()?;
    let d = domain_size(params.n, params.alpha)?;
    let space = tuple_space(d, params.k)?;
    let m_exact = params.r * params.n as f64 * (d as f64).ln();
    if !m_exact.is_finite() || m_exact > u32::MAX as f64 {
        return Err(Error::param("r", format!("constraint count {m_exact} is too large")));
    }
    let m = (round_half_away(m_exact) as usize).max(1);
    let relation_size = relation_size(params.p, space);
    Ok(Dimensions {
        d,
        m,
        relation_size,
        realized_tightness: 1.0 - relation_size as f64 / space as f64,
        tuple_space: space,
        m_exact,
    })
}

/// Density `r` at which the expected number of solutions equals 1/2 before
/// `m` is rounded, using the realized tightness of the rounded relation size:
///
/// `r = (n ln d + ln 2) / (n ln d * -ln(relation_size / d^k))`.
pub fn calibrate_r(n: usize, alpha: f64, p: f64, k: usize) -> Result<f64> {
    let dims = derive_dimensions(&Params::new(n, alpha, 1.0, p, k, 0))?;
    let n_ln_d = n as f64 * (dims.d as f64).ln();
    let neg_ln_q = -dims.satisfaction_probability().ln();
    Ok((n_ln_d + std::f64::consts::LN_2) / (n_ln_d * neg_ln_q))
}

/// The same closed form with the nominal tightness `p` in place of the
/// realized one. Differs from [`calibrate_r`] whenever `(1 - p) d^k` is not an
/// integer.
pub fn calibrate_r_nominal(n: usize, alpha: f64, p: f64) -> Result<f64> {
    Params::new(n, alpha, 1.0, p, 2, 0).validate()?;
    let d = domain_size(n, alpha)?;
    let n_ln_d = n as f64 * (d as f64).ln();
    Ok((n_ln_d + std::f64::consts::LN_2) / (n_ln_d * -(1.0 - p).ln()))
}

/// Exact expected number of solutions of an instance drawn by the generators:
/// `d^n (relation_size / d^k)^m` with the rounded `m`.
pub fn expected_solution_count(params: &Params) -> Result<f64> {
    Ok(derive_dimensions(params)?.expected_solution_count(params.n))
}

/// `d^n q^(r n ln d)` with the unrounded constraint count.
pub fn analytic_expected_count(params: &Params) -> Result<f64> {
    let dims = derive_dimensions(params)?;
    let ln = params.n as f64 * (dims.d as f64).ln() + dims.m_exact * dims.satisfaction_probability().ln();
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, alpha: f64, r: f64, p: f64, k: usize) -> Params {
        Params::new(n, alpha, r, p, k, 0)
    }

    #[test]
    fn exact_power_domain() {
        let dims = derive_dimensions(&params(9, 0.5, 1.0, 0.5, 2)).unwrap();
        assert_eq!(dims.d, 3);
    }

    #[test]
    fn relation_size_rounds_half_away() {
        let dims = derive_dimensions(&params(9, 0.5, 1.0, 0.5, 2)).unwrap();
        assert_eq!(dims.relation_size, 5);
        assert!((dims.realized_tightness - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn constraint_count_rounding() {
        // 1.5 * 9 * ln 3 = 14.83
        let dims = derive_dimensions(&params(9, 0.5, 1.5, 0.5, 2)).unwrap();
        assert_eq!(dims.m, 15);
    }

    #[test]
    fn small_domains_clamp_to_two() {
        let dims = derive_dimensions(&params(2, 0.1, 1.0, 0.5, 2)).unwrap();
        assert_eq!(dims.d, 2);
        assert!(dims.m >= 1);
    }

    #[test]
    fn relation_size_clamped_into_open_range() {
        let near_zero = derive_dimensions(&params(4, 0.5, 1.0, 1e-9, 2)).unwrap();
        assert_eq!(near_zero.relation_size, near_zero.tuple_space - 1);
        let near_one = derive_dimensions(&params(4, 0.5, 1.0, 1.0 - 1e-9, 2)).unwrap();
        assert_eq!(near_one.relation_size, 1);
    }

    #[test]
    fn rejects_invalid_params() {
        let bad = [
            params(0, 0.5, 1.0, 0.5, 2),
            params(4, 0.0, 1.0, 0.5, 2),
            params(4, 0.5, -1.0, 0.5, 2),
            params(4, 0.5, 1.0, 0.0, 2),
            params(4, 0.5, 1.0, 1.0, 2),
            params(4, 0.5, 1.0, 0.5, 1),
            params(4, 0.5, 1.0, 0.5, 5),
        ];
        for p in bad {
            assert!(
                matches!(derive_dimensions(&p), Err(Error::InvalidParam { .. })),
                "{p:?}"
            );
        }
    }

    #[test]
    fn error_names_flag() {
        let err = derive_dimensions(&params(4, 0.5, 1.0, 0.5, 5)).unwrap_err();
        assert!(err.to_string().contains("--k"));
    }

    #[test]
    fn tuple_space_overflow_reported() {
        let err = derive_dimensions(&params(100, 1.0, 1.0, 0.5, 4)).unwrap_err();
        assert!(matches!(err, Error::TupleSpaceOverflow { .. }));
    }

    #[test]
    fn nominal_calibration_closed_form() {
        // (9 ln 3 + ln 2) / (9 ln 3 * ln 2)
        let r = calibrate_r_nominal(9, 0.5, 0.5).unwrap();
        assert!((r - 1.5438).abs() < 1e-3, "{r}");
    }

    #[test]
    fn calibration_hits_one_half_before_rounding() {
        for (n, alpha, p, k) in [(9, 0.5, 0.5, 2), (8, 0.5, 0.5, 2), (6, 0.5, 0.3, 2), (5, 0.7, 0.6, 3)] {
            let r = calibrate_r(n, alpha, p, k).unwrap();
            let e = analytic_expected_count(&params(n, alpha, r, p, k)).unwrap();
            assert!((e - 0.5).abs() < 1e-12, "n={n}: {e}");
        }
    }

    #[test]
    fn calibration_decreases_with_tightness() {
        let mut last = f64::INFINITY;
        for p in [0.2, 0.35, 0.5, 0.65, 0.8] {
            let r = calibrate_r(16, 0.5, p, 2).unwrap();
            assert!(r < last, "p={p}");
            last = r;
        }
    }

    #[test]
    fn expected_count_small_cases() {
        // n=2, d=2, k=2, m=1, relation_size=2
        let dims = Dimensions {
            d: 2,
            m: 1,
            relation_size: 2,
            realized_tightness: 0.5,
            tuple_space: 4,
            m_exact: 1.0,
        };
        assert!((dims.expected_solution_count(2) - 2.0).abs() < 1e-12);

        let p = params(4, 0.5, 1.0, 1e-9, 2);
        let dims = derive_dimensions(&p).unwrap();
        let want = 2f64.powi(4) * (3.0f64 / 4.0).powi(dims.m as i32);
        assert!((expected_solution_count(&p).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn calibrated_expectation_after_rounding() {
        let p = Params::calibrated(8, 0.5, 0.5, 2, 0).unwrap();
        let e = expected_solution_count(&p).unwrap();
        // d = 3, relation_size = 5, m = round(16.13) = 16: 3^8 (5/9)^16
        let want = 6561.0 * (5.0f64 / 9.0).powi(16);
        assert!((e - want).abs() < 1e-12);
        assert!((0.40..=0.60).contains(&e), "{e}");
    }
}
