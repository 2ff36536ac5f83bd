//! Item characteristic curves for the three latent-scale families.
//!
//! Every family shares the same logistic core,
//!
//! ```text
//! P(u = 1 | θ) = c + (1 − c) · σ(D · a · (g(θ) − g(b)))
//! ```
//!
//! and differs only in the transform `g` that carries the ability domain onto
//! the real line: the identity on the real line, the natural log on `(0, ∞)`,
//! and `link(θ / R)` on a bounded interval `(0, R)`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;

use crate::error::{IrtError, Result};

/// Inputs closer than this to a domain boundary are rejected.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Conventional logistic scaling constant.
pub const DEFAULT_SCALING: f64 = 1.7;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Overflow-safe logistic function.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

pub(crate) fn std_normal_cdf(y: f64) -> f64 {
    0.5 * erfc(-y * FRAC_1_SQRT_2)
}

pub(crate) fn std_normal_ln_pdf(y: f64) -> f64 {
    -0.5 * y * y - LN_SQRT_2PI
}

pub(crate) fn std_normal_quantile(x: f64) -> f64 {
    let mut y = -SQRT_2 * erfc_inv(2.0 * x);
    // one Newton polish on the cdf; erfc_inv alone is good to ~1e-14
    let pdf = std_normal_ln_pdf(y).exp();
    if pdf > 0.0 {
        y -= (std_normal_cdf(y) - x) / pdf;
    }
    y
}

/// Transformations of a fraction in `(0, 1)` onto the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    #[default]
    Logit,
    Probit,
    Cloglog,
    Loglog,
}

impl Link {
    pub const ALL: [Link; 4] = [Link::Logit, Link::Probit, Link::Cloglog, Link::Loglog];

    /// Maps `x ∈ (0, 1)` onto the real line.
    pub fn apply(self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(IrtError::Domain {
                what: "link argument",
                value: x,
                domain: "(0, 1)".into(),
            });
        }
        Ok(self.apply_unchecked(x))
    }

    #[inline]
    pub(crate) fn apply_unchecked(self, x: f64) -> f64 {
        match self {
            Link::Logit => logit(x),
            Link::Probit => std_normal_quantile(x),
            Link::Cloglog => (-(-x).ln_1p()).ln(),
            Link::Loglog => -(-x.ln()).ln(),
        }
    }

    /// Inverse of [`Link::apply`]; total on finite inputs.
    #[inline]
    pub fn invert(self, y: f64) -> f64 {
        match self {
            Link::Logit => logistic(y),
            Link::Probit => std_normal_cdf(y),
            Link::Cloglog => -(-y.exp()).exp_m1(),
            Link::Loglog => (-(-y).exp()).exp(),
        }
    }

    /// Derivative of [`Link::apply`] at `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Link::Logit => 1.0 / (x * (1.0 - x)),
            Link::Probit => 1.0 / std_normal_ln_pdf(self.apply_unchecked(x)).exp(),
            Link::Cloglog => 1.0 / ((1.0 - x) * -(-x).ln_1p()),
            Link::Loglog => 1.0 / (x * -x.ln()),
        }
    }

    /// Log density of the distribution whose cdf is [`Link::invert`].
    pub(crate) fn ln_inverse_density(self, y: f64) -> f64 {
        match self {
            Link::Logit => -softplus(y) - softplus(-y),
            Link::Probit => std_normal_ln_pdf(y),
            Link::Cloglog => y - y.exp(),
            Link::Loglog => -y - (-y).exp(),
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Link::Logit => "logit",
            Link::Probit => "probit",
            Link::Cloglog => "cloglog",
            Link::Loglog => "loglog",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Link {
    type Err = IrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(Link::Logit),
            "probit" => Ok(Link::Probit),
            "cloglog" => Ok(Link::Cloglog),
            "loglog" => Ok(Link::Loglog),
            other => Err(IrtError::config(format!("unknown link `{other}`"))),
        }
    }
}

/// The latent continuum in force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbilitySpace {
    /// Classical `(−∞, ∞)` scale.
    RealLine,
    /// `(0, ∞)` with a log transform.
    PositiveHalfLine,
    /// `(0, R)` with `link(θ / R)`.
    BoundedInterval { upper: f64, link: Link },
}

impl AbilitySpace {
    pub fn bounded(upper: f64, link: Link) -> Result<Self> {
        if !(upper.is_finite() && upper > 0.0) {
            return Err(IrtError::config(format!(
                "bounded ability space needs a finite R > 0, got {upper}"
            )));
        }
        Ok(AbilitySpace::BoundedInterval { upper, link })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let AbilitySpace::BoundedInterval { upper, link } = *self {
            AbilitySpace::bounded(upper, link)?;
        }
        Ok(())
    }

    /// True iff `x` lies strictly inside the domain, away from the boundary.
    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            AbilitySpace::RealLine => true,
            AbilitySpace::PositiveHalfLine => x > BOUNDARY_TOL,
            AbilitySpace::BoundedInterval { upper, .. } => {
                x > BOUNDARY_TOL && x < upper - BOUNDARY_TOL
            }
        }
    }

    pub(crate) fn check(&self, what: &'static str, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(IrtError::Domain {
                what,
                value: x,
                domain: self.to_string(),
            })
        }
    }

    /// `g(x)`: carries the domain onto the real line. Unchecked.
    #[inline]
    pub fn transform(&self, x: f64) -> f64 {
        match *self {
            AbilitySpace::RealLine => x,
            AbilitySpace::PositiveHalfLine => x.ln(),
            AbilitySpace::BoundedInterval { upper, link } => link.apply_unchecked(x / upper),
        }
    }

    /// `g⁻¹(y)`.
    #[inline]
    pub fn untransform(&self, y: f64) -> f64 {
        match *self {
            AbilitySpace::RealLine => y,
            AbilitySpace::PositiveHalfLine => y.exp(),
            AbilitySpace::BoundedInterval { upper, link } => upper * link.invert(y),
        }
    }

    /// `g′(x)`, computed analytically.
    pub fn transform_derivative(&self, x: f64) -> f64 {
        match *self {
            AbilitySpace::RealLine => 1.0,
            AbilitySpace::PositiveHalfLine => 1.0 / x,
            AbilitySpace::BoundedInterval { upper, link } => link.derivative(x / upper) / upper,
        }
    }

    /// `ln |d g⁻¹(y) / dy|`, the Jacobian term for densities moved onto the
    /// transformed scale.
    pub(crate) fn ln_untransform_jacobian(&self, y: f64) -> f64 {
        match *self {
            AbilitySpace::RealLine => 0.0,
            AbilitySpace::PositiveHalfLine => y,
            AbilitySpace::BoundedInterval { upper, link } => upper.ln() + link.ln_inverse_density(y),
        }
    }

    pub fn transform_kind(&self) -> AbilityTransform {
        match *self {
            AbilitySpace::RealLine => AbilityTransform::Identity,
            AbilitySpace::PositiveHalfLine => AbilityTransform::Log,
            AbilitySpace::BoundedInterval { link, .. } => AbilityTransform::Link(link),
        }
    }
}

impl fmt::Display for AbilitySpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbilitySpace::RealLine => f.write_str("(-inf, inf)"),
            AbilitySpace::PositiveHalfLine => f.write_str("(0, inf)"),
            AbilitySpace::BoundedInterval { upper, link } => write!(f, "(0, {upper}) via {link}"),
        }
    }
}

/// Which transform `h` maps abilities onto the regression scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbilityTransform {
    Identity,
    Log,
    Link(Link),
}

/// Item parameters `(a, b, c)` and the scaling constant `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemParameters {
    /// Discrimination, `a > 0`.
    pub a: f64,
    /// Difficulty, in ability units.
    pub b: f64,
    /// Lower asymptote (random-correct probability), `0 ≤ c < 1`.
    pub c: f64,
    /// Scaling constant.
    #[serde(default = "default_scaling")]
    pub d: f64,
}

fn default_scaling() -> f64 {
    DEFAULT_SCALING
}

impl ItemParameters {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        ItemParameters {
            a,
            b,
            c,
            d: DEFAULT_SCALING,
        }
    }

    pub fn with_scaling(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    pub fn validate(&self, space: &AbilitySpace) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(IrtError::invalid(format!("discrimination a = {} must be > 0", self.a)));
        }
        if !(self.c >= 0.0 && self.c < 1.0) {
            return Err(IrtError::invalid(format!("guessing c = {} must be in [0, 1)", self.c)));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(IrtError::invalid(format!("scaling D = {} must be > 0", self.d)));
        }
        space.check("difficulty b", self.b)
    }

    /// `D · a`, the slope of the logit on the transformed scale.
    #[inline]
    pub fn logit_slope(&self) -> f64 {
        self.d * self.a
    }
}

/// Probability of a positive response given the linear predictor `x` on the
/// logit scale and lower asymptote `c`.
#[inline]
pub(crate) fn response_probability(x: f64, c: f64) -> f64 {
    c + (1.0 - c) * logistic(x)
}

/// `P(u = 1 | θ)` for one item.
pub fn icc(theta: f64, item: &ItemParameters, space: &AbilitySpace) -> Result<f64> {
    item.validate(space)?;
    space.check("ability θ", theta)?;
    let x = item.logit_slope() * (space.transform(theta) - space.transform(item.b));
    Ok(response_probability(x, item.c))
}

/// Slope of the ICC at `θ = b`: `(1/4)(1 − c) D a g′(b)`.
///
/// For bounded spaces with the logit link this is the familiar
/// `(1/4)(1 − c) D a R / ((R − b) b)`. The other links use the same form with
/// their own analytic derivative; that extension is ours, not part of the
/// original family definitions.
pub fn icc_slope_at_b(item: &ItemParameters, space: &AbilitySpace) -> Result<f64> {
    item.validate(space)?;
    Ok(0.25 * (1.0 - item.c) * item.logit_slope() * space.transform_derivative(item.b))
}

/// The unique ability at which the ICC equals `p`, for `c < p < 1`.
pub fn icc_invert(item: &ItemParameters, space: &AbilitySpace, p: f64) -> Result<f64> {
    item.validate(space)?;
    if !(p > item.c && p < 1.0) {
        return Err(IrtError::NoSolution { p, c: item.c });
    }
    let y = space.transform(item.b) + logit((p - item.c) / (1.0 - item.c)) / item.logit_slope();
    let theta = space.untransform(y);
    space.check("inverted ability", theta)?;
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOUNDED_LOGIT: AbilitySpace = AbilitySpace::BoundedInterval {
        upper: 5.0,
        link: Link::Logit,
    };

    #[test]
    fn midpoint_on_real_line() {
        let item = ItemParameters::new(1.5, 1.0, 0.25);
        let p = icc(1.0, &item, &AbilitySpace::RealLine).unwrap();
        assert!((p - 0.625).abs() < 1e-15);
    }

    #[test]
    fn direct_evaluation_matches_hand_value() {
        let item = ItemParameters::new(1.5, 1.0, 0.25);
        let p = icc(2.0, &item, &AbilitySpace::RealLine).unwrap();
        // 0.25 + 0.75 / (1 + e^-2.55), evaluated independently in extended precision
        let expected = 0.25 + 0.75 / (1.0 + (-2.55f64).exp());
        assert!((p - expected).abs() < 1e-15, "{p} vs {expected}");
        assert!((p - 0.945_680_135_978_861_7).abs() < 1e-12);
    }

    #[test]
    fn half_line_lower_limit_is_guessing() {
        let item = ItemParameters::new(3.0, 1.0, 0.25);
        let p = icc(1e-11, &item, &AbilitySpace::PositiveHalfLine).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn slopes_match_closed_forms() {
        let item = ItemParameters::new(1.5, 1.0, 0.25);
        let s = icc_slope_at_b(&item, &AbilitySpace::RealLine).unwrap();
        assert!((s - 0.478125).abs() < 1e-15);

        let item = ItemParameters::new(3.0, 1.0, 0.25);
        let s = icc_slope_at_b(&item, &AbilitySpace::PositiveHalfLine).unwrap();
        assert!((s - 0.25 * 0.75 * 1.7 * 3.0).abs() < 1e-15);

        let item = ItemParameters::new(1.5, 2.0, 0.25);
        let s = icc_slope_at_b(&item, &BOUNDED_LOGIT).unwrap();
        let expected = 0.25 * 0.75 * 1.7 * 1.5 * 5.0 / ((5.0 - 2.0) * 2.0);
        assert!((s - expected).abs() < 1e-14);
    }

    #[test]
    fn slope_vanishes_as_guessing_approaches_one() {
        let item = ItemParameters::new(2.0, 0.5, 1.0 - 1e-12);
        let s = icc_slope_at_b(&item, &AbilitySpace::RealLine).unwrap();
        assert!(s < 1e-11);
    }

    #[test]
    fn inversion_closed_form() {
        let item = ItemParameters::new(1.0, 0.0, 0.0);
        let theta = icc_invert(&item, &AbilitySpace::RealLine, 0.65).unwrap();
        assert!((theta - (13.0f64 / 7.0).ln() / 1.7).abs() < 1e-14);
        assert!((theta - 0.364_140_710_827_190_25).abs() < 1e-14);

        // bisection oracle on the curve itself
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if icc(mid, &item, &AbilitySpace::RealLine).unwrap() < 0.65 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((theta - 0.5 * (lo + hi)).abs() < 1e-12);
    }

    #[test]
    fn inversion_at_midpoint_returns_difficulty() {
        for space in [AbilitySpace::RealLine, AbilitySpace::PositiveHalfLine, BOUNDED_LOGIT] {
            let item = ItemParameters::new(1.3, 1.7, 0.2);
            let theta = icc_invert(&item, &space, 0.6).unwrap();
            assert!((theta - 1.7).abs() < 1e-12, "{space}: {theta}");
        }
    }

    #[test]
    fn inversion_rejects_unreachable_probabilities() {
        let item = ItemParameters::new(1.0, 0.0, 0.2);
        assert!(matches!(
            icc_invert(&item, &AbilitySpace::RealLine, 0.2),
            Err(IrtError::NoSolution { .. })
        ));
        assert!(icc_invert(&item, &AbilitySpace::RealLine, 1.0).is_err());
        assert!(icc_invert(&item, &AbilitySpace::RealLine, 0.1).is_err());
    }

    #[test]
    fn link_fixed_points() {
        assert_eq!(Link::Logit.apply(0.5).unwrap(), 0.0);
        assert!(Link::Probit.apply(0.5).unwrap().abs() < 1e-15);
        let x = 1.0 - (-1.0f64).exp();
        assert!(Link::Cloglog.apply(x).unwrap().abs() < 1e-15);
        assert!(Link::Logit.apply(0.0).is_err());
        assert!(Link::Probit.apply(1.0).is_err());
        assert!(Link::Loglog.apply(f64::NAN).is_err());
    }

    #[test]
    fn links_round_trip_across_the_unit_interval() {
        for link in Link::ALL {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=2000 {
                let t = k as f64 / 2000.0;
                let x = 1e-8 + t * (1.0 - 2e-8);
                let y = link.apply(x).unwrap();
                assert!(y > prev, "{link} not increasing at {x}");
                prev = y;
                assert!((link.invert(y) - x).abs() < 1e-12, "{link} at {x}");
            }
        }
    }

    #[test]
    fn link_derivatives_match_finite_differences() {
        for link in Link::ALL {
            for &x in &[0.05, 0.3, 0.5, 0.77, 0.95] {
                let h = 1e-6;
                let fd = (link.apply_unchecked(x + h) - link.apply_unchecked(x - h)) / (2.0 * h);
                let d = link.derivative(x);
                assert!(((fd - d) / d).abs() < 1e-7, "{link} at {x}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn inverse_density_integrates_to_one() {
        for link in Link::ALL {
            let (lo, hi, n) = (-40.0, 40.0, 80_000);
            let h = (hi - lo) / n as f64;
            let total: f64 = (0..=n)
                .map(|k| {
                    let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                    w * link.ln_inverse_density(lo + k as f64 * h).exp()
                })
                .sum::<f64>()
                * h;
            assert!((total - 1.0).abs() < 1e-8, "{link}: {total}");
        }
    }

    #[test]
    fn logistic_never_produces_nan() {
        for &x in &[-1e4, -745.0, -30.0, 0.0, 30.0, 745.0, 1e4] {
            let p = logistic(x);
            assert!(p.is_finite() && (0.0..=1.0).contains(&p));
            assert!(softplus(x).is_finite());
        }
    }

    #[test]
    fn domain_violations_are_reported() {
        let item = ItemParameters::new(1.0, 1.0, 0.0);
        let err = icc(-1.0, &item, &AbilitySpace::PositiveHalfLine).unwrap_err();
        assert!(err.to_string().contains("-1"));
        let err = icc(5.0, &item, &BOUNDED_LOGIT).unwrap_err();
        assert!(matches!(err, IrtError::Domain { value, .. } if value == 5.0));
        let bad_b = ItemParameters::new(1.0, 0.0, 0.0);
        assert!(icc(1.0, &bad_b, &AbilitySpace::PositiveHalfLine).is_err());
        assert!(icc(0.5e-12, &item, &AbilitySpace::PositiveHalfLine).is_err());
        assert!(ItemParameters::new(0.0, 0.0, 0.0).validate(&AbilitySpace::RealLine).is_err());
        assert!(ItemParameters::new(1.0, 0.0, 1.0).validate(&AbilitySpace::RealLine).is_err());
        assert!(AbilitySpace::bounded(-1.0, Link::Logit).is_err());
    }
}
