//! Scalar functions that get lifted to matrices: a handful of closed forms
//! and sums of angle functions `x ↦ a·x + Σ bᵢ·(x − x0ᵢ)⁺`.
//!
//! The textual form doubles as the CLI syntax and the JSON encoding:
//! `angle:a=1,b=1,x0=1` (repeat `b=..,x0=..` per kink), `identity`, `sqrt`,
//! `square`, `min1`, `frac`, `ga:a=0.5`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedFn {
    Identity,
    Sqrt,
    Square,
    /// `min(x, 1)`
    Min1,
    /// `x / (x + 1)`
    Frac,
    /// `a·x + x²/(x + 1)`, `a ≥ 0`
    Ga { a: f64 },
}

/// One angle-function term `b·(x − x0)⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub x0: f64,
    pub b: f64,
}

/// `x ↦ slope·x + Σ bᵢ·(x − x0ᵢ)⁺` with kinks sorted by distinct `x0 ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSum {
    slope: f64,
    kinks: Vec<Kink>,
}

impl AngleSum {
    /// Kinks are sorted; terms sharing an `x0` are merged.
    pub fn new(slope: f64, kinks: impl IntoIterator<Item = Kink>) -> Result<Self> {
        let bad = |reason: String| Error::FnSpec {
            spec: "angle".into(),
            reason,
        };
        if !slope.is_finite() {
            return Err(bad(format!("slope must be finite, got {slope}")));
        }
        let mut ks: Vec<Kink> = Vec::new();
        for k in kinks {
            if !(k.x0.is_finite() && k.b.is_finite()) {
                return Err(bad("kink parameters must be finite".into()));
            }
            if k.x0 < 0.0 {
                return Err(bad(format!("kink location x0 must be >= 0, got {}", k.x0)));
            }
            ks.push(k);
        }
        ks.sort_by(|p, q| p.x0.total_cmp(&q.x0));
        let mut merged: Vec<Kink> = Vec::with_capacity(ks.len());
        for k in ks {
            match merged.last_mut() {
                Some(last) if last.x0 == k.x0 => last.b += k.b,
                _ => merged.push(k),
            }
        }
        Ok(Self {
            slope,
            kinks: merged,
        })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn kinks(&self) -> &[Kink] {
        &self.kinks
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.kinks
            .iter()
            .fold(self.slope * x, |acc, k| acc + k.b * (x - k.x0).max(0.0))
    }

    /// Pointwise sum.
    pub fn plus(&self, other: &AngleSum) -> AngleSum {
        AngleSum::new(
            self.slope + other.slope,
            self.kinks.iter().chain(&other.kinks).copied(),
        )
        .expect("sum of valid angle sums is valid")
    }

    /// Slope on each linear piece, left to right (`kinks.len() + 1` entries).
    fn piece_slopes(&self) -> Vec<f64> {
        let mut slopes = vec![self.slope];
        let mut s = self.slope;
        for k in &self.kinks {
            s += k.b;
            slopes.push(s);
        }
        slopes
    }
}

/// A scalar function applied to matrices through the spectral calculus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PiecewiseFn {
    Named(NamedFn),
    AngleSum(AngleSum),
}

/// Shape facts about a function on the domain it is used on: `[0, ∞)` for
/// the closed forms, the whole line for angle sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FnClass {
    pub monotone_increasing: bool,
    pub strictly_increasing: bool,
    pub convex: bool,
    pub concave: bool,
    pub nonnegative_on_r_plus: bool,
    pub zero_at_zero: bool,
}

impl PiecewiseFn {
    pub fn identity() -> Self {
        Self::Named(NamedFn::Identity)
    }
    pub fn sqrt() -> Self {
        Self::Named(NamedFn::Sqrt)
    }
    pub fn square() -> Self {
        Self::Named(NamedFn::Square)
    }
    pub fn min1() -> Self {
        Self::Named(NamedFn::Min1)
    }
    pub fn frac() -> Self {
        Self::Named(NamedFn::Frac)
    }

    pub fn ga(a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::FnSpec {
                spec: format!("ga:a={a}"),
                reason: "a must be finite and >= 0".into(),
            });
        }
        Ok(Self::Named(NamedFn::Ga { a }))
    }

    /// `slope·x + Σ b·(x − x0)⁺` from `(x0, b)` pairs.
    pub fn angle(slope: f64, kinks: &[(f64, f64)]) -> Result<Self> {
        Ok(Self::AngleSum(AngleSum::new(
            slope,
            kinks.iter().map(|&(x0, b)| Kink { x0, b }),
        )?))
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let domain = |func: &str| Error::Domain {
            func: func.into(),
            x,
        };
        if !x.is_finite() {
            return Err(domain(&self.to_string()));
        }
        Ok(match self {
            Self::AngleSum(s) => s.evaluate(x),
            Self::Named(NamedFn::Identity) => x,
            Self::Named(NamedFn::Square) => x * x,
            Self::Named(NamedFn::Min1) => x.min(1.0),
            Self::Named(NamedFn::Sqrt) => {
                if x < 0.0 {
                    return Err(domain("sqrt"));
                }
                x.sqrt()
            }
            Self::Named(NamedFn::Frac) => {
                if x <= -1.0 {
                    return Err(domain("frac"));
                }
                x / (x + 1.0)
            }
            Self::Named(NamedFn::Ga { a }) => {
                if x <= -1.0 {
                    return Err(domain("ga"));
                }
                a * x + x * x / (x + 1.0)
            }
        })
    }

    /// Lower end of the domain when it is a closed bound.
    pub fn closed_domain_floor(&self) -> Option<f64> {
        match self {
            Self::Named(NamedFn::Sqrt) => Some(0.0),
            _ => None,
        }
    }

    pub fn classify(&self) -> FnClass {
        let named = |mono, strict, convex, concave| FnClass {
            monotone_increasing: mono,
            strictly_increasing: strict,
            convex,
            concave,
            nonnegative_on_r_plus: true,
            zero_at_zero: true,
        };
        match self {
            Self::Named(NamedFn::Identity) => named(true, true, true, true),
            Self::Named(NamedFn::Sqrt) => named(true, true, false, true),
            Self::Named(NamedFn::Square) => named(true, true, true, false),
            Self::Named(NamedFn::Min1) => named(true, false, false, true),
            Self::Named(NamedFn::Frac) => named(true, true, false, true),
            Self::Named(NamedFn::Ga { .. }) => named(true, true, true, false),
            Self::AngleSum(s) => {
                let slopes = s.piece_slopes();
                let f0 = s.evaluate(0.0);
                let nonneg = f0 >= 0.0
                    && s.kinks.iter().all(|k| s.evaluate(k.x0) >= 0.0)
                    && *slopes.last().expect("at least one piece") >= 0.0;
                FnClass {
                    monotone_increasing: slopes.iter().all(|&m| m >= 0.0),
                    strictly_increasing: slopes.iter().all(|&m| m > 0.0),
                    convex: s.kinks.iter().all(|k| k.b >= 0.0),
                    concave: s.kinks.iter().all(|k| k.b <= 0.0),
                    nonnegative_on_r_plus: nonneg,
                    zero_at_zero: f0 == 0.0,
                }
            }
        }
    }

    pub fn as_angle_sum(&self) -> Option<&AngleSum> {
        match self {
            Self::AngleSum(s) => Some(s),
            Self::Named(_) => None,
        }
    }

    /// The `a` of `ga:a=..`, if this is that family.
    pub fn ga_parameter(&self) -> Option<f64> {
        match self {
            Self::Named(NamedFn::Ga { a }) => Some(*a),
            _ => None,
        }
    }
}

impl fmt::Display for PiecewiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Named(NamedFn::Identity) => f.write_str("identity"),
            Self::Named(NamedFn::Sqrt) => f.write_str("sqrt"),
            Self::Named(NamedFn::Square) => f.write_str("square"),
            Self::Named(NamedFn::Min1) => f.write_str("min1"),
            Self::Named(NamedFn::Frac) => f.write_str("frac"),
            Self::Named(NamedFn::Ga { a }) => write!(f, "ga:a={a:?}"),
            Self::AngleSum(s) => {
                write!(f, "angle:a={:?}", s.slope)?;
                for k in &s.kinks {
                    write!(f, ",b={:?},x0={:?}", k.b, k.x0)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for PiecewiseFn {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let bad = |reason: &str| Error::FnSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let spec_trim = spec.trim();
        let (head, params) = match spec_trim.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (spec_trim, None),
        };
        let pairs: Vec<(&str, f64)> = match params {
            None => Vec::new(),
            Some(p) => p
                .split(',')
                .map(|kv| {
                    let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                    let v: f64 = v.trim().parse().map_err(|_| bad("unparseable number"))?;
                    Ok((k.trim(), v))
                })
                .collect::<Result<_>>()?,
        };
        let no_params = |f: PiecewiseFn| {
            if params.is_some() {
                Err(bad("this function takes no parameters"))
            } else {
                Ok(f)
            }
        };
        match head {
            "identity" => no_params(Self::identity()),
            "sqrt" => no_params(Self::sqrt()),
            "square" => no_params(Self::square()),
            "min1" => no_params(Self::min1()),
            "frac" => no_params(Self::frac()),
            "ga" => match pairs.as_slice() {
                [("a", a)] => Self::ga(*a).map_err(|_| bad("a must be finite and >= 0")),
                _ => Err(bad("expected ga:a=<value>")),
            },
            "angle" => {
                let mut it = pairs.into_iter();
                let slope = match it.next() {
                    Some(("a", a)) => a,
                    _ => return Err(bad("angle spec must start with a=<slope>")),
                };
                let mut kinks = Vec::new();
                loop {
                    match (it.next(), it.next()) {
                        (None, _) => break,
                        (Some(("b", b)), Some(("x0", x0))) => kinks.push(Kink { x0, b }),
                        _ => return Err(bad("kinks must be given as b=<value>,x0=<value>")),
                    }
                }
                AngleSum::new(slope, kinks)
                    .map(Self::AngleSum)
                    .map_err(|e| match e {
                        Error::FnSpec { reason, .. } => bad(&reason),
                        other => other,
                    })
            }
            _ => Err(bad("unknown function")),
        }
    }
}

impl TryFrom<String> for PiecewiseFn {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PiecewiseFn> for String {
    fn from(f: PiecewiseFn) -> String {
        f.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn angle(a: f64, kinks: &[(f64, f64)]) -> PiecewiseFn {
        PiecewiseFn::angle(a, kinks).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(angle(1.0, &[(1.0, 1.0)]).evaluate(2.0).unwrap(), 3.0);
        assert_eq!(PiecewiseFn::min1().evaluate(0.5).unwrap(), 0.5);
        assert_eq!(PiecewiseFn::min1().evaluate(3.0).unwrap(), 1.0);
        assert_eq!(PiecewiseFn::ga(0.0).unwrap().evaluate(1.0).unwrap(), 0.5);
        assert_eq!(PiecewiseFn::frac().evaluate(1.0).unwrap(), 0.5);
        assert_eq!(PiecewiseFn::square().evaluate(-3.0).unwrap(), 9.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            PiecewiseFn::sqrt().evaluate(-0.1),
            Err(Error::Domain { .. })
        ));
        assert!(PiecewiseFn::frac().evaluate(-1.0).is_err());
        assert!(PiecewiseFn::ga(1.0).unwrap().evaluate(-2.0).is_err());
        assert!(PiecewiseFn::identity().evaluate(f64::NAN).is_err());
        assert!(PiecewiseFn::ga(-1.0).is_err());
    }

    #[test]
    fn classify_examples() {
        let g = angle(1.0, &[(1.0, 1.0)]).classify();
        assert!(g.convex && !g.concave && g.monotone_increasing && g.zero_at_zero);
        let f = angle(1.0, &[(1.0, -1.0)]).classify();
        assert!(f.concave && !f.convex && f.monotone_increasing && !f.strictly_increasing);
        assert!(f.nonnegative_on_r_plus);
        let zero = angle(0.0, &[]).classify();
        assert!(zero.convex && zero.concave && zero.monotone_increasing);
        assert!(!zero.strictly_increasing);
        let dipping = angle(1.0, &[(1.0, -3.0)]).classify();
        assert!(!dipping.monotone_increasing && !dipping.nonnegative_on_r_plus);
        let negative = angle(-1.0, &[(0.5, 3.0)]).classify();
        assert!(!negative.nonnegative_on_r_plus && negative.convex);
    }

    #[test]
    fn min1_matches_its_angle_form() {
        let as_angle = angle(1.0, &[(1.0, -1.0)]);
        for i in 0..=40 {
            let x = i as f64 * 0.1;
            assert_eq!(
                as_angle.evaluate(x).unwrap(),
                PiecewiseFn::min1().evaluate(x).unwrap()
            );
        }
        assert_eq!(as_angle.classify().concave, PiecewiseFn::min1().classify().concave);
    }

    #[test]
    fn kinks_are_sorted_and_merged() {
        let s = AngleSum::new(
            0.5,
            [
                Kink { x0: 2.0, b: 1.0 },
                Kink { x0: 0.5, b: -0.25 },
                Kink { x0: 2.0, b: 0.5 },
            ],
        )
        .unwrap();
        assert_eq!(s.kinks(), &[Kink { x0: 0.5, b: -0.25 }, Kink { x0: 2.0, b: 1.5 }]);
        assert!(AngleSum::new(1.0, [Kink { x0: -1.0, b: 1.0 }]).is_err());
    }

    #[test]
    fn angle_sums_are_continuous_at_kinks() {
        let f = angle(0.3, &[(0.5, 1.2), (1.0, -0.7), (1.7, 2.0)]);
        let s = f.as_angle_sum().unwrap();
        for k in s.kinks() {
            let eps = 1e-9;
            let jump = (s.evaluate(k.x0 + eps) - s.evaluate(k.x0 - eps)).abs();
            assert!(jump < 1e-8);
        }
    }

    #[test]
    fn convexity_classification_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let n = rng.random_range(0..4);
            let kinks: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.random_range(0.0..2.0), rng.random_range(-2.0..2.0)))
                .collect();
            let f = angle(rng.random_range(0.0..2.0), &kinks);
            let class = f.classify();
            let x = rng.random_range(-1.0..3.0);
            let y = x + rng.random_range(0.0..3.0);
            let t: f64 = rng.random_range(0.0..1.0);
            let fx = f.evaluate(x).unwrap();
            let fy = f.evaluate(y).unwrap();
            let mid = f.evaluate(t * x + (1.0 - t) * y).unwrap();
            let chord = t * fx + (1.0 - t) * fy;
            if class.convex {
                assert!(mid <= chord + 1e-12);
            }
            if class.concave {
                assert!(mid >= chord - 1e-12);
            }
            if class.monotone_increasing {
                assert!(fx <= fy + 1e-12);
            }
            checked += 1;
        }
    }

    #[test]
    fn ga_is_linear_minus_frac() {
        for &a in &[0.0, 0.5, 1.0, 10.0] {
            let ga = PiecewiseFn::ga(a).unwrap();
            for i in 0..200 {
                let x = i as f64 * 0.05;
                let lhs = ga.evaluate(x).unwrap();
                let rhs = a * x + x - PiecewiseFn::frac().evaluate(x).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn plus_is_pointwise() {
        let f = angle(1.0, &[(0.5, 1.0)]);
        let g = angle(0.5, &[(0.5, 2.0), (1.5, 1.0)]);
        let sum = f.as_angle_sum().unwrap().plus(g.as_angle_sum().unwrap());
        for i in 0..30 {
            let x = i as f64 * 0.1;
            let want = f.evaluate(x).unwrap() + g.evaluate(x).unwrap();
            assert!((sum.evaluate(x) - want).abs() < 1e-12);
        }
        assert_eq!(sum.kinks().len(), 2);
    }

    #[test]
    fn parse_examples() {
        assert_eq!("min1".parse::<PiecewiseFn>().unwrap(), PiecewiseFn::min1());
        assert_eq!("sqrt".parse::<PiecewiseFn>().unwrap(), PiecewiseFn::sqrt());
        assert_eq!(
            "ga:a=0.5".parse::<PiecewiseFn>().unwrap(),
            PiecewiseFn::ga(0.5).unwrap()
        );
        assert_eq!(
            "angle:a=1,b=1,x0=1".parse::<PiecewiseFn>().unwrap(),
            angle(1.0, &[(1.0, 1.0)])
        );
        assert_eq!(
            "angle:a=0,b=1,x0=1,b=-0.5,x0=2".parse::<PiecewiseFn>().unwrap(),
            angle(0.0, &[(1.0, 1.0), (2.0, -0.5)])
        );
        for bad in [
            "cosh",
            "angle:b=1,x0=1",
            "angle:a=1,b=1",
            "angle:a=1,x0=1,b=1",
            "angle:a=1,b=1,x0=-1",
            "ga",
            "ga:a=-1",
            "sqrt:a=1",
            "angle:a=one",
        ] {
            assert!(bad.parse::<PiecewiseFn>().is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn display_round_trips() {
        for f in [
            angle(0.1, &[(0.3, -0.7), (1.0 / 3.0, 2.0)]),
            PiecewiseFn::ga(0.1 + 0.2).unwrap(),
            PiecewiseFn::frac(),
        ] {
            assert_eq!(f.to_string().parse::<PiecewiseFn>().unwrap(), f);
        }
    }
}
