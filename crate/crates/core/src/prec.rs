//! Adaptive-precision scaffolding: directed-rounding intervals over MPFR
//! floats and the precision ladder used to certify sign decisions.

use rug::float::Round;
use rug::ops::DivAssignRound;
use rug::Float;

/// Default starting precision of the adaptive ladder.
pub const MIN_PREC: u32 = 64;
/// Hard cap of the adaptive ladder.
pub const MAX_PREC: u32 = 4096;

/// Precisions to try in turn: `start`, `2·start`, ... capped at [`MAX_PREC`].
pub fn precision_ladder(start: u32) -> impl Iterator<Item = u32> {
    let start = start.max(2);
    let mut cur = Some(start.min(MAX_PREC));
    std::iter::from_fn(move || {
        let out = cur?;
        cur = if out >= MAX_PREC {
            None
        } else {
            Some((out * 2).min(MAX_PREC))
        };
        Some(out)
    })
}

/// Certified sign of an interval-evaluated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
    /// The enclosure straddles zero and is not a point; undecidable at this
    /// precision.
    Unknown,
}

/// A closed interval `[lo, hi]` with outward-rounded endpoints.
///
/// All operations round `lo` toward −∞ and `hi` toward +∞, so the result
/// always encloses the exact value.
#[derive(Debug, Clone)]
pub struct Interval {
    pub lo: Float,
    pub hi: Float,
}

impl Interval {
    /// Tight enclosure of `v`; outward-rounded if `prec` is below the
    /// precision of `v`, a point interval otherwise.
    pub fn point(prec: u32, v: &Float) -> Self {
        Interval {
            lo: Float::with_val_round(prec, v, Round::Down).0,
            hi: Float::with_val_round(prec, v, Round::Up).0,
        }
    }

    pub fn from_f64(prec: u32, v: f64) -> Self {
        Interval {
            lo: Float::with_val(prec, v),
            hi: Float::with_val(prec, v),
        }
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec()
    }

    pub fn mid(&self) -> Float {
        let mut m = Float::with_val(self.prec(), &self.lo + &self.hi);
        m.div_assign_round(2u32, Round::Nearest);
        m
    }

    pub fn width(&self) -> Float {
        Float::with_val_round(self.prec(), &self.hi - &self.lo, Round::Up).0
    }

    pub fn add(&self, rhs: &Interval) -> Interval {
        let p = self.prec();
        Interval {
            lo: Float::with_val_round(p, &self.lo + &rhs.lo, Round::Down).0,
            hi: Float::with_val_round(p, &self.hi + &rhs.hi, Round::Up).0,
        }
    }

    pub fn sub(&self, rhs: &Interval) -> Interval {
        let p = self.prec();
        Interval {
            lo: Float::with_val_round(p, &self.lo - &rhs.hi, Round::Down).0,
            hi: Float::with_val_round(p, &self.hi - &rhs.lo, Round::Up).0,
        }
    }

    pub fn neg(&self) -> Interval {
        // MPFR negation is exact.
        Interval {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn mul(&self, rhs: &Interval) -> Interval {
        let p = self.prec();
        let pairs = [
            (&self.lo, &rhs.lo),
            (&self.lo, &rhs.hi),
            (&self.hi, &rhs.lo),
            (&self.hi, &rhs.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let d = Float::with_val_round(p, a * b, Round::Down).0;
            let u = Float::with_val_round(p, a * b, Round::Up).0;
            lo = Some(match lo {
                Some(cur) => cur.min(&d),
                None => d,
            });
            hi = Some(match hi {
                Some(cur) => cur.max(&u),
                None => u,
            });
        }
        Interval {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
        }
    }

    /// Subtract an exact small integer.
    pub fn sub_i32(&self, v: i32) -> Interval {
        let p = self.prec();
        Interval {
            lo: Float::with_val_round(p, &self.lo - v, Round::Down).0,
            hi: Float::with_val_round(p, &self.hi - v, Round::Up).0,
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    /// Certified sign of every point in the enclosure.
    pub fn sign(&self) -> Sign {
        if self.lo > 0 {
            Sign::Positive
        } else if self.hi < 0 {
            Sign::Negative
        } else if self.lo == 0 && self.hi == 0 {
            Sign::Zero
        } else {
            Sign::Unknown
        }
    }

    /// Enclosure of |self|.
    pub fn abs(&self) -> Interval {
        let p = self.prec();
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            let hi = Float::with_val(p, (-self.lo.clone()).max(&self.hi));
            Interval {
                lo: Float::new(p),
                hi,
            }
        }
    }
}

/// Parse a decimal string into a `Float` at the given precision.
pub fn parse_real(prec: u32, s: &str) -> Option<Float> {
    Float::parse(s).ok().map(|p| Float::with_val(prec, p))
}

/// Format a `Float` with enough decimal digits to reconstruct it at the
/// same precision (to within one ulp).
pub fn format_real(x: &Float) -> String {
    let digits = (x.prec() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
    let s = x.to_string_radix(10, Some(digits));
    s
}
