//! Trace recursion for the Fibonacci Hamiltonian and the associated
//! three-dimensional trace map.
//!
//! The traces `x_k = x_k(E, λ)` obey
//!
//! ```text
//! x_{-1} = 2,  x_0 = E,  x_1 = E - λ,  x_{k+1} = x_k x_{k-1} - x_{k-2},
//! ```
//!
//! conserve the Fricke invariant `x_{k+1}² + x_k² + x_{k-1}² -
//! x_{k+1}x_k x_{k-1} = 4 + λ²`, and characterize the spectrum: `E` belongs
//! to it exactly when the sequence stays bounded.

use crate::prec::{precision_ladder, Interval, Sign, MAX_PREC};
use crate::{Error, Result};
use rug::Float;

/// Magnitude beyond which an orbit is declared escaping outright.
pub const DEFAULT_MAGNITUDE_CAP: f64 = 1e300;

/// Default depth cap for the membership test.
pub const DEFAULT_K_CAP: u32 = 60;

/// Rolling window of three consecutive traces.
#[derive(Debug, Clone)]
pub struct TraceState {
    pub x_prev2: Float,
    pub x_prev1: Float,
    pub x_cur: Float,
    /// Level index of `x_cur`.
    pub k: i64,
}

impl TraceState {
    /// Initial window `(x_{-1}, x_0, x_1) = (2, E, E - λ)` with `k = 1`.
    pub fn new(energy: &Float, lambda: &Float, prec: u32) -> Self {
        TraceState {
            x_prev2: Float::with_val(prec, 2),
            x_prev1: Float::with_val(prec, energy),
            x_cur: Float::with_val(prec, energy - lambda),
            k: 1,
        }
    }

    /// Advance one level: `x_{k+1} = x_k x_{k-1} - x_{k-2}`.
    pub fn step(&mut self) {
        let prec = self.x_cur.prec();
        let next = Float::with_val(prec, &self.x_cur * &self.x_prev1) - &self.x_prev2;
        let old_cur = std::mem::replace(&mut self.x_cur, next);
        self.x_prev2 = std::mem::replace(&mut self.x_prev1, old_cur);
        self.k += 1;
    }
}

/// Outcome of the orbit-boundedness membership test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MembershipStatus {
    /// No certified escape up to the depth cap.
    Bounded { k_cap: u32 },
    /// `|x_level| > 2` and `|x_{level+1}| > 2` with certified sign.
    Escaped { level: u32 },
}

#[derive(Debug, Clone)]
pub struct MembershipVerdict {
    pub status: MembershipStatus,
    /// Set for λ ≤ 4, where the two-consecutive-escape criterion is not
    /// backed by the empty-triple-intersection identity.
    pub heuristic: bool,
    /// Working precision at which every sign decision was certified.
    pub precision_used: u32,
}

/// A point on (one of) the invariant cubic surfaces of the trace map.
#[derive(Debug, Clone)]
pub struct SurfacePoint {
    pub x: Float,
    pub y: Float,
    pub z: Float,
}

impl SurfacePoint {
    pub fn new(prec: u32, x: f64, y: f64, z: f64) -> Self {
        SurfacePoint {
            x: Float::with_val(prec, x),
            y: Float::with_val(prec, y),
            z: Float::with_val(prec, z),
        }
    }

    /// The point `(E - λ, E, 2)` on the line whose trace-map orbit encodes
    /// the spectrum at coupling λ.
    pub fn on_spectral_line(energy: &Float, lambda: &Float, prec: u32) -> Self {
        SurfacePoint {
            x: Float::with_val(prec, energy - lambda),
            y: Float::with_val(prec, energy),
            z: Float::with_val(prec, 2),
        }
    }
}

/// `I(x,y,z) = x² + y² + z² - xyz - 4`, conserved by the trace map.
pub fn fricke_invariant(p: &SurfacePoint) -> Float {
    let prec = p.x.prec().max(p.y.prec()).max(p.z.prec());
    let mut inv = Float::with_val(prec, &p.x * &p.x);
    inv += Float::with_val(prec, &p.y * &p.y);
    inv += Float::with_val(prec, &p.z * &p.z);
    let xy = Float::with_val(prec, &p.x * &p.y);
    inv -= xy * &p.z;
    inv -= 4u32;
    inv
}

/// Result of iterating the trace map `T(x,y,z) = (xy - z, x, y)`.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub points: Vec<SurfacePoint>,
    /// Index of the first point whose coordinates exceeded the magnitude
    /// cap; iteration stops there.
    pub escaped_at: Option<usize>,
}

/// Iterate the trace map for `n` steps from `p`, stopping early if a
/// coordinate exceeds `magnitude_cap`.
pub fn trace_map_orbit(p: &SurfacePoint, n: u32, magnitude_cap: f64) -> Orbit {
    let prec = p.x.prec();
    let cap = Float::with_val(prec, magnitude_cap);
    let mut points = Vec::with_capacity(n as usize + 1);
    points.push(p.clone());
    let mut cur = p.clone();
    for i in 0..n {
        let first = Float::with_val(prec, &cur.x * &cur.y) - &cur.z;
        let old_x = std::mem::replace(&mut cur.x, first);
        cur.z = std::mem::replace(&mut cur.y, old_x);
        if cur.x.clone().abs() > cap || cur.y.clone().abs() > cap || cur.z.clone().abs() > cap {
            points.push(cur);
            return Orbit {
                points,
                escaped_at: Some(i as usize + 1),
            };
        }
        points.push(cur.clone());
    }
    Orbit {
        points,
        escaped_at: None,
    }
}

/// Relative invariant residual budget: `2^{-(prec - 20)}`.
fn residual_budget(prec: u32) -> Float {
    Float::with_val(prec, Float::i_exp(1, -(prec as i32 - 20)))
}

/// Traces and their `E`-derivatives, `(x_k, x'_k)` for `k = -1..k_max`.
///
/// The derivative follows the differentiated recursion
/// `x'_{k+1} = x'_k x_{k-1} + x_k x'_{k-1} - x'_{k-2}` with seeds
/// `x'_{-1} = 0, x'_0 = 1, x'_1 = 1`.
///
/// The Fricke invariant is checked at every level; the residual must stay
/// below `2^{-(prec-20)}` relative to the largest term entering it, else a
/// precision-exhaustion error asks the caller to retry with more bits.
pub fn trace_sequence(
    energy: &Float,
    lambda: &Float,
    k_max: u32,
    precision: u32,
) -> Result<Vec<(Float, Float)>> {
    if k_max < 1 {
        return Err(Error::Domain("trace_sequence requires k_max >= 1".into()));
    }
    if precision < 53 {
        return Err(Error::Domain(
            "trace_sequence requires precision >= 53 bits".into(),
        ));
    }
    let p = precision;
    let target = Float::with_val(p, lambda * lambda) + 4u32;
    let budget = residual_budget(p);

    let mut xs: Vec<Float> = Vec::with_capacity(k_max as usize + 2);
    let mut ds: Vec<Float> = Vec::with_capacity(k_max as usize + 2);
    xs.push(Float::with_val(p, 2));
    xs.push(Float::with_val(p, energy));
    xs.push(Float::with_val(p, energy - lambda));
    ds.push(Float::with_val(p, 0));
    ds.push(Float::with_val(p, 1));
    ds.push(Float::with_val(p, 1));

    for k in 1..k_max as usize {
        // indices: xs[k+1] holds x_k; this iteration produces x_{k+1}
        let x_next = Float::with_val(p, &xs[k + 1] * &xs[k]) - &xs[k - 1];
        let d_next = Float::with_val(p, &ds[k + 1] * &xs[k])
            + Float::with_val(p, &xs[k + 1] * &ds[k])
            - &ds[k - 1];
        {
            // Invariant check on the window (x_{k+1}, x_k, x_{k-1}).
            let triple = Float::with_val(p, &x_next * &xs[k + 1]) * &xs[k];
            let mut inv = Float::with_val(p, &x_next * &x_next);
            inv += Float::with_val(p, &xs[k + 1] * &xs[k + 1]);
            inv += Float::with_val(p, &xs[k] * &xs[k]);
            inv -= &triple;
            let scale = Float::with_val(p, triple.abs_ref())
                .max(&target.clone().abs())
                .max(&Float::with_val(p, 1));
            let residual = Float::with_val(p, &inv - &target).abs();
            if residual > scale * budget.clone() {
                return Err(Error::PrecisionExhausted {
                    bits: p,
                    context: format!("trace invariant residual exceeded budget at level {k}"),
                });
            }
        }
        xs.push(x_next);
        ds.push(d_next);
    }
    // Final window check.
    {
        let n = xs.len();
        let triple = Float::with_val(p, &xs[n - 1] * &xs[n - 2]) * &xs[n - 3];
        let mut inv = Float::with_val(p, &xs[n - 1] * &xs[n - 1]);
        inv += Float::with_val(p, &xs[n - 2] * &xs[n - 2]);
        inv += Float::with_val(p, &xs[n - 3] * &xs[n - 3]);
        inv -= &triple;
        let scale = Float::with_val(p, triple.abs_ref())
            .max(&target.clone().abs())
            .max(&Float::with_val(p, 1));
        let residual = Float::with_val(p, &inv - &target).abs();
        if residual > scale * residual_budget(p) {
            return Err(Error::PrecisionExhausted {
                bits: p,
                context: "trace invariant residual exceeded budget at final level".into(),
            });
        }
    }
    Ok(xs.into_iter().zip(ds).collect())
}

/// Interval version of the trace recursion; returns enclosures of
/// `x_{-1}..x_{k_max}`.
pub fn trace_sequence_interval(
    energy: &Interval,
    lambda: &Interval,
    k_max: u32,
) -> Vec<Interval> {
    let p = energy.prec();
    let mut xs = Vec::with_capacity(k_max as usize + 2);
    xs.push(Interval::from_f64(p, 2.0));
    xs.push(energy.clone());
    xs.push(energy.sub(lambda));
    for k in 1..k_max as usize {
        let next = xs[k + 1].mul(&xs[k]).sub(&xs[k - 1]);
        xs.push(next);
    }
    xs
}

/// Orbit-boundedness membership test for the spectrum at coupling λ.
///
/// Escape is declared when two consecutive traces are certified to exceed 2
/// in absolute value; for λ > 4 the invariant guarantees such an orbit
/// diverges. All sign decisions are made by interval evaluation on an
/// adaptive precision ladder.
pub fn spectrum_membership(energy: &Float, lambda: &Float, k_cap: u32) -> Result<MembershipVerdict> {
    if *lambda <= 0 {
        return Err(Error::Domain("spectrum_membership requires λ > 0".into()));
    }
    if k_cap < 2 {
        return Err(Error::Domain("spectrum_membership requires k_cap >= 2".into()));
    }
    let heuristic = *lambda <= 4;

    'ladder: for prec in precision_ladder(64) {
        let e = Interval::point(prec, energy);
        let lam = Interval::point(prec, lambda);
        let cap = Float::with_val(prec, DEFAULT_MAGNITUDE_CAP);

        // xs[k + 1] encloses x_k.
        let mut xs: Vec<Interval> = vec![Interval::from_f64(prec, 2.0), e.clone(), e.sub(&lam)];
        let mut prev_outside = false;
        for k in 0..=k_cap + 1 {
            while xs.len() < k as usize + 2 {
                let n = xs.len();
                let next = xs[n - 1].mul(&xs[n - 2]).sub(&xs[n - 3]);
                xs.push(next);
            }
            let x_k = &xs[k as usize + 1];
            if x_k.abs().lo > cap {
                return Ok(MembershipVerdict {
                    status: MembershipStatus::Escaped { level: k },
                    heuristic,
                    precision_used: prec,
                });
            }
            let outside = match x_k.abs().sub_i32(2).sign() {
                Sign::Positive => true,
                Sign::Negative | Sign::Zero => false,
                Sign::Unknown => {
                    if prec >= MAX_PREC {
                        return Err(Error::PrecisionExhausted {
                            bits: prec,
                            context: format!(
                                "|x_{k}| - 2 not sign-certifiable; energy may be a band edge"
                            ),
                        });
                    }
                    continue 'ladder;
                }
            };
            if outside && prev_outside {
                return Ok(MembershipVerdict {
                    status: MembershipStatus::Escaped { level: k - 1 },
                    heuristic,
                    precision_used: prec,
                });
            }
            prev_outside = outside;
        }
        return Ok(MembershipVerdict {
            status: MembershipStatus::Bounded { k_cap },
            heuristic,
            precision_used: prec,
        });
    }
    unreachable!("precision ladder is nonempty")
}
