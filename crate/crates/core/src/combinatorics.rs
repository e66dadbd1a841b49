//! Exact band-count combinatorics.
//!
//! `a_{k,m}` / `b_{k,m}` count the type-A / type-B bands of `σ_k` that meet
//! exactly `m` earlier-level spectra. They obey
//!
//! ```text
//! a_{k,m} = b_{k-1,m-1},   b_{k,m} = a_{k-2,m-1} + 2 b_{k-2,m-1},
//! ```
//!
//! with `a_{0,0} = 1`, `b_{1,0} = 1`, are supported on
//! `⌈k/2⌉ ≤ m ≤ ⌊2k/3⌋`, and coincide with Chebyshev expansion
//! coefficients: `a_{k,m} = c_{2m-k,m}` where
//! `T_m(x) = Σ_r (-1)^r c_{r,m} x^{m-2r}`.
//!
//! The growth of `a_{k,m}` along rays `m ≈ xk` is governed by the entropy
//! function `f(x)` on `[1/2, 2/3]`, maximized at `x* = (12-2√2)/17` with
//! `f(x*) = log(1+√2)`.

use crate::{Error, Result};
use rug::{Complete, Float, Integer};
use serde::Serialize;
use std::io::Write;

/// `F_k` with the convention `F_0 = F_1 = 1`.
pub fn fibonacci(k: u32) -> Integer {
    let mut a = Integer::from(1);
    let mut b = Integer::from(1);
    for _ in 0..k {
        let next = (&a + &b).complete();
        a = std::mem::replace(&mut b, next);
    }
    a
}

/// Inclusive support `[⌈k/2⌉, ⌊2k/3⌋]` of `a_{k,·}`; empty when lo > hi.
pub fn a_support(k: u32) -> (u32, u32) {
    (k.div_ceil(2), 2 * k / 3)
}

/// Exact table of `a_{k,m}` and `b_{k,m}` for `k ≤ k_max`.
#[derive(Debug, Clone)]
pub struct CountTable {
    pub k_max: u32,
    a: Vec<Vec<Integer>>,
    b: Vec<Vec<Integer>>,
}

impl CountTable {
    pub fn new(k_max: u32) -> Self {
        let rows = k_max as usize + 1;
        let row_len = |k: usize| 2 * k / 3 + 2;
        let mut a: Vec<Vec<Integer>> = (0..rows)
            .map(|k| vec![Integer::new(); row_len(k)])
            .collect();
        let mut b = a.clone();
        a[0][0] = Integer::from(1);
        if k_max >= 1 {
            b[1][0] = Integer::from(1);
        }
        for k in 2..rows {
            for m in 1..a[k].len() {
                if m - 1 < b[k - 1].len() {
                    a[k][m] = b[k - 1][m - 1].clone();
                }
                let mut v = Integer::new();
                if m - 1 < a[k - 2].len() {
                    v += &a[k - 2][m - 1];
                }
                if m - 1 < b[k - 2].len() {
                    v += Integer::from(&b[k - 2][m - 1]) * 2u32;
                }
                b[k][m] = v;
            }
        }
        CountTable { k_max, a, b }
    }

    pub fn a(&self, k: u32, m: u32) -> Integer {
        self.a
            .get(k as usize)
            .and_then(|row| row.get(m as usize))
            .cloned()
            .unwrap_or_default()
    }

    pub fn b(&self, k: u32, m: u32) -> Integer {
        self.b
            .get(k as usize)
            .and_then(|row| row.get(m as usize))
            .cloned()
            .unwrap_or_default()
    }

    /// Largest `m` with a stored (possibly zero) entry at level `k`.
    pub fn m_max(&self, k: u32) -> u32 {
        (self.a[k as usize].len() - 1) as u32
    }

    /// `Σ_m a_{k,m}` (equals `F_{k-2}` for `k ≥ 2`).
    pub fn a_sum(&self, k: u32) -> Integer {
        self.a[k as usize].iter().sum()
    }

    /// `Σ_m b_{k,m}` (equals `F_{k-1}` for `k ≥ 2`).
    pub fn b_sum(&self, k: u32) -> Integer {
        self.b[k as usize].iter().sum()
    }

    /// Histogram `m ↦ a_{k,m} + b_{k,m}` over the stored range.
    pub fn ancestry_histogram(&self, k: u32) -> Vec<(u32, Integer)> {
        (0..=self.m_max(k))
            .map(|m| (m, self.a(k, m) + self.b(k, m)))
            .filter(|(_, v)| *v != 0)
            .collect()
    }

    /// CSV rows `k,m,a,b` for every stored nonzero entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,m,a_km,b_km")?;
        for k in 0..=self.k_max {
            for m in 0..=self.m_max(k) {
                let (a, b) = (self.a(k, m), self.b(k, m));
                if a != 0 || b != 0 {
                    writeln!(w, "{k},{m},{a},{b}")?;
                }
            }
        }
        Ok(())
    }

    /// JSON export with entries as decimal strings (entries can exceed any
    /// machine integer).
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Entry {
            k: u32,
            m: u32,
            a: String,
            b: String,
        }
        let mut entries = Vec::new();
        for k in 0..=self.k_max {
            for m in 0..=self.m_max(k) {
                let (a, b) = (self.a(k, m), self.b(k, m));
                if a != 0 || b != 0 {
                    entries.push(Entry {
                        k,
                        m,
                        a: a.to_string(),
                        b: b.to_string(),
                    });
                }
            }
        }
        serde_json::to_writer_pretty(&mut w, &entries)?;
        writeln!(w)?;
        Ok(())
    }
}

/// Coefficients `c_{r,m}` of the Chebyshev polynomials of the first kind,
/// `T_m(x) = Σ_r (-1)^r c_{r,m} x^{m-2r}`, built from the recursion
/// `c_{r,m+1} = 2 c_{r,m} + c_{r-1,m-1}`.
#[derive(Debug, Clone)]
pub struct ChebyshevCoeffs {
    rows: Vec<Vec<Integer>>,
}

impl ChebyshevCoeffs {
    pub fn up_to(m_max: u32) -> Self {
        let mut rows: Vec<Vec<Integer>> = Vec::with_capacity(m_max as usize + 1);
        rows.push(vec![Integer::from(1)]);
        if m_max >= 1 {
            rows.push(vec![Integer::from(1)]);
        }
        for m in 1..m_max as usize {
            // build row m+1
            let len = (m + 1) / 2 + 1;
            let mut row = vec![Integer::new(); len];
            for (r, item) in row.iter_mut().enumerate() {
                let mut v = Integer::new();
                if r < rows[m].len() {
                    v += Integer::from(&rows[m][r]) * 2u32;
                }
                if r >= 1 && r - 1 < rows[m - 1].len() {
                    v += &rows[m - 1][r - 1];
                }
                *item = v;
            }
            rows.push(row);
        }
        ChebyshevCoeffs { rows }
    }

    pub fn coeff(&self, r: u32, m: u32) -> Integer {
        self.rows
            .get(m as usize)
            .and_then(|row| row.get(r as usize))
            .cloned()
            .unwrap_or_default()
    }
}

/// `c_{r,m}` by the recursion table. Errors outside `0 ≤ r ≤ ⌊m/2⌋`
/// (except the seed `c_{0,0} = 1`).
pub fn chebyshev_coeff(r: u32, m: u32) -> Result<Integer> {
    if m == 0 {
        if r == 0 {
            return Ok(Integer::from(1));
        }
        return Err(Error::Domain(format!("c_{{{r},0}} undefined")));
    }
    if r > m / 2 {
        return Err(Error::Domain(format!(
            "c_{{{r},{m}}} outside 0 <= r <= floor(m/2)"
        )));
    }
    Ok(ChebyshevCoeffs::up_to(m).coeff(r, m))
}

/// `c_{r,m} = 2^{m-2r-1} (m/(m-r)) C(m-r, r)` evaluated in exact integers.
///
/// When `m - 2r - 1 < 0` (only `m = 2r`), the division by 2 is exact after
/// multiplying through.
pub fn chebyshev_coeff_formula(r: u32, m: u32) -> Result<Integer> {
    if m == 0 {
        if r == 0 {
            return Ok(Integer::from(1));
        }
        return Err(Error::Domain(format!("c_{{{r},0}} undefined")));
    }
    if r > m / 2 {
        return Err(Error::Domain(format!(
            "c_{{{r},{m}}} outside 0 <= r <= floor(m/2)"
        )));
    }
    let binom = Integer::from(m - r).binomial(r);
    let num = Integer::from(m) * binom;
    let e = m as i64 - 2 * r as i64 - 1;
    let mut denom = Integer::from(m - r);
    let num = if e >= 0 {
        num << (e as u32)
    } else {
        denom *= 2u32;
        num
    };
    let (q, rem) = num.div_rem(denom);
    debug_assert!(rem == 0, "Chebyshev closed form must be integral");
    Ok(q)
}

/// Closed form `a_{k,m} = 2^{2k-3m-1} (m/(k-m)) C(k-m, 2m-k)` in exact
/// integers; zero outside the support.
///
/// For `2k - 3m - 1 < 0` (the `m = 2k/3` boundary) the value is routed
/// through the Chebyshev identity `a_{k,m} = c_{2m-k,m}` so that no
/// rational intermediates appear.
pub fn akm_closed_form(k: u32, m: u32) -> Integer {
    if k == 0 {
        return if m == 0 { Integer::from(1) } else { Integer::new() };
    }
    let (lo, hi) = a_support(k);
    if k == 1 || m < lo || m > hi {
        return Integer::new();
    }
    let e = 2 * k as i64 - 3 * m as i64 - 1;
    if e < 0 {
        return chebyshev_coeff(2 * m - k, m).expect("in-support index");
    }
    let binom = Integer::from(k - m).binomial(2 * m - k);
    let num = (Integer::from(m) * binom) << (e as u32);
    let (q, rem) = num.div_rem(Integer::from(k - m));
    debug_assert!(rem == 0, "a_{{k,m}} closed form must be integral");
    q
}

/// The entropy function
/// `f(x) = [ (2-3x)log2 + (1-x)log(1-x) - (2x-1)log(2x-1) - (2-3x)log(2-3x) ] / x`
/// on `[1/2, 2/3]`, with the continuous extension at both endpoints.
pub fn f_entropy(x: f64) -> Result<f64> {
    const TWO_THIRDS: f64 = 2.0 / 3.0;
    if !(0.5..=TWO_THIRDS + 1e-15).contains(&x) {
        return Err(Error::Domain(format!("f_entropy domain is [1/2, 2/3], got {x}")));
    }
    // t·log t extended by 0 at t = 0.
    fn xlogx(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            t * t.ln()
        }
    }
    let t1 = 2.0 - 3.0 * x;
    let t2 = 1.0 - x;
    let t3 = 2.0 * x - 1.0;
    Ok((t1 * std::f64::consts::LN_2 + xlogx(t2) - xlogx(t3) - xlogx(t1)) / x)
}

/// The closed-form constants of the entropy profile at a chosen precision.
#[derive(Debug, Clone)]
pub struct EntropyProfile {
    /// `x* = (12 - 2√2)/17`, the maximizer of `f`.
    pub x_star: Float,
    /// `f* = f(x*) = log(1 + √2)`.
    pub f_star: Float,
    /// `f# = f*/log φ`.
    pub f_sharp: Float,
    /// The golden mean `φ = (1 + √5)/2`.
    pub phi: Float,
}

impl EntropyProfile {
    pub fn new(prec: u32) -> Self {
        let sqrt2 = Float::with_val(prec, 2).sqrt();
        let sqrt5 = Float::with_val(prec, 5).sqrt();
        let x_star = (Float::with_val(prec, 12) - Float::with_val(prec, 2) * &sqrt2)
            / Float::with_val(prec, 17);
        let f_star = (Float::with_val(prec, 1) + &sqrt2).ln();
        let phi = (Float::with_val(prec, 1) + &sqrt5) / 2u32;
        let f_sharp = Float::with_val(prec, &f_star) / phi.clone().ln();
        EntropyProfile {
            x_star,
            f_star,
            f_sharp,
            phi,
        }
    }
}

impl Default for EntropyProfile {
    fn default() -> Self {
        EntropyProfile::new(128)
    }
}

/// Stirling-envelope diagnostics for one row of the count table.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub k: u32,
    /// `max_m (1/m) log a_{k,m}`.
    pub max_inv_m_log_a: f64,
    /// The maximizing `m`.
    pub argmax_m: u32,
    /// Per-`m` ratios `a_{k,m} / exp(m f(m/k))` over the support.
    pub ratios: Vec<(u32, f64)>,
    /// min over the support of `ratio · k^{1/2}` (lower-envelope slack).
    pub min_ratio_sqrt_k: f64,
    /// max over the support of `ratio · k^{-1/2}` (upper-envelope slack).
    pub max_ratio_inv_sqrt_k: f64,
}

impl EnvelopeReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,m,ratio")?;
        for (m, r) in &self.ratios {
            writeln!(w, "{},{},{:.17e}", self.k, m, r)?;
        }
        Ok(())
    }
}

/// Compare `a_{k,m}` against the envelope `exp(m f(m/k))` over the support.
pub fn envelope_check(table: &CountTable, k: u32) -> Result<EnvelopeReport> {
    if k < 4 {
        return Err(Error::Domain("envelope_check requires k >= 4".into()));
    }
    if k > table.k_max {
        return Err(Error::Domain(format!(
            "envelope_check: k = {k} exceeds table k_max = {}",
            table.k_max
        )));
    }
    let (lo, hi) = a_support(k);
    let sqrt_k = (k as f64).sqrt();
    let mut ratios = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut argmax_m = lo;
    let mut min_lo = f64::INFINITY;
    let mut max_hi = f64::NEG_INFINITY;
    for m in lo..=hi {
        let a = table.a(k, m);
        if a == 0 {
            continue;
        }
        // ln a_{k,m} at 128 bits; values overflow f64 for large k.
        let log_a = Float::with_val(128, &a).ln().to_f64();
        let inv_m_log_a = log_a / m as f64;
        if inv_m_log_a > best {
            best = inv_m_log_a;
            argmax_m = m;
        }
        let envelope = m as f64 * f_entropy(m as f64 / k as f64)?;
        let ratio = (log_a - envelope).exp();
        min_lo = min_lo.min(ratio * sqrt_k);
        max_hi = max_hi.max(ratio / sqrt_k);
        ratios.push((m, ratio));
    }
    if ratios.is_empty() {
        return Err(Error::Domain(format!("empty support at k = {k}")));
    }
    Ok(EnvelopeReport {
        k,
        max_inv_m_log_a: best,
        argmax_m,
        ratios,
        min_ratio_sqrt_k: min_lo,
        max_ratio_inv_sqrt_k: max_hi,
    })
}
