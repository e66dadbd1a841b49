//! Hierarchical enumeration of the periodic-approximant band structure.
//!
//! `σ_k = {E : |x_k(E,λ)| ≤ 2}` consists of `F_k` closed bands. For λ > 4
//! the bands nest: a type-A band of `σ_k` lies in a band of `σ_{k-1}` and
//! contains exactly one type-B band of `σ_{k+2}`; a type-B band lies in a
//! band of `σ_{k-2}` and contains one type-A band of `σ_{k+1}` flanked by
//! two type-B bands of `σ_{k+2}`. Enumeration walks this tree level by
//! level, isolating children by sign scans of `x_k ∓ 2` inside each parent
//! and certifying every edge by interval bisection.

use crate::prec::{format_real, precision_ladder, Interval, Sign, MAX_PREC};
use crate::trace::trace_sequence;
use crate::{Error, Result};
use rug::float::Round;
use rug::ops::DivAssignRound;
use rug::Float;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Band type per the nesting lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandType {
    /// Contained in a band of the previous level.
    A,
    /// Contained in a band two levels up, disjoint from the previous level.
    B,
}

/// A certified enclosure of one band edge.
#[derive(Debug, Clone)]
pub struct Edge {
    pub lo: Float,
    pub hi: Float,
}

impl Edge {
    pub fn point(v: Float) -> Self {
        Edge {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn mid(&self) -> Float {
        let mut m = Float::with_val(self.lo.prec(), &self.lo + &self.hi);
        m.div_assign_round(2u32, Round::Nearest);
        m
    }

    pub fn width(&self) -> Float {
        Float::with_val_round(self.lo.prec(), &self.hi - &self.lo, Round::Up).0
    }
}

/// One band of `σ_level`.
#[derive(Debug, Clone)]
pub struct Band {
    pub level: u32,
    pub band_type: BandType,
    /// Number of earlier levels whose spectrum this band meets.
    pub ancestry: u32,
    pub left: Edge,
    pub right: Edge,
    /// Index of the containing band within `levels[level - 1]` (type A) or
    /// `levels[level - 2]` (type B); absent for the two roots.
    pub parent: Option<usize>,
}

impl Band {
    pub fn lo(&self) -> Float {
        self.left.mid()
    }

    pub fn hi(&self) -> Float {
        self.right.mid()
    }

    pub fn width(&self) -> Float {
        Float::with_val(self.left.lo.prec(), self.hi() - self.lo())
    }

    /// Certified lower bound of the width (inner gap of the enclosures).
    pub fn width_min(&self) -> Float {
        Float::with_val_round(self.left.lo.prec(), &self.right.lo - &self.left.hi, Round::Down).0
    }

    /// Certified upper bound of the width.
    pub fn width_max(&self) -> Float {
        Float::with_val_round(self.left.lo.prec(), &self.right.hi - &self.left.lo, Round::Up).0
    }

    /// Level of the parent band.
    pub fn parent_level(&self) -> Option<u32> {
        self.parent?;
        Some(match self.band_type {
            BandType::A => self.level - 1,
            BandType::B => self.level - 2,
        })
    }
}

/// The full band tree through `k_max`.
#[derive(Debug, Clone)]
pub struct BandHierarchy {
    pub lambda: Float,
    pub k_max: u32,
    /// Edge enclosures are certified to width `≤ 2^{-precision}`.
    pub precision: u32,
    pub levels: Vec<Vec<Band>>,
}

/// Plain `x_level(E)` at fixed precision; no certification.
fn trace_value(energy: &Float, lambda: &Float, level: u32, prec: u32) -> Float {
    let mut x_prev2 = Float::with_val(prec, 2);
    let mut x_prev1 = Float::with_val(prec, energy);
    if level == 0 {
        return x_prev1;
    }
    let mut x_cur = Float::with_val(prec, energy - lambda);
    for _ in 1..level {
        let next = Float::with_val(prec, &x_cur * &x_prev1) - &x_prev2;
        let old = std::mem::replace(&mut x_cur, next);
        x_prev2 = std::mem::replace(&mut x_prev1, old);
    }
    x_cur
}

/// Certified sign of `x_level(E) - target`, escalating precision as needed.
fn certified_trace_sign(
    energy: &Float,
    lambda: &Float,
    level: u32,
    target: i32,
    start_prec: u32,
    last_ok: &mut u32,
) -> Result<Sign> {
    for prec in precision_ladder(start_prec.max(*last_ok)) {
        let e = Interval::point(prec, energy);
        let lam = Interval::point(prec, lambda);
        let mut x_prev2 = Interval::from_f64(prec, 2.0);
        let mut x_prev1 = e.clone();
        let mut x_cur = e.sub(&lam);
        if level == 0 {
            x_cur = x_prev1.clone();
        } else {
            for _ in 1..level {
                let next = x_cur.mul(&x_prev1).sub(&x_prev2);
                x_prev2 = std::mem::replace(&mut x_prev1, x_cur);
                x_cur = next;
            }
        }
        let shifted = x_cur.sub_i32(target);
        match shifted.sign() {
            Sign::Unknown => continue,
            s => {
                *last_ok = prec;
                return Ok(s);
            }
        }
    }
    Err(Error::PrecisionExhausted {
        bits: MAX_PREC,
        context: format!("sign of x_{level} - {target} undecidable"),
    })
}

/// Locate `E*` with `x_level(E*) = target` inside a bracket whose endpoint
/// signs (of `x_level - target`) are certified opposite. Returns an
/// enclosure of width `≤ 2^{-edge_bits}`.
pub fn certify_edge(
    lambda: &Float,
    level: u32,
    target: i32,
    bracket: (&Float, &Float),
    edge_bits: u32,
) -> Result<Edge> {
    let work = edge_bits + 64;
    let mut a = Float::with_val(work, bracket.0);
    let mut b = Float::with_val(work, bracket.1);
    let mut hint = 96u32;
    let sign_at = |e: &Float, hint: &mut u32| -> Result<Sign> {
        certified_trace_sign(e, lambda, level, target, 96, hint)
    };
    let sa = sign_at(&a, &mut hint)?;
    let sb = sign_at(&b, &mut hint)?;
    if sa == Sign::Zero {
        return Ok(Edge::point(a));
    }
    if sb == Sign::Zero {
        return Ok(Edge::point(b));
    }
    if sa == sb {
        return Err(Error::NoSignChange {
            lo: format_real(&a),
            hi: format_real(&b),
        });
    }
    let tol = Float::with_val(work, Float::i_exp(1, -(edge_bits as i32)));
    loop {
        let width = Float::with_val(work, &b - &a).abs();
        if width <= tol {
            break;
        }
        let mut mid = Float::with_val(work, &a + &b);
        mid.div_assign_round(2u32, Round::Nearest);
        match sign_at(&mid, &mut hint)? {
            Sign::Zero => return Ok(Edge::point(mid)),
            s if s == sa => a = mid,
            _ => b = mid,
        }
    }
    if a <= b {
        Ok(Edge { lo: a, hi: b })
    } else {
        Ok(Edge { lo: b, hi: a })
    }
}

/// Sample classification relative to the band condition `|x_level| ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Below,  // x < -2
    Inside, // |x| <= 2
    Above,  // x > 2
}

fn classify(x: &Float) -> Region {
    if *x > 2 {
        Region::Above
    } else if *x < -2 {
        Region::Below
    } else {
        Region::Inside
    }
}

/// Candidate child: an interior point plus outside flanking points.
struct ChildBracket {
    left_out: Float,
    inner: Float,
    right_out: Float,
    left_region: Region,
    right_region: Region,
}

/// Find the `expected` bands of `σ_level` inside the open parent interval
/// by adaptive sign scanning.
fn find_children(
    lambda: &Float,
    level: u32,
    parent_lo: &Float,
    parent_hi: &Float,
    expected: usize,
    work: u32,
) -> Result<Vec<ChildBracket>> {
    let span = Float::with_val(work, parent_hi - parent_lo);
    let mut n = (16 * expected.max(2)) as u32;
    let max_n = 1u32 << 16;
    loop {
        let pts: Vec<Float> = (0..=n)
            .map(|i| {
                let frac = Float::with_val(work, i) / Float::with_val(work, n);
                Float::with_val(work, parent_lo + frac * span.clone())
            })
            .collect();
        let regions: Vec<Region> = pts
            .iter()
            .map(|e| classify(&trace_value(e, lambda, level, work)))
            .collect();
        if regions[0] == Region::Inside || regions[n as usize] == Region::Inside {
            return Err(Error::StructureViolation {
                level,
                expected,
                found: usize::MAX,
            });
        }

        let mut candidates: Vec<ChildBracket> = Vec::new();
        let mut ok = true;
        let mut i = 0usize;
        while i < n as usize {
            match (regions[i], regions[i + 1]) {
                (a, b) if a != Region::Inside && b == Region::Inside => {
                    // run of inside samples starting at i+1
                    let start = i + 1;
                    let mut end = start;
                    while end + 1 <= n as usize && regions[end + 1] == Region::Inside {
                        end += 1;
                    }
                    if end == n as usize {
                        ok = false;
                        break;
                    }
                    let right_region = regions[end + 1];
                    if right_region == a {
                        // same-sign flanks: unresolved internal structure
                        ok = false;
                        break;
                    }
                    candidates.push(ChildBracket {
                        left_out: pts[i].clone(),
                        inner: pts[(start + end) / 2].clone(),
                        right_out: pts[end + 1].clone(),
                        left_region: a,
                        right_region,
                    });
                    i = end + 1;
                }
                (Region::Above, Region::Below) | (Region::Below, Region::Above) => {
                    // A band hides between two samples: bisect on the sign
                    // of x itself to land inside it.
                    match interior_point(lambda, level, &pts[i], &pts[i + 1], work) {
                        Some(inner) => candidates.push(ChildBracket {
                            left_out: pts[i].clone(),
                            inner,
                            right_out: pts[i + 1].clone(),
                            left_region: regions[i],
                            right_region: regions[i + 1],
                        }),
                        None => {
                            ok = false;
                        }
                    }
                    if !ok {
                        break;
                    }
                    i += 1;
                }
                _ => i += 1,
            }
        }

        if ok && candidates.len() == expected {
            return Ok(candidates);
        }
        if ok && candidates.len() > expected {
            return Err(Error::StructureViolation {
                level,
                expected,
                found: candidates.len(),
            });
        }
        if n >= max_n {
            return Err(Error::StructureViolation {
                level,
                expected,
                found: candidates.len(),
            });
        }
        n *= 2;
    }
}

/// Bisect on the sign of `x_level` between two samples of opposite escape
/// sign until a point with `|x_level| ≤ 2` is found.
fn interior_point(
    lambda: &Float,
    level: u32,
    lo: &Float,
    hi: &Float,
    work: u32,
) -> Option<Float> {
    let mut a = lo.clone();
    let mut b = hi.clone();
    let going_down = trace_value(&a, lambda, level, work) > 0;
    for _ in 0..(work as usize + 16) {
        let mut mid = Float::with_val(work, &a + &b);
        mid.div_assign_round(2u32, Round::Nearest);
        let v = trace_value(&mid, lambda, level, work);
        match classify(&v) {
            Region::Inside => return Some(mid),
            Region::Above => {
                if going_down {
                    a = mid
                } else {
                    b = mid
                }
            }
            Region::Below => {
                if going_down {
                    b = mid
                } else {
                    a = mid
                }
            }
        }
    }
    None
}

/// Resolve a child bracket into a certified band.
fn certify_band(
    lambda: &Float,
    level: u32,
    c: &ChildBracket,
    edge_bits: u32,
) -> Result<(Edge, Edge)> {
    let left_target = match c.left_region {
        Region::Above => 2,
        Region::Below => -2,
        Region::Inside => unreachable!("flank is outside by construction"),
    };
    let right_target = match c.right_region {
        Region::Above => 2,
        Region::Below => -2,
        Region::Inside => unreachable!("flank is outside by construction"),
    };
    let left = certify_edge(lambda, level, left_target, (&c.left_out, &c.inner), edge_bits)?;
    let right = certify_edge(lambda, level, right_target, (&c.inner, &c.right_out), edge_bits)?;
    Ok((left, right))
}

/// Enumerate the full band hierarchy through level `k_max`.
///
/// Requires λ > 4 (the hypothesis of the nesting lemma); edges are
/// certified to enclosure width `≤ 2^{-precision}`.
pub fn enumerate_bands(lambda: &Float, k_max: u32, precision: u32) -> Result<BandHierarchy> {
    if *lambda <= 4 {
        return Err(Error::Domain(
            "band enumeration requires λ > 4 (nesting lemma hypothesis)".into(),
        ));
    }
    if k_max < 2 {
        return Err(Error::Domain("enumerate_bands requires k_max >= 2".into()));
    }
    let work = precision + 64;
    let lam = Float::with_val(work, lambda);

    // σ_0 = [-2, 2] (type A), σ_1 = [λ-2, λ+2] (type B); exact edges.
    let level0 = vec![Band {
        level: 0,
        band_type: BandType::A,
        ancestry: 0,
        left: Edge::point(Float::with_val(work, -2)),
        right: Edge::point(Float::with_val(work, 2)),
        parent: None,
    }];
    let level1 = vec![Band {
        level: 1,
        band_type: BandType::B,
        ancestry: 0,
        left: Edge::point(Float::with_val(work, &lam - 2u32)),
        right: Edge::point(Float::with_val(work, &lam + 2u32)),
        parent: None,
    }];
    let levels = vec![level0, level1];
    let mut h = BandHierarchy {
        lambda: lam,
        k_max: 1,
        precision,
        levels,
    };
    extend_bands(&mut h, k_max)?;
    Ok(h)
}

/// One full level of children from the two previous levels.
fn next_level(
    lam: &Float,
    levels: &[Vec<Band>],
    k: u32,
    work: u32,
    precision: u32,
) -> Result<Vec<Band>> {
    let mut bands: Vec<Band> = Vec::new();
    // Type-A children: one per type-B band at level k-1.
    for (idx, parent) in levels[k as usize - 1].iter().enumerate() {
        if parent.band_type != BandType::B {
            continue;
        }
        let (plo, phi) = (parent.lo(), parent.hi());
        let found = find_children(lam, k, &plo, &phi, 1, work)?;
        for c in &found {
            let (left, right) = certify_band(lam, k, c, precision)?;
            bands.push(Band {
                level: k,
                band_type: BandType::A,
                ancestry: parent.ancestry + 1,
                left,
                right,
                parent: Some(idx),
            });
        }
    }
    // Type-B children: one per type-A band and two per type-B band at
    // level k-2.
    for (idx, parent) in levels[k as usize - 2].iter().enumerate() {
        let expected = match parent.band_type {
            BandType::A => 1,
            BandType::B => 2,
        };
        let (plo, phi) = (parent.lo(), parent.hi());
        let found = find_children(lam, k, &plo, &phi, expected, work)?;
        for c in &found {
            let (left, right) = certify_band(lam, k, c, precision)?;
            bands.push(Band {
                level: k,
                band_type: BandType::B,
                ancestry: parent.ancestry + 1,
                left,
                right,
                parent: Some(idx),
            });
        }
    }
    bands.sort_by(|x, y| x.lo().partial_cmp(&y.lo()).unwrap());
    Ok(bands)
}

/// Grow an existing hierarchy (possibly restored from an export) to a
/// deeper level; a no-op if it already reaches `new_k_max`.
pub fn extend_bands(h: &mut BandHierarchy, new_k_max: u32) -> Result<()> {
    if new_k_max <= h.k_max {
        return Ok(());
    }
    let work = h.precision + 64;
    let lam = Float::with_val(work, &h.lambda);
    for k in (h.k_max + 1)..=new_k_max {
        let bands = next_level(&lam, &h.levels, k, work, h.precision)?;
        h.levels.push(bands);
        h.k_max = k;
    }
    Ok(())
}

/// Sorted disjoint union of the bands of `σ_k` and `σ_{k+1}`.
pub fn cover_union(h: &BandHierarchy, k: u32) -> Result<Vec<(Float, Float)>> {
    if k + 1 > h.k_max {
        return Err(Error::Domain(format!(
            "cover_union needs level {} but hierarchy stops at {}",
            k + 1,
            h.k_max
        )));
    }
    let mut intervals: Vec<(Float, Float)> = h.levels[k as usize]
        .iter()
        .chain(h.levels[k as usize + 1].iter())
        .map(|b| (b.lo(), b.hi()))
        .collect();
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(Float, Float)> = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    Ok(merged)
}

/// Scaling bounds from the derivative-ratio lemmas.
pub fn s_upper(lambda: f64) -> f64 {
    2.0 * lambda + 22.0
}

/// `S_l(λ) = ((λ-4) + √((λ-4)² - 12))/2`, defined for λ ≥ 8 (and in fact
/// whenever the discriminant is nonnegative).
pub fn s_lower(lambda: f64) -> f64 {
    let t = lambda - 4.0;
    0.5 * (t + (t * t - 12.0).sqrt())
}

/// Observed derivative-ratio range for one parent/child pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairRatio {
    pub child_level: u32,
    pub child_index: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub s_upper: f64,
    pub s_lower: f64,
    pub pairs: Vec<PairRatio>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Sampled points where a ratio left `[S_l, S_u]`, with the offending
    /// energy (reported, not fatal).
    pub violations: Vec<(u32, usize, String, f64)>,
}

/// Sample `|x'_child / x'_parent|` on every child band of the hierarchy.
pub fn scaling_ratio_check(h: &BandHierarchy, samples_per_band: u32) -> Result<ScalingReport> {
    if samples_per_band < 2 {
        return Err(Error::Domain("samples_per_band must be >= 2".into()));
    }
    let lambda_f = h.lambda.to_f64();
    let su = s_upper(lambda_f);
    let sl = s_lower(lambda_f);
    let check_lower = lambda_f >= 8.0;
    let work = h.precision + 64;
    let mut pairs = Vec::new();
    let mut violations = Vec::new();
    let mut global_min = f64::INFINITY;
    let mut global_max = f64::NEG_INFINITY;

    for level in 2..=h.k_max {
        for (idx, band) in h.levels[level as usize].iter().enumerate() {
            let Some(plevel) = band.parent_level() else {
                continue;
            };
            let lo = band.lo();
            let width = band.width();
            let mut rmin = f64::INFINITY;
            let mut rmax = f64::NEG_INFINITY;
            for i in 0..samples_per_band {
                // strictly interior sample points
                let frac = Float::with_val(work, i + 1) / Float::with_val(work, samples_per_band + 1);
                let e = Float::with_val(work, &lo + frac * width.clone());
                let seq = trace_sequence(&e, &h.lambda, level, work)?;
                let d_child = seq[level as usize + 1].1.to_f64();
                let d_parent = seq[plevel as usize + 1].1.to_f64();
                let ratio = (d_child / d_parent).abs();
                rmin = rmin.min(ratio);
                rmax = rmax.max(ratio);
                if ratio > su || (check_lower && ratio < sl) {
                    violations.push((level, idx, format_real(&e), ratio));
                }
            }
            global_min = global_min.min(rmin);
            global_max = global_max.max(rmax);
            pairs.push(PairRatio {
                child_level: level,
                child_index: idx,
                ratio_min: rmin,
                ratio_max: rmax,
            });
        }
    }
    Ok(ScalingReport {
        s_upper: su,
        s_lower: sl,
        pairs,
        ratio_min: global_min,
        ratio_max: global_max,
        violations,
    })
}

// ── export / import ──────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct BandRecord {
    level: u32,
    band_type: BandType,
    ancestry: u32,
    /// Exact hexadecimal edge enclosures (radix-16 MPFR strings).
    left_lo: String,
    left_hi: String,
    right_lo: String,
    right_hi: String,
    parent: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct HierarchyRecord {
    lambda: String,
    k_max: u32,
    precision: u32,
    bands: Vec<BandRecord>,
}

fn to_hex(x: &Float) -> String {
    x.to_string_radix(16, None)
}

fn from_hex(prec: u32, s: &str) -> Result<Float> {
    Float::parse_radix(s, 16)
        .map(|p| Float::with_val(prec, p))
        .map_err(|e| Error::Parse(format!("bad radix-16 float {s:?}: {e}")))
}

impl BandHierarchy {
    /// CSV rows `level,type,m,lo,hi,width` (decimal, enough digits to
    /// reconstruct at the working precision).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "level,type,m,lo,hi,width")?;
        for level in &self.levels {
            for b in level {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    b.level,
                    match b.band_type {
                        BandType::A => "A",
                        BandType::B => "B",
                    },
                    b.ancestry,
                    format_real(&b.lo()),
                    format_real(&b.hi()),
                    format_real(&b.width()),
                )?;
            }
        }
        Ok(())
    }

    /// Exact JSON export; `read_json` restores the hierarchy bit for bit.
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let mut bands = Vec::new();
        for level in &self.levels {
            for b in level {
                bands.push(BandRecord {
                    level: b.level,
                    band_type: b.band_type,
                    ancestry: b.ancestry,
                    left_lo: to_hex(&b.left.lo),
                    left_hi: to_hex(&b.left.hi),
                    right_lo: to_hex(&b.right.lo),
                    right_hi: to_hex(&b.right.hi),
                    parent: b.parent,
                });
            }
        }
        let rec = HierarchyRecord {
            lambda: to_hex(&self.lambda),
            k_max: self.k_max,
            precision: self.precision,
            bands,
        };
        serde_json::to_writer_pretty(&mut w, &rec)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn read_json<R: BufRead>(r: R) -> Result<Self> {
        let rec: HierarchyRecord = serde_json::from_reader(r)?;
        let work = rec.precision + 64;
        let mut levels: Vec<Vec<Band>> = vec![Vec::new(); rec.k_max as usize + 1];
        for b in rec.bands {
            if b.level > rec.k_max {
                return Err(Error::Parse(format!(
                    "band level {} exceeds k_max {}",
                    b.level, rec.k_max
                )));
            }
            levels[b.level as usize].push(Band {
                level: b.level,
                band_type: b.band_type,
                ancestry: b.ancestry,
                left: Edge {
                    lo: from_hex(work, &b.left_lo)?,
                    hi: from_hex(work, &b.left_hi)?,
                },
                right: Edge {
                    lo: from_hex(work, &b.right_lo)?,
                    hi: from_hex(work, &b.right_hi)?,
                },
                parent: b.parent,
            });
        }
        Ok(BandHierarchy {
            lambda: from_hex(work, &rec.lambda)?,
            k_max: rec.k_max,
            precision: rec.precision,
            levels,
        })
    }

    /// Re-derive every band's ancestry from the definition (interval
    /// inclusion against all previous levels). Slow; used by tests.
    pub fn ancestry_by_inclusion(&self, level: u32, idx: usize) -> u32 {
        let band = &self.levels[level as usize][idx];
        let (lo, hi) = (band.lo(), band.hi());
        let mut m = 0;
        for j in 0..level {
            let meets = self.levels[j as usize]
                .iter()
                .any(|p| p.lo() <= hi && lo <= p.hi());
            if meets {
                m += 1;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: f64) -> Float {
        Float::with_val(192, v)
    }

    #[test]
    fn roots_lambda8() {
        let h = enumerate_bands(&f(8.0), 2, 128).unwrap();
        assert_eq!(h.levels[0].len(), 1);
        assert_eq!(h.levels[1].len(), 1);
        assert_eq!(h.levels[0][0].lo().to_f64(), -2.0);
        assert_eq!(h.levels[0][0].hi().to_f64(), 2.0);
        assert_eq!(h.levels[1][0].lo().to_f64(), 6.0);
        assert_eq!(h.levels[1][0].hi().to_f64(), 10.0);
        assert_eq!(h.levels[0][0].band_type, BandType::A);
        assert_eq!(h.levels[1][0].band_type, BandType::B);
    }

    #[test]
    fn sigma2_lambda8_quadratic_oracle() {
        // x_2 = E² - 8E - 2; bands where |x_2| ≤ 2:
        // [4-√20, 0] (type B, inside σ_0) and [8, 4+√20] (type A, inside σ_1).
        let h = enumerate_bands(&f(8.0), 2, 128).unwrap();
        let lvl2 = &h.levels[2];
        assert_eq!(lvl2.len(), 2);
        let sqrt20 = 20f64.sqrt();
        let b = &lvl2[0];
        assert_eq!(b.band_type, BandType::B);
        assert!((b.lo().to_f64() - (4.0 - sqrt20)).abs() < 1e-12);
        assert!((b.hi().to_f64() - 0.0).abs() < 1e-12);
        let a = &lvl2[1];
        assert_eq!(a.band_type, BandType::A);
        assert!((a.lo().to_f64() - 8.0).abs() < 1e-12);
        assert!((a.hi().to_f64() - (4.0 + sqrt20)).abs() < 1e-12);
        assert_eq!(a.ancestry, 1);
        assert_eq!(b.ancestry, 1);
    }

    #[test]
    fn certify_edge_linear_and_quadratic() {
        let lam = f(8.0);
        // Level 1: x_1 = E - 8; edge with x_1 = -2 at E = 6.
        let e = certify_edge(&lam, 1, -2, (&f(5.0), &f(7.0)), 128).unwrap();
        assert!((e.mid().to_f64() - 6.0).abs() < 1e-30);
        // Level 2 right edge: x_2 = +2 at E = 4 + √20.
        let e = certify_edge(&lam, 2, 2, (&f(8.3), &f(8.6)), 128).unwrap();
        assert!((e.mid().to_f64() - (4.0 + 20f64.sqrt())).abs() < 1e-14);
        assert!(e.width().to_f64() <= 2f64.powi(-128));
        // Level 2 left edge of the left band: x_2 = +2 at E = 4 - √20
        // (the parabola enters the band from above on the left).
        let e = certify_edge(&lam, 2, 2, (&f(-1.0), &f(-0.3)), 128).unwrap();
        assert!((e.mid().to_f64() - (4.0 - 20f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        let lam = f(8.0);
        assert!(matches!(
            certify_edge(&lam, 1, -2, (&f(1.0), &f(2.0)), 64),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn lambda_at_most_four_refused() {
        assert!(matches!(
            enumerate_bands(&f(4.0), 4, 64),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn counts_match_fibonacci_small() {
        use crate::combinatorics::fibonacci;
        let h = enumerate_bands(&f(8.0), 9, 128).unwrap();
        for k in 0..=9u32 {
            assert_eq!(
                h.levels[k as usize].len() as u64,
                fibonacci(k).to_u64().unwrap(),
                "level {k}"
            );
            if k >= 2 {
                let a = h.levels[k as usize]
                    .iter()
                    .filter(|b| b.band_type == BandType::A)
                    .count() as u64;
                let b = h.levels[k as usize].len() as u64 - a;
                assert_eq!(a, fibonacci(k - 2).to_u64().unwrap());
                assert_eq!(b, fibonacci(k - 1).to_u64().unwrap());
            }
        }
    }

    #[test]
    fn ancestry_matches_inclusion_definition() {
        let h = enumerate_bands(&f(8.0), 8, 128).unwrap();
        for k in 0..=8u32 {
            for idx in 0..h.levels[k as usize].len() {
                assert_eq!(
                    h.levels[k as usize][idx].ancestry,
                    h.ancestry_by_inclusion(k, idx),
                    "({k},{idx})"
                );
            }
        }
    }

    #[test]
    fn cover_union_roots_and_nesting() {
        let h = enumerate_bands(&f(8.0), 6, 128).unwrap();
        let c0 = cover_union(&h, 0).unwrap();
        assert_eq!(c0.len(), 2);
        assert_eq!(c0[0].0.to_f64(), -2.0);
        assert_eq!(c0[0].1.to_f64(), 2.0);
        assert_eq!(c0[1].0.to_f64(), 6.0);
        assert_eq!(c0[1].1.to_f64(), 10.0);
        // cover(1) = σ_1 ∪ σ_2 = [4-√20, 0] ∪ [6, 10].
        let c1 = cover_union(&h, 1).unwrap();
        assert_eq!(c1.len(), 2);
        assert!((c1[0].0.to_f64() - (4.0 - 20f64.sqrt())).abs() < 1e-12);
        assert_eq!(c1[1].1.to_f64(), 10.0);
        // Nesting: every interval of cover(k+1) lies inside cover(k).
        for k in 0..5u32 {
            let outer = cover_union(&h, k).unwrap();
            let inner = cover_union(&h, k + 1).unwrap();
            for (lo, hi) in &inner {
                assert!(
                    outer.iter().any(|(olo, ohi)| olo <= lo && hi <= ohi),
                    "cover({}) piece [{}, {}] not inside cover({})",
                    k + 1,
                    lo.to_f64(),
                    hi.to_f64(),
                    k
                );
            }
        }
    }

    #[test]
    fn empty_triple_intersection() {
        let h = enumerate_bands(&f(8.0), 8, 128).unwrap();
        for k in 0..=6usize {
            for b0 in &h.levels[k] {
                for b1 in &h.levels[k + 1] {
                    let lo = b0.lo().max(&b1.lo());
                    let hi = b0.hi().min(&b1.hi());
                    if lo > hi {
                        continue;
                    }
                    for b2 in &h.levels[k + 2] {
                        let lo2 = lo.clone().max(&b2.lo());
                        let hi2 = hi.clone().min(&b2.hi());
                        assert!(
                            lo2 > hi2,
                            "σ_{k} ∩ σ_{} ∩ σ_{} nonempty near {}",
                            k + 1,
                            k + 2,
                            lo2.to_f64()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn scaling_factors_hand_values() {
        assert_eq!(s_upper(8.0), 38.0);
        assert!((s_lower(8.0) - 3.0).abs() < 1e-14);
        assert_eq!(s_upper(16.0), 54.0);
        assert!((s_lower(16.0) - (12.0 + 132f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_ratios_within_bounds_small() {
        let h = enumerate_bands(&f(8.0), 7, 128).unwrap();
        let rep = scaling_ratio_check(&h, 10).unwrap();
        assert!(rep.violations.is_empty(), "violations: {:?}", rep.violations);
        assert!(rep.ratio_min >= 3.0 - 1e-9);
        assert!(rep.ratio_max <= 38.0 + 1e-9);
    }

    #[test]
    fn width_sandwich_small() {
        let h = enumerate_bands(&f(8.0), 9, 128).unwrap();
        for k in 0..=9usize {
            for b in &h.levels[k] {
                let m = b.ancestry as i32;
                let w = b.width().to_f64();
                let lo = 4.0 * 38f64.powi(-m);
                let hi = 4.0 * 3f64.powi(-m);
                assert!(w >= lo * (1.0 - 1e-9) && w <= hi * (1.0 + 1e-9),
                    "level {k} m={m}: width {w} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn json_roundtrip_exact() {
        let h = enumerate_bands(&f(8.0), 5, 128).unwrap();
        let mut buf = Vec::new();
        h.write_json(&mut buf).unwrap();
        let h2 = BandHierarchy::read_json(&buf[..]).unwrap();
        assert_eq!(h.k_max, h2.k_max);
        for (l1, l2) in h.levels.iter().zip(&h2.levels) {
            assert_eq!(l1.len(), l2.len());
            for (b1, b2) in l1.iter().zip(l2) {
                assert_eq!(b1.left.lo, b2.left.lo);
                assert_eq!(b1.right.hi, b2.right.hi);
                assert_eq!(b1.ancestry, b2.ancestry);
            }
        }
    }

    #[test]
    fn resume_matches_direct_enumeration() {
        let h5 = enumerate_bands(&f(8.0), 5, 128).unwrap();
        let mut buf = Vec::new();
        h5.write_json(&mut buf).unwrap();
        let mut resumed = BandHierarchy::read_json(&buf[..]).unwrap();
        extend_bands(&mut resumed, 7).unwrap();
        let direct = enumerate_bands(&f(8.0), 7, 128).unwrap();
        for (l1, l2) in resumed.levels.iter().zip(&direct.levels) {
            assert_eq!(l1.len(), l2.len());
            for (b1, b2) in l1.iter().zip(l2) {
                // freshly certified enclosures agree to their width
                let d = Float::with_val(160, b1.lo() - b2.lo()).abs();
                assert!(d.to_f64() <= 2f64.powi(-120));
                assert_eq!(b1.ancestry, b2.ancestry);
                assert_eq!(b1.band_type, b2.band_type);
            }
        }
    }

    #[test]
    fn bands_meet_membership_test() {
        use crate::trace::{spectrum_membership, MembershipStatus};
        let h = enumerate_bands(&f(8.0), 6, 128).unwrap();
        // A nested-band midpoint at the deepest level must survive the
        // membership test at least to its own depth.
        for b in &h.levels[6] {
            let mid = Float::with_val(192, b.lo() + b.width() / 2u32);
            let v = spectrum_membership(&mid, &f(8.0), 5).unwrap();
            match v.status {
                MembershipStatus::Bounded { .. } => {}
                MembershipStatus::Escaped { level } => {
                    assert!(level >= 5, "band midpoint escaped at level {level}");
                }
            }
        }
    }
}
