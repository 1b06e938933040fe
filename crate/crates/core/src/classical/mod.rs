//! Classical Markov and Lagrange spectra via continued fractions.
//!
//! Sequences over the positive integers are [`BiSequence`]s whose symbols are
//! the partial quotients themselves. Periodic tails are evaluated exactly as
//! quadratic surds.

mod surd;

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use surd::QuadSurd;

use crate::error::{Result, SpectraError};
use crate::sample::{SampleKind, SpectrumSample};
use crate::symbolic::{BiSequence, Word};

/// Continued fraction digits `prefix` followed by `period` repeated forever
/// (finite when `period` is empty).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfDigits {
    pub prefix: Vec<u64>,
    #[serde(default)]
    pub period: Vec<u64>,
}

impl CfDigits {
    pub fn finite(digits: Vec<u64>) -> Self {
        CfDigits {
            prefix: digits,
            period: vec![],
        }
    }

    pub fn periodic(period: Vec<u64>) -> Self {
        CfDigits {
            prefix: vec![],
            period,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.prefix.is_empty() && self.period.is_empty() {
            return Err(SpectraError::Domain("empty continued fraction".into()));
        }
        if self.prefix.iter().chain(&self.period).any(|&d| d == 0) {
            return Err(SpectraError::Domain("continued fraction digits must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Evaluate the listed digits (one copy of the period) as a convergent.
    Truncate,
    /// Solve the fixed-point equation of the period exactly.
    PeriodicExact,
}

/// Value of a continued fraction with an error bound and, when available,
/// the exact surd.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfValue {
    pub value: f64,
    pub error_bound: f64,
    pub exact: Option<QuadSurd>,
}

/// Classical evaluation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConfig {
    /// Digits above this make the orbit count as unbounded (value `+∞`).
    pub digit_cap: u64,
    /// Longest non-periodic prefix evaluated exactly before falling back to
    /// truncated convergents.
    pub exact_prefix_limit: usize,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig {
            digit_cap: 1_000_000,
            exact_prefix_limit: 48,
        }
    }
}

type Mat = [[i128; 2]; 2];

fn cf_matrix(digits: &[u64]) -> Result<Mat> {
    let ovf = SpectraError::Overflow("continued fraction matrix");
    let mut m: Mat = [[1, 0], [0, 1]];
    for &a in digits {
        let a = a as i128;
        // m · [[a, 1], [1, 0]]
        m = [
            [
                m[0][0].checked_mul(a).and_then(|x| x.checked_add(m[0][1])).ok_or(ovf.clone())?,
                m[0][0],
            ],
            [
                m[1][0].checked_mul(a).and_then(|x| x.checked_add(m[1][1])).ok_or(ovf.clone())?,
                m[1][0],
            ],
        ];
    }
    Ok(m)
}

/// Exact value of the purely periodic continued fraction `[b_0; b_1, …, b_{k-1}, b_0, …]`.
pub fn periodic_root(period: &[u64]) -> Result<QuadSurd> {
    let [[p, pp], [q, qp]] = cf_matrix(period)?;
    // q x² + (q' − p) x − p' = 0, positive root
    let ovf = SpectraError::Overflow("periodic root discriminant");
    let diff = p - qp;
    let disc = diff
        .checked_mul(diff)
        .and_then(|a| pp.checked_mul(q).and_then(|b| b.checked_mul(4)).and_then(|b| a.checked_add(b)))
        .ok_or(ovf.clone())?;
    QuadSurd::new(diff, 1, disc, 2 * q)?.reduced()
}

/// Exact value of `[prefix, period, period, …]`.
fn eventually_periodic_value(prefix: &[u64], period: &[u64]) -> Result<QuadSurd> {
    if period.is_empty() {
        let [[p, _], [q, _]] = cf_matrix(prefix)?;
        return QuadSurd::rational(p, q);
    }
    let root = periodic_root(period)?;
    if prefix.is_empty() {
        return Ok(root);
    }
    let [[a, b], [c, e]] = cf_matrix(prefix)?;
    root.mobius(a, b, c, e)
}

/// Convergent of the listed digits and the width of the cylinder they fix.
fn truncated(digits: &[u64]) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0f64, 0.0f64);
    let (mut q0, mut q1) = (0.0f64, 1.0f64);
    // (p0, q0) = current, (p1, q1) = previous
    for &a in digits {
        let a = a as f64;
        let (np, nq) = (a * p0 + p1, a * q0 + q1);
        p1 = p0;
        q1 = q0;
        p0 = np;
        q0 = nq;
    }
    // value by backward recursion is better conditioned than p/q
    let mut v = 0.0f64;
    for (i, &a) in digits.iter().enumerate().rev() {
        v = if i + 1 == digits.len() { a as f64 } else { a as f64 + 1.0 / v };
    }
    (v, 1.0 / (q0 * (q0 + q1)))
}

/// Evaluates a continued fraction.
pub fn cf_eval(d: &CfDigits, mode: TailMode) -> Result<CfValue> {
    d.validate()?;
    match mode {
        TailMode::Truncate => {
            let mut digits = d.prefix.clone();
            digits.extend_from_slice(&d.period);
            let (value, error_bound) = truncated(&digits);
            Ok(CfValue {
                value,
                error_bound,
                exact: None,
            })
        }
        TailMode::PeriodicExact => match eventually_periodic_value(&d.prefix, &d.period) {
            Ok(s) => Ok(CfValue {
                value: s.to_f64(),
                error_bound: 0.0,
                exact: Some(s),
            }),
            Err(SpectraError::Overflow(_)) => {
                // long prefixes: fall back to many periods of truncation
                let mut digits = d.prefix.clone();
                while digits.len() < d.prefix.len() + 200 && !d.period.is_empty() {
                    digits.extend_from_slice(&d.period);
                }
                let (value, error_bound) = truncated(&digits);
                Ok(CfValue {
                    value,
                    error_bound,
                    exact: None,
                })
            }
            Err(e) => Err(e),
        },
    }
}

/// `f(s) = [a_0; a_1, …] + [0; a_{-1}, a_{-2}, …]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussValue {
    pub value: f64,
    pub error_bound: f64,
    pub exact: Option<QuadSurd>,
}

fn check_digits(s: &BiSequence, cfg: &ClassicalConfig) -> Result<bool> {
    if s.min_symbol() == 0 {
        return Err(SpectraError::Domain("continued fraction digits must be >= 1".into()));
    }
    Ok((s.max_symbol() as u64) <= cfg.digit_cap)
}

/// Forward digits `a_0, a_1, …` of `s` as prefix and period.
fn forward_digits(s: &BiSequence) -> (Vec<u64>, Vec<u64>) {
    let (start, cycle) = s.right_tail();
    let p = cycle.len() as i64;
    let st = start.max(0);
    let prefix = s.window(0, st as usize).into_iter().map(u64::from).collect();
    let period = (0..p).map(|j| cycle[(st + j - start).rem_euclid(p) as usize] as u64).collect();
    (prefix, period)
}

/// Backward digits `a_{-1}, a_{-2}, …` of `s` as prefix and period.
fn backward_digits(s: &BiSequence) -> (Vec<u64>, Vec<u64>) {
    let (end, cycle) = s.left_tail();
    let p = cycle.len() as i64;
    let e = end.min(0);
    let prefix = (1..=-e).map(|k| s.at(-k) as u64).collect();
    let period = (0..p)
        .map(|j| cycle[(e - 1 - j - end).rem_euclid(p) as usize] as u64)
        .collect();
    (prefix, period)
}

/// Classical observable `f` at position 0 of `s`.
pub fn f_gauss(s: &BiSequence, horizon: usize) -> Result<GaussValue> {
    f_gauss_with(s, horizon, &ClassicalConfig::default())
}

pub fn f_gauss_with(s: &BiSequence, horizon: usize, cfg: &ClassicalConfig) -> Result<GaussValue> {
    if horizon == 0 {
        return Err(SpectraError::Domain("horizon must be >= 1".into()));
    }
    if !check_digits(s, cfg)? {
        return Ok(GaussValue {
            value: f64::INFINITY,
            error_bound: 0.0,
            exact: None,
        });
    }
    let (fp, fq) = forward_digits(s);
    let (bp, bq) = backward_digits(s);
    if fp.len().max(bp.len()) <= cfg.exact_prefix_limit {
        let exact = eventually_periodic_value(&fp, &fq).and_then(|x| {
            let y = eventually_periodic_value(&bp, &bq)?.recip()?;
            Ok((x, y))
        });
        match exact {
            Ok((x, y)) => {
                let sum = x.add(&y).ok();
                let value = sum.map_or(x.to_f64() + y.to_f64(), |s| s.to_f64());
                return Ok(GaussValue {
                    value,
                    error_bound: 0.0,
                    exact: sum,
                });
            }
            Err(SpectraError::Overflow(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let fwd: Vec<u64> = s.window(0, horizon + 1).into_iter().map(u64::from).collect();
    let back: Vec<u64> = (1..=horizon as i64).map(|k| s.at(-k) as u64).collect();
    let (x, ex) = truncated(&fwd);
    let (y, ey) = truncated(&back);
    // [0; b] = 1/[b], and 1/y moves by at most ey/y² ≤ ey since y ≥ 1
    Ok(GaussValue {
        value: x + 1.0 / y,
        error_bound: ex + ey,
        exact: None,
    })
}

/// Lower bound for the Fibonacci-like growth of convergent denominators:
/// `q_m ≥ F_{m+1} ≥ φ^{m-1}`; returns the cylinder width bound `φ^{-2(m-1)}`.
fn cylinder_width_bound(m: i64) -> f64 {
    if m < 1 {
        return 1.0;
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    phi.powf(-2.0 * (m - 1) as f64)
}

/// Exact maximum of `f` over the cyclic shifts of a periodic word.
fn periodic_max(cycle: &Word, cfg: &ClassicalConfig) -> Result<(f64, Option<QuadSurd>)> {
    let base = BiSequence::periodic(cycle.clone())?;
    let mut best: Option<(f64, Option<QuadSurd>)> = None;
    for i in 0..cycle.len() as i64 {
        let g = f_gauss_with(&base.shift(i), 1 + cycle.len(), cfg)?;
        let better = match &best {
            None => true,
            Some((v, ex)) => match (&g.exact, ex) {
                (Some(a), Some(b)) => a.cmp_exact(b).map(|o| o.is_gt()).unwrap_or(g.value > *v),
                _ => g.value > *v,
            },
        };
        if better {
            best = Some((g.value, g.exact));
        }
    }
    Ok(best.expect("non-empty cycle"))
}

/// Markov value `sup_n f(σⁿ s)`.
///
/// Shifts with `|n| ≤ horizon` (and around the scheduled part) are evaluated
/// directly; the periodic tails contribute the exact maxima over their
/// cycles. The error bound covers the unexamined shifts beyond the horizon.
pub fn markov_value_classical(s: &BiSequence, horizon: usize) -> Result<SpectrumSample> {
    markov_value_classical_with(s, horizon, &ClassicalConfig::default())
}

pub fn markov_value_classical_with(
    s: &BiSequence,
    horizon: usize,
    cfg: &ClassicalConfig,
) -> Result<SpectrumSample> {
    let mut sample = SpectrumSample {
        value: f64::INFINITY,
        kind: SampleKind::Markov,
        witness: s.clone(),
        error_bound: 0.0,
        approximate: false,
        closed_form: None,
    };
    if !check_digits(s, cfg)? {
        return Ok(sample);
    }
    if let Some(cycle) = s.as_periodic() {
        let (v, ex) = periodic_max(&cycle, cfg)?;
        sample.value = v;
        sample.closed_form = ex.map(|e| e.to_string());
        return Ok(sample);
    }
    let h = horizon.max(1) as i64;
    let (end, left) = s.left_tail();
    let (start, right) = s.right_tail();
    let lo = (-h).min(end - h);
    let hi = h.max(start + h);
    if hi - lo > 50_000_000 {
        return Err(SpectraError::Unsupported(format!(
            "scheduled part spans {} positions; too long to scan",
            hi - lo
        )));
    }
    let (lv, lx) = periodic_max(&left, cfg)?;
    let (rv, rx) = periodic_max(&right, cfg)?;
    let (mut best, mut best_ex) = if lv >= rv { (lv, lx) } else { (rv, rx) };
    let mut err = 0.0f64;
    let evals: Vec<GaussValue> = (lo..=hi)
        .into_par_iter()
        .map(|n| f_gauss_with(&s.shift(n), horizon.max(2), cfg))
        .collect::<Result<_>>()?;
    for g in evals {
        if g.value > best {
            best = g.value;
            best_ex = g.exact;
        }
        err = err.max(g.error_bound);
    }
    // beyond the scanned range every shift lies within one cylinder of a cycle point
    let m_right = hi + 1 - start;
    let m_left = end - (lo - 1);
    err = err.max(cylinder_width_bound(m_right)).max(cylinder_width_bound(m_left));
    sample.value = best;
    sample.error_bound = err;
    sample.closed_form = best_ex.map(|e| e.to_string());
    Ok(sample)
}

/// Lagrange value `limsup_{n→∞} f(σⁿ s)`: the exact maximum over the right
/// tail's cycle.
pub fn lagrange_value_classical(s: &BiSequence) -> Result<SpectrumSample> {
    lagrange_value_classical_with(s, &ClassicalConfig::default())
}

pub fn lagrange_value_classical_with(s: &BiSequence, cfg: &ClassicalConfig) -> Result<SpectrumSample> {
    let (_, right) = s.right_tail();
    let tail = BiSequence::periodic(right.clone())?;
    let mut sample = SpectrumSample {
        value: f64::INFINITY,
        kind: SampleKind::Lagrange,
        witness: s.clone(),
        error_bound: 0.0,
        approximate: false,
        closed_form: None,
    };
    if s.min_symbol() == 0 {
        return Err(SpectraError::Domain("continued fraction digits must be >= 1".into()));
    }
    if !check_digits(&tail, cfg)? {
        return Ok(sample);
    }
    let (v, ex) = periodic_max(&right, cfg)?;
    sample.value = v;
    sample.closed_form = ex.map(|e| e.to_string());
    Ok(sample)
}

/// Positive solution of `x² + y² + z² = 3xyz`, sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MarkovTriple {
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

impl MarkovTriple {
    fn sorted(mut v: [u64; 3]) -> Self {
        v.sort_unstable();
        MarkovTriple {
            x: v[0],
            y: v[1],
            z: v[2],
        }
    }

    pub fn is_solution(&self) -> bool {
        let (x, y, z) = (self.x as u128, self.y as u128, self.z as u128);
        x * x + y * y + z * z == 3 * x * y * z
    }

    /// Point `√(9 − 4/z²)` of the discrete part of the spectrum.
    pub fn spectrum_value(&self) -> f64 {
        markov_number_value(self.z)
    }
}

pub fn markov_number_value(z: u64) -> f64 {
    let z = z as f64;
    (9.0 - 4.0 / (z * z)).sqrt()
}

/// All Markov triples with largest entry at most `z_max`, sorted by `z`
/// (then `x`, `y`).
pub fn markov_triples(z_max: u64) -> Vec<MarkovTriple> {
    if z_max == 0 {
        return vec![];
    }
    let root = MarkovTriple::sorted([1, 1, 1]);
    let mut seen: HashSet<MarkovTriple> = HashSet::from([root]);
    let mut stack = vec![root];
    while let Some(t) = stack.pop() {
        let v = [t.x as u128, t.y as u128, t.z as u128];
        for i in 0..3 {
            let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
            let Some(c) = (3 * a * b).checked_sub(v[i]) else { continue };
            if c == 0 || c > z_max as u128 {
                continue;
            }
            let mut w = [v[0] as u64, v[1] as u64, v[2] as u64];
            w[i] = c as u64;
            let n = MarkovTriple::sorted(w);
            if seen.insert(n) {
                stack.push(n);
            }
        }
    }
    let mut out: Vec<MarkovTriple> = seen.into_iter().collect();
    out.sort_unstable_by_key(|t| (t.z, t.x, t.y));
    out
}

/// Distinct Markov numbers up to `z_max`.
pub fn markov_numbers(z_max: u64) -> BTreeSet<u64> {
    markov_triples(z_max).into_iter().map(|t| t.z).collect()
}

/// `(2221564096 + 283748·√462) / 491993569`.
pub fn freiman_constant() -> f64 {
    (2_221_564_096.0 + 283_748.0 * 462f64.sqrt()) / 491_993_569.0
}

/// The same constant as an exact surd.
pub fn freiman_constant_exact() -> QuadSurd {
    QuadSurd::new(2_221_564_096, 283_748, 462, 491_993_569).expect("valid surd")
}

/// Lyndon words of length `1..=max_len` over `digits` (sorted ascending),
/// i.e. one representative per primitive necklace.
pub fn lyndon_words(digits: &[u64], max_len: usize) -> Vec<Vec<u64>> {
    let k = digits.len();
    let mut out = Vec::new();
    if k == 0 || max_len == 0 {
        return out;
    }
    // Duval's generation over indices 0..k
    let mut w: Vec<usize> = vec![0];
    loop {
        out.push(w.iter().map(|&i| digits[i]).collect());
        let m = w.len();
        while w.len() < max_len {
            let c = w[w.len() - m];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == k - 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(last) => *last += 1,
            None => break,
        }
    }
    out
}

/// Markov values of all periodic sequences over `digits` with period at most
/// `max_period`, one per primitive necklace, sorted by value.
pub fn periodic_sweep(digits: &[u64], max_period: usize) -> Result<Vec<SpectrumSample>> {
    let mut ds = digits.to_vec();
    ds.sort_unstable();
    ds.dedup();
    let words = lyndon_words(&ds, max_period);
    let mut samples: Vec<SpectrumSample> = words
        .par_iter()
        .map(|w| {
            let word = Word::from(w.iter().map(|&d| d as u32).collect::<Vec<_>>());
            markov_value_classical(&BiSequence::periodic(word)?, max_period + 1)
        })
        .collect::<Result<_>>()?;
    samples.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(samples)
}
