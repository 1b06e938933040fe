//! Hausdorff dimension of sub-SFT Cantor sets and of the threshold sets
//! `Λ_t = {x : m(x) ≤ t}`.
//!
//! All embeddings contract every symbol by the same ratio `1/b` on each
//! axis, so the dimension of a sub-SFT per axis is `log λ / log b` with `λ`
//! the spectral radius of its block graph.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::SkewSystem;
use crate::error::{Result, SpectraError};
use crate::symbolic::{EmbeddingSpec, TransitionMatrix, Word};

/// Which side of `Λ_t` a threshold sub-SFT approximates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Contains `Λ_t`: blocks whose cylinder may reach values `≤ t`.
    Upper,
    /// Contained in `Λ_t`: blocks whose cylinder stays `≤ t`.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axes {
    Unstable,
    Both,
}

impl Axes {
    fn factor(self) -> f64 {
        match self {
            Axes::Unstable => 1.0,
            Axes::Both => 2.0,
        }
    }
}

/// Shift on admissible `window`-blocks, with `u → v` when `v` extends `u`
/// by one symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubSft {
    pub parent: TransitionMatrix,
    pub window: usize,
    pub blocks: Vec<Word>,
    pub succ: Vec<Vec<usize>>,
}

impl SubSft {
    /// Keeps the given admissible blocks and links overlapping ones.
    pub fn from_blocks(parent: TransitionMatrix, window: usize, blocks: Vec<Word>) -> Self {
        let index: std::collections::HashMap<&[u32], Vec<usize>> =
            blocks.iter().enumerate().fold(Default::default(), |mut m, (i, b)| {
                m.entry(&b.as_slice()[..window - 1]).or_default().push(i);
                m
            });
        let succ = blocks
            .iter()
            .map(|b| index.get(&b.as_slice()[1..]).cloned().unwrap_or_default())
            .collect();
        SubSft {
            parent,
            window,
            blocks,
            succ,
        }
    }

    /// Every admissible block of the parent.
    pub fn full(parent: TransitionMatrix, window: usize) -> Self {
        let blocks = parent.words(window);
        Self::from_blocks(parent, window, blocks)
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of words of length `len` in the sub-shift's language, counted
    /// as paths when `len ≥ window` and as distinct block factors otherwise.
    pub fn count_words(&self, len: usize) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        if len < self.window {
            let mut seen: Vec<&[u32]> = self.blocks.iter().map(|b| &b.as_slice()[..len]).collect();
            seen.sort_unstable();
            seen.dedup();
            return seen.len() as f64;
        }
        let mut v = vec![1.0f64; self.blocks.len()];
        for _ in self.window..len {
            let mut next = vec![0.0; v.len()];
            for (i, s) in self.succ.iter().enumerate() {
                for &j in s {
                    next[j] += v[i];
                }
            }
            v = next;
        }
        v.iter().sum()
    }

    /// Strongly connected components containing a cycle.
    fn cyclic_components(&self) -> Vec<Vec<usize>> {
        let n = self.blocks.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut out = Vec::new();
        let mut counter = 0;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            // iterative Tarjan: (node, next child to visit)
            let mut work = vec![(root, 0usize)];
            while let Some(&(v, child)) = work.last() {
                if child == 0 && index[v] == usize::MAX {
                    index[v] = counter;
                    low[v] = counter;
                    counter += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                if let Some(&w) = self.succ[v].get(child) {
                    work.last_mut().expect("non-empty").1 += 1;
                    if index[w] == usize::MAX {
                        work.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                work.pop();
                if let Some(&(u, _)) = work.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    if comp.len() > 1 || self.succ[v].contains(&v) {
                        comp.sort_unstable();
                        out.push(comp);
                    }
                }
            }
        }
        out
    }

    /// Collatz–Wielandt bounds `(lower, upper)` on the spectral radius.
    pub fn spectral_radius(&self) -> (f64, f64) {
        self.cyclic_components()
            .par_iter()
            .map(|c| component_radius(&self.succ, c))
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    }
}

/// Power iteration on `A + I` restricted to one strongly connected component;
/// the shift makes the matrix primitive without moving the eigenvectors.
fn component_radius(succ: &[Vec<usize>], comp: &[usize]) -> (f64, f64) {
    let pos: std::collections::HashMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges: Vec<Vec<usize>> = comp
        .iter()
        .map(|&v| succ[v].iter().filter_map(|w| pos.get(w).copied()).collect())
        .collect();
    let n = comp.len();
    let mut x = vec![1.0f64; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..200_000 {
        let mut y = x.clone();
        for (i, e) in edges.iter().enumerate() {
            for &j in e {
                y[j] += x[i];
            }
        }
        let (mut a, mut b) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = y[i] / x[i];
            a = a.min(r);
            b = b.max(r);
        }
        lo = a - 1.0;
        hi = b - 1.0;
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let s = y.iter().cloned().fold(0.0, f64::max);
        x = y.into_iter().map(|v| v / s).collect();
    }
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SpectralRadius,
    BoxCounting,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub method: Method,
    /// Block window (spectral) or largest depth (box counting).
    pub window: usize,
    /// Spread of the Collatz–Wielandt bounds, or the largest fit residual.
    pub slack: f64,
}

/// Threshold sub-SFT of `Λ_t` for the fiber maximum `f_F`.
///
/// Each admissible `window`-block is read as a centered cylinder and its
/// range of `f_F` bounded from the hull. `Bound::Upper` keeps blocks whose
/// lower bound is `≤ t` (a superset of `Λ_t`); `Bound::Lower` keeps those
/// whose upper bound is `≤ t` (a subset).
pub fn sub_sft_for_threshold(sys: &SkewSystem, t: f64, window: usize, bound: Bound) -> Result<SubSft> {
    if window < 2 {
        return Err(SpectraError::Domain(format!("window {window} < 2")));
    }
    let words = sys.matrix().words(window);
    let keep: Vec<bool> = words
        .par_iter()
        .map(|w| {
            let rect = sys.tails().hull_centered(sys.embedding(), w.as_slice());
            let (lo, hi) = sys.observable().fiber_range_on(&rect, 256);
            match bound {
                Bound::Upper => lo <= t,
                Bound::Lower => hi <= t,
            }
        })
        .collect();
    let blocks = words.into_iter().zip(keep).filter_map(|(w, k)| k.then_some(w)).collect();
    Ok(SubSft::from_blocks(sys.matrix().clone(), window, blocks))
}

/// `log λ / log b` per axis, doubled for both axes.
pub fn hd_sft(sub: &SubSft, spec: &EmbeddingSpec, axes: Axes) -> DimensionEstimate {
    let (lo, hi) = sub.spectral_radius();
    if sub.is_empty() || hi <= 0.0 {
        return DimensionEstimate {
            value: 0.0,
            method: Method::Empty,
            window: sub.window,
            slack: 0.0,
        };
    }
    let lb = (spec.base as f64).ln();
    let d = |l: f64| axes.factor() * l.max(1.0).ln() / lb;
    let lam = 0.5 * (lo + hi);
    DimensionEstimate {
        value: d(lam),
        method: Method::SpectralRadius,
        window: sub.window,
        slack: d(hi) - d(lo),
    }
}

/// Least-squares slope of `log N_k` against `k log b`, where `N_k` counts
/// cylinders of side `b^{-k}`.
pub fn box_dimension(counts: impl Fn(usize) -> f64, base: f64, depths: &[usize]) -> Result<DimensionEstimate> {
    if depths.len() < 3 {
        return Err(SpectraError::Domain("box counting needs at least 3 depths".into()));
    }
    let pts: Vec<(f64, f64)> = depths
        .iter()
        .map(|&k| (k as f64 * base.ln(), counts(k)))
        .filter(|p| p.1 > 0.0)
        .map(|(x, n)| (x, n.ln()))
        .collect();
    let window = depths.iter().copied().max().unwrap_or(0);
    if pts.is_empty() {
        return Ok(DimensionEstimate {
            value: 0.0,
            method: Method::Empty,
            window,
            slack: 0.0,
        });
    }
    if pts.len() < 2 {
        return Err(SpectraError::Domain("fewer than 2 non-empty depths".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let slack = pts
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mx))).abs())
        .fold(0.0, f64::max);
    Ok(DimensionEstimate {
        value: slope,
        method: Method::BoxCounting,
        window,
        slack,
    })
}

/// Cylinder counts of a sub-SFT at depth `k`: words of length `k` on the
/// unstable axis, `2k` for both axes.
pub fn cylinder_counts(sub: &SubSft, axes: Axes) -> impl Fn(usize) -> f64 + '_ {
    move |k| match axes {
        Axes::Unstable => sub.count_words(k),
        Axes::Both => sub.count_words(2 * k),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub points: Vec<ProfilePoint>,
    /// Largest grid `t` whose upper bound is below [`ZERO_DIM_TOL`].
    pub c_estimate: Option<f64>,
}

/// Dimension below which a threshold set counts as zero-dimensional.
pub const ZERO_DIM_TOL: f64 = 0.01;

/// Both-axis dimension bounds of `Λ_t` along a sorted grid of thresholds.
#[allow(non_snake_case)]
pub fn profile_L(sys: &SkewSystem, t_grid: &[f64], window: usize) -> Result<Profile> {
    if t_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(SpectraError::Domain("threshold grid must be sorted".into()));
    }
    let points = t_grid
        .iter()
        .map(|&t| {
            let up = sub_sft_for_threshold(sys, t, window, Bound::Upper)?;
            let low = sub_sft_for_threshold(sys, t, window, Bound::Lower)?;
            Ok(ProfilePoint {
                t,
                lower: hd_sft(&low, sys.embedding(), Axes::Both).value,
                upper: hd_sft(&up, sys.embedding(), Axes::Both).value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let c_estimate = points.iter().filter(|p| p.upper < ZERO_DIM_TOL).map(|p| p.t).next_back();
    Ok(Profile { points, c_estimate })
}
