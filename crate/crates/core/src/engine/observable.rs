use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circle::Angle;
use crate::error::{Result, SpectraError};
use crate::symbolic::Rect;

/// Step of the central finite differences used when no analytic partials exist.
pub const FD_STEP: f64 = 1e-5;

type SurfaceClosure = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type FiberClosure = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SkewClosure = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Observable on the embedded horseshoe, as a function of `(x_s, x_u)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceFn {
    /// `c0 + cs·x_s + cu·x_u`.
    Linear {
        cs: f64,
        cu: f64,
        #[serde(default)]
        c0: f64,
    },
    /// `−(x_s − a)² − (x_u − b)²`.
    Bump { a: f64, b: f64 },
    /// Closure with a bound on its gradient norm over the unit square.
    #[serde(skip)]
    Custom {
        f: SurfaceClosure,
        lipschitz: f64,
        name: String,
    },
}

impl fmt::Debug for SurfaceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceFn::Linear { cs, cu, c0 } => write!(f, "{c0} + {cs}·xs + {cu}·xu"),
            SurfaceFn::Bump { a, b } => write!(f, "-(xs-{a})^2 - (xu-{b})^2"),
            SurfaceFn::Custom { name, lipschitz, .. } => write!(f, "Custom({name}, L={lipschitz})"),
        }
    }
}

impl SurfaceFn {
    pub fn linear(cs: f64, cu: f64) -> Self {
        SurfaceFn::Linear { cs, cu, c0: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        SurfaceFn::Linear { cs: 0.0, cu: 0.0, c0: c }
    }

    pub fn custom(name: &str, lipschitz: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        SurfaceFn::Custom {
            f: Arc::new(f),
            lipschitz,
            name: name.to_string(),
        }
    }

    #[inline]
    pub fn eval(&self, xs: f64, xu: f64) -> f64 {
        match self {
            SurfaceFn::Linear { cs, cu, c0 } => c0 + cs * xs + cu * xu,
            SurfaceFn::Bump { a, b } => -(xs - a).powi(2) - (xu - b).powi(2),
            SurfaceFn::Custom { f, .. } => f(xs, xu),
        }
    }

    /// `(∂/∂x_s, ∂/∂x_u, analytic)`.
    pub fn grad(&self, xs: f64, xu: f64) -> (f64, f64, bool) {
        match self {
            SurfaceFn::Linear { cs, cu, .. } => (*cs, *cu, true),
            SurfaceFn::Bump { a, b } => (-2.0 * (xs - a), -2.0 * (xu - b), true),
            SurfaceFn::Custom { f, .. } => {
                let h = FD_STEP;
                (
                    (f(xs + h, xu) - f(xs - h, xu)) / (2.0 * h),
                    (f(xs, xu + h) - f(xs, xu - h)) / (2.0 * h),
                    false,
                )
            }
        }
    }

    /// Bound on the gradient norm over the unit square.
    pub fn lipschitz(&self) -> f64 {
        match self {
            SurfaceFn::Linear { cs, cu, .. } => cs.hypot(*cu),
            SurfaceFn::Bump { a, b } => {
                let dx = a.abs().max((1.0 - a).abs());
                let dy = b.abs().max((1.0 - b).abs());
                2.0 * dx.hypot(dy)
            }
            SurfaceFn::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    /// Enclosure `(lo, hi)` of the values on a rectangle.
    pub fn range_on(&self, r: &Rect) -> (f64, f64) {
        let corners = [(r.xs.0, r.xu.0), (r.xs.0, r.xu.1), (r.xs.1, r.xu.0), (r.xs.1, r.xu.1)];
        let at_corners = || {
            corners.iter().map(|&(x, y)| self.eval(x, y)).fold((f64::MAX, f64::MIN), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
        };
        match self {
            SurfaceFn::Linear { .. } => at_corners(),
            SurfaceFn::Bump { a, b } => {
                let (lo, _) = at_corners();
                let hi = self.eval(a.clamp(r.xs.0, r.xs.1), b.clamp(r.xu.0, r.xu.1));
                (lo, hi)
            }
            SurfaceFn::Custom { lipschitz, .. } => {
                let (cx, cy) = r.center();
                let v = self.eval(cx, cy);
                let slack = lipschitz * r.diameter() / 2.0;
                (v - slack, v + slack)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            SurfaceFn::Linear { cs, cu, c0 } => [cs, cu, c0].iter().all(|v| v.is_finite()),
            SurfaceFn::Bump { a, b } => a.is_finite() && b.is_finite(),
            SurfaceFn::Custom { lipschitz, .. } => lipschitz.is_finite() && *lipschitz >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SpectraError::InvalidModel(format!("non-finite parameter in surface function {self:?}")))
        }
    }
}

/// `a·cos 2πkt + b·sin 2πkt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: u32,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

/// Observable on the circle.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberFn {
    /// `c0 + Σ (a_k cos 2πkt + b_k sin 2πkt)`.
    Trig {
        #[serde(default)]
        c0: f64,
        terms: Vec<TrigTerm>,
    },
    #[serde(skip)]
    Custom {
        g: FiberClosure,
        lipschitz: f64,
        name: String,
    },
}

impl fmt::Debug for FiberFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberFn::Trig { c0, terms } => {
                write!(f, "{c0}")?;
                for t in terms {
                    write!(f, " + {}cos(2π{}t) + {}sin(2π{}t)", t.a, t.k, t.b, t.k)?;
                }
                Ok(())
            }
            FiberFn::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl FiberFn {
    pub fn zero() -> Self {
        FiberFn::Trig { c0: 0.0, terms: Vec::new() }
    }

    /// `amp·cos 2π(t − t0)`.
    pub fn cos_shifted(amp: f64, t0: f64) -> Self {
        FiberFn::Trig {
            c0: 0.0,
            terms: vec![TrigTerm {
                k: 1,
                a: amp * (TAU * t0).cos(),
                b: amp * (TAU * t0).sin(),
            }],
        }
    }

    pub fn custom(name: &str, lipschitz: f64, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FiberFn::Custom {
            g: Arc::new(g),
            lipschitz,
            name: name.to_string(),
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            FiberFn::Trig { c0, terms } => terms.iter().fold(*c0, |acc, term| {
                let (s, c) = (TAU * term.k as f64 * t).sin_cos();
                acc + term.a * c + term.b * s
            }),
            FiberFn::Custom { g, .. } => g(t),
        }
    }

    /// `(g', g'', analytic)`.
    pub fn derivs(&self, t: f64) -> (f64, f64, bool) {
        match self {
            FiberFn::Trig { terms, .. } => {
                let (mut d1, mut d2) = (0.0, 0.0);
                for term in terms {
                    let w = TAU * term.k as f64;
                    let (s, c) = (w * t).sin_cos();
                    d1 += w * (-term.a * s + term.b * c);
                    d2 -= w * w * (term.a * c + term.b * s);
                }
                (d1, d2, true)
            }
            FiberFn::Custom { g, .. } => {
                let h = FD_STEP;
                let (gp, g0, gm) = (g(t + h), g(t), g(t - h));
                ((gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h), false)
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            FiberFn::Trig { terms, .. } => terms.iter().map(|t| TAU * t.k as f64 * t.a.hypot(t.b)).sum(),
            FiberFn::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            FiberFn::Trig { c0, terms } => c0.is_finite() && terms.iter().all(|t| t.a.is_finite() && t.b.is_finite()),
            FiberFn::Custom { lipschitz, .. } => lipschitz.is_finite() && *lipschitz >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SpectraError::InvalidModel(format!("non-finite parameter in fiber function {self:?}")))
        }
    }
}

/// Observable `F(x_s, x_u, t)` on the skew product.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    /// `f(x) + scale·g(t)`, or `f(x) + scale·(g(t) − min g)` when `centered`.
    Sum {
        f: SurfaceFn,
        g: FiberFn,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        centered: bool,
    },
    /// `(f(x) − c)·(g(t) − min g)`.
    Product { f: SurfaceFn, c: f64, g: FiberFn },
    /// Closure with Lipschitz bounds in the surface and circle variables.
    #[serde(skip)]
    Custom {
        eval: SkewClosure,
        lipschitz_x: f64,
        lipschitz_t: f64,
        name: String,
    },
}

fn one() -> f64 {
    1.0
}

impl fmt::Debug for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableSpec::Sum { f: s, g, scale, centered } => {
                write!(f, "Sum({s:?} + {scale}·[{g:?}]{})", if *centered { " − min" } else { "" })
            }
            ObservableSpec::Product { f: s, c, g } => write!(f, "Product(({s:?} − {c})·([{g:?}] − min))"),
            ObservableSpec::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl ObservableSpec {
    pub fn sum(f: SurfaceFn, g: FiberFn) -> Self {
        ObservableSpec::Sum {
            f,
            g,
            scale: 1.0,
            centered: false,
        }
    }

    pub fn custom(
        name: &str,
        lipschitz_x: f64,
        lipschitz_t: f64,
        eval: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ObservableSpec::Custom {
            eval: Arc::new(eval),
            lipschitz_x,
            lipschitz_t,
            name: name.to_string(),
        }
    }
}

/// `min`/`max` of a circle function and where they are attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub min: f64,
    pub argmin: Angle,
    pub max: f64,
    pub argmax: Angle,
    /// Both extrema are attained at a single point.
    pub unique: bool,
}

/// Result of maximizing `F(x, ·)` over the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberMax {
    pub t: Angle,
    pub value: f64,
    pub second_deriv: f64,
    pub unique: bool,
    /// Angles whose refined value ties with the maximum (only when not unique).
    pub candidates: Vec<Angle>,
    /// Set when derivatives came from finite differences.
    pub finite_difference: bool,
}

/// Partial derivatives of an observable at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partials {
    pub ds: f64,
    pub du: f64,
    pub dt: f64,
    pub dtt: f64,
    pub analytic: bool,
}

const MAX_CANDIDATES: usize = 32;

/// Maximizes `h` on the circle: grid scan, then bisection on `h'` (or
/// golden-section search without it) around the best grid local maxima.
pub fn maximize_on_circle(
    h: &dyn Fn(f64) -> f64,
    dh: Option<&dyn Fn(f64) -> f64>,
    grid: usize,
    refine_tol: f64,
) -> Result<(Angle, f64, bool, Vec<Angle>)> {
    if grid < 16 {
        return Err(SpectraError::Domain(format!("fiber grid {grid} < 16")));
    }
    let step = 1.0 / grid as f64;
    let vals: Vec<f64> = (0..grid).map(|i| h(i as f64 * step)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(SpectraError::Domain("observable is not finite on the fiber".into()));
    }
    let mut locals: Vec<usize> = (0..grid)
        .filter(|&i| {
            let v = vals[i];
            v >= vals[(i + grid - 1) % grid] && v >= vals[(i + 1) % grid]
        })
        .collect();
    locals.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    locals.truncate(MAX_CANDIDATES);

    let refine = |i: usize| -> (f64, f64) {
        let (mut lo, mut hi) = ((i as f64 - 1.0) * step, (i as f64 + 1.0) * step);
        match dh {
            Some(d) if d(lo) > 0.0 && d(hi) < 0.0 => {
                while hi - lo > refine_tol * 0.25 && hi - lo > 1e-15 {
                    let mid = 0.5 * (lo + hi);
                    if d(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            _ => {
                let g = 0.5 * (5f64.sqrt() - 1.0);
                let (mut a, mut b) = (lo, hi);
                let mut c = b - g * (b - a);
                let mut d = a + g * (b - a);
                let (mut fc, mut fd) = (h(c), h(d));
                while b - a > refine_tol * 0.25 && b - a > 1e-15 {
                    if fc >= fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - g * (b - a);
                        fc = h(c);
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + g * (b - a);
                        fd = h(d);
                    }
                }
                lo = a;
                hi = b;
            }
        }
        let t = 0.5 * (lo + hi);
        let v = h(t);
        if v >= vals[i] {
            (t, v)
        } else {
            (i as f64 * step, vals[i])
        }
    };
    let refined: Vec<(f64, f64)> = locals.iter().map(|&i| refine(i)).collect();
    let (bt, bv) = refined
        .iter()
        .copied()
        .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    let tie_tol = 1e-9 * bv.abs().max(1.0);
    let best = Angle::new(bt);
    let ties: Vec<Angle> = refined
        .iter()
        .filter(|(t, v)| *v >= bv - tie_tol && Angle::new(*t).dist(best) > 2.0 * step)
        .map(|(t, _)| Angle::new(*t))
        .collect();
    let unique = ties.is_empty();
    let mut candidates = Vec::new();
    if !unique {
        candidates.push(best);
        candidates.extend(ties);
    }
    Ok((best, bv, unique, candidates))
}

/// Compiled observable with cached circle extrema.
#[derive(Clone, Debug)]
pub struct Observable {
    spec: ObservableSpec,
    g_ext: Option<Extrema>,
}

const EXTREMA_GRID: usize = 4096;

fn fiber_extrema(g: &FiberFn) -> Result<Extrema> {
    let analytic = g.derivs(0.0).2;
    let dg = |t: f64| g.derivs(t).0;
    let ndg = |t: f64| -g.derivs(t).0;
    let hmax = |t: f64| g.eval(t);
    let hmin = |t: f64| -g.eval(t);
    let (amax, vmax, umax, _) =
        maximize_on_circle(&hmax, if analytic { Some(&dg) } else { None }, EXTREMA_GRID, 1e-13)?;
    let (amin, vmin, umin, _) =
        maximize_on_circle(&hmin, if analytic { Some(&ndg) } else { None }, EXTREMA_GRID, 1e-13)?;
    Ok(Extrema {
        min: -vmin,
        argmin: amin,
        max: vmax,
        argmax: amax,
        unique: umax && umin,
    })
}

impl Observable {
    pub fn new(spec: ObservableSpec) -> Result<Self> {
        let g_ext = match &spec {
            ObservableSpec::Sum { f, g, scale, .. } => {
                f.validate()?;
                g.validate()?;
                if !scale.is_finite() {
                    return Err(SpectraError::InvalidModel("non-finite fiber scale".into()));
                }
                Some(fiber_extrema(g)?)
            }
            ObservableSpec::Product { f, c, g } => {
                f.validate()?;
                g.validate()?;
                if !c.is_finite() {
                    return Err(SpectraError::InvalidModel("non-finite threshold c".into()));
                }
                Some(fiber_extrema(g)?)
            }
            ObservableSpec::Custom {
                lipschitz_x, lipschitz_t, ..
            } => {
                if !(lipschitz_x.is_finite() && lipschitz_t.is_finite()) {
                    return Err(SpectraError::InvalidModel("non-finite Lipschitz bound".into()));
                }
                None
            }
        };
        Ok(Observable { spec, g_ext })
    }

    pub fn spec(&self) -> &ObservableSpec {
        &self.spec
    }

    /// Extrema of the circle factor, for `Sum` and `Product` observables.
    pub fn fiber_extrema(&self) -> Option<Extrema> {
        self.g_ext
    }

    #[inline]
    pub fn eval(&self, xs: f64, xu: f64, t: f64) -> f64 {
        match &self.spec {
            ObservableSpec::Sum { f, g, scale, centered } => {
                let shift = if *centered { self.g_ext.map_or(0.0, |e| e.min) } else { 0.0 };
                f.eval(xs, xu) + scale * (g.eval(t) - shift)
            }
            ObservableSpec::Product { f, c, g } => {
                let m = self.g_ext.map_or(0.0, |e| e.min);
                (f.eval(xs, xu) - c) * (g.eval(t) - m)
            }
            ObservableSpec::Custom { eval, .. } => eval(xs, xu, t),
        }
    }

    pub fn partials(&self, xs: f64, xu: f64, t: f64) -> Partials {
        match &self.spec {
            ObservableSpec::Sum { f, g, scale, .. } => {
                let (ds, du, a1) = f.grad(xs, xu);
                let (d1, d2, a2) = g.derivs(t);
                Partials {
                    ds,
                    du,
                    dt: scale * d1,
                    dtt: scale * d2,
                    analytic: a1 && a2,
                }
            }
            ObservableSpec::Product { f, c, g } => {
                let m = self.g_ext.map_or(0.0, |e| e.min);
                let (ds, du, a1) = f.grad(xs, xu);
                let (d1, d2, a2) = g.derivs(t);
                let gv = g.eval(t) - m;
                let fv = f.eval(xs, xu) - c;
                Partials {
                    ds: ds * gv,
                    du: du * gv,
                    dt: fv * d1,
                    dtt: fv * d2,
                    analytic: a1 && a2,
                }
            }
            ObservableSpec::Custom { eval, .. } => {
                let h = FD_STEP;
                let e = |a: f64, b: f64, c: f64| eval(a, b, c);
                let f0 = e(xs, xu, t);
                let (tp, tm) = (e(xs, xu, t + h), e(xs, xu, t - h));
                Partials {
                    ds: (e(xs + h, xu, t) - e(xs - h, xu, t)) / (2.0 * h),
                    du: (e(xs, xu + h, t) - e(xs, xu - h, t)) / (2.0 * h),
                    dt: (tp - tm) / (2.0 * h),
                    dtt: (tp - 2.0 * f0 + tm) / (h * h),
                    analytic: false,
                }
            }
        }
    }

    /// Bound on `|∇_x F|` over the unit square, uniformly in `t`.
    pub fn lipschitz_x(&self) -> f64 {
        match &self.spec {
            ObservableSpec::Sum { f, .. } => f.lipschitz(),
            ObservableSpec::Product { f, .. } => {
                let e = self.g_ext.expect("extrema cached");
                f.lipschitz() * (e.max - e.min)
            }
            ObservableSpec::Custom { lipschitz_x, .. } => *lipschitz_x,
        }
    }

    /// Bound on `|∂F/∂t|` over the unit square.
    pub fn lipschitz_t(&self) -> f64 {
        match &self.spec {
            ObservableSpec::Sum { g, scale, .. } => scale.abs() * g.lipschitz(),
            ObservableSpec::Product { f, c, g } => {
                let unit = Rect {
                    xs: (0.0, 1.0),
                    xu: (0.0, 1.0),
                };
                let (lo, hi) = f.range_on(&unit);
                (lo - c).abs().max((hi - c).abs()) * g.lipschitz()
            }
            ObservableSpec::Custom { lipschitz_t, .. } => *lipschitz_t,
        }
    }

    /// `true` when `F` does not depend on `t`.
    pub fn fiber_constant(&self) -> bool {
        match &self.spec {
            ObservableSpec::Sum { scale, .. } => *scale == 0.0 || self.g_ext.is_some_and(|e| e.max == e.min),
            ObservableSpec::Product { .. } => self.g_ext.is_some_and(|e| e.max == e.min),
            ObservableSpec::Custom { lipschitz_t, .. } => *lipschitz_t == 0.0,
        }
    }

    /// Enclosure of `f_F` over a rectangle: exact extremes of the surface
    /// factor for `Sum`/`Product`, a Lipschitz ball around the centre otherwise.
    pub fn fiber_range_on(&self, r: &Rect, grid: usize) -> (f64, f64) {
        match (&self.spec, self.g_ext) {
            (ObservableSpec::Sum { f, scale, centered, .. }, Some(e)) => {
                let (lo, hi) = f.range_on(r);
                let shift = if *centered { e.min } else { 0.0 };
                let add = if *scale >= 0.0 { scale * (e.max - shift) } else { scale * (e.min - shift) };
                (lo + add, hi + add)
            }
            (ObservableSpec::Product { f, c, .. }, Some(e)) => {
                let (lo, hi) = f.range_on(r);
                let w = e.max - e.min;
                ((lo - c).max(0.0) * w, (hi - c).max(0.0) * w)
            }
            _ => {
                let (cx, cy) = r.center();
                let v = self.fiber_value(cx, cy, grid);
                let slack = self.lipschitz_x() * r.diameter() / 2.0;
                (v - slack, v + slack)
            }
        }
    }

    /// `f_F(x)` value, using `grid` for observables without structure.
    pub fn fiber_value(&self, xs: f64, xu: f64, grid: usize) -> f64 {
        self.fiber_max_with(xs, xu, grid).value
    }

    /// [`Observable::fiber_max_at`] with an explicit grid for the generic path.
    pub fn fiber_max_with(&self, xs: f64, xu: f64, grid: usize) -> FiberMax {
        match self.spec {
            ObservableSpec::Custom { .. } => fiber_max(self, xs, xu, grid.max(16), 1e-12).expect("grid is valid"),
            _ => self.fiber_max_at(xs, xu),
        }
    }

    /// `f_F(x) = max_t F(x, t)` using the structure of the observable where
    /// possible; falls back to [`fiber_max`] with a 1024-point grid.
    pub fn fiber_max_at(&self, xs: f64, xu: f64) -> FiberMax {
        let e = self.g_ext;
        let fast = |t: Angle, value: f64, dtt: f64, unique: bool| FiberMax {
            t,
            value,
            second_deriv: dtt,
            unique,
            candidates: Vec::new(),
            finite_difference: false,
        };
        match (&self.spec, e) {
            (ObservableSpec::Sum { f, g, scale, centered }, Some(e)) => {
                let base = f.eval(xs, xu);
                let shift = if *centered { e.min } else { 0.0 };
                let flat = *scale == 0.0 || e.max == e.min;
                let (t, gv) = if *scale >= 0.0 { (e.argmax, e.max) } else { (e.argmin, e.min) };
                let dtt = scale * g.derivs(t.value()).1;
                fast(t, base + scale * (gv - shift), dtt, e.unique && !flat)
            }
            (ObservableSpec::Product { f, c, g }, Some(e)) => {
                let fv = f.eval(xs, xu) - c;
                let flat = e.max == e.min;
                if fv > 0.0 {
                    fast(e.argmax, fv * (e.max - e.min), fv * g.derivs(e.argmax.value()).1, e.unique && !flat)
                } else {
                    // F ≤ 0 with equality at the minimizers of g
                    fast(e.argmin, 0.0, fv * g.derivs(e.argmin.value()).1, e.unique && fv < 0.0 && !flat)
                }
            }
            _ => fiber_max(self, xs, xu, 1024, 1e-12).expect("grid is valid"),
        }
    }
}

/// `max_{t∈𝕊¹} F(x, t)` by grid scan plus local refinement to `refine_tol`.
///
/// Ties within tolerance at well-separated angles are reported with
/// `unique = false` and the list of candidates.
pub fn fiber_max(obs: &Observable, xs: f64, xu: f64, grid: usize, refine_tol: f64) -> Result<FiberMax> {
    let h = |t: f64| obs.eval(xs, xu, t);
    let analytic = obs.partials(xs, xu, 0.0).analytic;
    let dh = |t: f64| obs.partials(xs, xu, t).dt;
    let (t, value, unique, candidates) =
        maximize_on_circle(&h, if analytic { Some(&dh) } else { None }, grid, refine_tol)?;
    let p = obs.partials(xs, xu, t.value());
    let second = if analytic {
        p.dtt
    } else {
        let s = FD_STEP;
        (h(t.value() + s) - 2.0 * value + h(t.value() - s)) / (s * s)
    };
    Ok(FiberMax {
        t,
        value,
        second_deriv: second,
        unique,
        candidates,
        finite_difference: !analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sum(cs: f64, cu: f64, g: FiberFn) -> Observable {
        Observable::new(ObservableSpec::sum(SurfaceFn::linear(cs, cu), g)).unwrap()
    }

    #[test]
    fn analytic_fiber_maximum() {
        let obs = sum(1.0, 0.5, FiberFn::cos_shifted(1.0, 0.0));
        let m = fiber_max(&obs, 0.3, 0.2, 64, 1e-12).unwrap();
        assert!(m.t.dist(Angle::new(0.0)) < 1e-8);
        assert!((m.value - (0.3 + 0.1 + 1.0)).abs() < 1e-12);
        assert!((m.second_deriv + TAU * TAU).abs() < 1e-9);
        assert!(m.unique);
    }

    #[test]
    fn centered_sum_adds_full_range() {
        // f + α(g − min g) with g = cos: f_F = f + 2α
        let obs = Observable::new(ObservableSpec::Sum {
            f: SurfaceFn::linear(1.0, 0.0),
            g: FiberFn::cos_shifted(1.0, 0.0),
            scale: 0.3,
            centered: true,
        })
        .unwrap();
        let m = fiber_max(&obs, 0.4, 0.0, 128, 1e-12).unwrap();
        assert!((m.value - (0.4 + 0.6)).abs() < 1e-12);
        assert!((obs.fiber_max_at(0.4, 0.0).value - m.value).abs() < 1e-12);
    }

    #[test]
    fn two_harmonics_match_dense_grid() {
        let obs = Observable::new(ObservableSpec::custom("two-harmonic", 0.0, 3.0 * TAU, |_, _, t| {
            (TAU * t).sin() + 0.5 * (2.0 * TAU * t).sin()
        }))
        .unwrap();
        let tol = 1e-9;
        let m = fiber_max(&obs, 0.0, 0.0, 256, tol).unwrap();
        let n = 1_000_000;
        let (bi, bv) = (0..n)
            .map(|i| (i, obs.eval(0.0, 0.0, i as f64 / n as f64)))
            .fold((0, f64::MIN), |a, x| if x.1 > a.1 { x } else { a });
        assert!(m.t.dist(Angle::new(bi as f64 / n as f64)) < 1.0 / n as f64 + tol);
        assert!(m.value >= bv - 1e-12);
        assert!(m.finite_difference);
    }

    #[test]
    fn constant_in_t_is_not_unique() {
        let obs = sum(1.0, 1.0, FiberFn::zero());
        let m = fiber_max(&obs, 0.1, 0.1, 64, 1e-10).unwrap();
        assert!(!m.unique);
        assert!(m.candidates.len() > 1);
        assert!(!obs.fiber_max_at(0.1, 0.1).unique);
    }

    #[test]
    fn fast_path_matches_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let specs = [
            ObservableSpec::sum(SurfaceFn::linear(1.0, 1.0), FiberFn::cos_shifted(0.2, 0.3)),
            ObservableSpec::Sum {
                f: SurfaceFn::Bump { a: 0.2, b: 0.7 },
                g: FiberFn::cos_shifted(1.0, 0.1),
                scale: -0.5,
                centered: false,
            },
            ObservableSpec::Product {
                f: SurfaceFn::linear(1.0, 1.2),
                c: 0.4,
                g: FiberFn::cos_shifted(1.0, 0.0),
            },
        ];
        for spec in specs {
            let obs = Observable::new(spec).unwrap();
            for _ in 0..50 {
                let (xs, xu) = (rng.gen::<f64>(), rng.gen::<f64>());
                let a = obs.fiber_max_at(xs, xu);
                let b = fiber_max(&obs, xs, xu, 512, 1e-12).unwrap();
                assert!((a.value - b.value).abs() < 1e-10, "{obs:?} {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn adding_constant_shifts_value_not_argmax() {
        let g = FiberFn::Trig {
            c0: 0.0,
            terms: vec![TrigTerm { k: 1, a: 0.3, b: 0.1 }, TrigTerm { k: 2, a: 0.05, b: -0.2 }],
        };
        let a = Observable::new(ObservableSpec::sum(SurfaceFn::linear(1.0, 0.0), g.clone())).unwrap();
        let b = Observable::new(ObservableSpec::sum(
            SurfaceFn::Linear {
                cs: 1.0,
                cu: 0.0,
                c0: 2.5,
            },
            g,
        ))
        .unwrap();
        let (ma, mb) = (fiber_max(&a, 0.3, 0.0, 64, 1e-12).unwrap(), fiber_max(&b, 0.3, 0.0, 64, 1e-12).unwrap());
        assert!((mb.value - ma.value - 2.5).abs() < 1e-12);
        assert!(ma.t.dist(mb.t) < 1e-12);
    }

    #[test]
    fn partials_match_finite_differences() {
        let obs = Observable::new(ObservableSpec::Product {
            f: SurfaceFn::Bump { a: 0.3, b: 0.6 },
            c: -1.0,
            g: FiberFn::cos_shifted(0.7, 0.2),
        })
        .unwrap();
        let (xs, xu, t) = (0.41, 0.23, 0.77);
        let p = obs.partials(xs, xu, t);
        let h = 1e-6;
        let fd_s = (obs.eval(xs + h, xu, t) - obs.eval(xs - h, xu, t)) / (2.0 * h);
        let fd_t = (obs.eval(xs, xu, t + h) - obs.eval(xs, xu, t - h)) / (2.0 * h);
        assert!((p.ds - fd_s).abs() < 1e-7);
        assert!((p.dt - fd_t).abs() < 1e-7);
    }

    #[test]
    fn surface_ranges_enclose_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for f in [SurfaceFn::linear(1.0, -2.0), SurfaceFn::Bump { a: 0.5, b: 0.5 }] {
            for _ in 0..100 {
                let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
                let r = Rect {
                    xs: (a.min(b), a.max(b)),
                    xu: (0.2, 0.3),
                };
                let (lo, hi) = f.range_on(&r);
                for _ in 0..20 {
                    let v = f.eval(rng.gen_range(r.xs.0..=r.xs.1), rng.gen_range(0.2..=0.3));
                    assert!(lo <= v + 1e-15 && v <= hi + 1e-15);
                }
            }
        }
    }
}
