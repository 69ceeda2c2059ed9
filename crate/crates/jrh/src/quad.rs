//! Adaptive Gauss-Legendre panel quadrature along polygonal complex paths.
//!
//! Each panel is integrated once with an m-point rule and once as two halves;
//! the difference is the local error estimate and the halves are bisected
//! further until the estimate falls below the panel's share of the tolerance.
//! Panels are visited in path order, which lets an integrand carry branch
//! information (for example the sign of a square root) from one panel to the
//! next.

use crate::bigc::BigComplex;
use crate::error::{JrhError, Result};
use rug::Float;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of an m-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

fn legendre_and_derivative(m: usize, x: &Float) -> (Float, Float) {
    let p = x.prec();
    let mut p0 = Float::with_val(p, 1);
    let mut p1 = x.clone();
    for k in 2..=m {
        let kf = k as u32;
        let t1 = Float::with_val(p, x * &p1) * (2 * kf - 1);
        let t2 = Float::with_val(p, &p0 * (kf - 1));
        let p2 = (t1 - t2) / kf;
        p0 = p1;
        p1 = p2;
    }
    let one_minus = Float::with_val(p, 1) - Float::with_val(p, x * x);
    let d = Float::with_val(p, Float::with_val(p, &p0 - Float::with_val(p, x * &p1)) * m as u32) / one_minus;
    (p1, d)
}

fn compute_rule(m: usize, prec: u32) -> GaussLegendre {
    let wp = prec + 32;
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let eps = Float::with_val(wp, Float::i_exp(1, -(prec as i32) - 8));
    for i in 0..m {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut x = Float::with_val(wp, guess);
        for _ in 0..100 {
            let (pv, dv) = legendre_and_derivative(m, &x);
            let dx = Float::with_val(wp, &pv / &dv);
            x -= &dx;
            if dx.abs() < eps {
                break;
            }
        }
        let (_, dv) = legendre_and_derivative(m, &x);
        let one_minus = Float::with_val(wp, 1) - Float::with_val(wp, &x * &x);
        let w = Float::with_val(wp, 2) / (one_minus * Float::with_val(wp, &dv * &dv));
        nodes.push(Float::with_val(prec, &x));
        weights.push(Float::with_val(prec, &w));
    }
    GaussLegendre { nodes, weights }
}

/// Cached rule for `(m, prec)`.
pub fn gauss_legendre(m: usize, prec: u32) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&(m, prec)) {
        return r.clone();
    }
    let rule = Arc::new(compute_rule(m, prec));
    cache.lock().unwrap().insert((m, prec), rule.clone());
    rule
}

/// Rule size used at a given precision.
pub fn default_order(prec: u32) -> usize {
    if prec <= 64 {
        16
    } else if prec <= 160 {
        24
    } else if prec <= 320 {
        40
    } else {
        64
    }
}

/// Integrand evaluated along a path. `State` carries branch information from
/// one panel to the next; `advance` is called at every accepted panel end.
pub trait PathIntegrand {
    type State: Clone;
    fn eval(&self, t: &BigComplex, state: &Self::State) -> BigComplex;
    fn advance(&self, t: &BigComplex, state: &Self::State) -> Self::State;
    /// Upper bound on the length of a panel starting at `a` (no bound if `None`).
    fn max_panel(&self, _a: &BigComplex, _b: &BigComplex) -> Option<f64> {
        None
    }
}

/// Stateless integrand given by a closure.
pub struct FnIntegrand<F: Fn(&BigComplex) -> BigComplex>(pub F);

impl<F: Fn(&BigComplex) -> BigComplex> PathIntegrand for FnIntegrand<F> {
    type State = ();
    fn eval(&self, t: &BigComplex, _s: &()) -> BigComplex {
        (self.0)(t)
    }
    fn advance(&self, _t: &BigComplex, _s: &()) {}
}

#[derive(Clone, Debug)]
pub struct QuadOptions {
    pub tol: f64,
    pub max_depth: u32,
    pub order: usize,
    pub prec: u32,
}

impl QuadOptions {
    pub fn new(tol: f64, prec: u32) -> Self {
        QuadOptions { tol, max_depth: 40, order: default_order(prec), prec }
    }
}

#[derive(Clone, Debug)]
pub struct QuadResult {
    pub value: BigComplex,
    pub error: f64,
}

/// Map from the panel parameter to the complex plane: either the straight
/// segment `a + (b-a) u` or, for a square-root endpoint singularity at `a`,
/// `a + (b-a) u^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentMap {
    Linear,
    SqrtStart,
}

struct Seg<'a> {
    a: &'a BigComplex,
    d: BigComplex,
    map: SegmentMap,
}

impl<'a> Seg<'a> {
    fn point(&self, u: &Float) -> BigComplex {
        match self.map {
            SegmentMap::Linear => self.a + &self.d.scale(u),
            SegmentMap::SqrtStart => {
                let u2 = Float::with_val(u.prec(), u * u);
                self.a + &self.d.scale(&u2)
            }
        }
    }

    fn jacobian(&self, u: &Float) -> BigComplex {
        match self.map {
            SegmentMap::Linear => self.d.clone(),
            SegmentMap::SqrtStart => self.d.scale(&Float::with_val(u.prec(), u * 2u32)),
        }
    }
}

fn panel_rule<I: PathIntegrand>(
    f: &I,
    seg: &Seg,
    u0: &Float,
    u1: &Float,
    state: &I::State,
    rule: &GaussLegendre,
    prec: u32,
) -> BigComplex {
    let half = Float::with_val(prec, Float::with_val(prec, u1 - u0) / 2u32);
    let mid = Float::with_val(prec, Float::with_val(prec, u1 + u0) / 2u32);
    let mut acc = BigComplex::zero(prec);
    for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let u = Float::with_val(prec, &mid + Float::with_val(prec, &half * x));
        let t = seg.point(&u);
        let v = &f.eval(&t, state) * &seg.jacobian(&u);
        acc += v.scale(w);
    }
    acc.scale(&half)
}

struct Work {
    value: BigComplex,
    error: f64,
}

#[allow(clippy::too_many_arguments)]
fn adapt<I: PathIntegrand>(
    f: &I,
    seg: &Seg,
    u0: Float,
    u1: Float,
    whole: Option<BigComplex>,
    state: &mut I::State,
    opts: &QuadOptions,
    rule: &GaussLegendre,
    tol: f64,
    depth: u32,
    out: &mut Work,
) -> Result<()> {
    let prec = opts.prec;
    let um = Float::with_val(prec, Float::with_val(prec, &u0 + &u1) / 2u32);
    let p0 = seg.point(&u0);
    let p1 = seg.point(&u1);
    let too_long = f.max_panel(&p0, &p1).is_some_and(|lmax| p0.dist(&p1).to_f64() > lmax);
    let whole = match whole {
        Some(w) => w,
        None => panel_rule(f, seg, &u0, &u1, state, rule, prec),
    };
    if !too_long {
        let left = panel_rule(f, seg, &u0, &um, state, rule, prec);
        // The right half uses the branch state carried to the midpoint.
        let pm = seg.point(&um);
        let mid_state = f.advance(&pm, state);
        let right = panel_rule(f, seg, &um, &u1, &mid_state, rule, prec);
        let sum = &left + &right;
        let err = (&sum - &whole).abs().to_f64();
        if err <= tol || depth >= opts.max_depth {
            if err > tol {
                return Err(JrhError::QuadNoConverge { tol, estimate: err });
            }
            out.value += &sum;
            out.error += err;
            *state = f.advance(&p1, &mid_state);
            return Ok(());
        }
        let half_tol = tol / 2.0;
        adapt(f, seg, u0, um.clone(), Some(left), state, opts, rule, half_tol, depth + 1, out)?;
        return adapt(f, seg, um, u1, Some(right), state, opts, rule, half_tol, depth + 1, out);
    }
    if depth >= opts.max_depth {
        return Err(JrhError::QuadNoConverge { tol, estimate: f64::INFINITY });
    }
    let half_tol = tol / 2.0;
    adapt(f, seg, u0, um.clone(), None, state, opts, rule, half_tol, depth + 1, out)?;
    adapt(f, seg, um, u1, None, state, opts, rule, half_tol, depth + 1, out)
}

/// Integrates `f` along the straight segment from `a` to `b`, updating the
/// branch state to its value at `b`.
pub fn integrate_segment<I: PathIntegrand>(
    f: &I,
    a: &BigComplex,
    b: &BigComplex,
    map: SegmentMap,
    state: &mut I::State,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let prec = opts.prec;
    let rule = gauss_legendre(opts.order, prec);
    let seg = Seg { a, d: b - a, map };
    let mut out = Work { value: BigComplex::zero(prec), error: 0.0 };
    adapt(
        f,
        &seg,
        Float::with_val(prec, 0),
        Float::with_val(prec, 1),
        None,
        state,
        opts,
        &rule,
        opts.tol,
        0,
        &mut out,
    )?;
    Ok(QuadResult { value: out.value, error: out.error })
}

/// Integrates along a polyline. The first segment may use the square-root
/// endpoint map; the tolerance is split in proportion to segment length.
pub fn integrate_polyline<I: PathIntegrand>(
    f: &I,
    points: &[BigComplex],
    first_map: SegmentMap,
    state: &mut I::State,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let prec = opts.prec;
    let lens: Vec<f64> = points.windows(2).map(|w| w[0].dist(&w[1]).to_f64()).collect();
    let total: f64 = lens.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let mut value = BigComplex::zero(prec);
    let mut error = 0.0;
    for (k, w) in points.windows(2).enumerate() {
        if lens[k] == 0.0 {
            continue;
        }
        let map = if k == 0 { first_map } else { SegmentMap::Linear };
        let sub = QuadOptions { tol: opts.tol * (lens[k] / total).max(1e-3), ..opts.clone() };
        let r = integrate_segment(f, &w[0], &w[1], map, state, &sub)?;
        value += &r.value;
        error += r.error;
    }
    Ok(QuadResult { value, error })
}
