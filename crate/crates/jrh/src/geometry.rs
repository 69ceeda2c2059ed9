//! Branch points, the square root R(z) cut along Γ_C, traced trajectories of
//! the quadratic differential and the region structure they induce.
//!
//! Arcs are traced once per parameter pair and kept in a [`Geometry`], which
//! is immutable afterwards and can be shared between threads.

use crate::bigc::{pi, BigComplex};
use crate::error::{JrhError, Result};
use crate::params::ParameterPair;
use crate::planar::{self, P2};
use crate::quad::{gauss_legendre, GaussLegendre};
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;

/// The two zeros ζ± of the quadratic differential, ζ- = conj(ζ+).
#[derive(Clone, Debug, PartialEq)]
pub struct BranchPoints {
    pub zeta_plus: BigComplex,
    pub zeta_minus: BigComplex,
}

/// ζ± = (B² - A² ± 4i sqrt((A+1)(B+1)(-A-B-1))) / (A+B+2)².
pub fn branch_points(params: &ParameterPair, prec: u32) -> BranchPoints {
    let a = params.a();
    let b = params.b();
    let s = params.s_rational();
    let s2 = Rational::from(&s * &s);
    let re = (Rational::from(b * b) - Rational::from(a * a)) / &s2;
    let prod = Rational::from(a + 1u32) * Rational::from(b + 1u32) * (Rational::from(-a) - b - 1u32);
    let wp = prec + 16;
    let im = Float::with_val(wp, &prod).sqrt() * 4u32 / Float::with_val(wp, &s2);
    let re = Float::with_val(prec, &re);
    let im = Float::with_val(prec, &im);
    BranchPoints {
        zeta_plus: BigComplex::new(re.clone(), im.clone()),
        zeta_minus: BigComplex::new(re, -im),
    }
}

impl BranchPoints {
    pub fn distance(&self) -> Float {
        self.zeta_plus.dist(&self.zeta_minus)
    }
}

/// Local evaluator for R, q = (A+B+2)/2 · R/(z²-1) and the quarter root
/// ((z-ζ-)/(z-ζ+))^{1/4}, each on the branch whose cut is the straight
/// segment [ζ-, ζ+]. Global branches are obtained by sign corrections
/// (see [`Geometry::r_eval`]) or by continuation.
#[derive(Clone, Debug)]
pub struct Field {
    pub prec: u32,
    pub s_half: Float,
    pub m: Float,
    pub b: Float,
    b2: Float,
    pub zp: BigComplex,
    pub zm: BigComplex,
}

impl Field {
    pub fn new(params: &ParameterPair, prec: u32) -> Field {
        let bp = branch_points(params, prec);
        let m = bp.zeta_plus.re.clone();
        let b = bp.zeta_plus.im.clone();
        let b2 = Float::with_val(prec, &b * &b);
        let s_half = Float::with_val(prec, params.s_float(prec) / 2u32);
        Field { prec, s_half, m, b, b2, zp: bp.zeta_plus, zm: bp.zeta_minus }
    }

    pub fn branch_points(&self) -> BranchPoints {
        BranchPoints { zeta_plus: self.zp.clone(), zeta_minus: self.zm.clone() }
    }

    /// (z-m) sqrt(1 + b²/(z-m)²): a square root of (z-ζ+)(z-ζ-) that behaves
    /// like z at infinity, cut along the vertical segment [ζ-, ζ+].
    pub fn r_seg(&self, z: &BigComplex) -> BigComplex {
        let p = self.prec;
        let mut w = BigComplex::new(Float::with_val(p, &z.re - &self.m), Float::with_val(p, &z.im));
        if w.re.is_zero() {
            // Points on the vertical line through the segment take the value
            // from the right.
            let tiny = Float::with_val(p, Float::i_exp(1, -(p as i32))) * Float::with_val(p, w.im.clone().abs() + 1u32);
            w.re = tiny;
        }
        if w.is_zero() {
            return BigComplex::new(Float::new(p), self.b.clone());
        }
        let w2 = w.square();
        let ratio = BigComplex::from_real(self.b2.clone()) / &w2;
        let inner = &BigComplex::one(p) + &ratio;
        &w * &inner.sqrt()
    }

    /// The sign of [`Field::r_seg`] closest to `reference`.
    pub fn r_near(&self, z: &BigComplex, reference: &BigComplex) -> BigComplex {
        let r = self.r_seg(z);
        let dot = Float::with_val(self.prec, &r.re * &reference.re) + Float::with_val(self.prec, &r.im * &reference.im);
        if dot.is_sign_negative() {
            -r
        } else {
            r
        }
    }

    pub fn q(&self, z: &BigComplex, r: &BigComplex) -> BigComplex {
        let den = &z.square() - &BigComplex::one(self.prec);
        (r / &den).scale(&self.s_half)
    }

    /// Principal fourth root of (z-ζ-)/(z-ζ+); its cut is the segment [ζ-, ζ+].
    pub fn a_seg(&self, z: &BigComplex) -> BigComplex {
        let w = &(z - &self.zm) / &(z - &self.zp);
        w.sqrt().sqrt()
    }

    /// The fourth root i^k · a_seg(z) closest to `reference`.
    pub fn a_near(&self, z: &BigComplex, reference: &BigComplex) -> BigComplex {
        let base = self.a_seg(z);
        let cands = [base.clone(), base.mul_i(), -&base, base.mul_neg_i()];
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (k, c) in cands.iter().enumerate() {
            let d = c.dist(reference).to_f64();
            if d < bd {
                bd = d;
                best = k;
            }
        }
        cands[best].clone()
    }

    /// R on the straight leg from ζ- to ζ- + d, written as
    /// σ sqrt((t-ζ-)/d) sqrt(d) sqrt(t-ζ+), which is continuous along the leg
    /// for legs much shorter than |ζ+ - ζ-|.
    pub fn r_leg(&self, t: &BigComplex, d: &BigComplex, sigma: i32) -> BigComplex {
        let p = self.prec;
        let u2 = (&(t - &self.zm) / d).re;
        let u = if u2.is_sign_negative() { Float::new(p) } else { u2.sqrt() };
        let v = (&d.sqrt() * &(t - &self.zp).sqrt()).scale(&u);
        if sigma < 0 {
            -v
        } else {
            v
        }
    }

    /// Straight-chord integral of q from `a` to `b` with an 8-point rule, the
    /// branch of R continued from `r_a`. Returns the increment and R at `b`.
    pub fn chord(&self, a: &BigComplex, b: &BigComplex, r_a: &BigComplex, rule: &GaussLegendre) -> (BigComplex, BigComplex) {
        let p = self.prec;
        let d = b - a;
        let half = d.scale_f64(0.5);
        let mid = (a + b).scale_f64(0.5);
        let mut r = r_a.clone();
        let mut acc = BigComplex::zero(p);
        for (x, w) in rule.nodes.iter().zip(rule.weights.iter()).rev() {
            let t = &mid + &half.scale(x);
            r = self.r_near(&t, &r);
            acc += self.q(&t, &r).scale(w);
        }
        let rb = self.r_near(b, &r);
        (&acc * &half, rb)
    }

    /// Continues R along the straight segment from `a` (value `r_a`) to `b`.
    pub fn continue_r(&self, a: &BigComplex, b: &BigComplex, r_a: &BigComplex, pieces: usize) -> BigComplex {
        let mut r = r_a.clone();
        let d = b - a;
        for k in 1..=pieces {
            let t = a + &d.scale_f64(k as f64 / pieces as f64);
            r = self.r_near(&t, &r);
        }
        r
    }

    /// Continues the quarter root along the straight segment from `a` to `b`.
    pub fn continue_a(&self, a: &BigComplex, b: &BigComplex, a_a: &BigComplex, pieces: usize) -> BigComplex {
        let mut v = a_a.clone();
        let d = b - a;
        for k in 1..=pieces {
            let t = a + &d.scale_f64(k as f64 / pieces as f64);
            v = self.a_near(&t, &v);
        }
        v
    }

    /// K² in q ≈ K (z-ζ-)^{1/2} near ζ-.
    pub fn k_squared(&self) -> BigComplex {
        let one = BigComplex::one(self.prec);
        let den = (&self.zm.square() - &one).square();
        let s2 = Float::with_val(self.prec, &self.s_half * &self.s_half);
        (&(&self.zm - &self.zp) / &den).scale(&s2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelComponent {
    Outer,
    NearPlus1,
    NearMinus1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArcKind {
    GammaL,
    GammaC,
    GammaR,
    GammaPerpPlus1(Sign),
    GammaPerpMinus1(Sign),
    GammaPerpInfinity(Sign),
    LevelSet(LevelComponent),
}

impl fmt::Display for ArcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sg = |s: &Sign| if *s == Sign::Plus { "plus" } else { "minus" };
        match self {
            ArcKind::GammaL => write!(f, "gamma_L"),
            ArcKind::GammaC => write!(f, "gamma_C"),
            ArcKind::GammaR => write!(f, "gamma_R"),
            ArcKind::GammaPerpPlus1(s) => write!(f, "perp_1_{}", sg(s)),
            ArcKind::GammaPerpMinus1(s) => write!(f, "perp_-1_{}", sg(s)),
            ArcKind::GammaPerpInfinity(s) => write!(f, "perp_inf_{}", sg(s)),
            ArcKind::LevelSet(LevelComponent::Outer) => write!(f, "level_outer"),
            ArcKind::LevelSet(LevelComponent::NearPlus1) => write!(f, "level_near_1"),
            ArcKind::LevelSet(LevelComponent::NearMinus1) => write!(f, "level_near_-1"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Anchor {
    ZetaPlus,
    ZetaMinus,
    PlusOne,
    MinusOne,
    Infinity,
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    ZetaPlusToZetaMinus,
    ZetaMinusToZetaPlus,
    FromBranchPoint,
    Counterclockwise,
}

/// A traced arc. `rvals[k]` is R at `points[k]`; on Γ_C it is the boundary
/// value from the + side (the left of the orientation).
#[derive(Clone, Debug)]
pub struct Arc {
    pub kind: ArcKind,
    pub points: Vec<BigComplex>,
    pub rvals: Vec<BigComplex>,
    pub endpoints: (Anchor, Anchor),
    pub orientation: Orientation,
    pub level: Option<f64>,
    line: Vec<P2>,
}

impl Arc {
    fn build(
        kind: ArcKind,
        points: Vec<BigComplex>,
        rvals: Vec<BigComplex>,
        endpoints: (Anchor, Anchor),
        orientation: Orientation,
        level: Option<f64>,
    ) -> Arc {
        let line = points.iter().map(|p| p.to_c64()).collect();
        Arc { kind, points, rvals, endpoints, orientation, level, line }
    }

    /// f64 copy of the points, used for planar predicates.
    pub fn line(&self) -> &[P2] {
        &self.line
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_spacing(&self) -> f64 {
        self.line.windows(2).map(|w| planar::norm((w[1].0 - w[0].0, w[1].1 - w[0].1))).fold(0.0, f64::max)
    }

    pub fn distance_to(&self, z: P2) -> f64 {
        let mut pts = self.line.clone();
        if self.endpoints.1 == Anchor::Closed {
            pts.push(self.line[0]);
        }
        planar::point_polyline_dist(z, &pts).0
    }

    /// Arclength of the polyline.
    pub fn length(&self) -> f64 {
        self.line.windows(2).map(|w| planar::norm((w[1].0 - w[0].0, w[1].1 - w[0].1))).sum()
    }

    /// Conjugated copy with the given kind (points keep their order).
    fn mirrored(&self, kind: ArcKind) -> Arc {
        let points = self.points.iter().map(|p| p.conj()).collect();
        let rvals = self.rvals.iter().map(|p| p.conj()).collect();
        let endpoints = (mirror_anchor(self.endpoints.0), mirror_anchor(self.endpoints.1));
        Arc::build(kind, points, rvals, endpoints, self.orientation, self.level)
    }
}

fn mirror_anchor(a: Anchor) -> Anchor {
    match a {
        Anchor::ZetaPlus => Anchor::ZetaMinus,
        Anchor::ZetaMinus => Anchor::ZetaPlus,
        x => x,
    }
}

#[derive(Clone, Debug)]
pub struct TraceOptions {
    /// Maximal distance between consecutive stored points.
    pub step: f64,
    /// Tolerance on Re φ (trajectories) or Im φ (orthogonal trajectories).
    pub tol: f64,
    pub prec: u32,
    /// Cut-proximity tolerance relative to |ζ+ - ζ-|.
    pub cut_tol_rel: f64,
    pub max_steps: usize,
    /// Bounding box radius in units of 1 + |ζ+|.
    pub box_factor: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { step: 0.01, tol: 1e-13, prec: 128, cut_tol_rel: 1e-8, max_steps: 200_000, box_factor: 10.0 }
    }
}

impl TraceOptions {
    pub fn new(step: f64, tol: f64) -> Self {
        TraceOptions { step, tol, ..Default::default() }
    }
}

#[derive(Clone, Debug)]
struct TState {
    z: BigComplex,
    r: BigComplex,
    phi: BigComplex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Flow {
    /// Re φ constant.
    Level,
    /// Im φ constant.
    Orthogonal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Goal {
    CrossUp,
    CrossDown,
    PoleOrInfinity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Ending {
    Real,
    Pole(i32),
    Infinity,
}

// Dormand-Prince 5(4) tableau.
const DP_A: [&[(i64, i64)]; 6] = [
    &[(1, 5)],
    &[(3, 40), (9, 40)],
    &[(44, 45), (-56, 15), (32, 9)],
    &[(19372, 6561), (-25360, 2187), (64448, 6561), (-212, 729)],
    &[(9017, 3168), (-355, 33), (46732, 5247), (49, 176), (-5103, 18656)],
    &[(35, 384), (0, 1), (500, 1113), (125, 192), (-2187, 6784), (11, 84)],
];
const DP_E: [(i64, i64); 7] = [
    (71, 57600),
    (0, 1),
    (-71, 16695),
    (71, 1920),
    (-17253, 339200),
    (22, 525),
    (-1, 40),
];

struct Tracer<'a> {
    field: &'a Field,
    flow: Flow,
    target: Float,
    dir: i32,
    tol: f64,
    rk_tol: f64,
    hmax: f64,
    box_radius: f64,
    max_steps: usize,
    singular: [P2; 4],
    rule: std::sync::Arc<GaussLegendre>,
    a: Vec<Vec<Float>>,
    e: Vec<Float>,
}

fn frac(prec: u32, (p, q): (i64, i64)) -> Float {
    Float::with_val(prec, Rational::from((p, q)))
}

impl<'a> Tracer<'a> {
    fn new(field: &'a Field, flow: Flow, target: Float, opts: &TraceOptions, box_radius: f64) -> Self {
        let p = field.prec;
        let a = DP_A.iter().map(|row| row.iter().map(|&c| frac(p, c)).collect()).collect();
        let e = DP_E.iter().map(|&c| frac(p, c)).collect();
        let singular = [field.zp.to_c64(), field.zm.to_c64(), (1.0, 0.0), (-1.0, 0.0)];
        Tracer {
            field,
            flow,
            target,
            dir: 1,
            tol: opts.tol,
            rk_tol: (opts.tol * 1e3).max(1e-11),
            hmax: opts.step,
            box_radius,
            max_steps: opts.max_steps,
            singular,
            rule: gauss_legendre(8, p),
            a,
            e,
        }
    }

    fn velocity(&self, z: &BigComplex, r: &BigComplex) -> BigComplex {
        let q = self.field.q(z, r);
        let base = match self.flow {
            Flow::Level => q.conj().mul_i(),
            Flow::Orthogonal => q.conj(),
        };
        let n = base.abs();
        let v = BigComplex::new(Float::with_val(self.field.prec, &base.re / &n), Float::with_val(self.field.prec, &base.im / &n));
        if self.dir < 0 {
            -v
        } else {
            v
        }
    }

    fn dist_singular(&self, z: P2) -> f64 {
        self.singular.iter().map(|s| planar::norm((z.0 - s.0, z.1 - s.1))).fold(f64::INFINITY, f64::min)
    }

    fn rk_step(&self, st: &TState, h: f64) -> (BigComplex, f64) {
        let p = self.field.prec;
        let hf = Float::with_val(p, h);
        let mut ks: Vec<BigComplex> = Vec::with_capacity(7);
        ks.push(self.velocity(&st.z, &st.r));
        for row in &self.a {
            let mut zi = st.z.clone();
            for (c, k) in row.iter().zip(ks.iter()) {
                if !c.is_zero() {
                    zi += k.scale(&Float::with_val(p, c * &hf));
                }
            }
            let ri = self.field.r_near(&zi, &st.r);
            ks.push(self.velocity(&zi, &ri));
        }
        // Row 6 of the tableau is the fifth-order solution (FSAL).
        let mut z5 = st.z.clone();
        for (c, k) in self.a[5].iter().zip(ks.iter()) {
            if !c.is_zero() {
                z5 += k.scale(&Float::with_val(p, c * &hf));
            }
        }
        let mut err = BigComplex::zero(p);
        for (c, k) in self.e.iter().zip(ks.iter()) {
            if !c.is_zero() {
                err += k.scale(c);
            }
        }
        (z5, err.abs_f64() * h)
    }

    fn defect(&self, phi: &BigComplex) -> Float {
        let v = match self.flow {
            Flow::Level => &phi.re,
            Flow::Orthogonal => &phi.im,
        };
        Float::with_val(self.field.prec, v - &self.target)
    }

    fn advance(&self, from: &TState, to: BigComplex) -> TState {
        let (dphi, r) = self.field.chord(&from.z, &to, &from.r, &self.rule);
        let mut st = TState { phi: &from.phi + &dphi, z: to, r };
        self.project(&mut st);
        st
    }

    /// Newton correction normal to the curve until the defect is below tol.
    fn project(&self, st: &mut TState) {
        for _ in 0..6 {
            let e = self.defect(&st.phi);
            if e.to_f64().abs() < self.tol * 1e-3 {
                return;
            }
            let q = self.field.q(&st.z, &st.r);
            let n2 = q.norm_sqr();
            let mut delta = q.conj().scale(&Float::with_val(self.field.prec, -e / n2));
            if self.flow == Flow::Orthogonal {
                delta = delta.mul_i();
            }
            let to = &st.z + &delta;
            let (dphi, r) = self.field.chord(&st.z, &to, &st.r, &self.rule);
            st.phi += &dphi;
            st.z = to;
            st.r = r;
        }
    }

    /// Locates the real point of the curve between `a` (off the axis) and `b`
    /// (on the other side) by Newton iteration along the real axis.
    fn refine_real(&self, a: &TState, b: &TState) -> Result<TState> {
        let p = self.field.prec;
        let (ax, ay) = a.z.to_c64();
        let (bx, by) = b.z.to_c64();
        let x0 = if by == ay { bx } else { ax - ay * (bx - ax) / (by - ay) };
        let z0 = BigComplex::new(Float::with_val(p, x0), Float::new(p));
        let (dphi, r) = self.field.chord(&a.z, &z0, &a.r, &self.rule);
        let mut st = TState { phi: &a.phi + &dphi, z: z0, r };
        for _ in 0..60 {
            let e = self.defect(&st.phi);
            if e.to_f64().abs() < self.tol * 1e-3 {
                return Ok(st);
            }
            let q = self.field.q(&st.z, &st.r);
            let dq = match self.flow {
                Flow::Level => q.re.clone(),
                Flow::Orthogonal => q.im.clone(),
            };
            let dx = Float::with_val(p, -e / dq);
            let to = BigComplex::new(Float::with_val(p, &st.z.re + &dx), Float::new(p));
            let (dphi, r) = self.field.chord(&st.z, &to, &st.r, &self.rule);
            st.phi += &dphi;
            st.z = to;
            st.r = r;
        }
        Err(JrhError::TraceDiverged("real-axis crossing did not converge".into()))
    }

    fn run(&self, start: TState, goal: Goal, end_eps: f64) -> Result<(Vec<TState>, Ending)> {
        let mut pts = vec![start];
        let z0 = pts[0].z.to_c64();
        let mut h = (0.25 * self.dist_singular(z0)).min(self.hmax);
        if h == 0.0 {
            h = self.hmax;
        }
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > self.max_steps {
                return Err(JrhError::TraceDiverged(format!("more than {} steps", self.max_steps)));
            }
            let cur = pts.last().unwrap().clone();
            let zc = cur.z.to_c64();
            let hcap = (0.25 * self.dist_singular(zc)).min(self.hmax);
            h = h.min(hcap);
            if h < 1e-300 {
                return Err(JrhError::TraceDiverged("step size underflow".into()));
            }
            let (zn, err) = self.rk_step(&cur, h);
            if !(err <= self.rk_tol) {
                let f = if err.is_finite() { (0.9 * (self.rk_tol / err).powf(0.2)).max(0.1) } else { 0.1 };
                h *= f;
                continue;
            }
            let new = self.advance(&cur, zn);
            let (nx, ny) = new.z.to_c64();
            match goal {
                Goal::CrossUp if ny >= 0.0 => {
                    let fin = self.refine_real(&cur, &new)?;
                    pts.push(fin);
                    return Ok((pts, Ending::Real));
                }
                Goal::CrossDown if ny <= 0.0 && pts.len() > 1 => {
                    let fin = self.refine_real(&cur, &new)?;
                    pts.push(fin);
                    return Ok((pts, Ending::Real));
                }
                Goal::PoleOrInfinity => {
                    for s in [1i32, -1] {
                        if planar::norm((nx - s as f64, ny)) < end_eps {
                            let p = self.field.prec;
                            let pole = BigComplex::new(Float::with_val(p, s), Float::new(p));
                            let r = self.field.r_near(&pole, &new.r);
                            let phi = new.phi.clone();
                            pts.push(new);
                            pts.push(TState { z: pole, r, phi });
                            return Ok((pts, Ending::Pole(s)));
                        }
                    }
                    if planar::norm((nx, ny)) > self.box_radius {
                        pts.push(new);
                        return Ok((pts, Ending::Infinity));
                    }
                    if ny > 0.0 {
                        return Err(JrhError::TraceDiverged("orthogonal trajectory left the lower half-plane".into()));
                    }
                }
                _ => {}
            }
            if planar::norm((nx, ny)) > self.box_radius {
                return Err(JrhError::TraceDiverged(format!("left the bounding box |z| <= {}", self.box_radius)));
            }
            pts.push(new);
            let grow = if err > 0.0 { (0.9 * (self.rk_tol / err).powf(0.2)).min(4.0) } else { 4.0 };
            h *= grow.max(1.0);
        }
    }
}

/// Region of the plane relative to Γ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Omega {
    OmegaMinus1,
    OmegaPlus1,
    OmegaInfinity,
}

/// Domains I-VI, numbered from left to right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl Domain {
    pub fn omega(self) -> Omega {
        match self {
            Domain::I | Domain::VI => Omega::OmegaInfinity,
            Domain::II | Domain::III => Omega::OmegaMinus1,
            Domain::IV | Domain::V => Omega::OmegaPlus1,
        }
    }

    pub fn all() -> [Domain; 6] {
        [Domain::I, Domain::II, Domain::III, Domain::IV, Domain::V, Domain::VI]
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Domain::I => "I",
            Domain::II => "II",
            Domain::III => "III",
            Domain::IV => "IV",
            Domain::V => "V",
            Domain::VI => "VI",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub omega: Omega,
    pub domain: Domain,
    /// Nearest arc when the point lies within the classification margin of it.
    pub boundary: Option<ArcKind>,
}

/// The four parts of the open upper half-plane cut out by Γ_C, γ_{-1}^+,
/// γ_1^+ and γ_∞^+, named by the real interval they touch:
/// `S1` (-∞,-1), `S2` (-1,ξ_C), `S3` (ξ_C,1), `S4` (1,∞).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    S1,
    S2,
    S3,
    S4,
}

/// Side of Γ_C, + being the left of its orientation from ζ+ to ζ-.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

/// All traced structure for one parameter pair.
#[derive(Clone, Debug)]
pub struct Geometry {
    params: ParameterPair,
    opts: TraceOptions,
    field: Field,
    gamma: [Arc; 3],
    perp: [Arc; 6],
    xi: [Float; 3],
    crit_angles: [f64; 3],
    perp_angles: [f64; 3],
    box_radius: f64,
    scale: f64,
    cut_tol: f64,
    near_band: f64,
    exit_angle: f64,
    poly_omega_m1: Vec<P2>,
    poly_omega_p1: Vec<P2>,
    poly_iii: Vec<P2>,
    poly_iv: Vec<P2>,
    poly_vi: Vec<P2>,
    poly_s2: Vec<P2>,
    poly_s3: Vec<P2>,
    poly_s4: Vec<P2>,
}

fn wrap_angle(t: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut x = t % tau;
    if x <= -std::f64::consts::PI {
        x += tau;
    }
    if x > std::f64::consts::PI {
        x -= tau;
    }
    x
}

impl Geometry {
    /// Traces the critical and orthogonal trajectories for `params`.
    pub fn new(params: &ParameterPair, opts: &TraceOptions) -> Result<Geometry> {
        if !(opts.step > 0.0 && opts.tol > 0.0) {
            return Err(JrhError::InvalidArgument("step and tol must be positive".into()));
        }
        let prec = opts.prec;
        let field = Field::new(params, prec);
        let scale = field.zp.dist(&field.zm).to_f64();
        let box_radius = opts.box_factor * (1.0 + field.zp.abs_f64());
        let k2 = field.k_squared();
        let argk = k2.arg();
        let third = Float::with_val(prec, 3);
        let tau3 = Float::with_val(prec, pi(prec) * 2u32) / &third;
        let offset = 1e-6 * scale;

        // Critical directions: (π - arg K²)/3 + 2πk/3.
        let mut crit: Vec<(Float, Vec<TState>)> = Vec::new();
        for k in 0..3u32 {
            let theta = Float::with_val(prec, Float::with_val(prec, pi(prec) - &argk) / &third) + Float::with_val(prec, &tau3 * k);
            let tracer = Tracer::new(&field, Flow::Level, Float::new(prec), opts, box_radius);
            let (pts, _) = trace_from_branch_point(&field, tracer, &theta, offset, Goal::CrossUp, 0.0)?;
            crit.push((theta, pts));
        }
        let mut slots: [Option<(f64, Vec<TState>, Float)>; 3] = [None, None, None];
        for (theta, pts) in crit {
            let xi = pts.last().unwrap().z.re.clone();
            let x = xi.to_f64();
            let idx = if x < -1.0 {
                0
            } else if x < 1.0 {
                1
            } else {
                2
            };
            if slots[idx].is_some() {
                return Err(JrhError::TraceDiverged(format!("two critical arcs cross the real axis in the same interval (at {x})")));
            }
            slots[idx] = Some((wrap_angle(theta.to_f64()), pts, xi));
        }
        let [Some(l), Some(c), Some(r)] = slots else {
            return Err(JrhError::TraceDiverged("critical arcs do not cross in the expected intervals".into()));
        };
        let crit_angles = [l.0, c.0, r.0];
        let xi = [l.2.clone(), c.2.clone(), r.2.clone()];
        let gamma = [
            critical_arc(ArcKind::GammaL, l.1, -1),
            critical_arc(ArcKind::GammaC, c.1, 1),
            critical_arc(ArcKind::GammaR, r.1, 1),
        ];

        // Orthogonal directions: -arg K²/3 + 2πk/3.
        let end_eps = (opts.tol * 10.0).max(1e-14);
        let mut perp_slots: [Option<(f64, Arc)>; 3] = [None, None, None];
        for k in 0..3u32 {
            let theta = Float::with_val(prec, -Float::with_val(prec, &argk / &third)) + Float::with_val(prec, &tau3 * k);
            let tracer = Tracer::new(&field, Flow::Orthogonal, Float::new(prec), opts, box_radius);
            let (pts, ending) = trace_from_branch_point(&field, tracer, &theta, offset, Goal::PoleOrInfinity, end_eps)?;
            let (idx, kind, anchor) = match ending {
                Ending::Pole(1) => (0, ArcKind::GammaPerpPlus1(Sign::Minus), Anchor::PlusOne),
                Ending::Pole(_) => (1, ArcKind::GammaPerpMinus1(Sign::Minus), Anchor::MinusOne),
                Ending::Infinity => (2, ArcKind::GammaPerpInfinity(Sign::Minus), Anchor::Infinity),
                Ending::Real => unreachable!(),
            };
            if perp_slots[idx].is_some() {
                return Err(JrhError::TraceDiverged("two orthogonal trajectories reach the same endpoint".into()));
            }
            let mut points: Vec<BigComplex> = Vec::with_capacity(pts.len());
            let mut rvals = Vec::with_capacity(pts.len());
            for s in pts {
                points.push(s.z);
                rvals.push(s.r);
            }
            let arc = Arc::build(kind, points, rvals, (Anchor::ZetaMinus, anchor), Orientation::FromBranchPoint, None);
            perp_slots[idx] = Some((wrap_angle(theta.to_f64()), arc));
        }
        let [Some(p1), Some(m1), Some(inf)] = perp_slots else {
            return Err(JrhError::TraceDiverged("orthogonal trajectories do not reach 1, -1 and infinity".into()));
        };
        let perp_angles = [p1.0, m1.0, inf.0];
        let (p1, m1, inf) = (p1.1, m1.1, inf.1);
        let perp = [
            p1.mirrored(ArcKind::GammaPerpPlus1(Sign::Plus)),
            p1,
            m1.mirrored(ArcKind::GammaPerpMinus1(Sign::Plus)),
            m1,
            inf.mirrored(ArcKind::GammaPerpInfinity(Sign::Plus)),
            inf,
        ];

        let sag = planar::sagitta_estimate(gamma[1].line());
        let cut_tol = opts.cut_tol_rel * scale;
        let near_band = 10.0 * sag + 2.0 * cut_tol + 1e-12 * scale;
        let exit = *perp[4].line().last().unwrap();
        let exit_angle = exit.1.atan2(exit.0);

        let mut g = Geometry {
            params: params.clone(),
            opts: opts.clone(),
            field,
            gamma,
            perp,
            xi,
            crit_angles,
            perp_angles,
            box_radius,
            scale,
            cut_tol,
            near_band,
            exit_angle,
            poly_omega_m1: Vec::new(),
            poly_omega_p1: Vec::new(),
            poly_iii: Vec::new(),
            poly_iv: Vec::new(),
            poly_vi: Vec::new(),
            poly_s2: Vec::new(),
            poly_s3: Vec::new(),
            poly_s4: Vec::new(),
        };
        g.build_polygons();
        Ok(g)
    }

    fn build_polygons(&mut self) {
        let rev = |v: &[P2]| -> Vec<P2> { v.iter().rev().cloned().collect() };
        let cat = |parts: &[&[P2]]| -> Vec<P2> {
            let mut out: Vec<P2> = Vec::new();
            for p in parts {
                for &q in p.iter() {
                    if out.last() != Some(&q) {
                        out.push(q);
                    }
                }
            }
            if out.len() > 1 && out.first() == out.last() {
                out.pop();
            }
            out
        };
        let gl = self.gamma[0].line().to_vec();
        let gc = self.gamma[1].line().to_vec();
        let gr = self.gamma[2].line().to_vec();
        let [p1p, p1m, m1p, m1m, ip, im] = [0, 1, 2, 3, 4, 5].map(|k| self.perp[k].line().to_vec());
        self.poly_omega_m1 = cat(&[&gl, &rev(&gc)]);
        self.poly_omega_p1 = cat(&[&gc, &gr]);
        self.poly_iii = cat(&[&gc, &m1m, &rev(&m1p)]);
        self.poly_iv = cat(&[&gc, &p1m, &rev(&p1p)]);
        // Domain VI: Γ_R, γ_∞^+, the box circle through the positive axis, γ_∞^-.
        let a0 = self.exit_angle;
        let rad = planar::norm(*ip.last().unwrap());
        let n = 1024;
        let circle: Vec<P2> = (0..=n)
            .map(|k| {
                let t = a0 - 2.0 * a0 * k as f64 / n as f64;
                (rad * t.cos(), rad * t.sin())
            })
            .collect();
        self.poly_vi = cat(&[&gr, &ip, &circle, &rev(&im)]);
        // Upper sectors.
        let k_c = gc.iter().position(|p| p.1 <= 0.0).unwrap_or(gc.len() / 2);
        let gc_up: Vec<P2> = gc[..=k_c].to_vec();
        let xc = self.xi[1].to_f64();
        self.poly_s2 = cat(&[&[(-1.0, 0.0), (xc, 0.0)], &rev(&gc_up), &m1p]);
        self.poly_s3 = cat(&[&[(xc, 0.0), (1.0, 0.0)], &rev(&p1p), &gc_up]);
        let arc_up: Vec<P2> = (0..=n / 2)
            .map(|k| {
                let t = a0 * k as f64 / (n / 2) as f64;
                (rad * t.cos(), rad * t.sin())
            })
            .collect();
        self.poly_s4 = cat(&[&[(1.0, 0.0)], &arc_up, &rev(&ip), &p1p]);
    }

    pub fn params(&self) -> &ParameterPair {
        &self.params
    }

    pub fn options(&self) -> &TraceOptions {
        &self.opts
    }

    pub fn prec(&self) -> u32 {
        self.field.prec
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn branch_points(&self) -> BranchPoints {
        self.field.branch_points()
    }

    pub fn gamma_l(&self) -> &Arc {
        &self.gamma[0]
    }

    pub fn gamma_c(&self) -> &Arc {
        &self.gamma[1]
    }

    pub fn gamma_r(&self) -> &Arc {
        &self.gamma[2]
    }

    pub fn critical_arcs(&self) -> &[Arc; 3] {
        &self.gamma
    }

    /// γ_1^+, γ_1^-, γ_{-1}^+, γ_{-1}^-, γ_∞^+, γ_∞^- in this order.
    pub fn orthogonal_arcs(&self) -> &[Arc; 6] {
        &self.perp
    }

    pub fn arc(&self, kind: ArcKind) -> Option<&Arc> {
        self.gamma.iter().chain(self.perp.iter()).find(|a| a.kind == kind)
    }

    /// Real crossings ξ_L, ξ_C, ξ_R.
    pub fn crossings(&self) -> &[Float; 3] {
        &self.xi
    }

    /// Tangent angles at ζ- of Γ_L, Γ_C, Γ_R.
    pub fn critical_angles(&self) -> [f64; 3] {
        self.crit_angles
    }

    /// Tangent angles at ζ- of γ_1^-, γ_{-1}^-, γ_∞^-.
    pub fn orthogonal_angles(&self) -> [f64; 3] {
        self.perp_angles
    }

    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    /// |ζ+ - ζ-|.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn cut_tolerance(&self) -> f64 {
        self.cut_tol
    }

    /// Width of the band around Γ_C in which sides are decided by
    /// continuation rather than by polygon tests.
    pub fn near_band(&self) -> f64 {
        self.near_band
    }

    /// Angle at which γ_∞^+ leaves the bounding box.
    pub fn exit_angle(&self) -> f64 {
        self.exit_angle
    }

    /// Polylines of the cuts of φ: Γ_C, γ_1^+, γ_{-1}^+ and γ_∞^+, the last
    /// continued radially far beyond the box.
    pub fn phi_cut_lines(&self) -> Vec<Vec<P2>> {
        let mut inf = self.perp[4].line().to_vec();
        let e = *inf.last().unwrap();
        let n = planar::norm(e);
        inf.push((e.0 / n * 1e12, e.1 / n * 1e12));
        vec![self.gamma[1].line().to_vec(), self.perp[0].line().to_vec(), self.perp[2].line().to_vec(), inf]
    }

    /// Mirror images of [`Geometry::phi_cut_lines`], the cuts of φ̃.
    pub fn phi_tilde_cut_lines(&self) -> Vec<Vec<P2>> {
        self.phi_cut_lines().into_iter().map(|l| l.into_iter().map(|(x, y)| (x, -y)).collect()).collect()
    }

    /// Even-odd test for the region between Γ_C and the segment [ζ-, ζ+],
    /// where the global R is the negative of [`Field::r_seg`].
    pub fn in_lens(&self, z: &BigComplex) -> bool {
        let p = z.to_c64();
        let line = self.gamma[1].line();
        let mut inside = false;
        for w in line.windows(2) {
            let (xi, yi) = w[0];
            let (xj, yj) = w[1];
            if (yi > p.1) != (yj > p.1) {
                let x = xj + (p.1 - yj) * (xi - xj) / (yi - yj);
                if p.0 < x {
                    inside = !inside;
                }
            }
        }
        let b = &self.field.b;
        if z.re < self.field.m && z.im < *b && z.im > Float::with_val(self.field.prec, -b) {
            inside = !inside;
        }
        inside
    }

    /// Nearest interior vertex of Γ_C to `z` with its distance, or `None` if
    /// the nearest point of Γ_C is close to ζ±.
    fn nearest_gc_vertex(&self, p: P2) -> (f64, Option<usize>) {
        let line = self.gamma[1].line();
        let (d, k) = planar::point_polyline_dist(p, line);
        let j = if planar::norm((p.0 - line[k].0, p.1 - line[k].1)) <= planar::norm((p.0 - line[k + 1].0, p.1 - line[k + 1].1)) {
            k
        } else {
            k + 1
        };
        let zp = self.field.zp.to_c64();
        let zm = self.field.zm.to_c64();
        let end = planar::norm((line[j].0 - zp.0, line[j].1 - zp.1)).min(planar::norm((line[j].0 - zm.0, line[j].1 - zm.1)));
        if j == 0 || j + 1 == line.len() || end < 0.02 * self.scale {
            (d, None)
        } else {
            (d, Some(j))
        }
    }

    /// Unit normal of Γ_C at vertex `j` pointing to the requested side.
    fn gc_normal(&self, j: usize, side: Side) -> BigComplex {
        let pts = &self.gamma[1].points;
        let t = &pts[j + 1] - &pts[j - 1];
        let n = t.mul_i();
        let len = n.abs();
        let u = BigComplex::new(Float::with_val(self.prec(), &n.re / &len), Float::with_val(self.prec(), &n.im / &len));
        match side {
            Side::Plus => u,
            Side::Minus => -u,
        }
    }

    fn r_far(&self, z: &BigComplex) -> BigComplex {
        let r = self.field.r_seg(z);
        if self.in_lens(z) {
            -r
        } else {
            r
        }
    }

    fn a_far(&self, z: &BigComplex) -> BigComplex {
        let a = self.field.a_seg(z);
        if self.in_lens(z) {
            if z.re < self.field.m {
                a.mul_i()
            } else {
                a.mul_neg_i()
            }
        } else {
            a
        }
    }

    /// Side of Γ_C for a point in the near band, decided by the sign of
    /// Re ∫ q from the nearest vertex with the + boundary value of R.
    fn side_near(&self, z: &BigComplex, j: usize) -> Result<(Side, BigComplex)> {
        let arc = &self.gamma[1];
        let rule = gauss_legendre(8, self.prec());
        let zz = z.with_prec(self.prec());
        let (psi, r_plus) = self.field.chord(&arc.points[j], &zz, &arc.rvals[j], &rule);
        let q = self.field.q(&zz, &r_plus).abs_f64();
        if psi.re.to_f64().abs() < (0.5 * q * self.cut_tol).max(10.0 * self.opts.tol) {
            return Err(JrhError::CutAmbiguity(format!("{z}")));
        }
        if psi.re.is_sign_negative() {
            Ok((Side::Plus, r_plus))
        } else {
            Ok((Side::Minus, -r_plus))
        }
    }

    /// The global branch of R, cut along Γ_C and ~ z at infinity.
    pub fn r_eval(&self, z: &BigComplex) -> Result<BigComplex> {
        let zz = z.with_prec(self.prec());
        let p = zz.to_c64();
        let (d, j) = self.nearest_gc_vertex(p);
        if d < self.cut_tol {
            return Err(JrhError::CutAmbiguity(format!("{z}")));
        }
        if d < self.near_band {
            if let Some(j) = j {
                return Ok(self.side_near(&zz, j)?.1);
            }
        }
        Ok(self.r_far(&zz))
    }

    /// The quarter root ((z-ζ-)/(z-ζ+))^{1/4}, cut along Γ_C and -> 1 at infinity.
    pub fn a_eval(&self, z: &BigComplex) -> Result<BigComplex> {
        let zz = z.with_prec(self.prec());
        let p = zz.to_c64();
        let (d, j) = self.nearest_gc_vertex(p);
        if d < self.cut_tol {
            return Err(JrhError::CutAmbiguity(format!("{z}")));
        }
        if d < self.near_band {
            if let Some(j) = j {
                let (side, _) = self.side_near(&zz, j)?;
                return Ok(self.a_from_anchor(&zz, j, side));
            }
        }
        Ok(self.a_far(&zz))
    }

    fn anchor(&self, j: usize, side: Side) -> BigComplex {
        let eta = (20.0 * self.near_band).max(1e-4 * self.scale).min(0.05 * self.scale);
        &self.gamma[1].points[j] + &self.gc_normal(j, side).scale_f64(eta)
    }

    fn a_from_anchor(&self, z: &BigComplex, j: usize, side: Side) -> BigComplex {
        let anc = self.anchor(j, side);
        let a0 = self.a_far(&anc);
        self.field.continue_a(&anc, z, &a0, 16)
    }

    fn locate_on_gc(&self, z: &BigComplex) -> Result<usize> {
        let (d, j) = self.nearest_gc_vertex(z.to_c64());
        let tol = self.near_band.max(10.0 * self.opts.tol);
        match j {
            Some(j) if d <= tol => Ok(j),
            _ => Err(JrhError::NotOnCut(format!("{z}"))),
        }
    }

    /// Boundary value of R on Γ_C from the given side.
    pub fn r_boundary(&self, z: &BigComplex, side: Side) -> Result<BigComplex> {
        let zz = z.with_prec(self.prec());
        let j = self.locate_on_gc(&zz)?;
        let anc = self.anchor(j, side);
        let r0 = self.r_far(&anc);
        Ok(self.field.continue_r(&anc, &zz, &r0, 16))
    }

    /// Boundary value of the quarter root on Γ_C from the given side.
    pub fn a_boundary(&self, z: &BigComplex, side: Side) -> Result<BigComplex> {
        let zz = z.with_prec(self.prec());
        let j = self.locate_on_gc(&zz)?;
        Ok(self.a_from_anchor(&zz, j, side))
    }

    /// Region and domain of `z`; `boundary` is set when the point lies within
    /// `margin` of a traced arc.
    pub fn classify(&self, z: &BigComplex, margin: f64) -> RegionLabel {
        let p = z.to_c64();
        let mut boundary = None;
        let mut best = margin;
        for a in self.gamma.iter().chain(self.perp.iter()) {
            let d = a.distance_to(p);
            if d < best {
                best = d;
                boundary = Some(a.kind);
            }
        }
        let domain = if planar::point_in_polygon(p, &self.poly_omega_m1) {
            if planar::point_in_polygon(p, &self.poly_iii) {
                Domain::III
            } else {
                Domain::II
            }
        } else if planar::point_in_polygon(p, &self.poly_omega_p1) {
            if planar::point_in_polygon(p, &self.poly_iv) {
                Domain::IV
            } else {
                Domain::V
            }
        } else if self.in_domain_vi(p) {
            Domain::VI
        } else {
            Domain::I
        };
        RegionLabel { omega: domain.omega(), domain, boundary }
    }

    fn in_domain_vi(&self, p: P2) -> bool {
        let rad = planar::norm(*self.perp[4].line().last().unwrap());
        if planar::norm(p) >= rad * 0.999 {
            p.1.atan2(p.0).abs() < self.exit_angle
        } else {
            planar::point_in_polygon(p, &self.poly_vi)
        }
    }

    /// Sector of a point in the open upper half-plane.
    pub fn upper_sector(&self, z: &BigComplex) -> Sector {
        let p = z.to_c64();
        let rad = planar::norm(*self.perp[4].line().last().unwrap());
        if planar::norm(p) >= rad * 0.999 {
            return if p.1.atan2(p.0) < self.exit_angle { Sector::S4 } else { Sector::S1 };
        }
        if planar::point_in_polygon(p, &self.poly_s2) {
            Sector::S2
        } else if planar::point_in_polygon(p, &self.poly_s3) {
            Sector::S3
        } else if planar::point_in_polygon(p, &self.poly_s4) {
            Sector::S4
        } else {
            Sector::S1
        }
    }

    /// Sector for a point on the real axis (not at -1, ξ_C or 1).
    pub fn real_sector(&self, x: f64) -> Sector {
        if x < -1.0 {
            Sector::S1
        } else if x < self.xi[1].to_f64() {
            Sector::S2
        } else if x < 1.0 {
            Sector::S3
        } else {
            Sector::S4
        }
    }

    /// R at a real point: ±sqrt((x-m)² + b²), positive right of ξ_C.
    pub fn r_real(&self, x: &Float) -> Float {
        let p = self.prec();
        let dx = Float::with_val(p, x - &self.field.m);
        let v = (Float::with_val(p, &dx * &dx) + &self.field.b2).sqrt();
        if *x > self.xi[1] {
            v
        } else {
            -v
        }
    }

    /// Re φ on the real axis, integrated from the nearest critical crossing.
    pub fn re_phi_real(&self, x: &Float) -> Result<Float> {
        let p = self.prec();
        let xf = x.to_f64();
        if (xf.abs() - 1.0).abs() == 0.0 {
            return Err(JrhError::InvalidArgument("Re φ is infinite at ±1".into()));
        }
        let start = if xf < -1.0 {
            &self.xi[0]
        } else if xf < 1.0 {
            &self.xi[1]
        } else {
            &self.xi[2]
        };
        let f = |t: &Float| -> Float {
            let r = self.r_real(t);
            let den = Float::with_val(p, t * t) - 1u32;
            Float::with_val(p, &r * &self.field.s_half) / den
        };
        real_integral(&f, start, x, p, self.opts.tol * 1e-2)
    }

    /// Closed level curves Re φ = r: one around both ±1 for r > 0, one around
    /// each of ±1 for r < 0. All are oriented counterclockwise.
    pub fn trace_level_set(&self, r: f64) -> Result<Vec<Arc>> {
        if !r.is_finite() {
            return Err(JrhError::InvalidArgument("level must be finite".into()));
        }
        if r.abs() < 1e-6 {
            return Err(JrhError::DegenerateLevel(r));
        }
        if r > 0.0 {
            Ok(vec![self.trace_level_component(r, LevelComponent::Outer)?])
        } else {
            Ok(vec![
                self.trace_level_component(r, LevelComponent::NearMinus1)?,
                self.trace_level_component(r, LevelComponent::NearPlus1)?,
            ])
        }
    }

    fn trace_level_component(&self, r: f64, comp: LevelComponent) -> Result<Arc> {
        let p = self.prec();
        let rf = Float::with_val(p, r);
        let (lo, hi) = match comp {
            LevelComponent::Outer => (self.xi[2].to_f64(), f64::INFINITY),
            LevelComponent::NearPlus1 => (1.0, self.xi[2].to_f64()),
            LevelComponent::NearMinus1 => (-1.0, self.xi[1].to_f64()),
        };
        let x = self.solve_real_level(&rf, lo, hi)?;
        let z0 = BigComplex::new(x.clone(), Float::new(p));
        let r0 = BigComplex::new(self.r_real(&x), Float::new(p));
        let start = TState { z: z0, r: r0, phi: BigComplex::new(rf.clone(), Float::new(p)) };
        let mut tracer = Tracer::new(&self.field, Flow::Level, rf, &self.opts, self.box_radius);
        let v = tracer.velocity(&start.z, &start.r);
        if v.im.is_sign_negative() {
            tracer.dir = -1;
        }
        let (pts, _) = tracer.run(start, Goal::CrossDown, 0.0)?;
        let xe = pts.last().unwrap().z.re.to_f64();
        let ok = match comp {
            LevelComponent::Outer => xe < self.xi[0].to_f64(),
            LevelComponent::NearPlus1 => xe > self.xi[1].to_f64() && xe < 1.0,
            LevelComponent::NearMinus1 => xe > self.xi[0].to_f64() && xe < -1.0,
        };
        if !ok {
            return Err(JrhError::TraceDiverged(format!("level curve Re φ = {r} returned to the real axis at {xe}")));
        }
        let n = pts.len();
        let mut points: Vec<BigComplex> = pts.iter().map(|s| s.z.clone()).collect();
        let mut rvals: Vec<BigComplex> = pts.iter().map(|s| s.r.clone()).collect();
        for k in (1..n - 1).rev() {
            points.push(pts[k].z.conj());
            rvals.push(pts[k].r.conj());
        }
        Ok(Arc::build(
            ArcKind::LevelSet(comp),
            points,
            rvals,
            (Anchor::Closed, Anchor::Closed),
            Orientation::Counterclockwise,
            Some(r),
        ))
    }

    /// Real x in (lo, hi) with Re φ(x) = r; Re φ is monotone there.
    fn solve_real_level(&self, r: &Float, lo: f64, hi: f64) -> Result<Float> {
        let p = self.prec();
        let mut a = lo;
        let mut b = hi;
        if !b.is_finite() {
            b = lo + 1.0;
            while (self.re_phi_real(&Float::with_val(p, b))? < *r) && b < 1e12 {
                b = lo + 2.0 * (b - lo);
            }
        }
        // Re φ - r is negative at the lower end in all three cases.
        let fa_sign = true;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let v = self.re_phi_real(&Float::with_val(p, mid))? - r.clone();
            if v.is_sign_negative() == fa_sign {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-12 * (1.0 + mid.abs()) {
                break;
            }
        }
        // Newton polish at full precision.
        let mut x = Float::with_val(p, 0.5 * (a + b));
        for _ in 0..20 {
            let v = self.re_phi_real(&x)? - r.clone();
            let r_x = self.r_real(&x);
            let den = Float::with_val(p, &x * &x) - 1u32;
            let d = Float::with_val(p, &r_x * &self.field.s_half) / den;
            let dx = Float::with_val(p, &v / &d);
            x -= &dx;
            if dx.to_f64().abs() < self.opts.tol * 1e-3 {
                break;
            }
        }
        Ok(x)
    }
}

/// Integral of a real function on [a, b] by adaptive Gauss-Legendre.
pub(crate) fn real_integral(f: &dyn Fn(&Float) -> Float, a: &Float, b: &Float, prec: u32, tol: f64) -> Result<Float> {
    let rule = gauss_legendre(crate::quad::default_order(prec), prec);
    fn panel(f: &dyn Fn(&Float) -> Float, a: &Float, b: &Float, rule: &GaussLegendre, prec: u32) -> Float {
        let half = Float::with_val(prec, Float::with_val(prec, b - a) / 2u32);
        let mid = Float::with_val(prec, Float::with_val(prec, b + a) / 2u32);
        let mut acc = Float::new(prec);
        for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
            let t = Float::with_val(prec, &mid + Float::with_val(prec, &half * x));
            acc += Float::with_val(prec, f(&t) * w);
        }
        acc * half
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(&Float) -> Float,
        a: &Float,
        b: &Float,
        whole: Float,
        rule: &GaussLegendre,
        prec: u32,
        tol: f64,
        depth: u32,
    ) -> Result<Float> {
        let m = Float::with_val(prec, Float::with_val(prec, a + b) / 2u32);
        let l = panel(f, a, &m, rule, prec);
        let r = panel(f, &m, b, rule, prec);
        let sum = Float::with_val(prec, &l + &r);
        let err = Float::with_val(prec, &sum - &whole).abs().to_f64();
        if err <= tol {
            return Ok(sum);
        }
        if depth >= 60 {
            return Err(JrhError::QuadNoConverge { tol, estimate: err });
        }
        Ok(rec(f, a, &m, l, rule, prec, tol / 2.0, depth + 1)? + rec(f, &m, b, r, rule, prec, tol / 2.0, depth + 1)?)
    }
    let whole = panel(f, a, b, &rule, prec);
    rec(f, a, b, whole, &rule, prec, tol, 0)
}

/// Steps off ζ- in direction `theta` and traces with the given flow.
fn trace_from_branch_point(
    field: &Field,
    mut tracer: Tracer,
    theta: &Float,
    offset: f64,
    goal: Goal,
    end_eps: f64,
) -> Result<(Vec<TState>, Ending)> {
    let p = field.prec;
    let d = BigComplex::cis(theta).scale_f64(offset);
    let z0 = &field.zm + &d;
    let r0 = field.r_leg(&z0, &d, 1);
    // φ(z0) = ∫ q along the leg, with t = ζ- + u² d.
    let rule = gauss_legendre(8, p);
    let mut phi0 = BigComplex::zero(p);
    for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let u = Float::with_val(p, Float::with_val(p, x + 1u32) / 2u32);
        let u2 = Float::with_val(p, &u * &u);
        let t = &field.zm + &d.scale(&u2);
        let r = field.r_leg(&t, &d, 1);
        let jac = d.scale(&Float::with_val(p, &u * 2u32));
        phi0 += (&field.q(&t, &r) * &jac).scale(w);
    }
    phi0 = phi0.scale_f64(0.5);
    let start = TState { z: z0, r: r0, phi: phi0 };
    let v = tracer.velocity(&start.z, &start.r);
    let e = BigComplex::cis(theta);
    let dot = Float::with_val(p, &v.re * &e.re) + Float::with_val(p, &v.im * &e.im);
    if dot.is_sign_negative() {
        tracer.dir = -1;
    }
    let (mut pts, ending) = tracer.run(start, goal, end_eps)?;
    let zm = TState { z: field.zm.clone(), r: BigComplex::zero(p), phi: BigComplex::zero(p) };
    pts.insert(0, zm);
    Ok((pts, ending))
}

/// Builds a full critical arc from its lower half (ζ- to the real crossing).
/// `sign_at_xi` is the required sign of R (+ boundary value on Γ_C) at the
/// crossing.
fn critical_arc(kind: ArcKind, lower: Vec<TState>, sign_at_xi: i32) -> Arc {
    let xi_r = lower.last().unwrap().r.re.clone();
    let flip = (xi_r.is_sign_negative() as i32 == 1) != (sign_at_xi < 0);
    let mut points: Vec<BigComplex> = lower.iter().map(|s| s.z.clone()).collect();
    let mut rvals: Vec<BigComplex> = lower.iter().map(|s| if flip { -&s.r } else { s.r.clone() }).collect();
    let n = points.len();
    for k in (0..n - 1).rev() {
        points.push(points[k].conj());
        rvals.push(rvals[k].conj());
    }
    let mut arc = match kind {
        ArcKind::GammaR => {
            Arc::build(kind, points, rvals, (Anchor::ZetaMinus, Anchor::ZetaPlus), Orientation::ZetaMinusToZetaPlus, None)
        }
        _ => {
            points.reverse();
            rvals.reverse();
            Arc::build(kind, points, rvals, (Anchor::ZetaPlus, Anchor::ZetaMinus), Orientation::ZetaPlusToZetaMinus, None)
        }
    };
    arc.level = None;
    arc
}

/// Traces Γ_L, Γ_C and Γ_R.
pub fn trace_critical_trajectories(params: &ParameterPair, step: f64, tol: f64) -> Result<[Arc; 3]> {
    let g = Geometry::new(params, &TraceOptions::new(step, tol))?;
    Ok(g.gamma)
}

/// Traces γ_1^±, γ_{-1}^± and γ_∞^±.
pub fn trace_orthogonal_trajectories(params: &ParameterPair, step: f64, tol: f64) -> Result<[Arc; 6]> {
    let g = Geometry::new(params, &TraceOptions::new(step, tol))?;
    Ok(g.perp)
}

/// Traces the level set Re φ = r.
pub fn trace_level_set(params: &ParameterPair, r: f64, step: f64, tol: f64) -> Result<Vec<Arc>> {
    let g = Geometry::new(params, &TraceOptions::new(step, tol))?;
    g.trace_level_set(r)
}
