//! The phase function φ(z) = (A+B+2)/2 ∫_{ζ-}^z R(t)/(t²-1) dt on
//! ℂ \ (Γ_C ∪ γ_1^+ ∪ γ_{-1}^+ ∪ γ_∞^+), its mirror φ̃ and the constant c.
//!
//! φ is evaluated by quadrature along a polygonal path from ζ-. The path
//! first steps away from ζ- opposite to Γ_C, runs through the lower
//! half-plane, crosses the real axis inside the interval that bounds the
//! target's sector, and only then rises to the target. Candidate paths are
//! checked against the traced cut polylines before use.

use crate::bigc::{pi, BigComplex};
use crate::error::{JrhError, Result};
use crate::geometry::{Field, Geometry, Sector};
use crate::planar::{self, P2};
use crate::quad::{integrate_polyline, integrate_segment, FnIntegrand, PathIntegrand, QuadOptions, SegmentMap};
use rug::Float;

/// A validated integration path from ζ- to `target`.
#[derive(Clone, Debug)]
pub struct PhasePlan {
    pub target: BigComplex,
    /// Path vertices, starting at ζ- and ending at `target`.
    pub waypoints: Vec<BigComplex>,
    /// Whether the path must avoid the cuts of φ or those of φ̃.
    pub mirrored: bool,
}

#[derive(Clone, Debug)]
pub struct PhaseValue {
    pub phi: BigComplex,
    pub quad_error_bound: f64,
}

/// q(t) with the branch of R continued panel by panel.
pub struct QIntegrand<'a> {
    pub field: &'a Field,
    zp: P2,
    zm: P2,
}

impl<'a> QIntegrand<'a> {
    pub fn new(field: &'a Field) -> Self {
        QIntegrand { field, zp: field.zp.to_c64(), zm: field.zm.to_c64() }
    }
}

impl<'a> PathIntegrand for QIntegrand<'a> {
    type State = BigComplex;

    fn eval(&self, t: &BigComplex, r: &BigComplex) -> BigComplex {
        self.field.q(t, &self.field.r_near(t, r))
    }

    fn advance(&self, t: &BigComplex, r: &BigComplex) -> BigComplex {
        self.field.r_near(t, r)
    }

    fn max_panel(&self, a: &BigComplex, b: &BigComplex) -> Option<f64> {
        let (pa, pb) = (a.to_c64(), b.to_c64());
        let d = planar::point_segment_dist(self.zp, pa, pb).min(planar::point_segment_dist(self.zm, pa, pb));
        Some(0.5 * d)
    }
}

/// Adaptive quadrature of `f` along a polyline that must not cross `cuts`.
/// With `sqrt_start` the first panel uses t = a + (b-a)u² to absorb a
/// square-root singularity at the first vertex.
pub fn quad_contour<I: PathIntegrand>(
    f: &I,
    path: &[BigComplex],
    sqrt_start: bool,
    cuts: &[Vec<P2>],
    state: &mut I::State,
    tol: f64,
    prec: u32,
) -> Result<(BigComplex, f64)> {
    let line: Vec<P2> = path.iter().map(|p| p.to_c64()).collect();
    for w in line.windows(2) {
        for c in cuts {
            if !planar::segment_polyline_crossings(w[0], w[1], c).is_empty() {
                return Err(JrhError::PathIntersectsCut(format!("{:?}", w[1])));
            }
        }
    }
    let map = if sqrt_start { SegmentMap::SqrtStart } else { SegmentMap::Linear };
    let r = integrate_polyline(f, path, map, state, &QuadOptions::new(tol, prec))?;
    Ok((r.value, r.error))
}

/// Evaluator for φ, φ̃ and c at a fixed working precision.
pub struct Phase<'g> {
    geo: &'g Geometry,
    field: Field,
    prec: u32,
    tol: f64,
    cuts: Vec<Vec<P2>>,
    clear: f64,
    gc_xmin: f64,
    gc_xmax: f64,
}

fn pt(prec: u32, x: f64, y: f64) -> BigComplex {
    BigComplex::from_f64(x, y, prec)
}

impl<'g> Phase<'g> {
    pub fn new(geo: &'g Geometry, prec: u32, tol: f64) -> Phase<'g> {
        let field = Field::new(geo.params(), prec);
        let cuts = geo.phi_cut_lines();
        let traced = cuts.iter().map(|c| if c.len() > 2 { &c[..c.len() - 1] } else { &c[..] });
        let sag = traced.map(planar::sagitta_estimate).fold(0.0, f64::max);
        let clear = (10.0 * sag).max(1e-10 * geo.scale());
        let gc = geo.gamma_c().line();
        let gc_xmin = gc.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let gc_xmax = gc.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        Phase { geo, field, prec, tol, cuts, clear, gc_xmin, gc_xmax }
    }

    pub fn geometry(&self) -> &'g Geometry {
        self.geo
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn half_width(&self) -> f64 {
        self.field.b.to_f64()
    }

    /// The point where every path leaves the neighbourhood of ζ-.
    fn p0(&self) -> BigComplex {
        let theta = self.geo.critical_angles()[1] + std::f64::consts::PI;
        let rho = 0.2 * self.half_width();
        let d = pt(self.prec, rho * theta.cos(), rho * theta.sin());
        &self.field.zm + &d
    }

    fn lower_routes(&self, target: P2) -> Vec<Vec<P2>> {
        let b = self.half_width();
        let p0 = self.p0().to_c64();
        let hh = 0.05f64.min(0.5 * b);
        let yl = p0.1.min(target.1) - 0.25 * b;
        let y1 = if target.1 < -hh { target.1 } else { -hh };
        let xl = self.gc_xmin.min(target.0) - 0.25 * b;
        let xr = self.gc_xmax.max(target.0) + 0.25 * b;
        vec![
            vec![p0, target],
            vec![p0, (p0.0, yl), (target.0, yl), target],
            vec![p0, (p0.0, yl), (xl, yl), (xl, y1), (target.0, y1), target],
            vec![p0, (p0.0, yl), (xr, yl), (xr, y1), (target.0, y1), target],
        ]
    }

    fn crossing_candidates(&self, z: P2, sector: Sector) -> Vec<f64> {
        let xs = self.geo.crossings().clone().map(|x| x.to_f64());
        let mut out = Vec::new();
        if self.geo.real_sector(z.0) == sector {
            out.push(z.0);
        }
        match sector {
            Sector::S1 => out.extend([-1.5, xs[0] - 0.5, 0.5 * (xs[0] - 1.0), -2.0 * self.geo.box_radius()]),
            Sector::S2 => out.push(0.5 * (-1.0 + xs[1])),
            Sector::S3 => out.push(0.5 * (xs[1] + 1.0)),
            Sector::S4 => out.extend([1.5, xs[2] + 0.5, 0.5 * (xs[2] + 1.0), 2.0 * self.geo.box_radius()]),
        }
        out
    }

    fn valid(&self, path: &[P2], cuts: &[Vec<P2>], target: P2) -> bool {
        let b = self.half_width();
        let zp = self.field.zp.to_c64();
        let zm = self.field.zm.to_c64();
        let poles = [(1.0, 0.0), (-1.0, 0.0)];
        let n = path.len();
        let target_cut = cuts.iter().map(|c| planar::point_polyline_dist(target, c).0).fold(f64::INFINITY, f64::min);
        for k in 0..n - 1 {
            let (a, e) = (path[k], path[k + 1]);
            if planar::norm((e.0 - a.0, e.1 - a.1)) == 0.0 {
                continue;
            }
            let last = k == n - 2;
            let first = k == 0;
            // The first segment leaves ζ-, where Γ_C ends; skip past the clearance band.
            let t0 = if first { (2.0 * self.clear / planar::norm((e.0 - a.0, e.1 - a.1))).clamp(0.05, 0.5) } else { 0.0 };
            let a_eff = (a.0 + t0 * (e.0 - a.0), a.1 + t0 * (e.1 - a.1));
            for c in cuts {
                if !planar::segment_polyline_crossings(a_eff, e, c).is_empty() {
                    return false;
                }
            }
            // Clearance from the cuts, relaxed on the final approach.
            let (ca, ce) = if last {
                let len = planar::norm((e.0 - a.0, e.1 - a.1));
                let rz = (2.0 * self.clear).max(0.5 * target_cut).min(len);
                let t = 1.0 - rz / len;
                (a_eff, (a.0 + t * (e.0 - a.0), a.1 + t * (e.1 - a.1)))
            } else {
                (a_eff, e)
            };
            let need = if last { self.clear.min(0.25 * target_cut) } else { self.clear };
            if planar::norm((ce.0 - ca.0, ce.1 - ca.1)) > 0.0 {
                for c in cuts {
                    if planar::segment_polyline_dist(ca, ce, c) < need {
                        return false;
                    }
                }
            }
            for p in poles {
                let d = planar::point_segment_dist(p, a, e);
                let lim = if last { (0.5 * planar::norm((target.0 - p.0, target.1 - p.1))).min(0.02) } else { 0.02 };
                if d < lim {
                    return false;
                }
            }
            if !first {
                let lim = if last { (0.5 * planar::norm((target.0 - zm.0, target.1 - zm.1))).min(0.01 * b) } else { 0.01 * b };
                if planar::point_segment_dist(zm, a, e) < lim {
                    return false;
                }
            }
            let limp = if last { (0.5 * planar::norm((target.0 - zp.0, target.1 - zp.1))).min(0.01 * b) } else { 0.01 * b };
            if planar::point_segment_dist(zp, a, e) < limp {
                return false;
            }
        }
        true
    }

    /// All admissible candidate paths to `z` for φ (or φ̃ when `mirrored`).
    pub fn plans(&self, z: &BigComplex, mirrored: bool) -> Result<Vec<PhasePlan>> {
        let zz = z.with_prec(self.prec);
        let (x, y) = zz.to_c64();
        if !(x.is_finite() && y.is_finite()) {
            return Err(JrhError::InvalidArgument("non-finite point".into()));
        }
        if y == 0.0 && (x == 1.0 || x == -1.0) {
            return Err(JrhError::InvalidArgument("φ is singular at ±1".into()));
        }
        if mirrored {
            // φ̃ paths are mirror images of φ paths to the conjugate point.
            let ps = self.plans(&zz.conj(), false)?;
            return Ok(ps
                .into_iter()
                .map(|p| PhasePlan {
                    target: zz.clone(),
                    waypoints: p.waypoints.iter().map(|w| w.conj()).collect(),
                    mirrored: true,
                })
                .collect());
        }
        if zz.dist(&self.field.zm).is_zero() {
            return Ok(vec![PhasePlan { target: zz.clone(), waypoints: vec![zz], mirrored: false }]);
        }
        let target = (x, y);
        let cuts = &self.cuts;
        for c in cuts {
            if planar::point_polyline_dist(target, c).0 < self.geo.cut_tolerance() {
                return Err(JrhError::OnCut(format!("{z}")));
            }
        }
        let zm = self.field.zm.to_c64();
        let mut raw: Vec<Vec<P2>> = Vec::new();
        let b = self.half_width();
        if y < 0.0 && planar::norm((x - zm.0, y - zm.1)) < 0.5 * b {
            raw.push(vec![zm, target]);
        }
        if y <= 0.0 {
            for r in self.lower_routes(target) {
                let mut p = vec![zm];
                p.extend(r);
                raw.push(p);
            }
        } else {
            let sector = self.geo.upper_sector(&zz);
            let hh = 0.05f64.min(0.5 * b);
            for x0 in self.crossing_candidates(target, sector) {
                let below = (x0, -hh);
                let above = (x0, hh.min(0.5 * y).max(hh.min(1e-3)));
                let uppers: Vec<Vec<P2>> = vec![
                    vec![above, target],
                    vec![above, (x0, y), target],
                    vec![above, (x, above.1), target],
                ];
                for lr in self.lower_routes(below) {
                    for up in &uppers {
                        let mut p = vec![zm];
                        p.extend(lr.iter().cloned());
                        p.extend(up.iter().cloned());
                        raw.push(p);
                    }
                }
            }
        }
        let mut out = Vec::new();
        for mut path in raw {
            path.dedup();
            if path.len() < 2 || !self.valid(&path, cuts, target) {
                continue;
            }
            let mut waypoints: Vec<BigComplex> = path[..path.len() - 1].iter().map(|&(a, b)| pt(self.prec, a, b)).collect();
            waypoints[0] = self.field.zm.clone();
            waypoints.push(zz.clone());
            out.push(PhasePlan { target: zz.clone(), waypoints, mirrored: false });
        }
        if out.is_empty() {
            return Err(JrhError::PathIntersectsCut(format!("{z}")));
        }
        Ok(out)
    }

    /// First admissible path to `z`.
    pub fn plan(&self, z: &BigComplex) -> Result<PhasePlan> {
        Ok(self.plans(z, false)?.swap_remove(0))
    }

    /// Integrates q along a plan (φ for ordinary plans). For mirrored plans
    /// the result is φ̃, using conjugation of the φ integral.
    pub fn integrate_plan(&self, plan: &PhasePlan) -> Result<PhaseValue> {
        if plan.mirrored {
            let inner = PhasePlan {
                target: plan.target.conj(),
                waypoints: plan.waypoints.iter().map(|w| w.conj()).collect(),
                mirrored: false,
            };
            let v = self.integrate_plan(&inner)?;
            return Ok(PhaseValue { phi: v.phi.conj(), quad_error_bound: v.quad_error_bound });
        }
        self.integrate_path(&plan.waypoints, &[])
    }

    /// ∫ q from ζ- along `waypoints` and then along `tail` (which may end on a
    /// cut; the value there is the limit from the side the path arrives from).
    fn integrate_path(&self, waypoints: &[BigComplex], tail: &[BigComplex]) -> Result<PhaseValue> {
        let p = self.prec;
        if waypoints.len() < 2 && tail.is_empty() {
            return Ok(PhaseValue { phi: BigComplex::zero(p), quad_error_bound: 0.0 });
        }
        let mut pts: Vec<BigComplex> = waypoints.to_vec();
        pts.extend(tail.iter().cloned());
        let first = &pts[1];
        let d = first - &self.field.zm;
        // Branch of R on the first leg from the global branch at its end.
        let r_glob = self.geo.r_eval(first).map_err(|e| match e {
            JrhError::CutAmbiguity(s) => JrhError::OnCut(s),
            e => e,
        })?;
        let trial = self.field.r_leg(first, &d, 1);
        let dot = Float::with_val(p, &trial.re * &r_glob.re) + Float::with_val(p, &trial.im * &r_glob.im);
        let sigma = if dot.is_sign_negative() { -1 } else { 1 };
        let field = &self.field;
        let leg = FnIntegrand(|t: &BigComplex| field.q(t, &field.r_leg(t, &d, sigma)));
        let total_len: f64 = pts.windows(2).map(|w| w[0].dist(&w[1]).to_f64()).sum::<f64>().max(1e-300);
        let leg_len = d.abs_f64();
        let opts = QuadOptions::new(self.tol * (leg_len / total_len).max(1e-3), p);
        let r0 = integrate_segment(&leg, &self.field.zm, first, SegmentMap::SqrtStart, &mut (), &opts)?;
        let mut value = r0.value;
        let mut error = r0.error;
        if pts.len() > 2 {
            let mut state = field.r_leg(first, &d, sigma);
            let qi = QIntegrand::new(field);
            let rest = &pts[1..];
            let rest_len: f64 = rest.windows(2).map(|w| w[0].dist(&w[1]).to_f64()).sum();
            let opts = QuadOptions::new(self.tol * (rest_len / total_len).max(1e-3), p);
            let r = integrate_polyline(&qi, rest, SegmentMap::Linear, &mut state, &opts)?;
            value += &r.value;
            error += r.error;
        }
        Ok(PhaseValue { phi: value, quad_error_bound: error })
    }

    /// φ(z) on ℂ \ (Γ_C ∪ γ_1^+ ∪ γ_{-1}^+ ∪ γ_∞^+).
    pub fn phi(&self, z: &BigComplex) -> Result<PhaseValue> {
        let plan = self.plan(z)?;
        self.integrate_plan(&plan)
    }

    /// One-sided value of φ at `z` (typically on a cut), approached along the
    /// straight segment from `from`.
    pub fn phi_limit(&self, z: &BigComplex, from: &BigComplex) -> Result<PhaseValue> {
        let plan = self.plan(from)?;
        self.integrate_path(&plan.waypoints, &[z.with_prec(self.prec)])
    }

    /// φ̃(z) = conj(φ(conj z)), cut along Γ_C and the lower orthogonal arcs.
    pub fn phi_tilde(&self, z: &BigComplex) -> Result<PhaseValue> {
        let v = self.phi(&z.with_prec(self.prec).conj())?;
        Ok(PhaseValue { phi: v.phi.conj(), quad_error_bound: v.quad_error_bound })
    }

    /// φ - φ̃ in an upper sector, equal to 2i Im φ on the real interval the
    /// sector touches.
    pub fn sector_constant(&self, sector: Sector) -> BigComplex {
        let p = self.prec;
        let pif = pi(p);
        let a = self.geo.params().a_float(p);
        let b = self.geo.params().b_float(p);
        let v = match sector {
            Sector::S1 => -(Float::with_val(p, &a + 1u32)),
            Sector::S2 => -(Float::with_val(p, Float::with_val(p, &a + &b) + 1u32)),
            Sector::S3 => Float::with_val(p, Float::with_val(p, &a + &b) + 1u32),
            Sector::S4 => Float::with_val(p, &b + 1u32),
        };
        BigComplex::new(Float::new(p), v * pif)
    }

    /// φ computed through the lower half-plane only: conj(φ(z̄)) plus the
    /// sector constant for points above the real axis.
    pub fn phi_via_mirror(&self, z: &BigComplex) -> Result<PhaseValue> {
        let zz = z.with_prec(self.prec);
        if !zz.im.is_sign_positive() || zz.im.is_zero() {
            return self.phi(&zz);
        }
        let v = self.phi(&zz.conj())?;
        let c = self.sector_constant(self.geo.upper_sector(&zz));
        Ok(PhaseValue { phi: &v.phi.conj() + &c, quad_error_bound: v.quad_error_bound })
    }

    /// The logarithm whose cut follows γ_∞^+ (and its asymptotic ray): the
    /// principal value except in the sectors left of γ_∞^+ ∪ γ_1^+, where the
    /// argument is lowered by 2π. Real on (0, ∞).
    pub fn log_branch(&self, z: &BigComplex) -> BigComplex {
        let zz = z.with_prec(self.prec);
        let l = zz.ln();
        if zz.im.is_sign_positive() && !zz.im.is_zero() && self.geo.upper_sector(&zz) == Sector::S1 {
            let two_pi = Float::with_val(self.prec, pi(self.prec) * 2u32);
            BigComplex::new(l.re, l.im - two_pi)
        } else {
            l
        }
    }

    /// ∫_z^∞ (q(t) - s/(2t)) dt along the ray through z, for |z| well outside
    /// the branch points.
    fn tail(&self, z: &BigComplex) -> Result<(BigComplex, f64)> {
        let p = self.prec;
        let field = &self.field;
        let m2 = Float::with_val(p, &field.m * 2u32);
        let zeta2 = field.zp.norm_sqr();
        let one = BigComplex::one(p);
        let zz = z.clone();
        // t = z/u; the integrand in u is smooth on (0, 1].
        let f = FnIntegrand(|u: &BigComplex| {
            let t = &zz / u;
            let r = field.r_seg(&t);
            // q - s/(2t) = (s/2) (t(|ζ|² - 2mt)/(R+t) + 1) / (t(t²-1)).
            let num_inner = &BigComplex::from_real(zeta2.clone()) - &t.scale(&m2);
            let frac = &(&t * &num_inner) / &(&r + &t);
            let num = &frac + &one;
            let den = &t * &(&t.square() - &one);
            let g = (&num / &den).scale(&field.s_half);
            &(&g * &zz) / &u.square()
        });
        let zero = BigComplex::zero(p);
        let r = integrate_segment(&f, &zero, &one, SegmentMap::Linear, &mut (), &QuadOptions::new(self.tol, p))?;
        Ok((r.value, r.error))
    }

    /// The constant c in φ(z) = (A+B+2)/2 log z + c + O(1/z), using
    /// [`Phase::log_branch`], evaluated from the point `z` (|z| ≥ 100).
    pub fn constant_c_from(&self, z: &BigComplex) -> Result<PhaseValue> {
        let zz = z.with_prec(self.prec);
        let v = self.phi(&zz)?;
        let (t, te) = self.tail(&zz)?;
        let l = self.log_branch(&zz).scale(&self.field.s_half);
        Ok(PhaseValue { phi: &(&v.phi - &l) + &t, quad_error_bound: v.quad_error_bound + te })
    }

    /// c evaluated from z = 100 on the positive axis.
    pub fn constant_c(&self) -> Result<PhaseValue> {
        self.constant_c_from(&pt(self.prec, 100.0, 0.0))
    }

    /// Direct estimates φ(x) - (s/2) log x at x = 10², 10³, 10⁴ and their
    /// Richardson extrapolations (10 c_{k+1} - c_k)/9.
    pub fn constant_c_ladder(&self) -> Result<(Vec<BigComplex>, Vec<BigComplex>)> {
        let mut est = Vec::new();
        for x in [1e2, 1e3, 1e4] {
            let z = pt(self.prec, x, 0.0);
            let v = self.phi(&z)?;
            let l = self.log_branch(&z).scale(&self.field.s_half);
            est.push(&v.phi - &l);
        }
        let rich = est.windows(2).map(|w| (&w[1].scale_f64(10.0) - &w[0]).scale_f64(1.0 / 9.0)).collect();
        Ok((est, rich))
    }
}

/// c for the given geometry at working precision `prec`.
pub fn constant_c(geo: &Geometry, prec: u32, tol: f64) -> Result<PhaseValue> {
    Phase::new(geo, prec, tol).constant_c()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ArcKind, Omega, Sign, TraceOptions};
    use crate::params::ParameterPair;
    use std::sync::OnceLock;

    fn geo() -> &'static Geometry {
        static G: OnceLock<Geometry> = OnceLock::new();
        G.get_or_init(|| Geometry::new(&ParameterPair::parse("-0.7", "-0.8").unwrap(), &TraceOptions::default()).unwrap())
    }

    fn c(x: f64, y: f64) -> BigComplex {
        BigComplex::from_f64(x, y, 128)
    }

    #[test]
    fn quad_contour_examples() {
        let one = FnIntegrand(|_t: &BigComplex| BigComplex::one(128));
        let (v, _) = quad_contour(&one, &[c(0.0, 0.0), c(1.0, 0.0)], false, &[], &mut (), 1e-30, 128).unwrap();
        assert!((&v - &c(1.0, 0.0)).abs_f64() < 1e-30);
        let inv = FnIntegrand(|t: &BigComplex| t.inv());
        let arc: Vec<BigComplex> = (0..=64)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / 64.0;
                c(th.cos(), th.sin())
            })
            .collect();
        // The polygon through the semicircle's vertices encloses the same
        // winding, so the integral is still iπ.
        let (v, _) = quad_contour(&inv, &arc, false, &[], &mut (), 1e-25, 128).unwrap();
        assert!((v.im.to_f64() - std::f64::consts::PI).abs() < 1e-20 && v.re.to_f64().abs() < 1e-20);
        let cut = vec![vec![(0.5, -1.0), (0.5, 1.0)]];
        assert!(matches!(
            quad_contour(&one, &[c(0.0, 0.0), c(1.0, 0.0)], false, &cut, &mut (), 1e-10, 128),
            Err(JrhError::PathIntersectsCut(_))
        ));
    }

    #[test]
    fn phi_basic_values() {
        let g = geo();
        let ph = Phase::new(g, 128, 1e-28);
        assert!(ph.phi(&g.branch_points().zeta_minus).unwrap().phi.is_zero());
        let on_r = &g.gamma_r().points[g.gamma_r().len() / 3];
        assert!(ph.phi(on_r).unwrap().phi.re.to_f64().abs() < 1e-12);
        assert!(ph.phi(&c(-1.0, 0.01)).unwrap().phi.re.to_f64() < 0.0);
        assert!(matches!(ph.phi(&g.gamma_c().points[10]), Err(JrhError::OnCut(_))));
    }

    #[test]
    fn integral_over_gamma_l() {
        // (A+B+2)/2 ∫ along -Γ_L from ζ- to ζ+ = -πi(1+A).
        let g = geo();
        let ph = Phase::new(g, 128, 1e-28);
        let mut pts: Vec<BigComplex> = g.gamma_l().points.clone();
        pts.reverse();
        let rv = &g.gamma_l().rvals;
        let k = 1;
        let start_r = rv[rv.len() - 1 - k].clone();
        let qi = QIntegrand::new(ph.field());
        let mut st = start_r;
        let (body, _) = quad_contour(&qi, &pts[k..pts.len() - 1], false, &[], &mut st, 1e-26, 128).unwrap();
        // End pieces near ζ± carry the square-root singularities.
        let f = ph.field();
        let d0 = &pts[k] - &f.zm;
        let s0 = rv[rv.len() - 1 - k].clone();
        let sig0 = if Float::with_val(128, &f.r_leg(&pts[k], &d0, 1).re * &s0.re).is_sign_negative() { -1 } else { 1 };
        let leg0 = FnIntegrand(|t: &BigComplex| f.q(t, &f.r_leg(t, &d0, sig0)));
        let (v0, _) = quad_contour(&leg0, &[f.zm.clone(), pts[k].clone()], true, &[], &mut (), 1e-28, 128).unwrap();
        let last = &pts[pts.len() - 2];
        let d1 = last - &f.zp;
        let r_last = &g.gamma_l().rvals[1];
        // Near ζ+ the leg formula uses ζ+ as base point: R = σ u sqrt(d) sqrt(t-ζ-).
        let leg1 = FnIntegrand(|t: &BigComplex| {
            let u2 = (&(t - &f.zp) / &d1).re;
            let u = if u2.is_sign_negative() { Float::new(128) } else { u2.sqrt() };
            let v = (&d1.sqrt() * &(t - &f.zm).sqrt()).scale(&u);
            let probe = (&d1.sqrt() * &(last - &f.zm).sqrt()).re;
            let s = if Float::with_val(128, &probe * &r_last.re).is_sign_negative() { -v } else { v };
            f.q(t, &s)
        });
        let (v1, _) = quad_contour(&leg1, &[f.zp.clone(), last.clone()], true, &[], &mut (), 1e-28, 128).unwrap();
        let total = &(&v0 + &body) - &v1;
        let expect = -std::f64::consts::PI * 0.3;
        assert!(total.re.to_f64().abs() < 1e-12, "{total}");
        assert!((total.im.to_f64() - expect).abs() < 1e-12, "{total}");
    }

    #[test]
    fn sign_pattern_by_region() {
        let g = geo();
        let ph = Phase::new(g, 128, 1e-24);
        let pts = [(-6.0, 0.5), (5.0, -1.0), (-2.0, 0.3), (-0.5, 0.2), (0.5, -0.3), (2.0, 0.3), (0.0, 4.0), (3.0, -3.0)];
        for (x, y) in pts {
            let z = c(x, y);
            let lab = g.classify(&z, 1e-6);
            let re = ph.phi(&z).unwrap().phi.re.to_f64();
            match lab.omega {
                Omega::OmegaInfinity => assert!(re > 0.0, "{x} {y} {re}"),
                _ => assert!(re < 0.0, "{x} {y} {re}"),
            }
        }
    }

    #[test]
    fn path_independence() {
        let g = geo();
        let ph = Phase::new(g, 128, 1e-26);
        for (x, y) in [(0.3, 0.5), (-3.0, 2.0), (2.5, -0.4), (1.3, 1.0), (-0.9, 1.2)] {
            let plans = ph.plans(&c(x, y), false).unwrap();
            assert!(plans.len() >= 2, "{x} {y}");
            let v0 = ph.integrate_plan(&plans[0]).unwrap();
            for p in &plans[1..] {
                let v = ph.integrate_plan(p).unwrap();
                assert!(v.phi.dist(&v0.phi).to_f64() < 1e-22, "{x} {y}");
            }
            let m = ph.phi_via_mirror(&c(x, y)).unwrap();
            assert!(m.phi.dist(&v0.phi).to_f64() < 1e-22, "{x} {y}");
        }
    }

    #[test]
    fn jump_relations() {
        let g = geo();
        let ph = Phase::new(g, 128, 1e-26);
        let pif = std::f64::consts::PI;
        let (a, b) = (-0.7, -0.8);
        let cases = [
            (ArcKind::GammaPerpInfinity(Sign::Plus), Sector::S4, pif * (1.0 + b), Sector::S1, -pif * (1.0 + a)),
            (ArcKind::GammaPerpMinus1(Sign::Plus), Sector::S2, -pif * (1.0 + a + b), Sector::S1, -pif * (1.0 + a)),
            (ArcKind::GammaPerpPlus1(Sign::Plus), Sector::S4, pif * (1.0 + b), Sector::S3, pif * (1.0 + a + b)),
        ];
        for (kind, s1, j1, s2, j2) in cases {
            let arc = g.arc(kind).unwrap();
            let k = arc.len() / 2;
            let z = &arc.points[k];
            let t = &arc.points[k + 1] - &arc.points[k - 1];
            let n = t.mul_i().scale_f64(1e-3 / t.abs_f64());
            let tilde = ph.phi_tilde(z).unwrap().phi;
            for (sign, sector, jump) in [(1.0, s1, j1), (-1.0, s2, j2)] {
                let from = z + &n.scale_f64(sign);
                let from = if g.upper_sector(&from) == sector { from } else { z - &n.scale_f64(sign) };
                assert_eq!(g.upper_sector(&from), sector);
                let v = ph.phi_limit(z, &from).unwrap().phi;
                let d = &v - &tilde;
                assert!(d.re.to_f64().abs() < 1e-20, "{kind} {d}");
                let want = ph.sector_constant(sector);
                assert!((d.im.to_f64() - jump).abs() < 1e-14, "{kind} {d}");
                assert!(d.dist(&want).to_f64() < 1e-20, "{kind} {d}");
            }
        }
    }

    #[test]
    fn constant_c_is_consistent() {
        let g = geo();
        let ph = Phase::new(g, 128, 1e-26);
        let c0 = ph.constant_c().unwrap();
        let c1 = ph.constant_c_from(&c(300.0, -400.0)).unwrap();
        let c2 = ph.constant_c_from(&c(-300.0, 400.0)).unwrap();
        assert!(c0.phi.dist(&c1.phi).to_f64() < 1e-22);
        assert!(c0.phi.dist(&c2.phi).to_f64() < 1e-22);
        let (est, rich) = ph.constant_c_ladder().unwrap();
        let e3 = est[1].dist(&c0.phi).to_f64();
        let e4 = est[2].dist(&c0.phi).to_f64();
        // Remainder is O(1/z).
        assert!(e4 < e3 / 5.0 && e4 < 1e-3);
        assert!(rich[1].dist(&c0.phi).to_f64() < 1e-6);
    }

    #[test]
    fn c_estimates_agree_across_radii() {
        let g = geo();
        let tol = 1e-24;
        let ph = Phase::new(g, 128, tol);
        let c3 = ph.constant_c_from(&c(1e3, 0.0)).unwrap();
        let c4 = ph.constant_c_from(&c(1e4, 0.0)).unwrap();
        assert!(c3.phi.dist(&c4.phi).to_f64() < 10.0 * tol);
    }

    #[test]
    fn symmetric_case_c_rays() {
        let g = Geometry::new(&ParameterPair::parse("-0.75", "-0.75").unwrap(), &TraceOptions::default()).unwrap();
        let tol = 1e-24;
        let ph = Phase::new(&g, 128, tol);
        let base = ph.constant_c().unwrap();
        for th in [std::f64::consts::FRAC_PI_3, 2.0 * std::f64::consts::FRAC_PI_3, -std::f64::consts::FRAC_PI_2] {
            let z = c(200.0 * th.cos(), 200.0 * th.sin());
            let v = ph.constant_c_from(&z).unwrap();
            assert!(v.phi.dist(&base.phi).to_f64() < 10.0 * tol, "{th}");
        }
    }

    #[test]
    fn logarithmic_growth_remainder_decays() {
        let g = geo();
        let ph = Phase::new(g, 128, 1e-26);
        let cc = ph.constant_c().unwrap().phi;
        for th in [-2.0, -0.5, 0.3, 2.5f64] {
            let mut prev = f64::INFINITY;
            for r in [50.0, 100.0, 200.0, 400.0] {
                let z = c(r * th.cos(), r * th.sin());
                let v = ph.phi(&z).unwrap().phi;
                let l = ph.log_branch(&z).scale(&ph.field().s_half);
                let rem = (&(&v - &l) - &cc).abs_f64();
                if prev.is_finite() {
                    let ratio = rem / prev;
                    assert!(ratio > 0.4 && ratio < 0.6, "{th} {r} {ratio}");
                }
                prev = rem;
            }
        }
    }
}
