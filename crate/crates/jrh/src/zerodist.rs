//! Limiting zero distributions: the density μ on Γ, its arc masses, the
//! exponents r_α, r_β, r_{α+β}, the four-case prediction of where zeros
//! accumulate, and comparison of computed zeros against a prediction.

use crate::airy::dist_to_integer;
use crate::bigc::{rat_to_float, BigComplex};
use crate::error::{JrhError, Result};
use crate::geometry::{Anchor, Arc, ArcKind, Field, Geometry, LevelComponent};
use crate::phase::QIntegrand;
use crate::planar::{self, P2};
use crate::quad::{integrate_polyline, integrate_segment, FnIntegrand, QuadOptions, SegmentMap};
use rug::{Float, Rational};
use serde::Serialize;

const PREC: u32 = 128;

/// Density of μ with respect to arclength at a point of a traced critical
/// arc: (A+B+2)/(2πi) R₊(z)/(z²-1) times the unit tangent.
pub fn mu_density(z: &BigComplex, geo: &Geometry) -> Result<f64> {
    let p = z.to_c64();
    let tol = 2.0 * geo.options().step.max(1e-9);
    let arc = geo
        .critical_arcs()
        .iter()
        .map(|a| (a.distance_to(p), a))
        .filter(|(d, _)| *d <= tol)
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, a)| a)
        .ok_or_else(|| JrhError::NotOnArc(format!("{z}")))?;
    Ok(arc_density(geo.field(), arc, z))
}

/// Signed arclength density of (s/(2πi)) R/(z²-1) dz on `arc` at z, using the
/// stored R values for the branch and the arc order for the tangent.
pub fn arc_density(field: &Field, arc: &Arc, z: &BigComplex) -> f64 {
    let j = nearest_vertex(arc.line(), z.to_c64());
    let r = field.r_near(&z.with_prec(field.prec), &arc.rvals[j]);
    let (a, b) = tangent_pair(arc, j);
    let t = (&b - &a).to_c64();
    let len = planar::norm(t);
    let q = field.q(&z.with_prec(field.prec), &r).to_c64();
    // q dz/(πi) = Im(q τ)/π |dz| when the measure is real.
    (q.0 * t.1 + q.1 * t.0) / len / std::f64::consts::PI
}

fn tangent_pair(arc: &Arc, j: usize) -> (BigComplex, BigComplex) {
    let n = arc.points.len();
    let closed = arc.endpoints.1 == Anchor::Closed;
    if closed {
        (arc.points[(j + n - 1) % n].clone(), arc.points[(j + 1) % n].clone())
    } else if j + 1 < n {
        (arc.points[j.saturating_sub(1)].clone(), arc.points[j + 1].clone())
    } else {
        (arc.points[n - 2].clone(), arc.points[n - 1].clone())
    }
}

fn nearest_vertex(line: &[P2], p: P2) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (k, q) in line.iter().enumerate() {
        let d = planar::norm((q.0 - p.0, q.1 - p.1));
        if d < bd {
            bd = d;
            best = k;
        }
    }
    best
}

/// ∫ q from the branch point `base` to `p` along the straight leg, with R
/// written as σ u sqrt(d) sqrt(t - other) for t = base + d u², the sign
/// matching `r_p` at the far end.
fn leg_integral(field: &Field, base: &BigComplex, other: &BigComplex, p: &BigComplex, r_p: &BigComplex, tol: f64) -> Result<BigComplex> {
    let prec = field.prec;
    let d = p - base;
    let sd = d.sqrt();
    let probe = &sd * &(p - other).sqrt();
    let flip = probe.dist(r_p) > (-&probe).dist(r_p);
    let f = FnIntegrand(|t: &BigComplex| {
        let u2 = (&(t - base) / &d).re;
        let u = if u2.is_sign_negative() { Float::new(prec) } else { u2.sqrt() };
        let v = (&sd * &(t - other).sqrt()).scale(&u);
        let r = if flip { -v } else { v };
        field.q(t, &r)
    });
    Ok(integrate_segment(&f, base, p, SegmentMap::SqrtStart, &mut (), &QuadOptions::new(tol, prec))?.value)
}

/// (1/(πi)) ∫ q dz along a traced arc in its stored order. Open arcs must
/// start and end at branch points; closed arcs are integrated once around.
pub fn arc_integral(field: &Field, arc: &Arc, tol: f64) -> Result<f64> {
    let qi = QIntegrand::new(field);
    let opts = QuadOptions::new(tol, field.prec);
    let pts = &arc.points;
    let n = pts.len();
    let total = if arc.endpoints.1 == Anchor::Closed {
        let mut path = pts.clone();
        path.push(pts[0].clone());
        let mut st = arc.rvals[0].clone();
        integrate_polyline(&qi, &path, SegmentMap::Linear, &mut st, &opts)?.value
    } else {
        let bp = |a: Anchor| match a {
            Anchor::ZetaPlus => Ok((field.zp.clone(), field.zm.clone())),
            Anchor::ZetaMinus => Ok((field.zm.clone(), field.zp.clone())),
            _ => Err(JrhError::InvalidArgument(format!("arc {} does not end at branch points", arc.kind))),
        };
        let (b0, o0) = bp(arc.endpoints.0)?;
        let (b1, o1) = bp(arc.endpoints.1)?;
        let head = leg_integral(field, &b0, &o0, &pts[1], &arc.rvals[1], tol)?;
        let mut st = arc.rvals[1].clone();
        let body = integrate_polyline(&qi, &pts[1..n - 1], SegmentMap::Linear, &mut st, &opts)?.value;
        let tail = leg_integral(field, &b1, &o1, &pts[n - 2], &arc.rvals[n - 2], tol)?;
        &(&head + &body) - &tail
    };
    Ok(total.mul_neg_i().re.to_f64() / std::f64::consts::PI)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArcMasses {
    pub closed_form: [f64; 3],
    pub quadrature: [f64; 3],
}

/// μ(Γ_L), μ(Γ_C), μ(Γ_R): the closed form (1+A, -1-A-B, 1+B) and the
/// quadrature along the traced arcs.
pub fn arc_masses(geo: &Geometry, tol: f64) -> Result<ArcMasses> {
    let p = geo.params();
    let one = Rational::from(1);
    let closed = [
        Rational::from(&one + p.a()).to_f64(),
        Rational::from(-Rational::from(p.a() + p.b()) - 1u32).to_f64(),
        Rational::from(&one + p.b()).to_f64(),
    ];
    let field = Field::new(p, PREC);
    let arcs = geo.critical_arcs();
    let mut quad = [0.0; 3];
    for (k, a) in arcs.iter().enumerate() {
        quad[k] = arc_integral(&field, a, tol)?;
    }
    Ok(ArcMasses { closed_form: closed, quadrature: quad })
}

/// Masses of the loops around 1, -1 and ∞ from residues of q:
/// s R(1)/2, -s R(-1)/2 and s.
pub fn residue_masses(geo: &Geometry) -> [f64; 3] {
    let p = PREC;
    let s = geo.params().s_float(p);
    let r1 = geo.r_real(&Float::with_val(p, 1));
    let rm1 = geo.r_real(&Float::with_val(p, -1));
    let at1 = Float::with_val(p, &s * &r1) / 2u32;
    let atm1 = -Float::with_val(p, &s * &rm1) / 2u32;
    [at1.to_f64(), atm1.to_f64(), s.to_f64()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExponentMode {
    LimitGiven,
    FiniteN(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateExponents {
    pub r_alpha: f64,
    pub r_beta: f64,
    pub r_alphabeta: f64,
    pub mode: ExponentMode,
}

impl RateExponents {
    pub fn limit(r_alpha: f64, r_beta: f64, r_alphabeta: f64) -> Self {
        RateExponents { r_alpha, r_beta, r_alphabeta, mode: ExponentMode::LimitGiven }
    }

    /// Width of the band inside which two exponents count as equal.
    pub fn band(&self) -> f64 {
        match self.mode {
            ExponentMode::LimitGiven => 1e-12,
            ExponentMode::FiniteN(n) => (5.0 / n as f64).max(0.02),
        }
    }

    /// The case of the limit theorem and the level r of Γ_r.
    pub fn classify(&self) -> Result<(Case, f64)> {
        let w = self.band();
        let eq = |x: f64, y: f64| (x - y).abs() < w;
        let (a, b, ab) = (self.r_alpha, self.r_beta, self.r_alphabeta);
        if eq(a, b) && eq(a, ab) && eq(b, ab) {
            Ok((Case::A, 0.0))
        } else if eq(a, b) && ab > a.max(b) {
            Ok((Case::B, (ab - a) / 2.0))
        } else if eq(a, ab) && b > a.max(ab) {
            Ok((Case::C, (a - b) / 2.0))
        } else if eq(b, ab) && a > b.max(ab) {
            Ok((Case::D, (b - a) / 2.0))
        } else {
            Err(JrhError::InconsistentExponents(format!("r_alpha = {a}, r_beta = {b}, r_alpha+beta = {ab}")))
        }
    }
}

/// -(1/n) ln dist(x, ℤ), with the distance taken exactly.
pub fn rate_exponent(x: &Rational, n: u32) -> Result<f64> {
    let d = dist_to_integer(x);
    if d == 0 {
        return Err(JrhError::ExactInteger(x.to_string()));
    }
    let l = rat_to_float(&d, 256).ln();
    Ok(-l.to_f64() / n as f64)
}

pub fn rate_exponents(alpha: &Rational, beta: &Rational, n: u32) -> Result<RateExponents> {
    if n == 0 {
        return Err(JrhError::InvalidArgument("n must be at least 1".into()));
    }
    Ok(RateExponents {
        r_alpha: rate_exponent(alpha, n)?,
        r_beta: rate_exponent(beta, n)?,
        r_alphabeta: rate_exponent(&Rational::from(alpha + beta), n)?,
        mode: ExponentMode::FiniteN(n),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    A,
    B,
    C,
    D,
}

/// Arcs carrying the limiting zero distribution, in canonical order, with
/// their masses and cumulative mass profiles.
#[derive(Clone, Debug)]
pub struct AttractorPrediction {
    pub case: Case,
    pub r: f64,
    pub arcs: Vec<Arc>,
    pub masses: Vec<f64>,
    /// Cumulative mass at each vertex of each arc, from the start of the arc.
    pub cumulative: Vec<Vec<f64>>,
    field: Field,
}

impl AttractorPrediction {
    /// Density with respect to arclength on arc `k` at z.
    pub fn density(&self, k: usize, z: &BigComplex) -> f64 {
        arc_density(&self.field, &self.arcs[k], z)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn arc_names(&self) -> Vec<String> {
        self.arcs.iter().map(|a| a.kind.to_string()).collect()
    }
}

fn cumulative_profile(field: &Field, arc: &Arc) -> Vec<f64> {
    let mut out = Vec::with_capacity(arc.points.len());
    let mut acc = 0.0;
    let mut prev = arc_density(field, arc, &arc.points[0]).max(0.0);
    out.push(0.0);
    for k in 1..arc.points.len() {
        let cur = arc_density(field, arc, &arc.points[k]).max(0.0);
        let h = arc.points[k].dist(&arc.points[k - 1]).to_f64();
        acc += 0.5 * (prev + cur) * h;
        out.push(acc);
        prev = cur;
    }
    out
}

/// The attractor and limiting density for the given exponents. The density
/// on every arc is (A+B+2)/(2πi) R(z)/(z²-1) dz; its total mass must be 1.
pub fn predict_attractor(exps: &RateExponents, geo: &Geometry, tol: f64) -> Result<AttractorPrediction> {
    let (case, r) = exps.classify()?;
    let mut arcs: Vec<Arc> = Vec::new();
    let level = |comp: LevelComponent| -> Result<Arc> {
        geo.trace_level_set(r)?
            .into_iter()
            .find(|a| a.kind == ArcKind::LevelSet(comp))
            .ok_or_else(|| JrhError::TraceDiverged(format!("level set {r} component {comp:?}")))
    };
    match case {
        Case::A => arcs.extend(geo.critical_arcs().iter().cloned()),
        Case::B => {
            arcs.push(geo.gamma_c().clone());
            arcs.push(level(LevelComponent::Outer)?);
        }
        Case::C => {
            arcs.push(geo.gamma_r().clone());
            arcs.push(level(LevelComponent::NearMinus1)?);
        }
        Case::D => {
            arcs.push(geo.gamma_l().clone());
            arcs.push(level(LevelComponent::NearPlus1)?);
        }
    }
    let field = Field::new(geo.params(), PREC);
    let mut masses = Vec::new();
    for a in &arcs {
        masses.push(arc_integral(&field, a, tol)?);
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-6 || masses.iter().any(|m| *m <= 0.0) {
        return Err(JrhError::ConditionViolated(format!("limit density has masses {masses:?}, total {total}")));
    }
    let cumulative = arcs.iter().map(|a| cumulative_profile(&field, a)).collect();
    Ok(AttractorPrediction { case, r, arcs, masses, cumulative, field })
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroAssignment {
    pub zero: (f64, f64),
    pub arc: usize,
    pub distance: f64,
    /// Predicted cumulative mass at the projection of the zero.
    pub cdf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub arc_names: Vec<String>,
    pub max_dist: f64,
    pub per_arc_counts: Vec<usize>,
    pub per_arc_expected: Vec<f64>,
    pub cdf_sup_dev: f64,
    pub assignments: Vec<ZeroAssignment>,
}

impl ComparisonReport {
    /// Fraction of zeros within `d` of the attractor.
    pub fn fraction_within(&self, d: f64) -> f64 {
        if self.assignments.is_empty() {
            return 1.0;
        }
        self.assignments.iter().filter(|a| a.distance <= d).count() as f64 / self.assignments.len() as f64
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<16} {:>8} {:>10}\n", "arc", "count", "expected"));
        for (k, name) in self.arc_names.iter().enumerate() {
            s.push_str(&format!("{:<16} {:>8} {:>10.3}\n", name, self.per_arc_counts[k], self.per_arc_expected[k]));
        }
        s.push_str(&format!("max_dist     {:.6}\ncdf_sup_dev  {:.6}\n", self.max_dist, self.cdf_sup_dev));
        s
    }
}

/// Assigns each zero to the nearest attractor arc and compares counts and
/// the cumulative distribution (arcs concatenated in their canonical order)
/// with the prediction.
pub fn compare_zeros(zeros: &[BigComplex], pred: &AttractorPrediction) -> ComparisonReport {
    let n = zeros.len();
    let offsets: Vec<f64> = pred
        .masses
        .iter()
        .scan(0.0, |acc, m| {
            let o = *acc;
            *acc += m;
            Some(o)
        })
        .collect();
    let mut counts = vec![0usize; pred.arcs.len()];
    let mut assignments = Vec::with_capacity(n);
    let mut max_dist: f64 = 0.0;
    for z in zeros {
        let p = z.to_c64();
        let (k, d) = pred
            .arcs
            .iter()
            .enumerate()
            .map(|(k, a)| (k, a.distance_to(p)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        counts[k] += 1;
        max_dist = max_dist.max(d);
        let j = nearest_vertex(pred.arcs[k].line(), p);
        let prof = &pred.cumulative[k];
        let scale = pred.masses[k] / prof.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let cdf = offsets[k] + prof[j] * scale;
        assignments.push(ZeroAssignment { zero: p, arc: k, distance: d, cdf });
    }
    let mut cdfs: Vec<f64> = assignments.iter().map(|a| a.cdf).collect();
    cdfs.sort_by(f64::total_cmp);
    let mut sup: f64 = 0.0;
    for (i, c) in cdfs.iter().enumerate() {
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        sup = sup.max((c - lo).abs()).max((hi - c).abs());
    }
    ComparisonReport {
        arc_names: pred.arc_names(),
        max_dist,
        per_arc_counts: counts,
        per_arc_expected: pred.masses.iter().map(|m| m * n as f64).collect(),
        cdf_sup_dev: sup,
        assignments,
    }
}

/// Expected zero counts n·μ on Γ_L, Γ_C, Γ_R.
pub fn expected_counts(geo: &Geometry, n: u32) -> [f64; 3] {
    let p = geo.params();
    let a = p.a().to_f64();
    let b = p.b().to_f64();
    [n as f64 * (1.0 + a), n as f64 * (-1.0 - a - b), n as f64 * (1.0 + b)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TraceOptions;
    use crate::params::{parse_rational, ParameterPair};
    use std::sync::OnceLock;

    fn geo() -> &'static Geometry {
        static G: OnceLock<Geometry> = OnceLock::new();
        G.get_or_init(|| Geometry::new(&ParameterPair::parse("-0.7", "-0.8").unwrap(), &TraceOptions::default()).unwrap())
    }

    #[test]
    fn masses_match_closed_form() {
        let m = arc_masses(geo(), 1e-20).unwrap();
        for k in 0..3 {
            assert!((m.quadrature[k] - m.closed_form[k]).abs() < 1e-8, "{m:?}");
        }
        assert!((m.closed_form[0] - 0.3).abs() < 1e-15 && (m.closed_form[1] - 0.5).abs() < 1e-15);
        let g = Geometry::new(&ParameterPair::parse("-0.75", "-0.75").unwrap(), &TraceOptions::default()).unwrap();
        let m = arc_masses(&g, 1e-20).unwrap();
        assert_eq!(m.closed_form, [0.25, 0.5, 0.25]);
        assert!((m.quadrature.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn density_is_positive() {
        let g = geo();
        for a in g.critical_arcs() {
            let n = a.points.len();
            for k in 1..50 {
                let z = &a.points[k * (n - 1) / 50];
                assert!(mu_density(z, g).unwrap() >= 0.0, "{}", a.kind);
            }
        }
        assert!(matches!(mu_density(&BigComplex::from_f64(5.0, 5.0, 128), g), Err(JrhError::NotOnArc(_))));
    }

    #[test]
    fn residue_identities() {
        let g = geo();
        let m = arc_masses(g, 1e-20).unwrap().quadrature;
        let r = residue_masses(g);
        let (a, b) = (-0.7, -0.8);
        assert!((m[1] + m[2] - r[0]).abs() < 1e-8 && (r[0] + a).abs() < 1e-12);
        assert!((m[0] + m[1] - r[1]).abs() < 1e-8 && (r[1] + b).abs() < 1e-12);
        assert!((m[0] + m[2] - r[2]).abs() < 1e-8 && (r[2] - (a + b + 2.0)).abs() < 1e-12);
    }

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn exponent_examples() {
        let e = rate_exponents(&q("-69.99999"), &q("-79.99999"), 100).unwrap();
        assert!((e.r_alpha - 5.0 * 10f64.ln() / 100.0).abs() < 1e-12);
        assert!((e.r_alphabeta - (5e4f64).ln() / 100.0).abs() < 1e-12);
        assert_eq!(e.classify().unwrap().0, Case::A);
        let e = rate_exponents(&q("-69.99999999999999999999"), &q("-79.999999999999999999999999999999"), 100).unwrap();
        assert!((e.r_alpha - 0.46052).abs() < 1e-5 && (e.r_beta - 0.69078).abs() < 1e-5);
        assert_eq!(e.classify().unwrap().0, Case::C);
        let e = rate_exponents(&q("-69.9999899999"), &q("-80.00001"), 100).unwrap();
        let (case, r) = e.classify().unwrap();
        assert_eq!(case, Case::B);
        assert!((r - 0.0576).abs() < 1e-4, "{r}");
        assert!(matches!(rate_exponents(&q("-70"), &q("-80.5"), 100), Err(JrhError::ExactInteger(_))));
    }

    #[test]
    fn truth_table() {
        let rows = [
            ((0.0, 0.0, 0.0), Case::A),
            ((0.1, 0.1, 0.3), Case::B),
            ((0.1, 0.4, 0.1), Case::C),
            ((0.4, 0.1, 0.1), Case::D),
        ];
        for (r, want) in rows {
            assert_eq!(RateExponents::limit(r.0, r.1, r.2).classify().unwrap().0, want);
        }
        let (_, r) = RateExponents::limit(0.1, 0.4, 0.1).classify().unwrap();
        assert!((r + 0.15).abs() < 1e-15);
        assert!(RateExponents::limit(0.1, 0.2, 0.3).classify().is_err());
    }

    #[test]
    fn case_b_mass_is_one() {
        let e = RateExponents::limit(0.1, 0.1, 0.2);
        let p = predict_attractor(&e, geo(), 1e-16).unwrap();
        assert_eq!(p.case, Case::B);
        assert!((p.total_mass() - 1.0).abs() < 1e-8, "{:?}", p.masses);
        assert!((p.masses[0] - 0.5).abs() < 1e-8);
        let e = RateExponents::limit(0.1, 0.3, 0.1);
        let p = predict_attractor(&e, geo(), 1e-16).unwrap();
        assert!((p.masses[0] - 0.2).abs() < 1e-8 && (p.masses[1] - 0.8).abs() < 1e-8, "{:?}", p.masses);
        let e = RateExponents::limit(0.3, 0.1, 0.1);
        let p = predict_attractor(&e, geo(), 1e-16).unwrap();
        assert!((p.masses[0] - 0.3).abs() < 1e-8 && (p.masses[1] - 0.7).abs() < 1e-8, "{:?}", p.masses);
    }

    #[test]
    fn single_zero_is_assigned_once() {
        let g = geo();
        let (alpha, beta) = (-0.7f64, -0.8f64);
        let z = -(alpha - beta) / (alpha + beta + 2.0);
        let pred = predict_attractor(&RateExponents::limit(0.0, 0.0, 0.0), g, 1e-16).unwrap();
        let rep = compare_zeros(&[BigComplex::from_f64(z, 0.0, 128)], &pred);
        assert_eq!(rep.per_arc_counts.iter().sum::<usize>(), 1);
        assert!(rep.cdf_sup_dev <= 1.0);
    }
}
