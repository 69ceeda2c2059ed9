//! Outer asymptotic formulas in domains I-VI and the Airy-type formula near
//! the branch points, for the monic polynomial of degree n with parameters
//! α = A n, β = B n.

use crate::airy::{airy_combination, sine_ratios, SineRatios};
use crate::bigc::{pi, rat_to_float, BigComplex};
use crate::error::{JrhError, Result};
use crate::geometry::{Domain, Geometry, RegionLabel, Sector, Side};
use crate::phase::Phase;
use rug::{Float, Rational};
use serde::Serialize;
use std::cell::OnceCell;

/// The pieces of one outer formula. `value` of [`OuterTerms::combine`] is
/// prefactor·(c₊ exp_plus N11 + c₋ exp_minus N12) with the coefficients of
/// the domain.
#[derive(Clone, Debug)]
pub struct OuterTerms {
    pub n11: BigComplex,
    pub n12: BigComplex,
    /// e^{-nc}(z-1)^{-An/2}(z+1)^{-Bn/2}
    pub prefactor: BigComplex,
    pub exp_plus: BigComplex,
    pub exp_minus: BigComplex,
    pub sin_ratio_a: BigComplex,
    pub sin_ratio_b: BigComplex,
    /// e^{-Anπi}
    pub phase_a: BigComplex,
    /// e^{Bnπi}
    pub phase_b: BigComplex,
}

impl OuterTerms {
    /// Coefficients of e^{nφ}N11 and e^{-nφ}N12 in the given domain.
    pub fn coefficients(&self, domain: Domain) -> (BigComplex, BigComplex) {
        let p = self.n11.prec();
        let ab = &self.phase_a * &self.sin_ratio_b;
        let ba = &self.phase_b * &self.sin_ratio_a;
        match domain {
            Domain::I | Domain::II => (BigComplex::one(p), -ab),
            Domain::III => (ba, -ab),
            Domain::IV => (ab, ba),
            Domain::V | Domain::VI => (BigComplex::one(p), ba),
        }
    }

    /// The two terms inside the bracket, without the prefactor.
    pub fn bracket_terms(&self, domain: Domain) -> (BigComplex, BigComplex) {
        let (cp, cm) = self.coefficients(domain);
        (&cp * &(&self.exp_plus * &self.n11), &cm * &(&self.exp_minus * &self.n12))
    }

    pub fn combine(&self, domain: Domain) -> BigComplex {
        let (t1, t2) = self.bracket_terms(domain);
        &self.prefactor * &(&t1 + &t2)
    }
}

#[derive(Clone, Debug)]
pub struct OuterValue {
    pub value: BigComplex,
    pub label: RegionLabel,
    pub terms: OuterTerms,
}

/// Magnitudes reported alongside an evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct TermMagnitudes {
    pub plus_term: f64,
    pub minus_term: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Formula {
    Outer(Domain),
    LocalMinus,
    LocalPlus,
}

/// Cached data for one parameter pair (A, B): the phase function, the
/// constant c, the derivative of the conformal map at ζ- and the radius
/// of the disks around ζ± where the local formula is used.
pub struct Asymptotics<'g> {
    phase: Phase<'g>,
    prec: u32,
    c: BigComplex,
    fprime: BigComplex,
    delta: OnceCell<f64>,
    delta_target: f64,
}

fn rational_times(q: &Rational, n: u32) -> Rational {
    Rational::from(q * n)
}

impl<'g> Asymptotics<'g> {
    pub fn new(geo: &'g Geometry, prec: u32, tol: f64) -> Result<Asymptotics<'g>> {
        let phase = Phase::new(geo, prec, tol);
        let c = phase.constant_c()?.phi;
        let fprime = conformal_derivative(geo, prec);
        let delta_target = 0.25 * geo.scale();
        Ok(Asymptotics { phase, prec, c, fprime, delta: OnceCell::new(), delta_target })
    }

    /// Sets the starting radius for the conformal-radius search.
    pub fn with_delta_target(mut self, d: f64) -> Self {
        self.delta_target = d;
        self.delta = OnceCell::new();
        self
    }

    pub fn geometry(&self) -> &'g Geometry {
        self.phase.geometry()
    }

    pub fn phase(&self) -> &Phase<'g> {
        &self.phase
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn constant_c(&self) -> &BigComplex {
        &self.c
    }

    /// f'(ζ-).
    pub fn conformal_derivative(&self) -> &BigComplex {
        &self.fprime
    }

    /// (α, β) = (A n, B n).
    pub fn exponents(&self, n: u32) -> (Rational, Rational) {
        let p = self.geometry().params();
        (rational_times(p.a(), n), rational_times(p.b(), n))
    }

    pub fn sine_ratios(&self, n: u32) -> Result<SineRatios> {
        let (a, b) = self.exponents(n);
        sine_ratios(&a, &b, self.prec)
    }

    /// N11 and N12 from the quarter root a = ((z-ζ-)/(z-ζ+))^{1/4}.
    pub fn n_entries(&self, z: &BigComplex) -> Result<(BigComplex, BigComplex)> {
        let a = self.geometry().a_eval(z)?;
        Ok(n_from_a(&a))
    }

    /// N11 and N12 from R'(z) = (2z-ζ+-ζ-)/(2R). The square roots fix the
    /// entries only up to sign; the signs are taken from [`Self::n_entries`].
    pub fn n_entries_alt(&self, z: &BigComplex) -> Result<(BigComplex, BigComplex)> {
        let geo = self.geometry();
        let p = self.prec;
        let zz = z.with_prec(p);
        let r = geo.r_eval(&zz)?;
        let f = geo.field();
        let rp = &(&zz.scale_f64(2.0) - &(&f.zp + &f.zm)) / &r.scale_f64(2.0);
        let one = BigComplex::one(p);
        let s11 = (&one + &rp).scale_f64(0.5).sqrt();
        let s12 = (&one - &rp).scale_f64(0.5).sqrt();
        let (n11, n12) = self.n_entries(&zz)?;
        Ok((nearest_sign(s11, &n11), nearest_sign(s12, &n12)))
    }

    /// (z-1)^{-An/2}(z+1)^{-Bn/2}, analytic off γ_1^+ ∪ γ_∞^+ and
    /// γ_{-1}^+ ∪ γ_∞^+ respectively and positive on (1, ∞).
    pub fn fractional_powers(&self, z: &BigComplex, n: u32) -> BigComplex {
        let p = self.prec;
        let zz = z.with_prec(p);
        let (alpha, beta) = self.exponents(n);
        let one = BigComplex::one(p);
        let upper = zz.im.is_sign_positive() && !zz.im.is_zero();
        let sector = if upper { Some(self.geometry().upper_sector(&zz)) } else { None };
        let two_pi = Float::with_val(p, pi(p) * 2u32);
        let arg_for = |w: &BigComplex, lowered: bool| -> Float {
            if w.im.is_zero() {
                if w.re.is_sign_negative() {
                    -pi(p)
                } else {
                    Float::new(p)
                }
            } else if lowered {
                Float::with_val(p, w.arg() - &two_pi)
            } else {
                w.arg()
            }
        };
        let zm1 = &zz - &one;
        let zp1 = &zz + &one;
        let arg_m = arg_for(&zm1, matches!(sector, Some(Sector::S1 | Sector::S2 | Sector::S3)));
        let arg_p = arg_for(&zp1, matches!(sector, Some(Sector::S1)));
        let ea = -rat_to_float(&alpha, p) / 2u32;
        let eb = -rat_to_float(&beta, p) / 2u32;
        let lm = BigComplex::new(zm1.abs().ln(), arg_m);
        let lp = BigComplex::new(zp1.abs().ln(), arg_p);
        (&lm.scale(&ea) + &lp.scale(&eb)).exp()
    }

    /// e^{-nc}(z-1)^{-An/2}(z+1)^{-Bn/2}.
    pub fn fractional_prefactor(&self, z: &BigComplex, n: u32) -> BigComplex {
        let enc = (-self.c.scale(&Float::with_val(self.prec, n))).exp();
        &enc * &self.fractional_powers(z, n)
    }

    /// Terms of the outer formulas from given values of φ and a at z.
    pub fn outer_terms_from(&self, z: &BigComplex, n: u32, phi: &BigComplex, a: &BigComplex) -> Result<OuterTerms> {
        let r = self.sine_ratios(n)?;
        let (n11, n12) = n_from_a(a);
        let nphi = phi.scale(&Float::with_val(self.prec, n));
        Ok(OuterTerms {
            n11,
            n12,
            prefactor: self.fractional_prefactor(z, n),
            exp_plus: nphi.exp(),
            exp_minus: (-nphi).exp(),
            sin_ratio_a: r.ratio_a,
            sin_ratio_b: r.ratio_b,
            phase_a: r.phase_a,
            phase_b: r.phase_b,
        })
    }

    pub fn outer_terms(&self, z: &BigComplex, n: u32) -> Result<OuterTerms> {
        let zz = z.with_prec(self.prec);
        let phi = self.phase.phi(&zz)?.phi;
        let a = self.geometry().a_eval(&zz)?;
        self.outer_terms_from(&zz, n, &phi, &a)
    }

    /// The outer formula of the domain containing z, with the O(1/n) factors
    /// set to 1.
    pub fn outer_eval(&self, z: &BigComplex, n: u32) -> Result<OuterValue> {
        self.sine_ratios(n)?;
        let zz = z.with_prec(self.prec);
        self.check_exclusion(&zz)?;
        let label = self.geometry().classify(&zz, 0.0);
        let terms = self.outer_terms(&zz, n)?;
        Ok(OuterValue { value: terms.combine(label.domain), label, terms })
    }

    /// The formula of `domain` evaluated at z regardless of where z lies.
    pub fn outer_eval_in_domain(&self, z: &BigComplex, n: u32, domain: Domain) -> Result<BigComplex> {
        Ok(self.outer_terms(z, n)?.combine(domain))
    }

    fn check_exclusion(&self, z: &BigComplex) -> Result<()> {
        let bp = self.geometry().branch_points();
        let d = self.delta();
        if z.dist(&bp.zeta_minus).to_f64() < d || z.dist(&bp.zeta_plus).to_f64() < d {
            return Err(JrhError::NearBranchPoint);
        }
        Ok(())
    }

    /// Radius δ of the disks around ζ± served by the local formula.
    pub fn delta(&self) -> f64 {
        *self.delta.get_or_init(|| self.find_delta())
    }

    fn find_delta(&self) -> f64 {
        let mut d = self.delta_target;
        for _ in 0..10 {
            if self.conformal_on_circle(d) {
                return d;
            }
            d *= 0.5;
        }
        d
    }

    /// Argument-principle check on |z-ζ-| = d: the map winds once around 0,
    /// moves by less than a quarter turn between samples, and stays within
    /// π/4 of its linearization.
    fn conformal_on_circle(&self, d: f64) -> bool {
        let zm = self.geometry().branch_points().zeta_minus;
        let m = 64;
        let mut args = Vec::with_capacity(m);
        for k in 0..m {
            let th = std::f64::consts::TAU * (k as f64 + 0.5) / m as f64;
            let z = &zm + &BigComplex::from_f64(d * th.cos(), d * th.sin(), self.prec);
            match self.f_unchecked(&z) {
                Ok((f, lin)) => {
                    let dev = (&f / &lin).arg().to_f64().abs();
                    if dev > std::f64::consts::FRAC_PI_4 {
                        return false;
                    }
                    args.push(f.arg().to_f64());
                }
                Err(_) => return false,
            }
        }
        let mut total = 0.0;
        for k in 0..m {
            let mut step = args[(k + 1) % m] - args[k];
            while step > std::f64::consts::PI {
                step -= std::f64::consts::TAU;
            }
            while step < -std::f64::consts::PI {
                step += std::f64::consts::TAU;
            }
            if step.abs() > std::f64::consts::FRAC_PI_2 {
                return false;
            }
            total += step;
        }
        (total / std::f64::consts::TAU - 1.0).abs() < 1e-6
    }

    /// f with its linearization f'(ζ-)(z-ζ-), without the radius check.
    fn f_unchecked(&self, z: &BigComplex) -> Result<(BigComplex, BigComplex)> {
        let p = self.prec;
        let zz = z.with_prec(p);
        let zm = self.geometry().branch_points().zeta_minus;
        let lin = &self.fprime * &(&zz - &zm);
        if lin.is_zero() {
            return Ok((BigComplex::zero(p), lin));
        }
        let phi = self.phase.phi(&zz)?.phi;
        // f³ = (3φ/2)², three candidate cube roots.
        let w = phi.scale_f64(1.5).square();
        let root = (w.ln().scale(&(Float::with_val(p, 1) / 3u32))).exp();
        let omega = BigComplex::cis(&Float::with_val(p, pi(p) * 2u32 / 3u32));
        let mut best = root.clone();
        let mut cand = root;
        for _ in 0..2 {
            cand = &cand * &omega;
            if cand.dist(&lin) < best.dist(&lin) {
                best = cand.clone();
            }
        }
        if best.dist(&lin) > lin.abs() {
            return Err(JrhError::OutsideConformalRadius(self.delta.get().copied().unwrap_or(self.delta_target)));
        }
        Ok((best, lin))
    }

    /// The conformal map f = (3φ/2)^{2/3} near ζ-, real and positive on γ_∞^-.
    pub fn conformal_f(&self, z: &BigComplex) -> Result<BigComplex> {
        let zm = self.geometry().branch_points().zeta_minus;
        let d = self.delta();
        if z.dist(&zm).to_f64() >= d {
            return Err(JrhError::OutsideConformalRadius(d));
        }
        Ok(self.f_unchecked(z)?.0)
    }

    /// The Airy-type formula near ζ-, with the O(1/n) factors set to 1.
    pub fn local_eval(&self, z: &BigComplex, n: u32) -> Result<BigComplex> {
        let p = self.prec;
        let r = self.sine_ratios(n)?;
        let zz = z.with_prec(p);
        let f = self.conformal_f(&zz)?;
        let nf = Float::with_val(p, n);
        let n16 = Float::with_val(p, nf.ln_ref()) / 6u32;
        let n16 = n16.exp();
        let n23 = Float::with_val(p, &n16 * &n16).square();
        let s = f.scale(&n23);
        let av = airy_combination(&s, &r, p)?;
        // ((z-ζ+)/(z-ζ-) f)^{1/4} = f^{1/4}/a, analytic across Γ_C.
        // ((z-ζ+)/(z-ζ-) f)^{1/4} = f^{1/4}/a, analytic across Γ_C; at ζ-
        // itself the limit along γ_∞^- is used.
        let quarter = if f.is_zero() {
            let th = self.geometry().orthogonal_angles()[2];
            let h = 1e-20 * self.geometry().scale();
            let w = &zz + &BigComplex::from_f64(h * th.cos(), h * th.sin(), p);
            let fw = self.f_unchecked(&w)?.0;
            &fw.ln().scale_f64(0.25).exp() / &self.geometry().a_eval(&w)?
        } else {
            let a = self.geometry().a_eval(&zz)?;
            &f.ln().scale_f64(0.25).exp() / &a
        };
        let t1 = (&quarter * &av.a_val).scale(&n16);
        let t2 = (&av.a_deriv / &quarter).scale(&Float::with_val(p, n16.recip_ref()));
        let sqrt_pi = Float::with_val(p, pi(p).sqrt());
        let bracket = (&t1 + &t2).scale(&sqrt_pi).mul_i();
        Ok(&self.fractional_prefactor(&zz, n) * &bracket)
    }

    /// The formula near ζ+ by conjugation symmetry.
    pub fn local_eval_plus(&self, z: &BigComplex, n: u32) -> Result<BigComplex> {
        Ok(self.local_eval(&z.with_prec(self.prec).conj(), n)?.conj())
    }

    /// Dispatches to the outer formula or to a local formula by distance
    /// from the branch points.
    pub fn eval(&self, z: &BigComplex, n: u32) -> Result<(BigComplex, Formula)> {
        let bp = self.geometry().branch_points();
        let d = self.delta();
        let zz = z.with_prec(self.prec);
        if zz.dist(&bp.zeta_minus).to_f64() < d {
            return Ok((self.local_eval(&zz, n)?, Formula::LocalMinus));
        }
        if zz.dist(&bp.zeta_plus).to_f64() < d {
            return Ok((self.local_eval_plus(&zz, n)?, Formula::LocalPlus));
        }
        let v = self.outer_eval(&zz, n)?;
        Ok((v.value, Formula::Outer(v.label.domain)))
    }

    /// Formulas on both sides of Γ_C at a point z on it: domain III uses the
    /// limits from the - side, domain IV those from the + side.
    pub fn outer_on_gamma_c(&self, z: &BigComplex, n: u32, eps: f64) -> Result<(BigComplex, BigComplex)> {
        let geo = self.geometry();
        let zz = z.with_prec(self.prec);
        let mut out = Vec::new();
        for (side, dom) in [(Side::Minus, Domain::III), (Side::Plus, Domain::IV)] {
            let a = geo.a_boundary(&zz, side)?;
            let from = side_point(geo, &zz, side, eps)?;
            let phi = self.phase.phi_limit(&zz, &from)?.phi;
            out.push(self.outer_terms_from(&zz, n, &phi, &a)?.combine(dom));
        }
        let b = out.pop().unwrap();
        Ok((out.pop().unwrap(), b))
    }
}

/// A point at distance eps from z on the given side of Γ_C.
fn side_point(geo: &Geometry, z: &BigComplex, side: Side, eps: f64) -> Result<BigComplex> {
    let want = if side == Side::Plus { Domain::IV } else { Domain::III };
    for dir in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        let w = z + &BigComplex::from_f64(eps * dir.0, eps * dir.1, z.prec());
        if geo.classify(&w, 0.0).domain == want {
            return Ok(w);
        }
    }
    Err(JrhError::NotOnCut(format!("{z}")))
}

pub fn n_from_a(a: &BigComplex) -> (BigComplex, BigComplex) {
    let ia = a.inv();
    let n11 = (a + &ia).scale_f64(0.5);
    let n12 = (a - &ia).scale_f64(0.5).mul_neg_i();
    (n11, n12)
}

fn nearest_sign(v: BigComplex, target: &BigComplex) -> BigComplex {
    let m = -&v;
    if m.dist(target) < v.dist(target) {
        m
    } else {
        v
    }
}

/// f'(ζ-): the cube root of K² whose direction maps the tangent of γ_∞^-
/// to the positive real axis.
pub fn conformal_derivative(geo: &Geometry, prec: u32) -> BigComplex {
    let k2 = geo.field().k_squared().with_prec(prec);
    let theta = geo.orthogonal_angles()[2];
    let root = k2.ln().scale(&(Float::with_val(prec, 1) / 3u32)).exp();
    let omega = BigComplex::cis(&Float::with_val(prec, pi(prec) * 2u32 / 3u32));
    let mut best = root.clone();
    let mut cand = root;
    let score = |w: &BigComplex| {
        let t = w.arg().to_f64() + theta;
        (t.sin()).atan2(t.cos()).abs()
    };
    for _ in 0..2 {
        cand = &cand * &omega;
        if score(&cand) < score(&best) {
            best = cand.clone();
        }
    }
    best
}

/// Relative term sizes of an outer evaluation.
pub fn term_magnitudes(t: &OuterTerms, domain: Domain) -> TermMagnitudes {
    let (a, b) = t.bracket_terms(domain);
    let p = t.prefactor.abs_f64();
    TermMagnitudes { plus_term: a.abs_f64() * p, minus_term: b.abs_f64() * p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ArcKind, Sign, TraceOptions};
    use crate::params::ParameterPair;
    use crate::reference::{build_jacobi, eval_poly};
    use rug::ops::Pow;
    use std::sync::OnceLock;

    fn geo_for(a: &str, b: &str) -> Geometry {
        Geometry::new(&ParameterPair::parse(a, b).unwrap(), &TraceOptions::default()).unwrap()
    }

    fn geo() -> &'static Geometry {
        static G: OnceLock<Geometry> = OnceLock::new();
        G.get_or_init(|| geo_for("-0.6913", "-0.8071"))
    }

    fn c(x: f64, y: f64) -> BigComplex {
        BigComplex::from_f64(x, y, 128)
    }

    fn exact(asy: &Asymptotics, z: &BigComplex, n: u32) -> BigComplex {
        let (a, b) = asy.exponents(n);
        let p = build_jacobi(n, &a, &b).unwrap().monic();
        eval_poly(&p, z, 256).0.with_prec(128)
    }

    #[test]
    fn n_entries_identities() {
        let asy = Asymptotics::new(geo(), 128, 1e-28).unwrap();
        let (n11, n12) = asy.n_entries(&c(1e6, 0.0)).unwrap();
        assert!((n11.re.to_f64() - 1.0).abs() < 1e-5 && n12.abs_f64() < 1e-5);
        for (x, y) in [(0.3, 2.0), (-2.0, -1.0), (4.0, -3.5), (-0.5, -2.9), (1.5, 0.2)] {
            let z = c(x, y);
            let (n11, n12) = asy.n_entries(&z).unwrap();
            let s = &n11.square() + &n12.square();
            assert!(s.dist(&BigComplex::one(128)).to_f64() < 1e-33);
            let (m11, m12) = asy.n_entries_alt(&z).unwrap();
            assert!(m11.dist(&n11).to_f64() < 1e-30 && m12.dist(&n12).to_f64() < 1e-30, "{z}");
        }
    }

    #[test]
    fn fractional_powers_branches() {
        let asy = Asymptotics::new(geo(), 128, 1e-28).unwrap();
        let v = asy.fractional_powers(&c(3.0, 0.0), 40);
        assert!(v.re.to_f64() > 0.0 && v.im.is_zero());
        let (alpha, _) = asy.exponents(40);
        let one_side = Float::with_val(128, 2).pow(&(-rat_to_float(&alpha, 128) / 2u32));
        let bare = asy.fractional_powers(&c(3.0, 0.0), 40);
        let (_, beta) = asy.exponents(40);
        let other = Float::with_val(128, 4).pow(&(-rat_to_float(&beta, 128) / 2u32));
        assert!((Float::with_val(128, &one_side * &other) - &bare.re).abs().to_f64() < 1e-25 * bare.abs_f64());
        // Continuity across γ_{-1}^- and the real segment (-1, 1).
        let arc = geo().arc(ArcKind::GammaPerpMinus1(Sign::Minus)).unwrap();
        let m = &arc.points[arc.len() / 2];
        for (d, w) in [(1e-6, m.clone()), (1e-6, c(0.5, 0.0)), (1e-6, c(-3.0, 0.0))] {
            if w.im.is_zero() && w.re.to_f64() < -1.0 {
                continue;
            }
            let a = asy.fractional_powers(&(&w + &c(0.0, d)), 40);
            let b = asy.fractional_powers(&(&w - &c(0.0, d)), 40);
            assert!(a.rel_diff(&b).to_f64() < 1e-3, "{w}");
        }
    }

    #[test]
    fn outer_matches_oracle() {
        let asy = Asymptotics::new(geo(), 128, 1e-28).unwrap();
        for (z, dom) in [(c(-6.0, 1.0), Domain::I), (c(-0.5, -0.8), Domain::III), (c(6.0, -1.0), Domain::VI)] {
            let mut errs = Vec::new();
            for n in [40u32, 80] {
                let v = asy.outer_eval(&z, n).unwrap();
                assert_eq!(v.label.domain, dom, "{z}");
                errs.push(v.value.rel_diff(&exact(&asy, &z, n)).to_f64());
            }
            assert!(errs[0] < 0.1 && errs[1] < errs[0] * 0.75, "{z} {errs:?}");
        }
    }

    #[test]
    fn boundary_agreement() {
        let g = geo();
        let asy = Asymptotics::new(g, 128, 1e-28).unwrap();
        let n = 100;
        let mid = |k: ArcKind| {
            let a = g.arc(k).unwrap();
            a.points[a.len() / 2].clone()
        };
        let z = mid(ArcKind::GammaPerpMinus1(Sign::Minus));
        let x = asy.outer_eval_in_domain(&z, n, Domain::II).unwrap();
        let y = asy.outer_eval_in_domain(&z, n, Domain::III).unwrap();
        assert!(x.rel_diff(&y).to_f64() < 1e-8);
        let z = mid(ArcKind::GammaPerpPlus1(Sign::Minus));
        let x = asy.outer_eval_in_domain(&z, n, Domain::IV).unwrap();
        let y = asy.outer_eval_in_domain(&z, n, Domain::V).unwrap();
        assert!(x.rel_diff(&y).to_f64() < 1e-8);
        let z = mid(ArcKind::GammaPerpInfinity(Sign::Minus));
        let x = asy.outer_eval_in_domain(&z, n, Domain::I).unwrap();
        let y = asy.outer_eval_in_domain(&z, n, Domain::VI).unwrap();
        assert!(x.rel_diff(&y).to_f64() < 1e-8);
        let gc = g.gamma_c();
        for j in [gc.len() / 4, 3 * gc.len() / 4] {
            let (x, y) = asy.outer_on_gamma_c(&gc.points[j], n, 1e-7).unwrap();
            assert!(x.rel_diff(&y).to_f64() < 1e-8, "{x} {y}");
        }
    }

    #[test]
    fn conformal_map_images() {
        let g = geo();
        let asy = Asymptotics::new(g, 128, 1e-28).unwrap();
        let d = asy.delta();
        assert!(d > 0.0);
        let zm = g.branch_points().zeta_minus;
        assert!(asy.conformal_f(&zm).unwrap().is_zero());
        let pick = |k: ArcKind| {
            let a = g.arc(k).unwrap();
            a.points.iter().find(|p| p.dist(&zm).to_f64() > 0.3 * d).unwrap().clone()
        };
        let f = asy.conformal_f(&pick(ArcKind::GammaPerpInfinity(Sign::Minus))).unwrap();
        assert!(f.re.to_f64() > 0.0 && f.im.to_f64().abs() < 1e-10 * f.abs_f64());
        let t = std::f64::consts::TAU / 3.0;
        let f = asy.conformal_f(&pick(ArcKind::GammaPerpPlus1(Sign::Minus))).unwrap();
        assert!((f.arg().to_f64() - t).abs() < 1e-9, "{f}");
        let f = asy.conformal_f(&pick(ArcKind::GammaPerpMinus1(Sign::Minus))).unwrap();
        assert!((f.arg().to_f64() + t).abs() < 1e-9, "{f}");
        let h = 1e-6;
        let z = &zm + &c(h, h);
        let fd = asy.conformal_f(&z).unwrap().abs_f64() / (h * 2f64.sqrt());
        assert!((fd / asy.conformal_derivative().abs_f64() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn local_formula_matches_oracle() {
        let g = geo();
        let asy = Asymptotics::new(g, 128, 1e-28).unwrap();
        let zm = g.branch_points().zeta_minus;
        let n = 100;
        let th = std::f64::consts::PI / 5.0;
        let r = 0.5 * asy.delta();
        let z = &zm + &c(r * th.cos(), r * th.sin());
        let v = asy.local_eval(&z, n).unwrap();
        let e = exact(&asy, &z, n);
        assert!(v.rel_diff(&e).to_f64() < 10.0 / n as f64, "{v} {e}");
        let w = asy.local_eval_plus(&z.conj(), n).unwrap();
        assert!(w.dist(&v.conj()).to_f64() == 0.0);
        let ew = exact(&asy, &z.conj(), n);
        assert!(w.rel_diff(&ew).to_f64() < 10.0 / n as f64);
    }

    #[test]
    fn local_and_outer_match_on_circle() {
        let g = geo();
        let asy = Asymptotics::new(g, 128, 1e-28).unwrap();
        let zm = g.branch_points().zeta_minus;
        let d = asy.delta();
        let arc = g.arc(ArcKind::GammaPerpInfinity(Sign::Minus)).unwrap();
        let z = arc.points.iter().find(|p| p.dist(&zm).to_f64() > 0.5 * d).unwrap().clone();
        let n = 100;
        let local = asy.local_eval(&z, n).unwrap();
        let outer = asy.outer_terms(&z, n).unwrap().combine(g.classify(&z, 0.0).domain);
        assert!(local.rel_diff(&outer).to_f64() < 10.0 / n as f64);
    }

    #[test]
    fn zero_of_integer_multiplicity_at_one() {
        // A n = -7 exactly, (A+B) n = -15.5.
        let g = geo_for("-0.7", "-0.85");
        let asy = Asymptotics::new(&g, 128, 1e-28).unwrap();
        let n = 10;
        let mut scaled = Vec::new();
        for h in [1e-2, 1e-3, 1e-4, 1e-5] {
            let v = asy.outer_eval(&c(1.0 + h, 0.0), n).unwrap().value;
            scaled.push(v.abs_f64() * h.powi(-7));
        }
        for w in scaled.windows(2) {
            assert!(w[1] / w[0] > 0.5 && w[1] / w[0] < 2.0, "{scaled:?}");
        }
        assert!(scaled[3] > 1e-300 && scaled[3].is_finite());
    }

    #[test]
    fn resonance_is_rejected() {
        let g = geo_for("-0.7", "-0.8");
        let asy = Asymptotics::new(&g, 128, 1e-28).unwrap();
        assert!(matches!(asy.outer_eval(&c(-6.0, 1.0), 40), Err(JrhError::IntegerResonance(_))));
        assert!(asy.outer_eval(&c(-6.0, 1.0), 41).is_ok());
    }
}
