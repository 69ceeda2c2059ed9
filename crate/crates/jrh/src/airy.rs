//! Airy functions of complex argument at arbitrary precision, and the
//! combination 𝒜(s; A, B, n) used by the local formula near ζ-.

use crate::bigc::{pi, rat_to_float, BigComplex};
use crate::error::{JrhError, Result};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

#[derive(Clone, Debug)]
pub struct AiryBase {
    pub ai: BigComplex,
    pub aip: BigComplex,
    pub bi: BigComplex,
    pub bip: BigComplex,
}

/// Radius beyond which the asymptotic expansion reaches `prec` bits.
pub fn asymptotic_radius(prec: u32) -> f64 {
    (0.75 * (prec as f64 + 30.0) * std::f64::consts::LN_2).powf(2.0 / 3.0)
}

fn consts(prec: u32) -> (Float, Float) {
    let three = Float::with_val(prec, 3);
    let third = Float::with_val(prec, 1) / 3u32;
    let two_thirds = Float::with_val(prec, 2) / 3u32;
    let g23 = two_thirds.clone().gamma();
    let g13 = third.clone().gamma();
    let c1 = three.clone().pow(-two_thirds) / g23;
    let c2 = three.pow(-third) / g13;
    (c1, c2)
}

/// Maclaurin series, with guard bits covering the cancellation between the
/// two series (about (4/3)|s|^{3/2}/ln 2 bits).
fn div_int(x: &BigComplex, d: u64) -> BigComplex {
    BigComplex::new(Float::with_val(x.prec(), &x.re / d), Float::with_val(x.prec(), &x.im / d))
}

pub fn airy_maclaurin(s: &BigComplex, prec: u32) -> AiryBase {
    let r = s.abs_f64();
    let guard = (4.0 / 3.0 * r.powf(1.5) / std::f64::consts::LN_2) as u32 + 40;
    let wp = prec + guard;
    let z = s.with_prec(wp);
    let z3 = &z.square() * &z;
    let eps = (-(wp as f64)).exp2();
    let mut f = BigComplex::one(wp);
    let mut g = z.clone();
    let mut fp = BigComplex::zero(wp);
    let mut gp = BigComplex::one(wp);
    let mut tf = BigComplex::one(wp);
    let mut tg = z.clone();
    let mut tfp = z.square().scale_f64(0.5);
    let mut tgp = BigComplex::one(wp);
    fp += &tfp;
    let mut k: u64 = 0;
    loop {
        tf = div_int(&(&tf * &z3), (3 * k + 2) * (3 * k + 3));
        tg = div_int(&(&tg * &z3), (3 * k + 3) * (3 * k + 4));
        tgp = div_int(&(&tgp * &z3), (3 * k + 1) * (3 * k + 3));
        let kk = k + 1;
        tfp = div_int(&(&tfp * &z3), (3 * kk) * (3 * kk + 2));
        f += &tf;
        g += &tg;
        fp += &tfp;
        gp += &tgp;
        k += 1;
        let m = tf.abs_f64().max(tg.abs_f64()).max(tfp.abs_f64()).max(tgp.abs_f64());
        if k as f64 > r && m < eps || m == 0.0 {
            break;
        }
    }
    let (c1, c2) = consts(wp);
    let sqrt3 = Float::with_val(wp, 3).sqrt();
    let ai = &f.scale(&c1) - &g.scale(&c2);
    let aip = &fp.scale(&c1) - &gp.scale(&c2);
    let bi = (&f.scale(&c1) + &g.scale(&c2)).scale(&sqrt3);
    let bip = (&fp.scale(&c1) + &gp.scale(&c2)).scale(&sqrt3);
    AiryBase { ai: ai.with_prec(prec), aip: aip.with_prec(prec), bi: bi.with_prec(prec), bip: bip.with_prec(prec) }
}

/// Ai and Ai' from the large-argument expansion, valid for |arg s| ≤ 2π/3.
/// Returns None if the series does not reach `prec` bits before diverging.
fn ai_asymptotic(s: &BigComplex, prec: u32) -> Option<(BigComplex, BigComplex)> {
    let wp = prec + 20;
    let z = s.with_prec(wp);
    let q = z.sqrt();
    let z14 = q.sqrt();
    let zeta = div_int(&(&z * &q).scale_f64(2.0), 3);
    let izeta = zeta.inv();
    let eps = (-(wp as f64)).exp2();
    let mut u = Float::with_val(wp, 1);
    let mut pow = BigComplex::one(wp);
    let mut su = BigComplex::one(wp);
    let mut sv = BigComplex::one(wp);
    let mut last = f64::INFINITY;
    let mut ok = false;
    for k in 1..4000u32 {
        let kf = k as f64;
        u = u * ((6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = Float::with_val(wp, -&u) * (6.0 * kf + 1.0) / (6.0 * kf - 1.0);
        pow = -(&pow * &izeta);
        let tu = pow.scale(&u);
        let tv = pow.scale(&v);
        let m = tu.abs_f64().max(tv.abs_f64());
        if m > last {
            break;
        }
        last = m;
        su += &tu;
        sv += &tv;
        if m < eps {
            ok = true;
            break;
        }
    }
    if !ok {
        return None;
    }
    let e = (-zeta).exp();
    let two_sqrt_pi = Float::with_val(wp, pi(wp).sqrt() * 2u32);
    let ai = (&(&e * &su) / &z14).scale(&Float::with_val(wp, two_sqrt_pi.recip_ref()));
    let aip = -(&(&e * &sv) * &z14).scale(&Float::with_val(wp, two_sqrt_pi.recip_ref()));
    Some((ai.with_prec(prec), aip.with_prec(prec)))
}

fn omega(prec: u32) -> BigComplex {
    BigComplex::cis(&Float::with_val(prec, pi(prec) * 2u32 / 3u32))
}

/// Ai and Ai' for any s.
fn ai_pair(s: &BigComplex, prec: u32) -> (BigComplex, BigComplex) {
    if s.abs_f64() < asymptotic_radius(prec) {
        let b = airy_maclaurin(s, prec);
        return (b.ai, b.aip);
    }
    let arg = s.arg().to_f64().abs();
    if arg <= 2.0 * std::f64::consts::FRAC_PI_3 + 1e-12 {
        if let Some(v) = ai_asymptotic(s, prec) {
            return v;
        }
        let b = airy_maclaurin(s, prec);
        return (b.ai, b.aip);
    }
    // Ai(s) = -ω Ai(ωs) - ω² Ai(ω²s), with both rotated points inside the sector.
    let w = omega(prec + 10);
    let w2 = w.square();
    let ss = s.with_prec(prec + 10);
    let (a1, d1) = ai_pair(&(&w * &ss), prec + 10);
    let (a2, d2) = ai_pair(&(&w2 * &ss), prec + 10);
    let ai = -(&(&w * &a1) + &(&w2 * &a2));
    let aip = -(&(&w2 * &d1) + &(&w * &d2));
    (ai.with_prec(prec), aip.with_prec(prec))
}

/// Ai, Ai', Bi, Bi' at `prec` bits: Maclaurin series for |s| below
/// [`asymptotic_radius`], otherwise the asymptotic expansion with the
/// connection formulas.
pub fn airy_base(s: &BigComplex, prec: u32) -> Result<AiryBase> {
    if !s.is_finite() {
        return Err(JrhError::PrecisionUnreachable(format!("non-finite argument {s}")));
    }
    if s.abs_f64() < asymptotic_radius(prec) {
        return Ok(airy_maclaurin(s, prec));
    }
    let wp = prec + 10;
    let (ai, aip) = ai_pair(s, wp);
    let w = omega(wp);
    let wb = w.conj();
    let ss = s.with_prec(wp);
    let (a1, d1) = ai_pair(&(&w * &ss), wp);
    let (a2, d2) = ai_pair(&(&wb * &ss), wp);
    let sixth = Float::with_val(wp, pi(wp) / 6u32);
    let e_p = BigComplex::cis(&sixth);
    let e_m = e_p.conj();
    let e5 = BigComplex::cis(&Float::with_val(wp, &sixth * 5u32));
    let bi = &(&e_p * &a1) + &(&e_m * &a2);
    let bip = &(&e5 * &d1) + &(&e5.conj() * &d2);
    Ok(AiryBase { ai: ai.with_prec(prec), aip: aip.with_prec(prec), bi: bi.with_prec(prec), bip: bip.with_prec(prec) })
}

/// Trigonometric data of (α, β) = (An, Bn), computed after reducing the
/// arguments by the nearest integer so that values like sin(π·10⁻²⁰) keep
/// full relative accuracy.
#[derive(Clone, Debug)]
pub struct SineRatios {
    /// sin(απ)/sin((α+β)π)
    pub ratio_a: BigComplex,
    /// sin(βπ)/sin((α+β)π)
    pub ratio_b: BigComplex,
    /// e^{-απi}
    pub phase_a: BigComplex,
    /// e^{βπi}
    pub phase_b: BigComplex,
    /// (cos((α+β)π) - e^{(β-α)πi}) / sin((α+β)π)
    pub bi_form: BigComplex,
}

/// x = k + f with k the nearest integer and |f| ≤ 1/2.
pub fn reduce(x: &Rational) -> (Integer, Rational) {
    let k = Rational::from(x + Rational::from((1, 2))).floor().numer().clone();
    let f = Rational::from(x - &k);
    (k, f)
}

/// sin(πx), cos(πx) with exact range reduction.
pub fn sin_cos_pi(x: &Rational, prec: u32) -> (Float, Float) {
    let (k, f) = reduce(x);
    let t = rat_to_float(&f, prec + 10) * pi(prec + 10);
    let (s, c) = t.sin_cos(Float::new(prec + 10));
    let odd = k.is_odd();
    let (s, c) = if odd { (-s, -c) } else { (s, c) };
    (Float::with_val(prec, s), Float::with_val(prec, c))
}

/// Distance from x to the nearest integer.
pub fn dist_to_integer(x: &Rational) -> Rational {
    reduce(x).1.abs()
}

pub fn sine_ratios(alpha: &Rational, beta: &Rational, prec: u32) -> Result<SineRatios> {
    let ab = Rational::from(alpha + beta);
    if dist_to_integer(&ab) < Rational::from((1, 1_000_000_000_000u64)) {
        return Err(JrhError::IntegerResonance(ab.to_string()));
    }
    let (sa, ca) = sin_cos_pi(alpha, prec);
    let (sb, cb) = sin_cos_pi(beta, prec);
    let (sab, cab) = sin_cos_pi(&ab, prec);
    let ratio_a = BigComplex::from_real(Float::with_val(prec, &sa / &sab));
    let ratio_b = BigComplex::from_real(Float::with_val(prec, &sb / &sab));
    let phase_a = BigComplex::new(ca.clone(), -sa.clone());
    let phase_b = BigComplex::new(cb.clone(), sb.clone());
    let (sba, cba) = sin_cos_pi(&Rational::from(beta - alpha), prec);
    let num = BigComplex::new(Float::with_val(prec, &cab - &cba), -sba);
    let bi_form = num.scale(&Float::with_val(prec, sab.recip_ref()));
    Ok(SineRatios { ratio_a, ratio_b, phase_a, phase_b, bi_form })
}

#[derive(Clone, Debug)]
pub struct AiryValue {
    pub a_val: BigComplex,
    pub a_deriv: BigComplex,
    pub s: BigComplex,
}

/// 𝒜 and 𝒜' from the ω-rotated Ai form.
pub fn airy_combination(s: &BigComplex, r: &SineRatios, prec: u32) -> Result<AiryValue> {
    let w = omega(prec);
    let w2 = w.square();
    let b1 = airy_base(&(&w * s), prec)?;
    let b2 = airy_base(&(&w2 * s), prec)?;
    let c1 = -(&r.phase_b * &r.ratio_a);
    let c2 = &r.phase_a * &r.ratio_b;
    let a_val = &(&c1 * &(&w * &b1.ai)) + &(&c2 * &(&w2 * &b2.ai));
    let a_deriv = &(&c1 * &(&w2 * &b1.aip)) + &(&c2 * &(&w * &b2.aip));
    Ok(AiryValue { a_val, a_deriv, s: s.clone() })
}

/// 𝒜 and 𝒜' from the Ai/Bi form.
pub fn airy_combination_bi(s: &BigComplex, r: &SineRatios, prec: u32) -> Result<AiryValue> {
    let b = airy_base(s, prec)?;
    let half_i = BigComplex::new(Float::new(prec), Float::with_val(prec, 0.5)).inv();
    let half_i = half_i.scale_f64(0.25);
    let a_val = &(&(&r.bi_form * &b.ai) + &b.bi) * &half_i;
    let a_deriv = &(&(&r.bi_form * &b.aip) + &b.bip) * &half_i;
    Ok(AiryValue { a_val, a_deriv, s: s.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::parse_rational;

    fn c(x: f64, y: f64) -> BigComplex {
        BigComplex::from_f64(x, y, 160)
    }

    fn parse(re: &str, im: &str) -> BigComplex {
        BigComplex::new(Float::with_val(160, Float::parse(re).unwrap()), Float::with_val(160, Float::parse(im).unwrap()))
    }

    #[test]
    fn values_at_zero_and_tabulated_points() {
        let b = airy_base(&c(0.0, 0.0), 160).unwrap();
        let (c1, c2) = consts(160);
        assert_eq!(b.ai.re, c1);
        assert_eq!(b.aip.re, -c2);
        let want_bi = Float::with_val(160, Float::with_val(160, 3).sqrt() * &c1);
        assert!((b.bi.re.clone() - want_bi).abs().to_f64() < 1e-45);
        // Reference values from an independent multiprecision library.
        let a1 = airy_base(&c(1.0, 0.0), 160).unwrap();
        assert!(a1.ai.dist(&parse("0.1352924163128814155241474235154663061749", "0")).to_f64() < 1e-38);
        let a = airy_base(&c(1.0, 1.0), 160).unwrap();
        assert!(a.ai.dist(&parse("0.06045830837183814919653297811664614686815", "-0.1518895658771814023549479125922315647112")).to_f64() < 1e-38);
        assert!(a.bi.dist(&parse("0.7166580733827684317885138827586529695756", "0.6198892904008447643495916905902469811973")).to_f64() < 1e-38);
        let d = airy_base(&c(-3.0, 2.0), 160).unwrap();
        assert!(d.aip.dist(&parse("11.87852356474186676308367594083252321592", "5.209351847883973665820235375688534646995")).to_f64() < 1e-36);
        let big = airy_base(&c(20.0, -5.0), 160).unwrap();
        let want = parse("-4845787380686739615679270.828765143910679", "1854152150549946290587620.000554058501691");
        assert!(big.bi.rel_diff(&want).to_f64() < 1e-38);
    }

    #[test]
    fn asymptotic_matches_series() {
        let r = asymptotic_radius(128) + 2.0;
        for k in 0..12 {
            let th = -3.1 + 0.55 * k as f64;
            let s = BigComplex::from_f64(r * th.cos(), r * th.sin(), 128);
            let a = airy_base(&s, 128).unwrap();
            let m = airy_maclaurin(&s, 128);
            for (x, y) in [(&a.ai, &m.ai), (&a.aip, &m.aip), (&a.bi, &m.bi), (&a.bip, &m.bip)] {
                assert!(x.rel_diff(y).to_f64() < 1e-30, "{th} {x} {y}");
            }
        }
    }

    #[test]
    fn wronskian_and_connection() {
        let prec = 160;
        let w = omega(prec);
        for k in 0..20 {
            let kf = k as f64;
            let rad = 0.5 + 1.7 * kf;
            let th = 0.37 + 1.13 * kf;
            let s = BigComplex::from_f64(rad * th.cos(), rad * th.sin(), prec);
            let b = airy_base(&s, prec).unwrap();
            let wr = &(&b.ai * &b.bip) - &(&b.aip * &b.bi);
            let inv_pi = BigComplex::from_real(Float::with_val(prec, pi(prec).recip_ref()));
            let scale = (b.ai.abs_f64() * b.bip.abs_f64()).max(1.0);
            assert!(wr.dist(&inv_pi).to_f64() < 1e-40 * scale, "{k}");
            let a1 = airy_base(&(&w * &s), prec).unwrap().ai;
            let a2 = airy_base(&(&w.square() * &s), prec).unwrap().ai;
            let sum = &(&b.ai + &(&w * &a1)) + &(&w.square() * &a2);
            let m = b.ai.abs_f64().max(a1.abs_f64()).max(a2.abs_f64());
            assert!(sum.abs_f64() < 1e-40 * m, "{k}");
        }
    }

    #[test]
    fn reduced_sines_keep_tiny_values() {
        let x = parse_rational("-80.00000000000000000001").unwrap();
        let (s, _) = sin_cos_pi(&x, 128);
        let want = -std::f64::consts::PI * 1e-20;
        assert!((s.to_f64() - want).abs() < 1e-34);
        let e = sine_ratios(&parse_rational("-70").unwrap(), &parse_rational("-80").unwrap(), 64).unwrap_err();
        assert!(matches!(e, JrhError::IntegerResonance(_)));
    }

    #[test]
    fn both_combination_forms_agree() {
        let (a, b) = (parse_rational("-70.3").unwrap(), parse_rational("-79.9").unwrap());
        let r = sine_ratios(&a, &b, 160).unwrap();
        for s in [c(1.0, 1.0), c(-4.0, 2.5), c(30.0, 0.1), c(-25.0, -9.0), c(0.0, 0.0)] {
            let x = airy_combination(&s, &r, 160).unwrap();
            let y = airy_combination_bi(&s, &r, 160).unwrap();
            assert!(x.a_val.rel_diff(&y.a_val).to_f64() < 1e-36, "{s}");
            assert!(x.a_deriv.rel_diff(&y.a_deriv).to_f64() < 1e-36, "{s}");
        }
    }

    #[test]
    fn integer_alpha_leaves_single_term() {
        let (a, b) = (parse_rational("-70").unwrap(), parse_rational("-79.9").unwrap());
        let r = sine_ratios(&a, &b, 128).unwrap();
        let s = c(0.7, -0.4);
        let x = airy_combination(&s, &r, 128).unwrap();
        let w2 = omega(128).square();
        let single = &(&(&r.phase_a * &r.ratio_b) * &w2) * &airy_base(&(&w2 * &s), 128).unwrap().ai;
        assert!(x.a_val.rel_diff(&single).to_f64() < 1e-35);
    }
}
