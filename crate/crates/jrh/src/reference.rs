//! Exact Jacobi polynomials and the high-precision oracle built on them:
//! evaluation, simultaneous zero finding, the orthogonality on the double
//! loop Γ_u around ±1, and the classical identities.

use crate::bigc::{pi, rat_to_float, BigComplex};
use crate::error::{JrhError, Result};
use crate::quad::{integrate_polyline, PathIntegrand, QuadOptions, SegmentMap};
use rug::{Float, Integer, Rational};
use serde::Serialize;

/// P_n^{(α,β)} with exact rational coefficients in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalPoly {
    pub coeffs: Vec<Rational>,
    pub alpha: Rational,
    pub beta: Rational,
    pub n: u32,
    pub monic: bool,
}

impl RationalPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0).unwrap_or(0)
    }

    pub fn leading(&self) -> &Rational {
        &self.coeffs[self.degree()]
    }

    /// The monic normalization P̂.
    pub fn monic(&self) -> RationalPoly {
        let d = self.degree();
        let lc = self.coeffs[d].clone();
        let coeffs = self.coeffs[..=d].iter().map(|c| Rational::from(c / &lc)).collect();
        RationalPoly { coeffs, alpha: self.alpha.clone(), beta: self.beta.clone(), n: self.n, monic: true }
    }

    pub fn derivative(&self) -> Vec<Rational> {
        self.coeffs.iter().enumerate().skip(1).map(|(k, c)| Rational::from(c * k as u32)).collect()
    }

    /// Exact value at the complex rational x + iy.
    pub fn eval_exact(&self, x: &Rational, y: &Rational) -> (Rational, Rational) {
        let mut re = Rational::new();
        let mut im = Rational::new();
        for c in self.coeffs.iter().rev() {
            let nre = Rational::from(&re * x) - Rational::from(&im * y) + c;
            let nim = Rational::from(&re * y) + Rational::from(&im * x);
            re = nre;
            im = nim;
        }
        (re, im)
    }

    /// Coefficients rounded to `prec` bits.
    pub fn float_coeffs(&self, prec: u32) -> Vec<Float> {
        self.coeffs[..=self.degree()].iter().map(|c| rat_to_float(c, prec)).collect()
    }
}

/// Generalized binomial coefficient a(a-1)...(a-j+1)/j!.
pub fn binom(a: &Rational, j: u32) -> Rational {
    let mut r = Rational::from(1);
    for i in 0..j {
        r *= Rational::from(a - i);
        r /= i + 1;
    }
    r
}

/// Coefficients of P_n^{(α,β)} in the monomial basis, including any
/// vanishing leading entries, from
/// P_n(x) = Σ_k C(n+α, n-k) C(n+α+β+k, k) ((x-1)/2)^k.
pub fn jacobi_coefficients(n: u32, alpha: &Rational, beta: &Rational) -> Vec<Rational> {
    let nn = n as usize;
    let mut out = vec![Rational::new(); nn + 1];
    let na = Rational::from(alpha + n);
    let nab = Rational::from(alpha + beta) + n;
    for k in 0..=n {
        let ck = binom(&na, n - k) * binom(&Rational::from(&nab + k), k);
        if ck == 0 {
            continue;
        }
        let scale = ck / Rational::from(Integer::from(1) << k);
        // ((x-1))^k = Σ_j C(k,j) x^j (-1)^{k-j}
        let mut bin = Integer::from(1);
        for j in 0..=k {
            let mut term = Rational::from(&scale * &bin);
            if (k - j) % 2 == 1 {
                term = -term;
            }
            out[j as usize] += term;
            bin = bin * (k - j) / (j + 1);
        }
    }
    out
}

/// P_n^{(α,β)} with exact coefficients. A vanishing leading coefficient
/// (α+β = -n-k-1 for some k in 0..n) is reported as a degree reduction.
pub fn build_jacobi(n: u32, alpha: &Rational, beta: &Rational) -> Result<RationalPoly> {
    let coeffs = jacobi_coefficients(n, alpha, beta);
    let p = RationalPoly { coeffs, alpha: alpha.clone(), beta: beta.clone(), n, monic: false };
    if p.coeffs[n as usize] == 0 {
        return Err(JrhError::DegreeReduction { n, k: p.degree() as u32 });
    }
    Ok(p)
}

/// Exact leading coefficient 2^{-n} C(2n+α+β, n).
pub fn leading_coefficient(n: u32, alpha: &Rational, beta: &Rational) -> Rational {
    binom(&(Rational::from(alpha + beta) + 2 * n), n) / Rational::from(Integer::from(1) << n)
}

/// Horner evaluation at `prec` bits with a running error bound
/// (4d+2)·2^{-prec}·Σ|c_k||z|^k.
pub fn eval_poly(p: &RationalPoly, z: &BigComplex, prec: u32) -> (BigComplex, f64) {
    horner(&p.float_coeffs(prec), &z.with_prec(prec))
}

fn horner(c: &[Float], z: &BigComplex) -> (BigComplex, f64) {
    let prec = z.prec();
    let mut v = BigComplex::zero(prec);
    let az = z.abs();
    let mut s = Float::new(prec);
    for ck in c.iter().rev() {
        v = &(&v * z) + &BigComplex::from_real(ck.clone());
        s = s * &az + Float::with_val(prec, ck.abs_ref());
    }
    let eps = (-(prec as f64)).exp2();
    let bound = (4.0 * c.len() as f64 + 2.0) * eps * s.to_f64();
    (v, bound)
}

/// Σ|c_k||z|^k, the evaluation scale used for residual certification.
fn eval_scale(c: &[Float], z: &BigComplex) -> f64 {
    let az = z.abs();
    let mut s = Float::new(z.prec());
    for ck in c.iter().rev() {
        s = s * &az + Float::with_val(z.prec(), ck.abs_ref());
    }
    s.to_f64()
}

/// Evaluates with increasing precision until the error bound is below
/// `rel_tol`·|value| (at most 8 doublings from `prec`).
pub fn eval_poly_rel(p: &RationalPoly, z: &BigComplex, prec: u32, rel_tol: f64) -> Result<(BigComplex, f64)> {
    let mut pr = prec;
    for _ in 0..9 {
        let (v, e) = eval_poly(p, z, pr);
        let a = v.abs_f64();
        if e <= rel_tol * a {
            return Ok((v.with_prec(prec), e / a));
        }
        pr *= 2;
    }
    Err(JrhError::PrecisionUnreachable(format!("polynomial value at {z}")))
}

#[derive(Clone, Debug)]
pub struct ZeroSet {
    pub zeros: Vec<BigComplex>,
    /// max over zeros of |p(z)| / Σ|c_k||z|^k.
    pub residual_bound: f64,
    pub precision_bits: u32,
}

impl ZeroSet {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }
}

fn initial_radius(p: &RationalPoly) -> f64 {
    let n = p.degree();
    let a = Rational::from(&p.alpha / p.n.max(1));
    let b = Rational::from(&p.beta / p.n.max(1));
    if let Ok(pp) = crate::params::ParameterPair::new(a, b) {
        let bp = crate::geometry::branch_points(&pp, 64);
        return 1.0 + bp.zeta_plus.abs_f64();
    }
    let c0 = p.coeffs[0].to_f64().abs();
    let cn = p.leading().to_f64().abs();
    if c0 > 0.0 && cn > 0.0 {
        (c0 / cn).powf(1.0 / n as f64).max(0.5) + 0.5
    } else {
        1.5
    }
}

fn aberth(c: &[Float], dc: &[Float], zs: &mut [BigComplex], prec: u32, max_iter: usize) -> bool {
    let n = zs.len();
    let tol = (-(prec as f64) + 12.0).exp2();
    let mut done = vec![false; n];
    let mut stall = 0;
    let mut best = f64::INFINITY;
    for _ in 0..max_iter {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (pv, bound) = horner(c, &zs[i]);
            if pv.is_zero() {
                done[i] = true;
                continue;
            }
            // Below the rounding bound the value carries no more information.
            let at_noise = pv.abs_f64() <= bound;
            let (dv, _) = horner(dc, &zs[i]);
            let w = &pv / &dv;
            let mut sum = BigComplex::zero(prec);
            for j in 0..n {
                if j != i {
                    sum += &(&zs[i] - &zs[j]).inv();
                }
            }
            let den = &BigComplex::one(prec) - &(&w * &sum);
            let step = &w / &den;
            if !step.is_finite() {
                continue;
            }
            zs[i] = &zs[i] - &step;
            let rel = step.abs_f64() / zs[i].abs_f64().max(1.0);
            worst = worst.max(rel);
            if rel < tol || at_noise {
                done[i] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return true;
        }
        if worst < best * 0.999 {
            best = worst;
            stall = 0;
        } else {
            stall += 1;
            if stall > 40 {
                return false;
            }
        }
    }
    false
}

/// Quotient of `c` (low to high) by z - r if the division is exact.
fn divide_linear(c: &[Rational], r: i32) -> Option<Vec<Rational>> {
    let d = c.len() - 1;
    let mut q = vec![Rational::new(); d];
    let mut acc = c[d].clone();
    for k in (0..d).rev() {
        q[k] = acc.clone();
        acc = Rational::from(&c[k] + Rational::from(&acc * r));
    }
    if acc == 0 {
        Some(q)
    } else {
        None
    }
}

/// All zeros of `p`. Exact zeros at ±1 are divided out in rational
/// arithmetic; the rest come from Aberth–Ehrlich iteration, starting at
/// `prec` bits and doubling (at most six times) until the iteration converges
/// with a residual below 2^{-prec/2}. Output is sorted by argument, then
/// modulus.
pub fn find_zeros(p: &RationalPoly, prec: u32) -> Result<ZeroSet> {
    if p.degree() == 0 {
        if p.coeffs[0] == 0 {
            return Err(JrhError::InvalidArgument("zero polynomial".into()));
        }
        return Ok(ZeroSet { zeros: vec![], residual_bound: 0.0, precision_bits: prec });
    }
    let mut mono = p.monic();
    mono.coeffs.truncate(mono.degree() + 1);
    let mut exact = Vec::new();
    for root in [1, -1] {
        while mono.degree() > 0 {
            match divide_linear(&mono.coeffs, root) {
                Some(q) => {
                    mono.coeffs = q;
                    exact.push(root);
                }
                None => break,
            }
        }
    }
    let with_exact = |mut zs: Vec<BigComplex>, pr: u32| {
        zs.extend(exact.iter().map(|r| BigComplex::from_f64(*r as f64, 0.0, pr)));
        sort_zeros(&mut zs);
        zs
    };
    let d = mono.degree();
    if d == 0 {
        return Ok(ZeroSet { zeros: with_exact(vec![], prec), residual_bound: 0.0, precision_bits: prec });
    }
    let r = initial_radius(p);
    let mut zs: Vec<BigComplex> = (0..d)
        .map(|k| {
            let kf = k as f64;
            let th = std::f64::consts::TAU * (kf + 0.25) / d as f64 + 0.1 * kf.sin() / d as f64;
            let rad = r * (1.0 + 0.05 * (3.0 * kf).cos());
            BigComplex::from_f64(rad * th.cos(), rad * th.sin(), prec)
        })
        .collect();
    let dcoef: Vec<Rational> = mono.derivative();
    let mut pr = prec;
    for _ in 0..=6 {
        let c = mono.float_coeffs(pr);
        let dc: Vec<Float> = dcoef.iter().map(|q| rat_to_float(q, pr)).collect();
        zs = zs.iter().map(|z| z.with_prec(pr)).collect();
        let ok = aberth(&c, &dc, &mut zs, pr, 4000);
        let mut res: f64 = 0.0;
        for z in &zs {
            let (v, _) = horner(&c, z);
            res = res.max(v.abs_f64() / eval_scale(&c, z));
        }
        if ok && res <= (-(pr as f64) / 2.0).exp2() {
            return Ok(ZeroSet { zeros: with_exact(zs, pr), residual_bound: res, precision_bits: pr });
        }
        log::debug!("zero finder at {pr} bits: converged={ok}, residual={res:e}; doubling");
        pr *= 2;
    }
    Err(JrhError::NoConverge(format!("degree {d} after 6 precision doublings")))
}

fn sort_zeros(zs: &mut [BigComplex]) {
    zs.sort_by(|a, b| {
        let (xa, ya) = a.to_c64();
        let (xb, yb) = b.to_c64();
        let ka = (ya.atan2(xa), xa.hypot(ya));
        let kb = (yb.atan2(xb), xb.hypot(yb));
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// Whether q is a non-negative integer.
fn is_natural(q: &Rational) -> bool {
    *q.denom() == 1 && *q >= 0
}

/// Checks -n-α-β, n+α, n+β ∉ {1, 2, ...} ∪ {0}.
pub fn check_condition(n: u32, alpha: &Rational, beta: &Rational) -> Result<()> {
    let s = -(Rational::from(alpha + beta) + n);
    let na = Rational::from(alpha + n);
    let nb = Rational::from(beta + n);
    for (name, v) in [("-n-alpha-beta", &s), ("n+alpha", &na), ("n+beta", &nb)] {
        if is_natural(v) {
            return Err(JrhError::ConditionViolated(format!("{name} = {v} is a non-negative integer")));
        }
    }
    Ok(())
}

/// 1/Γ(x), using Γ(x)Γ(1-x) = π/sin(πx) for x < 1/2.
pub fn rgamma(x: &Float) -> Float {
    let p = x.prec();
    if *x < 0.5 {
        if x.is_integer() {
            return Float::new(p);
        }
        let pix = Float::with_val(p, x * pi(p));
        let one_minus = Float::with_val(p, 1 - x);
        pix.sin() * one_minus.gamma() / pi(p)
    } else {
        Float::with_val(p, x.gamma_ref()).recip()
    }
}

/// Closed-form right-hand side of the orthogonality relation for k = n.
pub fn orthogonality_rhs(n: u32, alpha: &Rational, beta: &Rational, prec: u32) -> BigComplex {
    let a = rat_to_float(alpha, prec);
    let b = rat_to_float(beta, prec);
    let ab = Float::with_val(prec, &a + &b);
    let pif = pi(prec);
    let two_pow = Float::with_val(prec, Float::with_val(prec, &ab + (n + 3)).exp2());
    let num = Float::with_val(prec, &pif * &pif) * two_pow;
    let g1 = rgamma(&Float::with_val(prec, &ab + (2 * n + 2)));
    let g2 = rgamma(&Float::with_val(prec, -Float::with_val(prec, &a + n)));
    let g3 = rgamma(&Float::with_val(prec, -Float::with_val(prec, &b + n)));
    let mag = -(num * g1 * g2 * g3);
    let ph = BigComplex::cis(&Float::with_val(prec, &pif * &ab));
    ph.scale(&mag)
}

/// The double loop Γ_u as a closed polygon starting and ending at ξ: around
/// +1 counterclockwise, around -1 counterclockwise, then around +1 and -1
/// clockwise. Each loop is a regular `sides`-gon inscribed in the circle of
/// radius `rho` about ±1; the loops are joined along the real axis.
pub fn gamma_u(xi: f64, rho: f64, sides: usize, prec: u32) -> Vec<BigComplex> {
    let pt = |x: f64, y: f64| BigComplex::from_f64(x, y, prec);
    let mut out = vec![pt(xi, 0.0)];
    let lp = |c: f64, start: f64, dir: f64, out: &mut Vec<BigComplex>| {
        out.push(pt(c + rho * start.cos(), 0.0));
        for j in 1..=sides {
            let th = start + dir * std::f64::consts::TAU * j as f64 / sides as f64;
            let (x, y) = (c + rho * th.cos(), rho * th.sin());
            out.push(if j == sides { pt(c + rho * start.cos(), 0.0) } else { pt(x, y) });
        }
    };
    let pi = std::f64::consts::PI;
    lp(1.0, pi, 1.0, &mut out);
    lp(-1.0, 0.0, 1.0, &mut out);
    lp(1.0, pi, -1.0, &mut out);
    lp(-1.0, 0.0, -1.0, &mut out);
    out.push(pt(xi, 0.0));
    out
}

/// t^k P(t) w(t; α, β), with log(1-t) and log(1+t) continued along the path.
struct OrthIntegrand {
    coeffs: Vec<Float>,
    k: u32,
    a: Float,
    b: Float,
    two_pi: Float,
}

type LogPair = (BigComplex, BigComplex);

impl OrthIntegrand {
    fn nearest(&self, l: BigComplex, prev: &BigComplex) -> BigComplex {
        let d = Float::with_val(l.prec(), &prev.im - &l.im) / &self.two_pi;
        let k = d.round();
        let im = l.im + k * &self.two_pi;
        BigComplex::new(l.re, im)
    }

    fn logs(&self, t: &BigComplex, s: &LogPair) -> LogPair {
        let one = BigComplex::one(t.prec());
        let l1 = self.nearest((&one - t).ln(), &s.0);
        let l2 = self.nearest((&one + t).ln(), &s.1);
        (l1, l2)
    }
}

impl PathIntegrand for OrthIntegrand {
    type State = LogPair;

    fn eval(&self, t: &BigComplex, s: &LogPair) -> BigComplex {
        let (l1, l2) = self.logs(t, s);
        let w = (&l1.scale(&self.a) + &l2.scale(&self.b)).exp();
        let (pv, _) = horner(&self.coeffs, t);
        &(&t.powi(self.k as i64) * &pv) * &w
    }

    fn advance(&self, t: &BigComplex, s: &LogPair) -> LogPair {
        self.logs(t, s)
    }

    fn max_panel(&self, a: &BigComplex, _b: &BigComplex) -> Option<f64> {
        let (x, y) = a.to_c64();
        let d = (x - 1.0).hypot(y).min((x + 1.0).hypot(y));
        Some(0.5 * d)
    }
}

#[derive(Clone, Debug)]
pub struct OrthogonalityResult {
    pub lhs: BigComplex,
    pub rhs: BigComplex,
    /// Loop length times the largest sampled |integrand|.
    pub scale: f64,
    pub quad_error: f64,
}

/// ∮_{Γ_u} t^k P_n^{(α,β)}(t) w(t; α, β) dt by quadrature, with the closed
/// form alongside. `tol` is relative to the integrand scale.
pub fn orthogonality_check(n: u32, alpha: &Rational, beta: &Rational, k: u32, tol: f64, prec: u32) -> Result<OrthogonalityResult> {
    check_condition(n, alpha, beta)?;
    if k > n {
        return Err(JrhError::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    let p = build_jacobi(n, alpha, beta)?;
    let f = OrthIntegrand {
        coeffs: p.float_coeffs(prec),
        k,
        a: rat_to_float(alpha, prec),
        b: rat_to_float(beta, prec),
        two_pi: Float::with_val(prec, pi(prec) * 2u32),
    };
    let path = gamma_u(0.0, 0.5, 16, prec);
    let start: LogPair = (BigComplex::zero(prec), BigComplex::zero(prec));
    // Scale from samples along the path, with the branch carried along.
    let mut s = start.clone();
    let mut fmax: f64 = 0.0;
    let mut len = 0.0;
    for w in path.windows(2) {
        len += w[0].dist(&w[1]).to_f64();
        for j in 0..8 {
            let t = &w[0] + &(&w[1] - &w[0]).scale_f64(j as f64 / 8.0);
            s = f.advance(&t, &s);
            fmax = fmax.max(f.eval(&t, &s).abs_f64());
        }
    }
    let scale = len * fmax;
    let mut st = start;
    let r = integrate_polyline(&f, &path, SegmentMap::Linear, &mut st, &QuadOptions::new(tol * scale, prec))?;
    let rhs = if k == n { orthogonality_rhs(n, alpha, beta, prec) } else { BigComplex::zero(prec) };
    Ok(OrthogonalityResult { lhs: r.value, rhs, scale, quad_error: r.error })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub point: Option<String>,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub n: u32,
    pub alpha: String,
    pub beta: String,
    pub checks: Vec<IdentityCheck>,
}

fn test_points() -> Vec<Rational> {
    [(3, 1), (5, 1), (7, 1), (-1, 2), (1, 3), (2, 7), (-5, 3), (11, 4), (-9, 1), (0, 1)]
        .iter()
        .map(|&(a, b)| Rational::from((a, b)))
        .collect()
}

fn eval_real(c: &[Rational], x: &Rational) -> Rational {
    let mut v = Rational::new();
    for ck in c.iter().rev() {
        v = v * x + ck;
    }
    v
}

fn pow_rat(x: &Rational, k: u32) -> Rational {
    let mut r = Rational::from(1);
    for _ in 0..k {
        r *= x;
    }
    r
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    out
}

fn trimmed(c: &[Rational]) -> &[Rational] {
    let d = c.iter().rposition(|x| *x != 0).map(|k| k + 1).unwrap_or(0);
    &c[..d]
}

/// The two transformation formulas pointwise at ten rational points, the
/// zero of multiplicity k at 1 when α = -k, and the degree reduction when
/// α+β = -n-k-1, all in exact arithmetic. Fails with IdentityViolated on
/// the first mismatch.
pub fn identity_suite(n: u32, alpha: &Rational, beta: &Rational) -> Result<IdentityReport> {
    let mut checks = Vec::new();
    let p = jacobi_coefficients(n, alpha, beta);
    // -2n-α-β-1
    let star = -(Rational::from(alpha + beta) + (2 * n + 1));
    let q1 = jacobi_coefficients(n, &star, beta);
    let q2 = jacobi_coefficients(n, alpha, &star);
    for x in test_points() {
        if x != 1 {
            let lhs = eval_real(&p, &x);
            let y = Rational::from(&x + 3) / Rational::from(&x - 1);
            let rhs = pow_rat(&(Rational::from(1 - &x) / 2), n) * eval_real(&q1, &y);
            checks.push(IdentityCheck { identity: "transformation_left".into(), point: Some(x.to_string()), holds: lhs == rhs });
        }
        if x != -1 {
            let lhs = eval_real(&p, &x);
            let y = Rational::from(3 - &x) / Rational::from(&x + 1);
            let rhs = pow_rat(&(Rational::from(1 + &x) / 2), n) * eval_real(&q2, &y);
            checks.push(IdentityCheck { identity: "transformation_right".into(), point: Some(x.to_string()), holds: lhs == rhs });
        }
    }
    // α = -k with 1 ≤ k ≤ n.
    if *alpha.denom() == 1 && *alpha < 0 && -alpha.clone() <= n {
        let k = (-alpha.clone()).numer().to_u32().unwrap();
        let mut factor = Rational::from(1);
        for j in 0..k {
            factor *= Rational::from(beta + (n + 1 - k + j));
        }
        let mut fact = Rational::from(1);
        for j in (n - k + 1)..=n {
            fact *= j;
        }
        factor /= fact;
        let mut rhs = vec![Rational::from(1)];
        for _ in 0..k {
            rhs = poly_mul(&rhs, &[Rational::from((-1, 2)), Rational::from((1, 2))]);
        }
        rhs = poly_mul(&rhs, &jacobi_coefficients(n - k, &Rational::from(k), beta));
        let rhs: Vec<Rational> = rhs.into_iter().map(|c| c * &factor).collect();
        checks.push(IdentityCheck {
            identity: "zero_at_one".into(),
            point: None,
            holds: trimmed(&p) == trimmed(&rhs),
        });
    }
    // α+β = -n-k-1 with 0 ≤ k ≤ n-1.
    let kk = -(Rational::from(alpha + beta) + (n + 1));
    if *kk.denom() == 1 && kk >= 0 && kk < n {
        let k = kk.numer().to_u32().unwrap();
        let mut factor = Rational::from(1);
        for j in (k + 1)..=n {
            factor *= Rational::from(alpha + j);
        }
        for j in (k + 1)..=n {
            factor /= j;
        }
        let rhs: Vec<Rational> = jacobi_coefficients(k, alpha, beta).into_iter().map(|c| c * &factor).collect();
        checks.push(IdentityCheck {
            identity: "degree_reduction".into(),
            point: None,
            holds: trimmed(&p) == trimmed(&rhs),
        });
    }
    if let Some(bad) = checks.iter().find(|c| !c.holds) {
        return Err(JrhError::IdentityViolated(format!(
            "{} at {} for n={n}, alpha={alpha}, beta={beta}",
            bad.identity,
            bad.point.clone().unwrap_or_else(|| "coefficients".into())
        )));
    }
    Ok(IdentityReport { n, alpha: alpha.to_string(), beta: beta.to_string(), checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    /// Independent oracle: P_n from the three-term recurrence in exact
    /// arithmetic, evaluated at a rational point.
    fn recurrence_value(n: u32, a: &Rational, b: &Rational, x: &Rational) -> Rational {
        let mut p0 = Rational::from(1);
        if n == 0 {
            return p0;
        }
        let ab = Rational::from(a + b);
        let mut p1 = Rational::from(&ab + 2) * x / 2 + Rational::from(a - b) / 2;
        for m in 2..=n {
            let m = Rational::from(m);
            let c = Rational::from(&m * 2u32) + &ab;
            let a1 = Rational::from(&m * 2u32) * Rational::from(&m + &ab) * Rational::from(&c - 2u32);
            let a2 = Rational::from(&c - 1u32) * (Rational::from(&c * Rational::from(&c - 2u32)) * x + Rational::from(a * a) - Rational::from(b * b));
            let a3 = Rational::from(2u32) * (Rational::from(&m + a) - 1u32) * (Rational::from(&m + b) - 1u32) * &c;
            let p2 = (a2 * &p1 - a3 * &p0) / a1;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn coefficients_match_recurrence() {
        for (n, a, b) in [(4, "1/2", "1/3"), (6, "-3.5", "-4.2"), (7, "-4.9", "-5.6"), (3, "2", "-0.5")] {
            let p = build_jacobi(n, &q(a), &q(b)).unwrap();
            for x in test_points() {
                assert_eq!(eval_real(&p.coeffs, &x), recurrence_value(n, &q(a), &q(b), &x), "{n} {a} {b} {x}");
            }
        }
    }

    #[test]
    fn first_degree_and_leading_coefficient() {
        let (a, b) = (q("-0.3"), q("1/7"));
        let p = build_jacobi(1, &a, &b).unwrap();
        assert_eq!(p.coeffs[1], (Rational::from(&a + &b) + 2u32) / 2);
        assert_eq!(p.coeffs[0], Rational::from(&a - &b) / 2);
        let p = build_jacobi(9, &q("-6.3"), &q("-7.2")).unwrap();
        assert_eq!(*p.leading(), leading_coefficient(9, &q("-6.3"), &q("-7.2")));
        let m = build_jacobi(1, &a, &b).unwrap().monic();
        let root = -Rational::from(&a - &b) / (Rational::from(&a + &b) + 2u32);
        assert_eq!(eval_real(&m.coeffs, &root), 0);
    }

    #[test]
    fn reflection_symmetry() {
        let (a, b) = (q("1/2"), q("1/3"));
        let p = build_jacobi(4, &a, &b).unwrap();
        let r = build_jacobi(4, &b, &a).unwrap();
        for k in 0..=4 {
            let sign = if (4 + k) % 2 == 0 { 1 } else { -1 };
            assert_eq!(p.coeffs[k], Rational::from(&r.coeffs[k] * sign));
        }
    }

    #[test]
    fn multiple_zero_at_one_and_degree_reduction() {
        let p = build_jacobi(3, &q("-2"), &q("0.4")).unwrap();
        assert_eq!(p.coeffs.iter().sum::<Rational>(), 0);
        let d = p.derivative();
        assert_eq!(d.iter().sum::<Rational>(), 0);
        let e = build_jacobi(4, &q("-2.5"), &q("-2.5")).unwrap_err();
        assert_eq!(e, JrhError::DegreeReduction { n: 4, k: 0 });
    }

    #[test]
    fn eval_matches_exact_complex() {
        let p = build_jacobi(2, &q("-3/4"), &q("-3/4")).unwrap();
        let (re, im) = p.eval_exact(&Rational::new(), &Rational::from(1));
        let (v, e) = eval_poly(&p, &BigComplex::i(200), 200);
        let ex = BigComplex::from_rationals(&re, &im, 200);
        assert!(v.dist(&ex).to_f64() <= e.max(1e-55));
        let (v0, _) = eval_poly(&p, &BigComplex::zero(100), 100);
        assert_eq!(v0.re, rat_to_float(&p.coeffs[0], 100));
    }

    #[test]
    fn zeros_of_small_cases() {
        let (a, b) = (q("-0.3"), q("1/7"));
        let z = find_zeros(&build_jacobi(1, &a, &b).unwrap(), 128).unwrap();
        let root = -Rational::from(&a - &b) / (Rational::from(&a + &b) + 2u32);
        assert!(z.zeros[0].dist(&BigComplex::from_rational(&root, 128)).to_f64() < 1e-30);

        let p = build_jacobi(3, &q("-2"), &q("-1/2")).unwrap();
        let z = find_zeros(&p, 256).unwrap();
        let near: Vec<_> = z.zeros.iter().filter(|w| w.dist(&BigComplex::one(256)).to_f64() < 1e-30).collect();
        assert_eq!(near.len(), 2);
    }

    #[test]
    fn vieta_and_conjugate_symmetry() {
        let p = build_jacobi(30, &q("-21.3"), &q("-24.1")).unwrap();
        let z = find_zeros(&p, 256).unwrap();
        assert_eq!(z.len(), 30);
        let m = p.monic();
        let mut s = BigComplex::zero(256);
        for w in &z.zeros {
            s += w;
        }
        let want = -rat_to_float(&m.coeffs[29], 256);
        assert!((s.re.to_f64() - want.to_f64()).abs() < 1e-40 && s.im.to_f64().abs() < 1e-40);
        for w in &z.zeros {
            let c = w.conj();
            let best = z.zeros.iter().map(|v| v.dist(&c).to_f64()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-40);
        }
    }

    #[test]
    fn orthogonality_small_case() {
        let (a, b) = (q("-3.499"), q("-4.2"));
        for k in [0, 2, 4] {
            let r = orthogonality_check(5, &a, &b, k, 1e-24, 160).unwrap();
            assert!(r.lhs.abs_f64() <= 1e-20 * r.scale, "{k} {}", r.lhs);
        }
        let r = orthogonality_check(5, &a, &b, 5, 1e-24, 160).unwrap();
        assert!(r.lhs.rel_diff(&r.rhs).to_f64() < 1e-10, "{} {}", r.lhs, r.rhs);
        assert!(matches!(orthogonality_check(3, &q("-2"), &b, 1, 1e-10, 64), Err(JrhError::ConditionViolated(_))));
    }

    #[test]
    fn identities_hold() {
        identity_suite(3, &q("-8.5"), &q("-0.5")).unwrap();
        let r = identity_suite(4, &q("-2.5"), &q("-2.5")).unwrap();
        assert!(r.checks.iter().any(|c| c.identity == "degree_reduction"));
        let r = identity_suite(3, &q("-1"), &q("0.3")).unwrap();
        assert!(r.checks.iter().any(|c| c.identity == "zero_at_one"));
    }

    #[test]
    fn rgamma_reflection() {
        let x = Float::with_val(128, -2.5);
        let direct = Float::with_val(128, x.gamma_ref()).recip();
        assert!((rgamma(&x) - direct).abs().to_f64() < 1e-35);
        assert!(rgamma(&Float::with_val(64, -3)).is_zero());
    }
}
