use crate::config::{CommandConfig, RunConfig};
use crate::output::{aligned_table, OutDir};
use crate::svg::Plot;
use anyhow::{Context, Result};
use jrh::asymptotics::{Asymptotics, Formula};
use jrh::geometry::{Arc, Domain, TraceOptions};
use jrh::params::parse_rational;
use jrh::phase::Phase;
use jrh::reference::{build_jacobi, eval_poly_rel, find_zeros};
use jrh::zerodist::{compare_zeros, predict_attractor, rate_exponents, RateExponents};
use jrh::{BigComplex, Geometry, JrhError, ParameterPair};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rug::Rational;
use serde::Serialize;

/// Quadrature tolerance for arc masses in attractor predictions.
const MASS_TOL: f64 = 1e-12;

pub fn run(cfg: &RunConfig) -> Result<Vec<String>> {
    if cfg.precision_bits < 53 {
        return Err(JrhError::InvalidArgument(format!("precision_bits {} is below 53", cfg.precision_bits)).into());
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1e-3) {
        return Err(JrhError::InvalidArgument(format!("tol {} must lie in (0, 1e-3)", cfg.tol)).into());
    }
    match &cfg.command {
        CommandConfig::Geometry { a, b, levels } => geometry(cfg, a, b, levels),
        CommandConfig::Phase { a, b, points, samples } => phase(cfg, a, b, points, *samples),
        CommandConfig::Zeros { alpha, beta, n } => zeros(cfg, alpha, beta, *n),
        CommandConfig::Asym { a, b, n, points, compare } => asym(cfg, a, b, *n, points, *compare),
        CommandConfig::Converge { a, b, ns, points } => converge(cfg, a, b, ns, points),
    }
}

fn open(cfg: &RunConfig) -> Result<OutDir> {
    let mut out = OutDir::acquire(&cfg.out)?;
    out.text("config.json", &cfg.to_json())?;
    Ok(out)
}

fn build_geometry(a: &str, b: &str) -> Result<Geometry> {
    let pp = ParameterPair::parse(a, b)?;
    Ok(Geometry::new(&pp, &TraceOptions::default())?)
}

fn pt(p: [f64; 2], prec: u32) -> BigComplex {
    BigComplex::from_f64(p[0], p[1], prec)
}

fn c_strings(z: &BigComplex) -> [String; 2] {
    let (re, im) = z.to_strings();
    [re, im]
}

fn formula_label(f: Formula) -> String {
    match f {
        Formula::Outer(d) => format!("outer_{d}"),
        Formula::LocalMinus => "local_minus".into(),
        Formula::LocalPlus => "local_plus".into(),
    }
}

fn arc_color(a: &Arc) -> &'static str {
    use jrh::geometry::ArcKind::*;
    match a.kind {
        GammaL | GammaC | GammaR => "black",
        GammaPerpPlus1(_) | GammaPerpMinus1(_) | GammaPerpInfinity(_) => "#4a7fc1",
        LevelSet(_) => "#d0782a",
    }
}

fn draw_arc(plot: &mut Plot, a: &Arc) {
    plot.polyline(a.line(), arc_color(a), a.endpoints.1 == jrh::geometry::Anchor::Closed);
}

#[derive(Serialize)]
struct GeometrySummary {
    a: String,
    b: String,
    zeta_plus: [String; 2],
    zeta_minus: [String; 2],
    crossings: [String; 3],
    critical_angles: [f64; 3],
    orthogonal_angles: [f64; 3],
    arcs: Vec<ArcSummary>,
}

#[derive(Serialize)]
struct ArcSummary {
    arc: String,
    level: Option<f64>,
    points: usize,
    length: f64,
}

fn geometry(cfg: &RunConfig, a: &str, b: &str, levels: &[f64]) -> Result<Vec<String>> {
    let g = build_geometry(a, b)?;
    let mut arcs: Vec<Arc> = g.critical_arcs().to_vec();
    arcs.extend(g.orthogonal_arcs().iter().cloned());
    for &r in levels {
        arcs.extend(g.trace_level_set(r).with_context(|| format!("level {r}"))?);
    }
    let mut out = open(cfg)?;
    let mut rows = Vec::new();
    let mut plot = Plot::new(&format!("trajectories for A = {a}, B = {b}"));
    for arc in &arcs {
        let level = arc.level.map(|r| r.to_string()).unwrap_or_default();
        for (k, p) in arc.points.iter().enumerate() {
            let [re, im] = c_strings(p);
            rows.push(vec![arc.kind.to_string(), level.clone(), k.to_string(), re, im]);
        }
        draw_arc(&mut plot, arc);
    }
    let bp = g.branch_points();
    plot.dot(bp.zeta_plus.to_c64(), "red");
    plot.dot(bp.zeta_minus.to_c64(), "red");
    out.csv("arcs.csv", &["arc", "level", "index", "re", "im"], &rows)?;
    let summary = GeometrySummary {
        a: a.into(),
        b: b.into(),
        zeta_plus: c_strings(&bp.zeta_plus),
        zeta_minus: c_strings(&bp.zeta_minus),
        crossings: g.crossings().clone().map(|x| jrh::bigc::float_to_string(&x)),
        critical_angles: g.critical_angles(),
        orthogonal_angles: g.orthogonal_angles(),
        arcs: arcs
            .iter()
            .map(|a| ArcSummary { arc: a.kind.to_string(), level: a.level, points: a.len(), length: a.length() })
            .collect(),
    };
    out.json("geometry.json", &summary)?;
    out.text("geometry.svg", &plot.render())?;
    Ok(vec![format!(
        "{} critical, {} orthogonal, {} level components",
        g.critical_arcs().len(),
        g.orthogonal_arcs().len(),
        arcs.len() - 9
    )])
}

fn phase(cfg: &RunConfig, a: &str, b: &str, points: &[[f64; 2]], samples: u32) -> Result<Vec<String>> {
    let g = build_geometry(a, b)?;
    let ph = Phase::new(&g, cfg.precision_bits, cfg.tol);
    let mut pts = points.to_vec();
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let r = g.box_radius().min(10.0);
    for _ in 0..samples {
        pts.push([rng.gen_range(-r..r), rng.gen_range(-r..r)]);
    }
    let mut out = open(cfg)?;
    let mut rows = Vec::new();
    for p in &pts {
        let z = pt(*p, cfg.precision_bits);
        let mut row = vec![p[0].to_string(), p[1].to_string()];
        match ph.phi(&z) {
            Ok(v) => {
                row.extend(c_strings(&v.phi));
                row.push(format!("{:e}", v.quad_error_bound));
                row.push("ok".into());
            }
            Err(e) if !e.is_validation() => {
                row.extend([String::new(), String::new(), String::new(), e.to_string()]);
            }
            Err(e) => return Err(e.into()),
        }
        rows.push(row);
    }
    let header = ["re", "im", "phi_re", "phi_im", "quad_error", "status"];
    out.csv("phase.csv", &header, &rows)?;
    let short: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let cut = |s: &String| s.chars().take(24).collect::<String>();
            vec![r[0].clone(), r[1].clone(), cut(&r[2]), cut(&r[3]), r[5].clone()]
        })
        .collect();
    Ok(vec![aligned_table(&["re", "im", "phi_re", "phi_im", "status"], &short)])
}

#[derive(Serialize)]
struct ZerosReport {
    alpha: String,
    beta: String,
    n: u32,
    limit_a: String,
    limit_b: String,
    exponents: RateExponents,
    case: jrh::zerodist::Case,
    r: f64,
    arc_names: Vec<String>,
    arc_masses: Vec<f64>,
    residual_bound: f64,
    precision_bits: u32,
    per_arc_counts: Vec<usize>,
    per_arc_expected: Vec<f64>,
    max_dist: f64,
    cdf_sup_dev: f64,
    fraction_within_0_1: f64,
}

const EXACT_INTEGER_NOTE: &str = "the attractor classification needs α, β and α+β off the integers: \
     α = -k with 1 ≤ k ≤ n puts a zero of multiplicity k at z = 1 (β likewise at z = -1), and an integer \
     α+β in [-2n, -n-1] lowers the degree";

fn zeros(cfg: &RunConfig, alpha: &str, beta: &str, n: u32) -> Result<Vec<String>> {
    if n == 0 {
        return Err(JrhError::InvalidArgument("n must be at least 1".into()).into());
    }
    let (al, be) = (parse_rational(alpha)?, parse_rational(beta)?);
    let pp = ParameterPair::new(Rational::from(&al / n), Rational::from(&be / n))?;
    let g = Geometry::new(&pp, &TraceOptions::default())?;
    let exps = rate_exponents(&al, &be, n).context(EXACT_INTEGER_NOTE)?;
    let pred = predict_attractor(&exps, &g, MASS_TOL)?;
    let mut out = open(cfg)?;
    let p = build_jacobi(n, &al, &be)?;
    let zs = find_zeros(&p, cfg.precision_bits.max(256))?;
    let rep = compare_zeros(&zs.zeros, &pred);
    let names = pred.arc_names();
    let rows: Vec<Vec<String>> = zs
        .zeros
        .iter()
        .zip(&rep.assignments)
        .map(|(z, a)| {
            let [re, im] = c_strings(&z.with_prec(cfg.precision_bits));
            vec![re, im, names[a.arc].clone(), a.distance.to_string(), a.cdf.to_string()]
        })
        .collect();
    out.csv("zeros.csv", &["re", "im", "arc", "distance", "cdf"], &rows)?;
    let report = ZerosReport {
        alpha: alpha.into(),
        beta: beta.into(),
        n,
        limit_a: pp.a().to_string(),
        limit_b: pp.b().to_string(),
        exponents: exps,
        case: pred.case,
        r: pred.r,
        arc_names: names.clone(),
        arc_masses: pred.masses.clone(),
        residual_bound: zs.residual_bound,
        precision_bits: zs.precision_bits,
        per_arc_counts: rep.per_arc_counts.clone(),
        per_arc_expected: rep.per_arc_expected.clone(),
        max_dist: rep.max_dist,
        cdf_sup_dev: rep.cdf_sup_dev,
        fraction_within_0_1: rep.fraction_within(0.1),
    };
    out.json("report.json", &report)?;
    let text = format!(
        "n = {n}, alpha = {alpha}, beta = {beta}\ncase {:?}, r = {:.6}\nresidual bound {:.3e} at {} bits\n\n{}",
        pred.case,
        pred.r,
        zs.residual_bound,
        zs.precision_bits,
        rep.to_table()
    );
    out.text("report.txt", &text)?;
    let mut plot = Plot::new(&format!("zeros for n = {n}, alpha = {alpha}, beta = {beta}"));
    for a in &pred.arcs {
        draw_arc(&mut plot, a);
    }
    for z in &zs.zeros {
        plot.dot(z.to_c64(), "#c0392b");
    }
    out.text("zeros.svg", &plot.render())?;
    Ok(vec![text])
}

fn exact_monic(asy: &Asymptotics, z: &BigComplex, n: u32, prec: u32) -> Result<BigComplex> {
    let (a, b) = asy.exponents(n);
    let p = build_jacobi(n, &a, &b)?.monic();
    let (v, _) = eval_poly_rel(&p, z, 2 * prec, 1e-30)?;
    Ok(v.with_prec(prec))
}

fn asym(cfg: &RunConfig, a: &str, b: &str, n: u32, points: &[[f64; 2]], compare: bool) -> Result<Vec<String>> {
    if n == 0 {
        return Err(JrhError::InvalidArgument("n must be at least 1".into()).into());
    }
    if points.is_empty() {
        return Err(JrhError::InvalidArgument("asym needs at least one --z point".into()).into());
    }
    let g = build_geometry(a, b)?;
    let asy = Asymptotics::new(&g, cfg.precision_bits, cfg.tol)?;
    asy.sine_ratios(n)?;
    let mut out = open(cfg)?;
    let mut rows = Vec::new();
    let mut short = Vec::new();
    for p in points {
        let z = pt(*p, cfg.precision_bits);
        let (v, f) = asy.eval(&z, n)?;
        let mut row = vec![p[0].to_string(), p[1].to_string(), formula_label(f)];
        row.extend(c_strings(&v));
        let mut s = vec![p[0].to_string(), p[1].to_string(), formula_label(f), format!("{:.6e}", v.abs_f64())];
        if compare {
            let e = exact_monic(&asy, &z, n, cfg.precision_bits)?;
            let rel = v.rel_diff(&e).to_f64();
            row.extend(c_strings(&e));
            row.push(format!("{rel:e}"));
            s.push(format!("{rel:.3e}"));
        }
        rows.push(row);
        short.push(s);
    }
    let mut header = vec!["re", "im", "formula", "value_re", "value_im"];
    let mut sh = vec!["re", "im", "formula", "|value|"];
    if compare {
        header.extend(["exact_re", "exact_im", "rel_err"]);
        sh.push("rel_err");
    }
    out.csv("asym.csv", &header, &rows)?;
    Ok(vec![aligned_table(&sh, &short)])
}

/// One point per domain I-VI in the closed lower half-plane, each as far as
/// possible from the traced arcs.
pub fn domain_grid(g: &Geometry) -> Vec<(Domain, [f64; 2])> {
    let xr = g.crossings().iter().map(|x| x.to_f64().abs()).fold(1.0, f64::max);
    let yr = g.branch_points().zeta_minus.to_c64().1.abs().max(1.0);
    let arcs: Vec<&Arc> = g.critical_arcs().iter().chain(g.orthogonal_arcs().iter()).collect();
    let mut best: Vec<Option<(f64, [f64; 2])>> = vec![None; 6];
    for i in 0..=60 {
        for j in 1..=30 {
            let p = [-1.5 * xr + 3.0 * xr * i as f64 / 60.0, -1.5 * yr * j as f64 / 30.0];
            let lab = g.classify(&BigComplex::from_f64(p[0], p[1], 64), 0.0);
            if lab.boundary.is_some() {
                continue;
            }
            let d = arcs.iter().map(|a| a.distance_to((p[0], p[1]))).fold(f64::INFINITY, f64::min);
            let k = Domain::all().iter().position(|x| *x == lab.domain).unwrap();
            if best[k].map_or(true, |(bd, _)| d > bd) {
                best[k] = Some((d, p));
            }
        }
    }
    Domain::all().iter().zip(best).filter_map(|(d, b)| b.map(|(_, p)| (*d, p))).collect()
}

#[derive(Serialize)]
struct ConvergeRow {
    n: u32,
    point: String,
    re: f64,
    im: f64,
    formula: String,
    rel_err: Option<f64>,
    order: Option<f64>,
    note: String,
}

#[derive(Serialize)]
struct ConvergeSummary {
    a: String,
    b: String,
    ns: Vec<u32>,
    rows: Vec<ConvergeRow>,
    fitted_order: Vec<(String, Option<f64>)>,
}

fn fitted_order(pts: &[(u32, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(-num / den)
}

fn converge(cfg: &RunConfig, a: &str, b: &str, ns: &[u32], points: &[[f64; 2]]) -> Result<Vec<String>> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(JrhError::InvalidArgument("ns must be a non-empty list of positive degrees".into()).into());
    }
    let g = build_geometry(a, b)?;
    let asy = Asymptotics::new(&g, cfg.precision_bits, cfg.tol)?;
    let mut grid: Vec<(String, [f64; 2])> = domain_grid(&g).into_iter().map(|(d, p)| (format!("domain_{d}"), p)).collect();
    let zm = g.branch_points().zeta_minus.to_c64();
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let rad = 0.5 * asy.delta();
    for (k, th) in g.orthogonal_angles().iter().take(2).enumerate() {
        let t = th + rng.gen_range(-0.05..0.05);
        grid.push((format!("near_zeta_minus_{}", k + 1), [zm.0 + rad * t.cos(), zm.1 + rad * t.sin()]));
    }
    for (k, p) in points.iter().enumerate() {
        grid.push((format!("extra_{}", k + 1), *p));
    }
    let mut out = open(cfg)?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (name, p) in &grid {
        let z = pt(*p, cfg.precision_bits);
        let mut prev: Option<(u32, f64)> = None;
        let mut good = Vec::new();
        for &n in ns {
            let mut row = ConvergeRow {
                n,
                point: name.clone(),
                re: p[0],
                im: p[1],
                formula: String::new(),
                rel_err: None,
                order: None,
                note: String::new(),
            };
            match asy.eval(&z, n) {
                Ok((v, f)) => {
                    let e = v.rel_diff(&exact_monic(&asy, &z, n, cfg.precision_bits)?).to_f64();
                    row.formula = formula_label(f);
                    row.rel_err = Some(e);
                    if let Some((n0, e0)) = prev {
                        row.order = Some((e0 / e).ln() / (n as f64 / n0 as f64).ln());
                    }
                    prev = Some((n, e));
                    good.push((n, e));
                }
                Err(e @ JrhError::IntegerResonance(_)) => row.note = format!("skipped: {e}"),
                Err(e) if !e.is_validation() => row.note = format!("failed: {e}"),
                Err(e) => return Err(e.into()),
            }
            rows.push(row);
        }
        fits.push((name.clone(), fitted_order(&good)));
    }
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.point.clone(),
                r.re.to_string(),
                r.im.to_string(),
                r.formula.clone(),
                opt(r.rel_err),
                opt(r.order),
                r.note.clone(),
            ]
        })
        .collect();
    out.csv("convergence.csv", &["n", "point", "re", "im", "formula", "rel_err", "order", "note"], &csv_rows)?;
    let fmt = |x: Option<f64>, p: usize| x.map(|v| format!("{v:.p$e}")).unwrap_or_else(|| "-".into());
    let table_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.point.clone(),
                r.n.to_string(),
                r.formula.clone(),
                fmt(r.rel_err, 3),
                r.order.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                r.note.clone(),
            ]
        })
        .collect();
    let table = aligned_table(&["point", "n", "formula", "rel_err", "order", "note"], &table_rows);
    out.text("convergence.txt", &table)?;
    out.json("convergence.json", &ConvergeSummary { a: a.into(), b: b.into(), ns: ns.to_vec(), rows, fitted_order: fits })?;
    Ok(vec![table])
}
