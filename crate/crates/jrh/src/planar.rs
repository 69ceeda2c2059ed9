//! Planar predicates on f64 polylines: crossings, distances, containment.
//!
//! These only make topological decisions (which side of a traced curve a
//! point lies on); every value that enters a formula is computed in
//! arbitrary precision elsewhere.

pub type P2 = (f64, f64);

fn sub(a: P2, b: P2) -> P2 {
    (a.0 - b.0, a.1 - b.1)
}

fn cross(a: P2, b: P2) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn dot(a: P2, b: P2) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

pub fn norm(a: P2) -> f64 {
    a.0.hypot(a.1)
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_dist(p: P2, a: P2, b: P2) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let l2 = dot(ab, ab);
    if l2 == 0.0 {
        return norm(ap);
    }
    let t = (dot(ap, ab) / l2).clamp(0.0, 1.0);
    norm(sub(ap, (ab.0 * t, ab.1 * t)))
}

/// Distance from `p` to a polyline, with the index of the nearest segment.
pub fn point_polyline_dist(p: P2, line: &[P2]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    if line.len() == 1 {
        return (norm(sub(p, line[0])), 0);
    }
    for (k, w) in line.windows(2).enumerate() {
        let d = point_segment_dist(p, w[0], w[1]);
        if d < best.0 {
            best = (d, k);
        }
    }
    best
}

/// Proper or touching intersection of two closed segments.
pub fn segments_intersect(a: P2, b: P2, c: P2, d: P2) -> bool {
    let d1 = cross(sub(b, a), sub(c, a));
    let d2 = cross(sub(b, a), sub(d, a));
    let d3 = cross(sub(d, c), sub(a, c));
    let d4 = cross(sub(d, c), sub(b, c));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: P2, q: P2, r: P2| point_segment_dist(r, p, q) == 0.0;
    (d1 == 0.0 && on(a, b, c)) || (d2 == 0.0 && on(a, b, d)) || (d3 == 0.0 && on(c, d, a)) || (d4 == 0.0 && on(c, d, b))
}

/// Parameters `t` in [0, 1] along `[a, b]` where it crosses the polyline.
pub fn segment_polyline_crossings(a: P2, b: P2, line: &[P2]) -> Vec<f64> {
    let mut out = Vec::new();
    for w in line.windows(2) {
        if segments_intersect(a, b, w[0], w[1]) {
            let r = sub(b, a);
            let s = sub(w[1], w[0]);
            let den = cross(r, s);
            let t = if den == 0.0 { 0.0 } else { cross(sub(w[0], a), s) / den };
            out.push(t.clamp(0.0, 1.0));
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

/// Minimum distance between segment `[a, b]` and a polyline.
pub fn segment_polyline_dist(a: P2, b: P2, line: &[P2]) -> f64 {
    let mut best = f64::INFINITY;
    for w in line.windows(2) {
        if segments_intersect(a, b, w[0], w[1]) {
            return 0.0;
        }
        best = best
            .min(point_segment_dist(a, w[0], w[1]))
            .min(point_segment_dist(b, w[0], w[1]))
            .min(point_segment_dist(w[0], a, b))
            .min(point_segment_dist(w[1], a, b));
    }
    best
}

/// Even-odd containment test for a closed polygon (last vertex joins the first).
pub fn point_in_polygon(p: P2, poly: &[P2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > p.1) != (yj > p.1) {
            let x = xj + (p.1 - yj) * (xi - xj) / (yi - yj);
            if p.0 < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Winding number of a closed polygon around `p`.
pub fn winding_number(p: P2, poly: &[P2]) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.1 <= p.1 {
            if b.1 > p.1 && cross(sub(b, a), sub(p, a)) > 0.0 {
                w += 1;
            }
        } else if b.1 <= p.1 && cross(sub(b, a), sub(p, a)) < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Largest distance from a polyline's chord midpoints to the parabola through
/// consecutive vertices; an estimate of how far the chords stray from the
/// smooth curve they sample.
pub fn sagitta_estimate(line: &[P2]) -> f64 {
    let mut best: f64 = 0.0;
    for w in line.windows(3) {
        let second = (w[0].0 - 2.0 * w[1].0 + w[2].0, w[0].1 - 2.0 * w[1].1 + w[2].1);
        best = best.max(norm(second) / 8.0);
    }
    best
}
