//! Deterministic scalar and planar minimization for witness searches.
//!
//! Nothing here is stochastic: the coarse scans use fixed grids and the
//! simplex search restarts from a fixed pattern of offsets, so certificate
//! witnesses are reproducible bit for bit.

/// Golden-section minimization on `[lo, hi]` for a unimodal objective.
/// Returns the best argument and value seen.
pub fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimize over positive arguments spread across many decades: a coarse
/// logarithmic scan brackets the minimum, then golden-section refines inside
/// the bracket.
pub fn positive_line_min(
    f: impl Fn(f64) -> f64,
    log10_lo: f64,
    log10_hi: f64,
    coarse: usize,
    iters: usize,
) -> (f64, f64) {
    debug_assert!(coarse >= 3);
    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    let xs: Vec<f64> = (0..coarse)
        .map(|i| {
            let e = log10_lo + (log10_hi - log10_lo) * i as f64 / (coarse - 1) as f64;
            10.0_f64.powf(e)
        })
        .collect();
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x);
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let lo = xs[best_idx.saturating_sub(1)];
    let hi = xs[(best_idx + 1).min(coarse - 1)];
    let (x, v) = golden_min(&f, lo, hi, iters);
    if v <= best_val {
        (x, v)
    } else {
        (xs[best_idx], best_val)
    }
}

/// Nelder-Mead in two dimensions with standard reflection, expansion,
/// contraction and shrink moves.
fn nelder_mead2(
    f: &dyn Fn(f64, f64) -> f64,
    start: (f64, f64),
    scale: (f64, f64),
    iters: usize,
) -> ((f64, f64), f64) {
    let mut pts = [
        start,
        (start.0 + scale.0, start.1),
        (start.0, start.1 + scale.1),
    ];
    let mut vals = [
        f(pts[0].0, pts[0].1),
        f(pts[1].0, pts[1].1),
        f(pts[2].0, pts[2].1),
    ];
    for _ in 0..iters {
        // Order so that pts[0] is best and pts[2] worst.
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        pts = [pts[order[0]], pts[order[1]], pts[order[2]]];
        vals = [vals[order[0]], vals[order[1]], vals[order[2]]];

        let centroid = (
            0.5 * (pts[0].0 + pts[1].0),
            0.5 * (pts[0].1 + pts[1].1),
        );
        let reflect = (
            centroid.0 + (centroid.0 - pts[2].0),
            centroid.1 + (centroid.1 - pts[2].1),
        );
        let fr = f(reflect.0, reflect.1);
        if fr < vals[0] {
            let expand = (
                centroid.0 + 2.0 * (centroid.0 - pts[2].0),
                centroid.1 + 2.0 * (centroid.1 - pts[2].1),
            );
            let fe = f(expand.0, expand.1);
            if fe < fr {
                pts[2] = expand;
                vals[2] = fe;
            } else {
                pts[2] = reflect;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = reflect;
            vals[2] = fr;
        } else {
            let contract = (
                centroid.0 + 0.5 * (pts[2].0 - centroid.0),
                centroid.1 + 0.5 * (pts[2].1 - centroid.1),
            );
            let fc = f(contract.0, contract.1);
            if fc < vals[2] {
                pts[2] = contract;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    pts[k] = (
                        pts[0].0 + 0.5 * (pts[k].0 - pts[0].0),
                        pts[0].1 + 0.5 * (pts[k].1 - pts[0].1),
                    );
                    vals[k] = f(pts[k].0, pts[k].1);
                }
            }
        }
    }
    let mut best = 0;
    for k in 1..3 {
        if vals[k] < vals[best] {
            best = k;
        }
    }
    (pts[best], vals[best])
}

/// Offsets, in units of the per-axis scale, from which the simplex search is
/// restarted. Five fixed starts cover the center and the four diagonal
/// directions.
const RESTART_OFFSETS: [(f64, f64); 5] = [
    (0.0, 0.0),
    (1.0, 1.0),
    (-1.0, 1.0),
    (1.0, -1.0),
    (-1.0, -1.0),
];

/// Multistart planar minimization: the simplex search runs once from the
/// center and once from each diagonal offset, and the best result wins.
pub fn planar_min(
    f: impl Fn(f64, f64) -> f64,
    center: (f64, f64),
    scale: (f64, f64),
    iters: usize,
) -> ((f64, f64), f64) {
    let mut best_arg = center;
    let mut best_val = f64::INFINITY;
    for (dx, dy) in RESTART_OFFSETS {
        let start = (center.0 + dx * scale.0, center.1 + dy * scale.1);
        let ((x, y), v) = nelder_mead2(&f, start, (0.5 * scale.0, 0.5 * scale.1), iters);
        if v < best_val {
            best_val = v;
            best_arg = (x, y);
        }
    }
    (best_arg, best_val)
}
