//! Weak-value extraction from meter centroids and how far it can be trusted.
//!
//! The deviation of a perturbative order from the exact response is measured
//! as `|exact - approx| / (a max(1, |A|))`: absolute near the eigenvalue range
//! and relative for anomalous weak values.

use std::io::Write;

use rayon::prelude::*;

use crate::detector::{
    centroid_estimate, pixel_probability_map, simulate_counts, DetectionConfig, PixelGrid,
};
use crate::error::{invalid, Error, Result};
use crate::meter::{
    exact_meter_single, perturbative_meter, third_order_term, CouplingConfig, Normalization,
    PerturbativeOrder,
};
use crate::polarization::{branch_amplitudes, postselection_angle_for, PolarizationState};

/// Half-width of the bracket searched for third-order inversions.
pub const INVERSION_BRACKET: f64 = 50.0;

/// Sampling step used to locate validity-region edges before bisection.
pub const REGION_SCAN_STEP: f64 = 1e-3;

/// Weak-value interval searched for validity regions unless told otherwise.
pub const DEFAULT_SEARCH: Interval = Interval { lo: -6.0, hi: 6.0 };

/// Tolerance on the normalized deviation used when none is given.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// `|cos(theta_i - theta_f)|` at or below which a sweep row is flagged divergent.
pub const SWEEP_DIVERGENCE: f64 = 1e-6;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn nonempty(lo: f64, hi: f64) -> Option<Self> {
        (hi > lo).then_some(Self { lo, hi })
    }
}

fn check_shift(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("shift must be positive, got {a}")))
    }
}

/// Inverts the first- or third-order meter relation for the weak value.
///
/// The cubic can have up to three real roots in the bracket; the one nearest
/// the first-order estimate `centroid / a` is returned (ties go to the
/// smaller `|A|`).
pub fn extract_weak_value(
    centroid: f64,
    a: f64,
    sigma: f64,
    order: PerturbativeOrder,
) -> Result<f64> {
    check_shift(a)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !centroid.is_finite() {
        return Err(invalid("centroid must be finite"));
    }
    let linear = centroid / a;
    if order == PerturbativeOrder::First {
        return Ok(linear);
    }

    let residual = |aw: f64| a * aw + third_order_term(aw, a, sigma) - centroid;
    let k = a.powi(3) / (8.0 * sigma * sigma);
    // p'(A) = -6k A^2 + 6k A + (a - k) vanishes at 1/2 +- sqrt(12k^2 + 24ka) / 12k.
    let half = (12.0 * k * k + 24.0 * k * a).sqrt() / (12.0 * k);
    let mut knots = vec![-INVERSION_BRACKET];
    for c in [0.5 - half, 0.5 + half] {
        if c.is_finite() && c > -INVERSION_BRACKET && c < INVERSION_BRACKET {
            knots.push(c);
        }
    }
    knots.push(INVERSION_BRACKET);

    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        if let Some(r) = bisect(&residual, w[0], w[1]) {
            if roots.last().is_none_or(|&prev| (r - prev).abs() > 1e-12) {
                roots.push(r);
            }
        }
    }
    let best = roots.into_iter().min_by(|x, y| {
        let dx = (x - linear).abs();
        let dy = (y - linear).abs();
        dx.total_cmp(&dy).then(x.abs().total_cmp(&y.abs()))
    });
    match best {
        Some(r) if residual(r).abs() < 1e-10 * a => Ok(r),
        _ => Err(Error::InversionFailure { centroid }),
    }
}

/// Root of a monotone `f` on `[lo, hi]`, if the endpoints bracket one.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(if flo.abs() <= f(hi).abs() { lo } else { hi })
}

/// `|exact - order_k| / (a max(1, |A|))`.
pub fn normalized_deviation(
    weak_value: f64,
    a: f64,
    sigma: f64,
    order: PerturbativeOrder,
) -> Result<f64> {
    check_shift(a)?;
    let exact = exact_meter_single(weak_value, a, sigma, Normalization::Normalized)?;
    let approx = perturbative_meter(weak_value, a, sigma, order)?;
    Ok((exact - approx).abs() / (a * weak_value.abs().max(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasRow {
    pub a_true: f64,
    pub exact: f64,
    pub order1: f64,
    pub order3: f64,
    /// Order-1 extraction from the exact centroid minus the true weak value.
    pub bias1: f64,
    /// Same with the order-3 inversion; `None` where the cubic cannot reach the centroid.
    pub bias3: Option<f64>,
}

/// Bias of weak-value extraction at each true weak value in `grid`.
pub fn bias_curve(a: f64, sigma: f64, grid: &[f64]) -> Result<Vec<BiasRow>> {
    check_shift(a)?;
    if grid.is_empty() {
        return Err(invalid("weak-value grid is empty"));
    }
    grid.iter()
        .map(|&aw| {
            let exact = exact_meter_single(aw, a, sigma, Normalization::Normalized)?;
            let bias1 = extract_weak_value(exact, a, sigma, PerturbativeOrder::First)? - aw;
            let bias3 = match extract_weak_value(exact, a, sigma, PerturbativeOrder::Third) {
                Ok(v) => Some(v - aw),
                Err(Error::InversionFailure { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(BiasRow {
                a_true: aw,
                exact,
                order1: perturbative_meter(aw, a, sigma, PerturbativeOrder::First)?,
                order3: perturbative_meter(aw, a, sigma, PerturbativeOrder::Third)?,
                bias1,
                bias3,
            })
        })
        .collect()
}

/// Where each perturbative order tracks the exact response to within `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// `a / sigma`.
    pub g: f64,
    pub epsilon: f64,
    pub search: Interval,
    /// Maximal interval containing `[0, 1]` where the first order is within tolerance.
    pub region1: Interval,
    /// Same for the third order, widened to contain `region1`.
    pub order3_hull: Interval,
    /// Parts of the hull where only the third order holds.
    pub region2_lower: Option<Interval>,
    pub region2_upper: Option<Interval>,
    /// Parts of the search interval where neither order holds.
    pub region3_lower: Option<Interval>,
    pub region3_upper: Option<Interval>,
}

/// Validity regions of the first- and third-order approximations.
pub fn validity_region(a: f64, sigma: f64, epsilon: f64, search: Interval) -> Result<ValidityReport> {
    check_shift(a)?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(search.lo <= 0.0 && search.hi >= 1.0) {
        return Err(invalid("search interval must contain [0, 1]"));
    }
    let dev1 = |aw: f64| normalized_deviation(aw, a, sigma, PerturbativeOrder::First);
    let dev3 = |aw: f64| normalized_deviation(aw, a, sigma, PerturbativeOrder::Third);

    let steps = (1.0 / REGION_SCAN_STEP).round() as usize;
    for s in 0..=steps {
        let aw = s as f64 / steps as f64;
        let d = dev1(aw)?;
        if d > epsilon {
            return Err(Error::DegenerateRegion(format!(
                "first-order deviation {d:.3e} at A = {aw} already exceeds epsilon = {epsilon:e}"
            )));
        }
    }

    let region1 = Interval {
        lo: region_edge(&dev1, 0.0, search.lo, epsilon)?,
        hi: region_edge(&dev1, 1.0, search.hi, epsilon)?,
    };
    let order3 = Interval {
        lo: region_edge(&dev3, 0.0, search.lo, epsilon)?,
        hi: region_edge(&dev3, 1.0, search.hi, epsilon)?,
    };
    let hull = Interval {
        lo: order3.lo.min(region1.lo),
        hi: order3.hi.max(region1.hi),
    };
    Ok(ValidityReport {
        g: a / sigma,
        epsilon,
        search,
        region1,
        order3_hull: hull,
        region2_lower: Interval::nonempty(hull.lo, region1.lo),
        region2_upper: Interval::nonempty(region1.hi, hull.hi),
        region3_lower: Interval::nonempty(search.lo, hull.lo),
        region3_upper: Interval::nonempty(hull.hi, search.hi),
    })
}

/// Walks from `start` toward `limit` and returns the first point where `dev`
/// crosses `epsilon`, refined by bisection; `limit` if it never does.
fn region_edge(
    dev: &impl Fn(f64) -> Result<f64>,
    start: f64,
    limit: f64,
    epsilon: f64,
) -> Result<f64> {
    let dir = if limit >= start { 1.0 } else { -1.0 };
    let n = ((limit - start).abs() / REGION_SCAN_STEP).ceil() as usize;
    let mut good = start;
    for s in 1..=n {
        let probe = if s == n { limit } else { start + dir * s as f64 * REGION_SCAN_STEP };
        if dev(probe)? > epsilon {
            let (mut inside, mut outside) = (good, probe);
            for _ in 0..100 {
                let mid = 0.5 * (inside + outside);
                if mid == inside || mid == outside {
                    break;
                }
                if dev(mid)? > epsilon {
                    outside = mid;
                } else {
                    inside = mid;
                }
            }
            return Ok(inside);
        }
        good = probe;
    }
    Ok(limit)
}

/// One post-selection setting of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepRow {
    pub theta_i: f64,
    pub theta_f: f64,
    pub aw_h_true: Option<f64>,
    pub aw_v_true: Option<f64>,
    pub x_exact: Option<f64>,
    pub x_order1: Option<f64>,
    pub x_order3: Option<f64>,
    pub y_exact: Option<f64>,
    pub y_order1: Option<f64>,
    pub y_order3: Option<f64>,
    pub x_measured: Option<f64>,
    pub x_stderr: Option<f64>,
    pub y_measured: Option<f64>,
    pub y_stderr: Option<f64>,
    pub p_postselect: Option<f64>,
    pub divergent: bool,
}

/// Post-selection angles giving `<Pi_H>_w` evenly spaced over `[lo, hi]` (`n` points).
pub fn weak_value_grid(lo: f64, hi: f64, n: usize, theta_i: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("weak-value grid needs at least one point"));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(invalid("weak-value range must be finite"));
    }
    (0..n)
        .map(|k| {
            let t = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
            postselection_angle_for(lo + (hi - lo) * t, theta_i)
        })
        .collect()
}

/// Evaluates every post-selection angle in `theta_f_list`.
///
/// Rows are computed in parallel and returned in input order. With `mc`, each
/// row is also simulated on the detector using seed `mc.seed ^ row_index`.
pub fn sweep_postselection(
    theta_i: f64,
    theta_f_list: &[f64],
    config: &CouplingConfig,
    mc: Option<&DetectionConfig>,
) -> Result<Vec<SweepRow>> {
    if let Some(det) = mc {
        det.validate()?;
    }
    let pre = PolarizationState::linear(theta_i)?;
    theta_f_list
        .par_iter()
        .enumerate()
        .map(|(idx, &theta_f)| sweep_row(&pre, theta_i, theta_f, idx as u64, config, mc))
        .collect()
}

fn sweep_row(
    pre: &PolarizationState,
    theta_i: f64,
    theta_f: f64,
    index: u64,
    config: &CouplingConfig,
    mc: Option<&DetectionConfig>,
) -> Result<SweepRow> {
    let post = PolarizationState::linear(theta_f)?;
    let mut row = SweepRow { theta_i, theta_f, ..Default::default() };
    let (z_h, z_v) = branch_amplitudes(pre, &post);
    let z = (z_h + z_v).re;
    let exact = crate::meter::sequential_meter(pre, &post, config).ok();
    row.p_postselect = exact.map(|p| p.postselection_probability);
    if (theta_i - theta_f).cos().abs() <= SWEEP_DIVERGENCE {
        row.divergent = true;
        return Ok(row);
    }
    let Some(exact) = exact else {
        row.divergent = true;
        return Ok(row);
    };
    let aw_h = z_h.re / z;
    let aw_v = z_v.re / z;
    let order = |aw: f64, a: f64, k| perturbative_meter(aw, a, config.sigma(), k);
    row.aw_h_true = Some(aw_h);
    row.aw_v_true = Some(aw_v);
    row.x_exact = Some(exact.x_centroid);
    row.y_exact = Some(exact.y_centroid);
    row.x_order1 = Some(order(aw_h, config.a_x(), PerturbativeOrder::First)?);
    row.x_order3 = Some(order(aw_h, config.a_x(), PerturbativeOrder::Third)?);
    row.y_order1 = Some(order(aw_v, config.a_y(), PerturbativeOrder::First)?);
    row.y_order3 = Some(order(aw_v, config.a_y(), PerturbativeOrder::Third)?);

    if let Some(det) = mc {
        let det = DetectionConfig { seed: det.seed ^ index, ..*det };
        let map = pixel_probability_map(pre, &post, config, &PixelGrid::default())?;
        let counts = simulate_counts(&map, &det)?;
        let background = (det.dark_rate_hz > 0.0).then(|| det.dark_mean_per_pixel());
        if let Ok(c) = centroid_estimate(&counts, background) {
            row.x_measured = Some(c.x);
            row.x_stderr = Some(c.stderr_x);
            row.y_measured = Some(c.y);
            row.y_stderr = Some(c.stderr_y);
        }
    }
    Ok(row)
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "theta_i", "theta_f", "aw_h_true", "aw_v_true", "x_exact", "x_order1", "x_order3",
    "y_exact", "y_order1", "y_order3", "x_measured", "x_stderr", "y_measured", "y_stderr",
    "p_postselect", "divergent_flag",
];

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

/// Writes `#`-prefixed metadata, the header row and one line per sweep row.
pub fn write_sweep_csv<W: Write>(
    out: &mut W,
    rows: &[SweepRow],
    metadata: &[(String, String)],
) -> std::io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k} = {v}")?;
    }
    writeln!(out, "{}", SWEEP_COLUMNS.join(","))?;
    for r in rows {
        let fields = [
            sci(r.theta_i),
            sci(r.theta_f),
            opt(r.aw_h_true),
            opt(r.aw_v_true),
            opt(r.x_exact),
            opt(r.x_order1),
            opt(r.x_order3),
            opt(r.y_exact),
            opt(r.y_order1),
            opt(r.y_order3),
            opt(r.x_measured),
            opt(r.x_stderr),
            opt(r.y_measured),
            opt(r.y_stderr),
            opt(r.p_postselect),
            if r.divergent { "1".into() } else { "0".into() },
        ];
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
