//! Gated 32x32 SPAD array.
//!
//! Detection probabilities are integrated per pixel directly from the
//! post-selected two-branch intensity, so no continuous positions are ever
//! sampled. Counts are one multinomial draw of the detected signal photons
//! over the pixels plus independent Poisson dark counts per pixel.
//!
//! Pixel `(i, j)` covers `[i, i + 1) x [j, j + 1)`; centroids are reported
//! relative to the beam center.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{invalid, Error, Result};
use crate::meter::{CouplingConfig, MIN_POSTSELECTION};
use crate::pointer::{BinIntegrals, GaussianPointer};
use crate::polarization::{branch_amplitudes, PolarizationState};

/// Pixels per side.
pub const GRID_SIZE: usize = 32;
pub const PIXEL_COUNT: usize = GRID_SIZE * GRID_SIZE;

/// Name of the generator behind every count map; recorded in the CSV header.
pub const RNG_ALGORITHM: &str = "ChaCha20";

/// Default gate width of the array, in seconds.
pub const DEFAULT_GATE_S: f64 = 6e-9;
pub const DEFAULT_DARK_RATE_HZ: f64 = 100.0;

const NEGATIVE_PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Seeded generator for stream `index` of `seed`.
pub fn rng_stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelGrid {
    pub beam_center: (f64, f64),
}

impl Default for PixelGrid {
    fn default() -> Self {
        let c = GRID_SIZE as f64 / 2.0 - 0.5;
        Self { beam_center: (c, c) }
    }
}

impl PixelGrid {
    pub fn with_center(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(invalid("beam center must be finite"));
        }
        Ok(Self { beam_center: (x, y) })
    }

    /// Coordinate of the middle of pixel column/row `index`.
    pub fn pixel_center(index: usize) -> f64 {
        index as f64 + 0.5
    }
}

/// Acquisition parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Heralding triggers.
    pub shots: u64,
    pub efficiency: f64,
    /// Dark count rate per pixel.
    pub dark_rate_hz: f64,
    pub gate_s: f64,
    pub seed: u64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            shots: 1_000_000,
            efficiency: 1.0,
            dark_rate_hz: DEFAULT_DARK_RATE_HZ,
            gate_s: DEFAULT_GATE_S,
            seed: 0,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(invalid("shots must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid(format!("efficiency must lie in [0, 1], got {}", self.efficiency)));
        }
        if !(self.dark_rate_hz.is_finite() && self.dark_rate_hz >= 0.0) {
            return Err(invalid(format!("dark_rate_hz must be >= 0, got {}", self.dark_rate_hz)));
        }
        if !(self.gate_s.is_finite() && self.gate_s > 0.0) {
            return Err(invalid(format!("gate_s must be > 0, got {}", self.gate_s)));
        }
        Ok(())
    }

    /// Expected dark counts per pixel over the whole acquisition.
    pub fn dark_mean_per_pixel(&self) -> f64 {
        self.shots as f64 * self.dark_rate_hz * self.gate_s
    }
}

/// Per-pixel detection probabilities conditioned on post-selection success.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    /// Row-major, `probs[j * GRID_SIZE + i]`; sums to 1.
    probs: Vec<f64>,
    /// Post-selected probability that fell outside the array before renormalizing.
    pub truncation_mass: f64,
    pub postselection_probability: f64,
    pub grid: PixelGrid,
    /// Continuous full-plane centroid minus the binned on-array centroid;
    /// zero for maps built from explicit probabilities.
    pub truncation_correction: (f64, f64),
}

impl ProbabilityMap {
    /// Builds a map from explicit probabilities; they are renormalized to sum to 1.
    pub fn from_probabilities(
        probs: Vec<f64>,
        postselection_probability: f64,
        grid: PixelGrid,
    ) -> Result<Self> {
        if probs.len() != PIXEL_COUNT {
            return Err(invalid(format!("expected {PIXEL_COUNT} pixel probabilities, got {}", probs.len())));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("pixel probabilities must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&postselection_probability) {
            return Err(invalid("post-selection probability must lie in [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(invalid("probability map has no mass"));
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p / total).collect(),
            truncation_mass: 0.0,
            postselection_probability,
            grid,
            truncation_correction: (0.0, 0.0),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[j * GRID_SIZE + i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal_x(&self) -> [f64; GRID_SIZE] {
        let mut m = [0.0; GRID_SIZE];
        for (k, p) in self.probs.iter().enumerate() {
            m[k % GRID_SIZE] += p;
        }
        m
    }

    pub fn marginal_y(&self) -> [f64; GRID_SIZE] {
        let mut m = [0.0; GRID_SIZE];
        for (k, p) in self.probs.iter().enumerate() {
            m[k / GRID_SIZE] += p;
        }
        m
    }

    /// Marginal centroids relative to the beam center.
    pub fn centroid(&self) -> (f64, f64) {
        let mean = |m: [f64; GRID_SIZE]| -> f64 {
            m.iter().enumerate().map(|(k, p)| p * PixelGrid::pixel_center(k)).sum()
        };
        (
            mean(self.marginal_x()) - self.grid.beam_center.0,
            mean(self.marginal_y()) - self.grid.beam_center.1,
        )
    }

    /// Centroid with the loss from the array edges and the pixel binning restored.
    pub fn corrected_centroid(&self) -> (f64, f64) {
        let (x, y) = self.centroid();
        (x + self.truncation_correction.0, y + self.truncation_correction.1)
    }
}

/// Probability of a post-selected photon landing in each pixel.
///
/// The post-selected intensity is separable term by term:
/// `|z_H|^2 G_ax(x) G_0(y) + |z_V|^2 G_0(x) G_ay(y) + 2 Re(z_H* z_V) H_ax(x) H_ay(y)`
/// with `G` the shifted Gaussian densities and `H` the cross densities.
pub fn pixel_probability_map(
    psi_i: &PolarizationState,
    psi_f: &PolarizationState,
    config: &CouplingConfig,
    grid: &PixelGrid,
) -> Result<ProbabilityMap> {
    let (z_h, z_v) = branch_amplitudes(psi_i, psi_f);
    probability_map_from_branches(z_h, z_v, config, grid)
}

fn probability_map_from_branches(
    z_h: Complex64,
    z_v: Complex64,
    config: &CouplingConfig,
    grid: &PixelGrid,
) -> Result<ProbabilityMap> {
    let px = GaussianPointer::centered_at(config.sigma(), grid.beam_center.0)?;
    let py = GaussianPointer::centered_at(config.sigma(), grid.beam_center.1)?;
    let bins = |p: &GaussianPointer, shift: f64| -> Result<Vec<BinIntegrals>> {
        (0..GRID_SIZE)
            .map(|k| p.bin_integrals(shift, k as f64, k as f64 + 1.0))
            .collect()
    };
    let bx = bins(&px, config.a_x())?;
    let by = bins(&py, config.a_y())?;

    let w_h = z_h.norm_sqr();
    let w_v = z_v.norm_sqr();
    let w_cross = 2.0 * (z_h.conj() * z_v).re;
    let norm = w_h + w_v + w_cross * px.overlap(config.a_x()) * py.overlap(config.a_y());
    if !(norm > MIN_POSTSELECTION) {
        return Err(Error::VanishingPostselection { probability: norm });
    }

    let mut probs = Vec::with_capacity(PIXEL_COUNT);
    for y in &by {
        for x in &bx {
            let p = (w_h * x.shift * y.zero + w_v * x.zero * y.shift + w_cross * x.cross * y.cross)
                / norm;
            if p < -NEGATIVE_PROBABILITY_TOLERANCE {
                return Err(Error::InternalConsistency(format!(
                    "negative pixel probability {p:e}"
                )));
            }
            probs.push(p.max(0.0));
        }
    }
    let inside: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= inside;
    }
    let cross = w_cross * px.overlap(config.a_x()) * py.overlap(config.a_y());
    let continuous = (
        config.a_x() * (w_h + 0.5 * cross) / norm,
        config.a_y() * (w_v + 0.5 * cross) / norm,
    );
    let mut map = ProbabilityMap {
        probs,
        truncation_mass: (1.0 - inside).max(0.0),
        postselection_probability: norm,
        grid: *grid,
        truncation_correction: (0.0, 0.0),
    };
    let (bx, by) = map.centroid();
    map.truncation_correction = (continuous.0 - bx, continuous.1 - by);
    Ok(map)
}

/// Photon counts of one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMap {
    /// Row-major, `counts[j * GRID_SIZE + i]`.
    pub counts: Vec<u64>,
    /// `shots * postselection_probability * efficiency`.
    pub total_signal_expected: f64,
    pub detection: DetectionConfig,
    pub beam_center: (f64, f64),
    pub rng: String,
    /// Free-form `key = value` lines carried through serialization, e.g. a config echo.
    pub metadata: Vec<(String, String)>,
}

/// Draws one acquisition from `probmap`.
///
/// The signal total is `Binomial(shots, p_postselect * efficiency)`, spread
/// over pixels by conditional binomials (an exact multinomial draw). Dark
/// counts are `Poisson(shots * dark_rate_hz * gate_s)` per pixel. Everything
/// comes from a single ChaCha20 stream seeded by `det.seed`, in a fixed order.
pub fn simulate_counts(probmap: &ProbabilityMap, det: &DetectionConfig) -> Result<CountMap> {
    simulate_counts_with_rng(probmap, det, &mut rng_stream(det.seed, 0))
}

fn simulate_counts_with_rng(
    probmap: &ProbabilityMap,
    det: &DetectionConfig,
    rng: &mut ChaCha20Rng,
) -> Result<CountMap> {
    det.validate()?;
    let p_detect = (probmap.postselection_probability * det.efficiency).clamp(0.0, 1.0);
    let signal = Binomial::new(det.shots, p_detect)
        .map_err(|e| invalid(format!("binomial: {e}")))?
        .sample(rng);

    let mut counts = vec![0u64; PIXEL_COUNT];
    let mut remaining = signal;
    let mut mass_left = 1.0f64;
    for (k, &p) in probmap.probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let c = if k + 1 == PIXEL_COUNT || mass_left <= p {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| invalid(format!("binomial: {e}")))?
                .sample(rng)
        };
        counts[k] = c;
        remaining -= c;
        mass_left -= p;
    }

    let dark_mean = det.dark_mean_per_pixel();
    if dark_mean > 0.0 {
        let dark = Poisson::new(dark_mean).map_err(|e| invalid(format!("poisson: {e}")))?;
        for c in &mut counts {
            *c += dark.sample(rng) as u64;
        }
    }

    Ok(CountMap {
        counts,
        total_signal_expected: det.shots as f64 * p_detect,
        detection: *det,
        beam_center: probmap.grid.beam_center,
        rng: RNG_ALGORITHM.to_string(),
        metadata: Vec::new(),
    })
}

impl CountMap {
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[j * GRID_SIZE + i]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Serializes as `#`-prefixed `key = value` metadata followed by 32 rows
    /// (index `j`, the Y pixel) of 32 comma-separated counts (index `i`, X).
    pub fn to_csv(&self) -> String {
        let d = &self.detection;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "# {k} = {v}");
        };
        kv("rng", &self.rng);
        kv("seed", &d.seed);
        kv("shots", &d.shots);
        kv("efficiency", &d.efficiency);
        kv("dark_rate_hz", &d.dark_rate_hz);
        kv("gate_s", &d.gate_s);
        kv("beam_center_x", &self.beam_center.0);
        kv("beam_center_y", &self.beam_center.1);
        kv("total_signal_expected", &self.total_signal_expected);
        for (k, v) in &self.metadata {
            kv(k, v);
        }
        for row in self.counts.chunks(GRID_SIZE) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut header: Vec<(usize, String, String)> = Vec::new();
        let mut counts = Vec::with_capacity(PIXEL_COUNT);
        let mut rows = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    header.push((line_no, k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let parsed: std::result::Result<Vec<u64>, _> =
                line.split(',').map(|f| f.trim().parse::<u64>()).collect();
            let row = parsed.map_err(|e| Error::Parse { line: line_no, message: format!("bad count: {e}") })?;
            if row.len() != GRID_SIZE {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {GRID_SIZE} counts, found {}", row.len()),
                });
            }
            rows += 1;
            if rows > GRID_SIZE {
                return Err(Error::Parse { line: line_no, message: format!("more than {GRID_SIZE} rows") });
            }
            counts.extend(row);
        }
        if rows != GRID_SIZE {
            return Err(Error::Parse { line: text.lines().count(), message: format!("expected {GRID_SIZE} rows, found {rows}") });
        }

        let take = |key: &str| -> Result<(usize, String)> {
            header
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(l, _, v)| (*l, v.clone()))
                .ok_or_else(|| Error::Parse { line: 0, message: format!("missing metadata key `{key}`") })
        };
        fn parse<T: std::str::FromStr>((line, v): (usize, String), key: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Parse { line, message: format!("cannot parse `{key}` from `{v}`") })
        }
        const KNOWN: [&str; 9] = [
            "rng", "seed", "shots", "efficiency", "dark_rate_hz", "gate_s",
            "beam_center_x", "beam_center_y", "total_signal_expected",
        ];
        let detection = DetectionConfig {
            shots: parse(take("shots")?, "shots")?,
            efficiency: parse(take("efficiency")?, "efficiency")?,
            dark_rate_hz: parse(take("dark_rate_hz")?, "dark_rate_hz")?,
            gate_s: parse(take("gate_s")?, "gate_s")?,
            seed: parse(take("seed")?, "seed")?,
        };
        Ok(Self {
            counts,
            total_signal_expected: parse(take("total_signal_expected")?, "total_signal_expected")?,
            detection,
            beam_center: (
                parse(take("beam_center_x")?, "beam_center_x")?,
                parse(take("beam_center_y")?, "beam_center_y")?,
            ),
            rng: take("rng")?.1,
            metadata: header
                .into_iter()
                .filter(|(_, k, _)| !KNOWN.contains(&k.as_str()))
                .map(|(_, k, v)| (k, v))
                .collect(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    /// Relative to the beam center.
    pub x: f64,
    pub y: f64,
    pub stderr_x: f64,
    pub stderr_y: f64,
    /// Total weight (counts after background subtraction).
    pub n_used: f64,
}

/// Count-weighted centroid with standard errors `s / sqrt(N)`.
///
/// `background` is a flat per-pixel level subtracted before weighting, with
/// each pixel clamped at zero.
pub fn centroid_estimate(counts: &CountMap, background: Option<f64>) -> Result<Centroid> {
    if counts.counts.len() != PIXEL_COUNT {
        return Err(invalid("count map must hold 32x32 pixels"));
    }
    let bg = background.unwrap_or(0.0);
    if !(bg.is_finite() && bg >= 0.0) {
        return Err(invalid(format!("background must be >= 0, got {bg}")));
    }
    let weights: Vec<f64> = counts.counts.iter().map(|&c| (c as f64 - bg).max(0.0)).collect();
    let n: f64 = weights.iter().sum();
    if n < 2.0 {
        return Err(Error::InsufficientCounts(format!(
            "need at least 2 counts after background subtraction, have {n}"
        )));
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (k, w) in weights.iter().enumerate() {
        sx += w * PixelGrid::pixel_center(k % GRID_SIZE);
        sy += w * PixelGrid::pixel_center(k / GRID_SIZE);
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut vx, mut vy) = (0.0, 0.0);
    for (k, w) in weights.iter().enumerate() {
        vx += w * (PixelGrid::pixel_center(k % GRID_SIZE) - mx).powi(2);
        vy += w * (PixelGrid::pixel_center(k / GRID_SIZE) - my).powi(2);
    }
    vx /= n - 1.0;
    vy /= n - 1.0;
    Ok(Centroid {
        x: mx - counts.beam_center.0,
        y: my - counts.beam_center.1,
        stderr_x: (vx / n).sqrt(),
        stderr_y: (vy / n).sqrt(),
        n_used: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftCalibration {
    pub a_x: f64,
    pub a_y: f64,
    pub a_x_err: f64,
    pub a_y_err: f64,
}

/// Walk-off estimates from an `|H>` run and a `|V>` run, both without post-selection bias.
///
/// `|H>` photons are shifted along X only and `|V>` photons along Y only, so
/// each shift is the centroid difference between the two runs on its axis.
pub fn calibrate_shifts(counts_h: &CountMap, counts_v: &CountMap) -> Result<ShiftCalibration> {
    let bg = |m: &CountMap| Some(m.detection.dark_mean_per_pixel());
    let h = centroid_estimate(counts_h, bg(counts_h))?;
    let v = centroid_estimate(counts_v, bg(counts_v))?;
    Ok(ShiftCalibration {
        a_x: h.x - v.x,
        a_y: v.y - h.y,
        a_x_err: h.stderr_x.hypot(v.stderr_x),
        a_y_err: h.stderr_y.hypot(v.stderr_y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn state(t: f64) -> PolarizationState {
        PolarizationState::linear(t).unwrap()
    }

    fn map(ti: f64, tf: f64, cfg: CouplingConfig) -> ProbabilityMap {
        pixel_probability_map(&state(ti), &state(tf), &cfg, &PixelGrid::default()).unwrap()
    }

    fn empty_map(det: DetectionConfig) -> CountMap {
        CountMap {
            counts: vec![0; PIXEL_COUNT],
            total_signal_expected: 0.0,
            detection: det,
            beam_center: (15.5, 15.5),
            rng: RNG_ALGORITHM.into(),
            metadata: vec![],
        }
    }

    #[test]
    fn uncoupled_map_is_a_discretized_gaussian() {
        let m = map(FRAC_PI_4, 0.0, CouplingConfig::new(0.0, 0.0, 4.3).unwrap());
        let (cx, cy) = m.centroid();
        // Pixel 15 holds the beam, so the array extends one pixel further on the high side.
        assert!(cx > 0.0 && cx < 2e-3 && (cx - cy).abs() < 1e-15);
        let (kx, ky) = m.corrected_centroid();
        assert!(kx.abs() < 1e-12 && ky.abs() < 1e-12);
        let px = GaussianPointer::centered_at(4.3, 15.5).unwrap();
        let b = px.bin_integrals(0.0, 3.0, 4.0).unwrap();
        let b2 = px.bin_integrals(0.0, 20.0, 21.0).unwrap();
        let expect = b.zero * b2.zero / (1.0 - m.truncation_mass);
        assert!((m.get(3, 20) - expect).abs() < 1e-15);
    }

    #[test]
    fn eigenstate_postselection_shifts_deterministically() {
        let m = map(FRAC_PI_4, 0.0, CouplingConfig::new(1.7, 0.0, 4.3).unwrap());
        let (cx, cy) = m.corrected_centroid();
        assert!((cx - 1.7).abs() < 1e-6, "{cx}");
        assert!(cy.abs() < 1e-12);
        let (bx, _) = m.centroid();
        assert!((bx - 1.7).abs() < 32.0 * m.truncation_mass);
    }

    #[test]
    fn anomalous_map_matches_closed_form() {
        let m = map(FRAC_PI_4, (-0.6f64).atan(), CouplingConfig::thin());
        let (cx, _) = m.corrected_centroid();
        assert!((cx - 1.683937055366).abs() < 1e-9, "{cx}");
        let (bx, _) = m.centroid();
        assert!((bx - 1.683937055366).abs() < 5e-3, "{bx}");
        assert!(m.truncation_mass < 1e-3);
        assert!((m.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((m.postselection_probability - 0.061736752004).abs() < 1e-11);
    }

    #[test]
    fn vanishing_postselection() {
        let r = pixel_probability_map(
            &state(FRAC_PI_4),
            &state(-FRAC_PI_4),
            &CouplingConfig::new(0.0, 0.0, 4.3).unwrap(),
            &PixelGrid::default(),
        );
        assert!(matches!(r, Err(Error::VanishingPostselection { .. })));
    }

    #[test]
    fn zero_efficiency_and_no_dark_counts_gives_nothing() {
        let m = map(FRAC_PI_4, FRAC_PI_4, CouplingConfig::thin());
        let det = DetectionConfig { efficiency: 0.0, dark_rate_hz: 0.0, ..Default::default() };
        let c = simulate_counts(&m, &det).unwrap();
        assert_eq!(c.total(), 0);
        assert_eq!(c.rng, "ChaCha20");
    }

    #[test]
    fn two_pixel_binomial_split() {
        let mut p = vec![0.0; PIXEL_COUNT];
        p[0] = 0.5;
        p[1] = 0.5;
        let post = 0.3;
        let m = ProbabilityMap::from_probabilities(p, post, PixelGrid::default()).unwrap();
        let det = DetectionConfig { shots: 1_000_000, dark_rate_hz: 0.0, seed: 7, ..Default::default() };
        let c = simulate_counts(&m, &det).unwrap();
        let mean = 500_000.0 * post;
        // Each pixel is marginally Binomial(shots, 0.5 * post).
        let sd = (1e6 * 0.5 * post * (1.0 - 0.5 * post)).sqrt();
        for k in 0..2 {
            assert!((c.counts[k] as f64 - mean).abs() < 5.0 * sd);
        }
        assert_eq!(c.total(), c.counts[0] + c.counts[1]);
    }

    #[test]
    fn dark_count_total() {
        let m = map(FRAC_PI_4, FRAC_PI_4, CouplingConfig::thin());
        let det = DetectionConfig { efficiency: 0.0, dark_rate_hz: 100.0, seed: 3, ..Default::default() };
        let mean: f64 = 1e6 * 1024.0 * 100.0 * 6e-9;
        assert!((mean - 614.4).abs() < 1e-9);
        let c = simulate_counts(&m, &det).unwrap();
        assert!((c.total() as f64 - mean).abs() < 5.0 * mean.sqrt());
    }

    #[test]
    fn identical_seeds_identical_maps() {
        let m = map(FRAC_PI_4, 0.3, CouplingConfig::thick());
        let det = DetectionConfig { shots: 20_000, seed: 99, ..Default::default() };
        assert_eq!(simulate_counts(&m, &det).unwrap(), simulate_counts(&m, &det).unwrap());
        let other = DetectionConfig { seed: 100, ..det };
        assert_ne!(simulate_counts(&m, &det).unwrap().counts, simulate_counts(&m, &other).unwrap().counts);
    }

    #[test]
    fn invalid_detection_config() {
        let m = map(FRAC_PI_4, FRAC_PI_4, CouplingConfig::thin());
        for det in [
            DetectionConfig { shots: 0, ..Default::default() },
            DetectionConfig { efficiency: 1.5, ..Default::default() },
            DetectionConfig { dark_rate_hz: -1.0, ..Default::default() },
            DetectionConfig { gate_s: 0.0, ..Default::default() },
        ] {
            assert!(simulate_counts(&m, &det).is_err());
        }
    }

    #[test]
    fn single_pixel_centroid() {
        let mut c = empty_map(DetectionConfig::default());
        c.counts[20 * GRID_SIZE + 10] = 5;
        let e = centroid_estimate(&c, None).unwrap();
        assert_eq!((e.x, e.y, e.stderr_x, e.stderr_y), (-5.0, 5.0, 0.0, 0.0));
        assert_eq!(e.n_used, 5.0);
    }

    #[test]
    fn symmetric_pair_gives_midpoint() {
        let mut c = empty_map(DetectionConfig::default());
        c.counts[4 * GRID_SIZE + 12] = 40;
        c.counts[4 * GRID_SIZE + 18] = 40;
        let e = centroid_estimate(&c, None).unwrap();
        assert_eq!(e.x, 0.0);
        assert_eq!(e.y, 4.5 - 15.5);
        // Sample sd of +-3 with N = 80 is 3 sqrt(80/79).
        assert!((e.stderr_x - 3.0 * (80.0f64 / 79.0).sqrt() / 80f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_map_is_rejected() {
        let c = empty_map(DetectionConfig::default());
        assert!(matches!(centroid_estimate(&c, None), Err(Error::InsufficientCounts(_))));
        let mut c = empty_map(DetectionConfig::default());
        c.counts[0] = 3;
        // Background swallows everything.
        assert!(centroid_estimate(&c, Some(3.0)).is_err());
    }

    fn noiseless(ti: f64, cfg: CouplingConfig) -> CountMap {
        // Expected counts of 1e9 photons, rounded; deterministic stand-in for a long run.
        let m = map(ti, ti, cfg);
        let mut c = empty_map(DetectionConfig { dark_rate_hz: 0.0, ..Default::default() });
        c.counts = m.as_slice().iter().map(|p| (p * 1e9).round() as u64).collect();
        c
    }

    #[test]
    fn calibration_from_noiseless_maps() {
        let cfg = CouplingConfig::new(0.7, 0.7, 4.3).unwrap();
        let cal = calibrate_shifts(&noiseless(0.0, cfg), &noiseless(FRAC_PI_2, cfg)).unwrap();
        // Edge truncation of the two maps does not cancel exactly in the difference.
        let bias = map(0.0, 0.0, cfg).truncation_correction.0 - map(FRAC_PI_2, FRAC_PI_2, cfg).truncation_correction.0;
        assert!((cal.a_x + bias - 0.7).abs() < 1e-6 && (cal.a_y + bias - 0.7).abs() < 1e-6, "{cal:?}");
        assert!((cal.a_x - 0.7).abs() < 3e-3);

        let off = CouplingConfig::new(0.0, 0.0, 4.3).unwrap();
        let cal = calibrate_shifts(&noiseless(0.0, off), &noiseless(FRAC_PI_2, off)).unwrap();
        assert!(cal.a_x.abs() < 1e-6 && cal.a_y.abs() < 1e-6);
    }

    #[test]
    fn calibration_needs_counts() {
        let full = noiseless(0.0, CouplingConfig::thin());
        let empty = empty_map(DetectionConfig::default());
        assert!(calibrate_shifts(&full, &empty).is_err());
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let m = map(FRAC_PI_4, FRAC_PI_4, CouplingConfig::thin());
        let c = simulate_counts(&m, &DetectionConfig { shots: 1000, ..Default::default() }).unwrap();
        let text = c.to_csv();
        let short: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(CountMap::from_csv(&short), Err(Error::Parse { .. })));
        let negative = text.replacen("\n0,", "\n-1,", 1);
        assert!(CountMap::from_csv(&negative).is_err());
        let no_seed: String = text.lines().filter(|l| !l.starts_with("# seed")).map(|l| format!("{l}\n")).collect();
        assert!(CountMap::from_csv(&no_seed).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn csv_round_trip_is_byte_exact(
            counts in proptest::collection::vec(0u64..1_000_000_000, PIXEL_COUNT),
            seed in any::<u64>(),
            shots in 1u64..u64::MAX,
            eff in 0.0..=1.0f64,
            rate in 0.0..1e4f64,
            gate in 1e-12..1e-3f64,
            cx in -100.0..100.0f64,
            expected in 0.0..1e12f64,
        ) {
            let original = CountMap {
                counts,
                total_signal_expected: expected,
                detection: DetectionConfig { shots, efficiency: eff, dark_rate_hz: rate, gate_s: gate, seed },
                beam_center: (cx, 15.5),
                rng: RNG_ALGORITHM.into(),
                metadata: vec![("preset".into(), "thick".into()), ("theta_i".into(), "0.7853981633974483".into())],
            };
            let text = original.to_csv();
            let parsed = CountMap::from_csv(&text).unwrap();
            prop_assert_eq!(&parsed, &original);
            prop_assert_eq!(parsed.to_csv(), text);
        }

        #[test]
        fn probability_closure(ti in -1.5..1.5f64, tf in -1.5..1.5f64, ax in 0.0..2.0f64, ay in 0.0..2.0f64) {
            let cfg = CouplingConfig::new(ax, ay, 4.3).unwrap();
            if let Ok(m) = pixel_probability_map(&state(ti), &state(tf), &cfg, &PixelGrid::default()) {
                prop_assert!((m.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(m.as_slice().iter().all(|p| *p >= 0.0));
                // Destructive interference leaves a two-lobed pointer with heavier tails.
                if ti * tf >= 0.0 {
                    prop_assert!(m.truncation_mass < 1e-3, "{}", m.truncation_mass);
                }
            }
        }
    }
}
