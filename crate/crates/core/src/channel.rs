//! Radio channel: ED placement, Nakagami-m power fading, wake-up call
//! reception and the strongest-interferer capture rule.
//!
//! Received power is `a * d^-alpha` with the transmit power and hardware
//! constant normalised to one; only power ratios enter the capture rule.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster geometry: EDs uniform over a disc of `radius_m`, UAV hovering
/// `altitude_m` above its centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub radius_m: f64,
    pub altitude_m: f64,
    pub path_loss_exp: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            radius_m: 30.0,
            altitude_m: 10.0,
            path_loss_exp: 2.5,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radius_m", self.radius_m),
            ("altitude_m", self.altitude_m),
            ("path_loss_exp", self.path_loss_exp),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "geometry.{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Largest ED-to-UAV distance, `sqrt(R^2 + h^2)`.
    pub fn max_distance(&self) -> f64 {
        self.radius_m.hypot(self.altitude_m)
    }

    /// Density of the ED-to-UAV distance.
    pub fn distance_pdf(&self, u: f64) -> f64 {
        if u < self.altitude_m || u > self.max_distance() {
            0.0
        } else {
            2.0 * u / (self.radius_m * self.radius_m)
        }
    }

    pub fn distance_cdf(&self, u: f64) -> f64 {
        let h = self.altitude_m;
        if u < h {
            0.0
        } else if u > self.max_distance() {
            1.0
        } else {
            (u * u - h * h) / (self.radius_m * self.radius_m)
        }
    }

    /// Distance for a given uniform variate; inverse of [`Self::distance_cdf`].
    pub fn distance_from_uniform(&self, v: f64) -> f64 {
        let h = self.altitude_m;
        let r = self.radius_m;
        (h * h + r * r * v).sqrt()
    }
}

pub fn sample_distance<R: Rng + ?Sized>(g: &Geometry, rng: &mut R) -> f64 {
    g.distance_from_uniform(rng.random::<f64>())
}

/// Nakagami-m fading: the power coefficient is gamma distributed with
/// shape `m` and mean `omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingModel {
    pub m: f64,
    pub omega: f64,
}

impl Default for FadingModel {
    fn default() -> Self {
        Self { m: 3.0, omega: 1.0 }
    }
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m >= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "fading.m must be >= 0.5, got {}",
                self.m
            )));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fading.omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<FadingSampler> {
        self.validate()?;
        let dist =
            Gamma::new(self.m, self.omega / self.m).map_err(|e| Error::InvalidParameter(format!("fading: {e}")))?;
        Ok(FadingSampler { dist })
    }
}

/// Pre-built gamma sampler for repeated fading draws.
#[derive(Clone, Copy, Debug)]
pub struct FadingSampler {
    dist: Gamma<f64>,
}

impl FadingSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.dist.sample(rng)
    }
}

pub fn sample_fading<R: Rng + ?Sized>(f: &FadingModel, rng: &mut R) -> Result<f64> {
    Ok(f.sampler()?.sample(rng))
}

#[inline]
pub fn received_power(a: f64, d: f64, alpha: f64) -> f64 {
    a * d.powf(-alpha)
}

/// Slot in which an ED first hears a wake-up call, each call being received
/// independently with probability `p_b`. `None` if all `n_s` calls are missed.
pub fn sample_wakeup_slot<R: Rng + ?Sized>(p_b: f64, n_s: usize, rng: &mut R) -> Option<usize> {
    (0..n_s).find(|_| rng.random_bool(p_b))
}

/// Per-frame band, uniform over `n_f` orthogonal bands.
#[inline]
pub fn draw_band<R: Rng + ?Sized>(n_f: usize, rng: &mut R) -> usize {
    rng.random_range(0..n_f)
}

/// Per-frame SF position, uniform over an SF set of `count` entries.
#[inline]
pub fn draw_sf<R: Rng + ?Sized>(count: usize, rng: &mut R) -> usize {
    rng.random_range(0..count)
}

/// Capture thresholds `xi[k][k']` as linear power ratios, indexed by the
/// position of the desired and interfering SF in `sf_set`.
#[derive(Clone, Debug, PartialEq)]
pub struct CaptureMatrix {
    sf_set: Vec<u8>,
    thresholds: Vec<f64>,
}

impl CaptureMatrix {
    pub fn uniform(sf_set: &[u8], co_sf: f64, inter_sf: f64) -> Result<Self> {
        let k = sf_set.len();
        let mut thresholds = vec![inter_sf; k * k];
        for i in 0..k {
            thresholds[i * k + i] = co_sf;
        }
        Self::from_thresholds(sf_set.to_vec(), thresholds)
    }

    pub fn from_thresholds(sf_set: Vec<u8>, thresholds: Vec<f64>) -> Result<Self> {
        if sf_set.is_empty() {
            return Err(Error::InvalidParameter("sf_set is empty".into()));
        }
        if thresholds.len() != sf_set.len() * sf_set.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} thresholds for {} spreading factors",
                thresholds.len(),
                sf_set.len()
            )));
        }
        if let Some(t) = thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "capture threshold must be positive, got {t}"
            )));
        }
        Ok(Self { sf_set, thresholds })
    }

    pub fn sf_set(&self) -> &[u8] {
        &self.sf_set
    }

    pub fn len(&self) -> usize {
        self.sf_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sf_set.is_empty()
    }

    pub fn index_of(&self, sf: u8) -> Option<usize> {
        self.sf_set.iter().position(|&s| s == sf)
    }

    #[inline]
    pub fn get(&self, desired: usize, interferer: usize) -> f64 {
        self.thresholds[desired * self.sf_set.len() + interferer]
    }

    pub fn set(&mut self, desired: usize, interferer: usize, xi: f64) {
        let k = self.sf_set.len();
        self.thresholds[desired * k + interferer] = xi;
    }

    /// Copy with every threshold replaced by `f(xi)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            sf_set: self.sf_set.clone(),
            thresholds: self.thresholds.iter().map(|&t| f(t)).collect(),
        }
    }
}

/// One frame on the air.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameTransmission {
    pub ed: usize,
    pub slot: usize,
    pub band: usize,
    /// Position of the frame's SF in the configured SF set.
    pub sf: usize,
    pub rx_power: f64,
    /// Index of the frame in its ED's schedule.
    pub entry: usize,
}

/// Strongest-interferer capture: `frame` survives iff its power exceeds
/// every co-channel interferer's by the SF-pair threshold.
pub fn capture_verdict(frame: &FrameTransmission, cochannel: &[FrameTransmission], xi: &CaptureMatrix) -> bool {
    cochannel
        .iter()
        .all(|other| frame.rx_power / other.rx_power >= xi.get(frame.sf, other.sf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::special::regularized_lower_gamma;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(sf: usize, p: f64) -> FrameTransmission {
        FrameTransmission {
            ed: 0,
            slot: 0,
            band: 0,
            sf,
            rx_power: p,
            entry: 0,
        }
    }

    #[test]
    fn distance_boundaries() {
        let g = Geometry::default();
        assert_eq!(g.distance_from_uniform(0.0), 10.0);
        assert!((g.distance_from_uniform(1.0) - 1000f64.sqrt()).abs() < 1e-12);
        assert_eq!(g.max_distance(), 1000f64.sqrt());
    }

    #[test]
    fn distance_cdf_sup_error() {
        let g = Geometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d: Vec<f64> = (0..100_000).map(|_| sample_distance(&g, &mut rng)).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len() as f64;
        let sup = d
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = g.distance_cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(sup < 0.01, "sup={sup}");
        assert!(d[0] >= 10.0 && *d.last().unwrap() <= g.max_distance());
    }

    #[test]
    fn pdf_integrates_to_one() {
        let g = Geometry::default();
        let (h, w) = (g.altitude_m, g.max_distance());
        let n = 10_000;
        let step = (w - h) / n as f64;
        let s: f64 = (0..n).map(|i| g.distance_pdf(h + (i as f64 + 0.5) * step) * step).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rayleigh_power_is_exponential() {
        let f = FadingModel { m: 1.0, omega: 2.0 };
        let s = f.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt());
        // P(A > 2) = e^{-1}
        let tail = draws.iter().filter(|&&a| a > 2.0).count() as f64 / n as f64;
        let e = (-1f64).exp();
        assert!((tail - e).abs() < 3.0 * (e * (1.0 - e) / n as f64).sqrt());
    }

    #[test]
    fn gamma_moments() {
        let f = FadingModel { m: 3.0, omega: 1.0 };
        let s = f.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000usize;
        let draws: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // var = omega^2/m = 1/3; var of the mean = 1/(3n)
        assert!((mean - 1.0).abs() < 3.0 * (1.0 / (3.0 * n as f64)).sqrt());
        // var of sample variance ~ (mu4 - sigma^4)/n; mu4 for gamma(3, 1/3) = 3*3*(3+2)/81*... use loose 3-sigma bound
        let mu4 = 3.0 * 3.0 * (3.0 + 2.0) / 81.0; // 3k(k+2) theta^4 with k=3, theta=1/3
        let sd_var = ((mu4 - (1.0f64 / 3.0).powi(2)) / n as f64).sqrt();
        assert!((var - 1.0 / 3.0).abs() < 3.0 * sd_var, "var={var}");
    }

    #[test]
    fn gamma_cdf_matches_incomplete_gamma() {
        let f = FadingModel { m: 3.0, omega: 1.0 };
        let s = f.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut d: Vec<f64> = (0..100_000).map(|_| s.sample(&mut rng)).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len() as f64;
        let sup = d
            .iter()
            .enumerate()
            .step_by(7)
            .map(|(i, &a)| (regularized_lower_gamma(f.m, f.m * a / f.omega) - (i as f64 + 0.5) / n).abs())
            .fold(0.0, f64::max);
        assert!(sup < 0.01, "sup={sup}");
    }

    #[test]
    fn power_law() {
        assert_eq!(received_power(1.0, 1.0, 2.5), 1.0);
        assert!((received_power(1.0, 10.0, 2.5) - 3.1623e-3).abs() < 1e-7);
        assert_eq!(received_power(2.0, 7.0, 2.5), 2.0 * received_power(1.0, 7.0, 2.5));
    }

    #[test]
    fn wakeup_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            assert_eq!(sample_wakeup_slot(1.0, 30, &mut rng), Some(0));
            assert_eq!(sample_wakeup_slot(0.0, 30, &mut rng), None);
        }
    }

    #[test]
    fn wakeup_pmf_is_geometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let n_s = 10;
        let mut counts = vec![0usize; n_s + 1];
        for _ in 0..n {
            match sample_wakeup_slot(0.25, n_s, &mut rng) {
                Some(i) => counts[i] += 1,
                None => counts[n_s] += 1,
            }
        }
        for (i, &c) in counts.iter().enumerate().take(n_s) {
            let p = 0.75f64.powi(i as i32) * 0.25;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() <= 3.0 * se, "slot {i}");
        }
    }

    #[test]
    fn capture_rules() {
        let xi = CaptureMatrix::uniform(&[7, 8, 9], 4.0, 10f64.powf(-1.6)).unwrap();
        let f = frame(0, 1.0);
        assert!(capture_verdict(&f, &[], &xi));
        // equal power, same SF
        assert!(!capture_verdict(&f, &[frame(0, 1.0)], &xi));
        assert!(capture_verdict(&f, &[frame(0, 0.25)], &xi));
        assert!(!capture_verdict(&f, &[frame(0, 0.2500001)], &xi));
        // inter-SF: both survive at equal power
        let g = frame(1, 1.0);
        assert!(capture_verdict(&f, &[g], &xi));
        assert!(capture_verdict(&g, &[f], &xi));
        // one strong interferer among weak ones is enough
        assert!(!capture_verdict(&f, &[frame(1, 0.1), frame(2, 50.0)], &xi));
    }

    #[test]
    fn co_sf_collision_has_at_most_one_winner() {
        let xi = CaptureMatrix::uniform(&[7, 8], 2.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let a = frame(0, rng.random::<f64>() + 1e-9);
            let b = frame(0, rng.random::<f64>() + 1e-9);
            assert!(!(capture_verdict(&a, &[b], &xi) && capture_verdict(&b, &[a], &xi)));
        }
    }

    fn chi_square(counts: &[usize]) -> f64 {
        let n: usize = counts.iter().sum();
        let e = n as f64 / counts.len() as f64;
        counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
    }

    #[test]
    fn band_and_sf_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut bands = [0usize; 8];
        let mut sfs = [0usize; 3];
        for _ in 0..100_000 {
            bands[draw_band(8, &mut rng)] += 1;
            sfs[draw_sf(3, &mut rng)] += 1;
        }
        // 1% critical values: 7 dof -> 18.475, 2 dof -> 9.210
        assert!(chi_square(&bands) < 18.475);
        assert!(chi_square(&sfs) < 9.210);
    }

    #[test]
    fn invalid_matrices() {
        assert!(CaptureMatrix::uniform(&[], 1.0, 1.0).is_err());
        assert!(CaptureMatrix::uniform(&[7], 0.0, 1.0).is_err());
        assert!(CaptureMatrix::from_thresholds(vec![7, 8], vec![1.0; 3]).is_err());
        assert!(FadingModel { m: 0.3, omega: 1.0 }.validate().is_err());
        assert!(Geometry {
            radius_m: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
