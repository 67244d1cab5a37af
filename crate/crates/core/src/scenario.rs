//! Random channel draws for experiments and tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::otfs::{
    dd_channel, doppler_derivative_channel, doppler_tap_derivative_channel, DdChannel, OtfsGrid,
    PathParams, PathSet,
};

/// Path statistics: `P` paths, delay taps uniform on `0..=l_max`, Doppler
/// taps uniform on `[-k_max, k_max]`, gains `CN(0, 1/P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStatistics {
    pub paths: usize,
    pub max_delay_tap: usize,
    pub max_doppler_tap: f64,
}

impl ChannelStatistics {
    pub fn new(paths: usize, max_delay_tap: usize, max_doppler_tap: f64) -> Result<Self> {
        if paths == 0 {
            return Err(Error::InvalidParameter(
                "path count must be at least 1".into(),
            ));
        }
        if !(max_doppler_tap >= 0.0) || !max_doppler_tap.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "maximum Doppler tap must be finite and nonnegative, got {max_doppler_tap}"
            )));
        }
        Ok(Self {
            paths,
            max_delay_tap,
            max_doppler_tap,
        })
    }

    pub fn check_grid(&self, grid: &OtfsGrid) -> Result<()> {
        if self.max_delay_tap >= grid.size() {
            return Err(Error::InvalidPath(format!(
                "maximum delay tap {} must be below the frame size {}",
                self.max_delay_tap,
                grid.size()
            )));
        }
        Ok(())
    }

    fn draw_taps<R: Rng>(&self, rng: &mut R) -> (usize, f64) {
        let delay = rng.random_range(0..=self.max_delay_tap);
        let doppler = if self.max_doppler_tap > 0.0 {
            rng.random_range(-self.max_doppler_tap..=self.max_doppler_tap)
        } else {
            0.0
        };
        (delay, doppler)
    }

    /// Multipath communication channel.
    pub fn draw_paths<R: Rng>(&self, rng: &mut R) -> PathSet {
        let std = (0.5 / self.paths as f64).sqrt();
        let paths = (0..self.paths)
            .map(|_| {
                let (delay, doppler) = self.draw_taps(rng);
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                PathParams::new(Complex64::new(re * std, im * std), delay, doppler)
            })
            .collect();
        PathSet::new(paths).expect("at least one path")
    }

    /// Line-of-sight target echo with gain magnitude `gain` and uniform phase.
    pub fn draw_target<R: Rng>(&self, rng: &mut R, gain: f64) -> PathParams {
        let (delay, doppler) = self.draw_taps(rng);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        PathParams::new(Complex64::from_polar(gain, phase), delay, doppler)
    }
}

/// Unit of the parameter the CRB refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DopplerUnit {
    /// Doppler shift in Hz.
    Hertz,
    /// Normalized Doppler tap `k = N T ν`.
    #[default]
    Tap,
}

/// One channel realization: the communication paths and the sensing target.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: OtfsGrid,
    pub comm: PathSet,
    pub target: PathParams,
}

impl Scenario {
    pub fn draw<R: Rng>(
        grid: OtfsGrid,
        stats: &ChannelStatistics,
        target_gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        stats.check_grid(&grid)?;
        let comm = stats.draw_paths(rng);
        let target = stats.draw_target(rng, target_gain);
        Ok(Self { grid, comm, target })
    }

    pub fn comm_channel(&self) -> Result<DdChannel> {
        dd_channel(&self.comm, &self.grid)
    }

    pub fn derivative_channel(&self, unit: DopplerUnit) -> Result<DdChannel> {
        match unit {
            DopplerUnit::Hertz => doppler_derivative_channel(&self.target, &self.grid),
            DopplerUnit::Tap => doppler_tap_derivative_channel(&self.target, &self.grid),
        }
    }
}

/// Generator for realization `index` under `seed`; each index has its own
/// stream, so draws do not depend on evaluation order.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
