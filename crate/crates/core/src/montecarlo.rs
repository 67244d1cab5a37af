//! Link-level BER simulation: random bits, Gray-mapped QAM, transmission
//! through the DD channel with AWGN, linear equalization and hard decisions.
//!
//! Block `b` draws everything from its own ChaCha stream `(seed, b)`, so
//! results do not depend on how blocks are scheduled across threads.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hpd_inverse, CMatrix, CVector};
use crate::metrics::{Equalizer, NoiseModel};
use crate::otfs::{otfs_demodulate, otfs_modulate, to_delay_doppler, DdChannel, OtfsGrid};
use crate::qam::QamConstellation;
use crate::scenario::stream_rng;

/// Blocks evaluated per parallel batch before the early-stop check.
const BATCH: u64 = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub blocks: u64,
    pub seed: u64,
    pub equalizer: Equalizer,
    pub constellation: QamConstellation,
    pub noise: NoiseModel,
    /// Stop after the block in which the running bit-error count reaches
    /// this value.
    pub target_error_events: Option<u64>,
}

impl SimConfig {
    pub fn new(blocks: u64, seed: u64, constellation: QamConstellation, noise: NoiseModel) -> Self {
        Self {
            blocks,
            seed,
            equalizer: Equalizer::ZeroForcing,
            constellation,
            noise,
            target_error_events: Some(400),
        }
    }

    pub fn with_equalizer(mut self, equalizer: Equalizer) -> Self {
        self.equalizer = equalizer;
        self
    }

    pub fn with_target_errors(mut self, target: Option<u64>) -> Self {
        self.target_error_events = target;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub bit_errors: u64,
    pub bits_total: u64,
    pub blocks: u64,
    pub ber: f64,
    /// Normal-approximation 95% half-width, `1.96 √(p(1−p)/n)`.
    pub ci95_halfwidth: f64,
}

impl BerEstimate {
    fn new(bit_errors: u64, bits_total: u64, blocks: u64) -> Self {
        let ber = if bits_total == 0 {
            0.0
        } else {
            bit_errors as f64 / bits_total as f64
        };
        let ci95_halfwidth = if bits_total == 0 {
            0.0
        } else {
            1.96 * (ber * (1.0 - ber) / bits_total as f64).sqrt()
        };
        Self {
            bit_errors,
            bits_total,
            blocks,
            ber,
            ci95_halfwidth,
        }
    }
}

/// `(σ_c² I + W^H H^H H W)⁻¹ W^H H^H`.
pub fn mmse_equalizer(h_c: &DdChannel, precoder: &CMatrix, noise: &NoiseModel) -> Result<CMatrix> {
    let hw = h_c.matrix() * precoder;
    let n = hw.ncols();
    let regularized =
        hw.adjoint() * &hw + CMatrix::identity(n, n) * Complex64::new(noise.sigma_c_sq(), 0.0);
    Ok(hpd_inverse(&regularized, "MMSE equalizer")? * hw.adjoint())
}

/// `(H W)⁻¹`.
pub fn zf_equalizer(h_c: &DdChannel, precoder: &CMatrix) -> Result<CMatrix> {
    (h_c.matrix() * precoder)
        .try_inverse()
        .ok_or(Error::SingularMatrix("effective channel H_c W"))
}

fn equalizer_matrix(h_c: &DdChannel, precoder: &CMatrix, sim: &SimConfig) -> Result<CMatrix> {
    match sim.equalizer {
        Equalizer::ZeroForcing => zf_equalizer(h_c, precoder),
        Equalizer::Mmse => mmse_equalizer(h_c, precoder, &sim.noise),
    }
}

fn check_inputs(h_c: &DdChannel, precoder: &CMatrix, sim: &SimConfig) -> Result<()> {
    if sim.blocks == 0 {
        return Err(Error::InvalidParameter(
            "simulation needs at least one block".into(),
        ));
    }
    let n = h_c.size();
    if precoder.nrows() != n || precoder.ncols() != n {
        return Err(Error::InvalidDimension(format!(
            "precoder is {}x{}, channel is {n}x{n}",
            precoder.nrows(),
            precoder.ncols()
        )));
    }
    Ok(())
}

/// Payload and noise of one block.
struct BlockDraw {
    bits: Vec<u8>,
    symbols: CVector,
    noise: CVector,
}

fn draw_block(rng: &mut ChaCha8Rng, size: usize, sim: &SimConfig) -> Result<BlockDraw> {
    let bps = sim.constellation.bits_per_symbol();
    let bits: Vec<u8> = (0..size * bps)
        .map(|_| rng.random::<bool>() as u8)
        .collect();
    let symbols = CVector::from_vec(sim.constellation.map(&bits)?);
    let std = (0.5 * sim.noise.sigma_c_sq()).sqrt();
    let noise = CVector::from_fn(size, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * std, im * std)
    });
    Ok(BlockDraw {
        bits,
        symbols,
        noise,
    })
}

fn count_errors(
    sent: &[u8],
    estimate: &DVector<Complex64>,
    constellation: &QamConstellation,
) -> u64 {
    let received = constellation.demap_hard(estimate.as_slice());
    sent.iter().zip(&received).filter(|(a, b)| a != b).count() as u64
}

/// Runs blocks in parallel batches and applies the early stop in block
/// order, so the result equals a sequential run.
fn run_blocks(
    sim: &SimConfig,
    bits_per_block: u64,
    block: impl Fn(u64) -> Result<u64> + Sync,
) -> Result<BerEstimate> {
    let mut errors = 0u64;
    let mut done = 0u64;
    while done < sim.blocks {
        let end = (done + BATCH).min(sim.blocks);
        let counts: Vec<u64> = (done..end)
            .into_par_iter()
            .map(&block)
            .collect::<Result<_>>()?;
        for c in counts {
            errors += c;
            done += 1;
            if sim.target_error_events.is_some_and(|t| errors >= t) {
                return Ok(BerEstimate::new(errors, done * bits_per_block, done));
            }
        }
    }
    Ok(BerEstimate::new(errors, done * bits_per_block, done))
}

/// Simulates `y = H_c W d + n` directly in the DD domain.
pub fn simulate_ber(h_c: &DdChannel, precoder: &CMatrix, sim: &SimConfig) -> Result<BerEstimate> {
    check_inputs(h_c, precoder, sim)?;
    let n = h_c.size();
    let effective = h_c.matrix() * precoder;
    let q = equalizer_matrix(h_c, precoder, sim)?;
    let bits_per_block = (n * sim.constellation.bits_per_symbol()) as u64;
    run_blocks(sim, bits_per_block, |b| {
        let mut rng = stream_rng(sim.seed, b);
        let draw = draw_block(&mut rng, n, sim)?;
        let y = &effective * &draw.symbols + &draw.noise;
        Ok(count_errors(&draw.bits, &(&q * y), &sim.constellation))
    })
}

/// Same link through the time-domain chain: modulate `W d`, apply `H_T`,
/// add noise in the time domain, demodulate.
pub fn simulate_ber_time_domain(
    h_time: &CMatrix,
    grid: &OtfsGrid,
    precoder: &CMatrix,
    sim: &SimConfig,
) -> Result<BerEstimate> {
    let h_dd = DdChannel::new(to_delay_doppler(h_time, grid), *grid)?;
    check_inputs(&h_dd, precoder, sim)?;
    let n = grid.size();
    let q = equalizer_matrix(&h_dd, precoder, sim)?;
    let bits_per_block = (n * sim.constellation.bits_per_symbol()) as u64;
    run_blocks(sim, bits_per_block, |b| {
        let mut rng = stream_rng(sim.seed, b);
        let draw = draw_block(&mut rng, n, sim)?;
        let s = otfs_modulate(&(precoder * &draw.symbols), grid)?;
        let r = h_time * s + &draw.noise;
        let y = otfs_demodulate(&r, grid)?;
        Ok(count_errors(&draw.bits, &(&q * y), &sim.constellation))
    })
}
