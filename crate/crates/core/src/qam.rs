//! Gray-labelled rectangular QAM.
//!
//! Each axis carries a reflected Gray code. Orders with an even number of
//! bits are square; odd orders use a `2^ceil(b/2) x 2^floor(b/2)` grid
//! (8-QAM is 4x2). Labels put the in-phase bits first, MSB first.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits_i: u32,
    bits_q: u32,
    scale: f64,
    /// Indexed by label.
    points: Vec<Complex64>,
    alpha: f64,
    beta: f64,
}

#[inline]
fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "QAM order must be a power of two >= 4, got {order}"
            )));
        }
        let bits = order.trailing_zeros();
        let bits_i = bits.div_ceil(2);
        let bits_q = bits / 2;
        let (ni, nq) = (1usize << bits_i, 1usize << bits_q);
        let energy = ((ni * ni - 1) as f64 + (nq * nq - 1) as f64) / 3.0;
        let scale = 1.0 / energy.sqrt();

        let mut points = vec![Complex64::new(0.0, 0.0); order];
        for ii in 0..ni {
            for qi in 0..nq {
                let label = (gray(ii) << bits_q) | gray(qi);
                points[label] = Complex64::new(level(ii, ni), level(qi, nq)) * scale;
            }
        }

        let m = order as f64;
        Ok(Self {
            order,
            bits_i,
            bits_q,
            scale,
            points,
            alpha: (4.0 - 4.0 / m.sqrt()) / m.log2(),
            beta: 3.0 / (m - 1.0),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        (self.bits_i + self.bits_q) as usize
    }

    /// Points indexed by their Gray label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order as f64
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Maps bits (one `u8` per bit, 0 or 1) to symbols.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let bps = self.bits_per_symbol();
        if bits.len() % bps != 0 {
            return Err(Error::LengthMismatch {
                expected: bits.len().div_ceil(bps) * bps,
                got: bits.len(),
            });
        }
        Ok(bits
            .chunks_exact(bps)
            .map(|chunk| {
                let label = chunk
                    .iter()
                    .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
                self.points[label]
            })
            .collect())
    }

    /// Nearest-point hard decision; returns the Gray label.
    pub fn decide(&self, symbol: Complex64) -> usize {
        let ni = 1usize << self.bits_i;
        let nq = 1usize << self.bits_q;
        let ii = slice(symbol.re / self.scale, ni);
        let qi = slice(symbol.im / self.scale, nq);
        (gray(ii) << self.bits_q) | gray(qi)
    }

    /// Hard demapping of symbols to bits.
    pub fn demap_hard(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for &s in symbols {
            self.push_label_bits(self.decide(s), &mut out);
        }
        out
    }

    pub(crate) fn push_label_bits(&self, label: usize, out: &mut Vec<u8>) {
        let bps = self.bits_per_symbol();
        for b in (0..bps).rev() {
            out.push(((label >> b) & 1) as u8);
        }
    }
}

/// Amplitude `2i - (n - 1)` of level `i` on an `n`-level axis.
fn level(i: usize, n: usize) -> f64 {
    2.0 * i as f64 - (n as f64 - 1.0)
}

fn slice(amplitude: f64, n: usize) -> usize {
    let idx = ((amplitude + (n as f64 - 1.0)) / 2.0).round();
    idx.clamp(0.0, (n - 1) as f64) as usize
}
