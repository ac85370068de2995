//! Channel-direction quantization.
//!
//! Three backends produce the same [`QuantizedCsi`] record:
//!
//! * [`Backend::Rvq`] draws a random codebook shared by all users and lets
//!   each user pick the codeword with the largest `|h̄ w^H|²`;
//! * [`Backend::CellApprox`] samples `(ρ² cos²θ, ρ² sin²θ)` from the
//!   spherical-cap cell model, under which the closed-form SINR laws are exact;
//! * [`Backend::Perfect`] feeds back the unquantized direction.
//!
//! `ĥ` is stored phase-aligned with the true direction, so `⟨h̄, ĥ⟩ = cosθ`
//! is real and nonnegative. A receiver knows its own channel and can undo
//! the common phase, so this costs nothing physically.

use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;

use crate::channel::{
    draw_channels_with, gamma_integer, gaussian_vector, isotropic_unit, ChannelSet, RngStream,
    SystemParams,
};
use crate::error::{Error, Result};
use crate::numerics::{conj_inner, ComplexVector, C64, DEGENERACY_TOL};

/// Largest codebook exponent accepted by [`generate_codebook`].
pub const MAX_CODEBOOK_BITS: u32 = 20;

/// `2^B` unit-norm codewords of length `n_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    bits: u32,
    words: Vec<ComplexVector>,
}

impl Codebook {
    pub fn new(bits: u32, words: Vec<ComplexVector>) -> Result<Self> {
        if bits > MAX_CODEBOOK_BITS {
            return Err(Error::Capacity { bits, limit: MAX_CODEBOOK_BITS });
        }
        if words.len() != 1usize << bits {
            return Err(Error::Dimension(format!(
                "codebook with B = {bits} needs {} words, got {}",
                1usize << bits,
                words.len()
            )));
        }
        let n = words[0].len();
        for (i, w) in words.iter().enumerate() {
            if w.len() != n {
                return Err(Error::Dimension(format!("codeword {i} has length {}", w.len())));
            }
            if (w.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("codeword {i} is not unit norm")));
            }
        }
        Ok(Self { bits, words })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn dimension(&self) -> usize {
        self.words[0].len()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[ComplexVector] {
        &self.words
    }

    /// Writes one row per codeword: index, then `re, im` of each entry.
    pub fn write_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        for j in 0..self.dimension() {
            header.push(format!("re{j}"));
            header.push(format!("im{j}"));
        }
        w.write_record(&header)?;
        for (i, word) in self.words.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            for z in word.iter() {
                rec.push(format!("{:e}", z.re));
                rec.push(format!("{:e}", z.im));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table produced by [`Codebook::write_table`].
    pub fn read_table<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let cols = r.headers()?.len();
        if cols < 3 || (cols - 1) % 2 != 0 {
            return Err(Error::Io(format!("codebook table has {cols} columns")));
        }
        let n = (cols - 1) / 2;
        let mut words = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let index: usize = parse_field(&rec, 0)?;
            if index != row {
                return Err(Error::Io(format!("row {row} carries index {index}")));
            }
            let entries = (0..n)
                .map(|j| Ok(C64::new(parse_field(&rec, 1 + 2 * j)?, parse_field(&rec, 2 + 2 * j)?)))
                .collect::<Result<Vec<_>>>()?;
            words.push(ComplexVector::new(entries)?);
        }
        if words.is_empty() || !words.len().is_power_of_two() {
            return Err(Error::Io(format!("{} codewords is not a power of two", words.len())));
        }
        let bits = words.len().trailing_zeros();
        Self::new(bits, words)
    }
}

fn parse_field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| Error::Io(format!("missing column {i}")))?;
    s.trim().parse().map_err(|_| Error::Io(format!("cannot parse {s:?}")))
}

/// Draws a random vector quantization codebook.
pub fn generate_codebook_with<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Result<Codebook> {
    let bits = params.feedback_bits;
    if bits > MAX_CODEBOOK_BITS {
        return Err(Error::Capacity { bits, limit: MAX_CODEBOOK_BITS });
    }
    let words = (0..1usize << bits).map(|_| isotropic_unit(rng, params.antennas)).collect();
    Ok(Codebook { bits, words })
}

pub fn generate_codebook(params: &SystemParams, stream: &RngStream) -> Result<Codebook> {
    generate_codebook_with(params, &mut stream.rng(0))
}

/// One user's feedback state.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedCsi {
    pub user: usize,
    /// Codeword index; `None` for the model-based backends.
    pub index: Option<usize>,
    /// Quantized direction `ĥ` (unit norm).
    pub h_hat: ComplexVector,
    /// `ρ² = ‖h‖²`.
    pub rho_sqr: f64,
    pub cos_sqr: f64,
    pub sin_sqr: f64,
    /// Quantization error direction `h̃` (unit norm, orthogonal to `ĥ`).
    pub h_tilde: ComplexVector,
}

impl QuantizedCsi {
    /// Builds a record from its parts, checking the geometric invariants.
    pub fn new(
        user: usize,
        h_hat: ComplexVector,
        rho_sqr: f64,
        cos_sqr: f64,
        h_tilde: ComplexVector,
    ) -> Result<Self> {
        if h_hat.len() != h_tilde.len() {
            return Err(Error::Dimension("ĥ and h̃ differ in length".into()));
        }
        if (h_hat.norm() - 1.0).abs() > 1e-10 || (h_tilde.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter("ĥ and h̃ must be unit norm".into()));
        }
        if conj_inner(&h_tilde, &h_hat)?.norm() > 1e-10 {
            return Err(Error::InvalidParameter("h̃ must be orthogonal to ĥ".into()));
        }
        if !(rho_sqr >= 0.0) || !rho_sqr.is_finite() {
            return Err(Error::InvalidParameter(format!("ρ² = {rho_sqr}")));
        }
        if !(0.0..=1.0).contains(&cos_sqr) {
            return Err(Error::InvalidParameter(format!("cos²θ = {cos_sqr}")));
        }
        Ok(Self { user, index: None, h_hat, rho_sqr, cos_sqr, sin_sqr: 1.0 - cos_sqr, h_tilde })
    }

    /// Feedback of an unquantized direction.
    pub fn perfect(user: usize, h: &ComplexVector) -> Result<Self> {
        let rho_sqr = h.norm_sqr();
        let h_hat = h.normalized()?;
        let h_tilde = fixed_orthogonal(&h_hat)?;
        Ok(Self { user, index: None, h_hat, rho_sqr, cos_sqr: 1.0, sin_sqr: 0.0, h_tilde })
    }

    pub fn rho(&self) -> f64 {
        self.rho_sqr.sqrt()
    }

    pub fn cos_theta(&self) -> f64 {
        self.cos_sqr.sqrt()
    }

    pub fn sin_theta(&self) -> f64 {
        self.sin_sqr.sqrt()
    }

    pub fn dimension(&self) -> usize {
        self.h_hat.len()
    }

    /// The channel direction `ĥ cosθ + h̃ sinθ`.
    pub fn direction(&self) -> ComplexVector {
        self.h_hat
            .scale_real(self.cos_theta())
            .axpy(C64::new(self.sin_theta(), 0.0), &self.h_tilde)
            .expect("ĥ and h̃ share a length")
    }

    /// The channel `h = ρ (ĥ cosθ + h̃ sinθ)`.
    pub fn channel(&self) -> ComplexVector {
        self.direction().scale_real(self.rho())
    }
}

/// The first canonical vector not parallel to `u`, orthogonalized against it.
fn fixed_orthogonal(u: &ComplexVector) -> Result<ComplexVector> {
    for i in 0..u.len() {
        let r = ComplexVector::basis(u.len(), i).project_out(std::slice::from_ref(u))?;
        if r.norm() > 1e-6 {
            return r.normalized();
        }
    }
    Err(Error::Dimension("no orthogonal complement in dimension 1".into()))
}

/// Quantizes one channel against a codebook. Ties go to the lowest index.
pub fn quantize(h: &ComplexVector, cb: &Codebook) -> Result<QuantizedCsi> {
    quantize_user(0, h, cb)
}

pub fn quantize_user(user: usize, h: &ComplexVector, cb: &Codebook) -> Result<QuantizedCsi> {
    if h.len() != cb.dimension() {
        return Err(Error::Dimension(format!(
            "channel length {} vs codebook dimension {}",
            h.len(),
            cb.dimension()
        )));
    }
    let rho_sqr = h.norm_sqr();
    if rho_sqr.sqrt() < DEGENERACY_TOL {
        return Err(Error::Degeneracy(format!("user {user} has a zero channel")));
    }
    let h_bar = h.scale_real(1.0 / rho_sqr.sqrt());
    let mut best = (0usize, -1.0f64, C64::new(0.0, 0.0));
    for (i, w) in cb.words().iter().enumerate() {
        let c = conj_inner(&h_bar, w)?;
        let g = c.norm_sqr();
        if g > best.1 {
            best = (i, g, c);
        }
    }
    let (index, _, c) = best;
    let mag = c.norm();
    let phase = if mag > 0.0 { c / mag } else { C64::new(1.0, 0.0) };
    let h_hat = cb.words()[index].scale(phase);
    let cos_sqr = mag.min(1.0).powi(2);
    let residual = h_bar.project_out(std::slice::from_ref(&h_hat))?;
    let (h_tilde, cos_sqr) = if residual.norm() < DEGENERACY_TOL {
        (fixed_orthogonal(&h_hat)?, 1.0)
    } else {
        (residual.normalized()?, cos_sqr)
    };
    Ok(QuantizedCsi { user, index: Some(index), h_hat, rho_sqr, cos_sqr, sin_sqr: 1.0 - cos_sqr, h_tilde })
}

/// One draw of `(ρ² cos²θ, ρ² sin²θ)` from the cell model:
/// `X ~ Gamma(1)`, `Y ~ Gamma(n_T − 1)`, returns `(X + (1−δ)Y, δY)`.
pub fn sample_cell_approx_with<R: Rng + ?Sized>(antennas: usize, delta: f64, rng: &mut R) -> (f64, f64) {
    let x = gamma_integer(rng, 1);
    let y = gamma_integer(rng, antennas - 1);
    (x + (1.0 - delta) * y, delta * y)
}

pub fn sample_cell_approx(params: &SystemParams, stream: &RngStream, trial: u64) -> (f64, f64) {
    sample_cell_approx_with(params.antennas, params.delta(), &mut stream.rng(trial))
}

/// The bit-independent part of a cell-model draw. Records for several
/// feedback rates built from one draw share `X`, `Y`, `ĥ` and `h̃`, so sweeps
/// over `B` are paired.
#[derive(Clone, Debug, PartialEq)]
pub struct CellDraw {
    pub x: f64,
    pub y: f64,
    pub h_hat: ComplexVector,
    pub h_tilde: ComplexVector,
}

impl CellDraw {
    pub fn sample<R: Rng + ?Sized>(antennas: usize, rng: &mut R) -> Self {
        let x = gamma_integer(rng, 1);
        let y = gamma_integer(rng, antennas - 1);
        let h_hat = isotropic_unit(rng, antennas);
        let h_tilde = loop {
            let g = gaussian_vector(rng, antennas)
                .project_out(std::slice::from_ref(&h_hat))
                .expect("same length");
            if let Ok(t) = g.normalized() {
                break t;
            }
        };
        Self { x, y, h_hat, h_tilde }
    }

    /// The record at cell parameter `δ`: `ρ²cos²θ = X + (1−δ)Y`, `ρ²sin²θ = δY`.
    pub fn csi(&self, user: usize, delta: f64) -> QuantizedCsi {
        let s = self.x + (1.0 - delta) * self.y;
        let rho_sqr = s + delta * self.y;
        let cos_sqr = if rho_sqr > 0.0 { s / rho_sqr } else { 1.0 };
        QuantizedCsi {
            user,
            index: None,
            h_hat: self.h_hat.clone(),
            rho_sqr,
            cos_sqr,
            sin_sqr: 1.0 - cos_sqr,
            h_tilde: self.h_tilde.clone(),
        }
    }
}

/// A full cell-model record: isotropic `ĥ`, `h̃` isotropic in `ĥ^⊥`.
pub fn cell_approx_csi<R: Rng + ?Sized>(user: usize, params: &SystemParams, rng: &mut R) -> QuantizedCsi {
    CellDraw::sample(params.antennas, rng).csi(user, params.delta())
}

/// How feedback is produced for a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Rvq,
    CellApprox,
    Perfect,
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rvq" => Ok(Self::Rvq),
            "cell-approx" => Ok(Self::CellApprox),
            "perfect" => Ok(Self::Perfect),
            other => Err(Error::InvalidParameter(format!("unknown backend {other:?}"))),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Rvq => "rvq",
            Self::CellApprox => "cell-approx",
            Self::Perfect => "perfect",
        })
    }
}

/// Quantizes a given channel set with a fresh codebook (RVQ) or directly
/// (perfect CSI).
pub fn quantize_channels<R: Rng + ?Sized>(
    params: &SystemParams,
    channels: &ChannelSet,
    backend: Backend,
    rng: &mut R,
) -> Result<Vec<QuantizedCsi>> {
    match backend {
        Backend::Rvq => {
            let cb = generate_codebook_with(params, rng)?;
            channels.channels.iter().enumerate().map(|(k, h)| quantize_user(k, h, &cb)).collect()
        }
        Backend::Perfect => {
            channels.channels.iter().enumerate().map(|(k, h)| QuantizedCsi::perfect(k, h)).collect()
        }
        Backend::CellApprox => Err(Error::InvalidParameter(
            "the cell model samples feedback directly and ignores drawn channels".into(),
        )),
    }
}

/// Feedback for all `K` users of one trial.
pub fn draw_feedback<R: Rng + ?Sized>(
    params: &SystemParams,
    backend: Backend,
    rng: &mut R,
) -> Result<Vec<QuantizedCsi>> {
    match backend {
        Backend::CellApprox => Ok((0..params.users).map(|k| cell_approx_csi(k, params, rng)).collect()),
        _ => {
            let channels = draw_channels_with(params, rng);
            quantize_channels(params, &channels, backend, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(bits: u32) -> SystemParams {
        SystemParams::new(10, 4, bits, 10.0, 16).unwrap()
    }

    #[test]
    fn codebook_shape() {
        let cb = generate_codebook(&params(8), &RngStream::new(1, 0)).unwrap();
        assert_eq!(cb.len(), 256);
        assert!(cb.words().iter().all(|w| (w.norm() - 1.0).abs() < 1e-12 && w.len() == 4));
        assert_eq!(cb, generate_codebook(&params(8), &RngStream::new(1, 0)).unwrap());
    }

    #[test]
    fn capacity_guard() {
        let r = generate_codebook(&params(21), &RngStream::new(1, 0));
        assert_eq!(r, Err(Error::Capacity { bits: 21, limit: MAX_CODEBOOK_BITS }));
    }

    #[test]
    fn exact_codeword_match() {
        let cb = generate_codebook(&params(4), &RngStream::new(3, 0)).unwrap();
        let h = cb.words()[5].scale(C64::new(0.0, 2.0));
        let q = quantize(&h, &cb).unwrap();
        assert_eq!(q.index, Some(5));
        assert_eq!(q.cos_sqr, 1.0);
        assert_eq!(q.sin_sqr, 0.0);
        assert!((q.h_tilde.norm() - 1.0).abs() < 1e-12);
        assert!(conj_inner(&q.h_tilde, &q.h_hat).unwrap().norm() < 1e-12);
        assert!((q.rho_sqr - 4.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let p = params(6);
        let mut rng = RngStream::new(9, 2).rng(0);
        let cb = generate_codebook_with(&p, &mut rng).unwrap();
        for _ in 0..200 {
            let h = gaussian_vector(&mut rng, 4);
            let q = quantize(&h, &cb).unwrap();
            assert!((q.cos_sqr + q.sin_sqr - 1.0).abs() == 0.0);
            assert!(conj_inner(&q.h_tilde, &q.h_hat).unwrap().norm() < 1e-10);
            let h_bar = h.normalized().unwrap();
            assert!(q.direction().sub(&h_bar).unwrap().norm() < 1e-10);
            assert!(q.channel().sub(&h).unwrap().norm() < 1e-10 * h.norm());
            // The chosen codeword really is the argmax.
            let best = cb
                .words()
                .iter()
                .map(|w| conj_inner(&h_bar, w).unwrap().norm_sqr())
                .fold(0.0, f64::max);
            assert!((best - q.cos_sqr).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_channel_is_rejected() {
        let cb = generate_codebook(&params(2), &RngStream::new(1, 0)).unwrap();
        assert!(matches!(quantize(&ComplexVector::zeros(4), &cb), Err(Error::Degeneracy(_))));
    }

    #[test]
    fn scale_invariance() {
        let p = params(5);
        let mut rng = RngStream::new(4, 4).rng(0);
        let cb = generate_codebook_with(&p, &mut rng).unwrap();
        for _ in 0..50 {
            let h = gaussian_vector(&mut rng, 4);
            let c = 0.1 + 10.0 * rng.gen::<f64>();
            let a = quantize(&h, &cb).unwrap();
            let b = quantize(&h.scale_real(c), &cb).unwrap();
            assert_eq!(a.index, b.index);
            assert!((a.cos_sqr - b.cos_sqr).abs() < 1e-12);
            assert!((b.rho_sqr / a.rho_sqr - c * c).abs() < 1e-10 * c * c);
        }
    }

    #[test]
    fn perfect_feedback_has_no_error() {
        let h = ComplexVector::from_real(&[0.0, 3.0, 4.0, 0.0]).unwrap();
        let q = QuantizedCsi::perfect(2, &h).unwrap();
        assert_eq!(q.sin_sqr, 0.0);
        assert!((q.rho_sqr - 25.0).abs() < 1e-12);
        assert!(q.channel().sub(&h).unwrap().norm() < 1e-12);
    }

    #[test]
    fn cell_record_is_consistent() {
        let p = params(8);
        let mut rng = RngStream::new(2, 2).rng(0);
        for k in 0..100 {
            let q = cell_approx_csi(k, &p, &mut rng);
            assert!((q.h_hat.norm() - 1.0).abs() < 1e-12);
            assert!(conj_inner(&q.h_tilde, &q.h_hat).unwrap().norm() < 1e-10);
            assert!(q.sin_sqr <= p.delta() + 1e-12);
            assert!((q.channel().norm_sqr() - q.rho_sqr).abs() < 1e-10 * q.rho_sqr);
        }
    }

    #[test]
    fn zero_delta_is_interference_free() {
        let mut rng = RngStream::new(2, 3).rng(0);
        for _ in 0..100 {
            let (s, i) = sample_cell_approx_with(4, 0.0, &mut rng);
            assert_eq!(i, 0.0);
            assert!(s > 0.0);
        }
    }

    #[test]
    fn table_roundtrip() {
        let cb = generate_codebook(&params(3), &RngStream::new(8, 0)).unwrap();
        let mut buf = Vec::new();
        cb.write_table(&mut buf).unwrap();
        let back = Codebook::read_table(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 8);
        for (a, b) in cb.words().iter().zip(back.words()) {
            assert!(a.sub(b).unwrap().norm() < 1e-14);
        }
        assert!(Codebook::read_table("index,re0,im0\n0,1,0\n1,0,1\n2,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn backend_names() {
        for b in [Backend::Rvq, Backend::CellApprox, Backend::Perfect] {
            assert_eq!(b.to_string().parse::<Backend>().unwrap(), b);
        }
        assert!("lloyd".parse::<Backend>().is_err());
    }
}
