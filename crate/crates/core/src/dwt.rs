//! Periodic orthogonal DWT (Mallat pyramid) with Daubechies extremal-phase filters.
//!
//! Alignment convention: one analysis step maps a length-`N` block `s` to
//!
//! ```text
//! approx[k] = Σ_i h[i] · s[(2k + i) mod N]
//! detail[k] = Σ_i g[i] · s[(2k + i) mod N],   g[i] = (-1)^i h[L-1-i]
//! ```
//!
//! and synthesis is the exact transpose. Filters longer than the block are
//! wrapped (periodized), which keeps every step orthogonal down to `N = 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daubechies extremal-phase scaling filter, 8 vanishing moments (16 taps).
const DAUB8: [f64; 16] = [
    0.054415842243104009955,
    0.31287159091429997066,
    0.67563073629728980681,
    0.58535468365420671277,
    -0.015829105256349305667,
    -0.28401554296154692652,
    0.00047248457391328277036,
    0.12874742662047845886,
    -0.01736930100180754617,
    -0.044088253930794751507,
    0.013981027917398281649,
    0.0087460940474057767164,
    -0.0048703529934515743104,
    -0.0003917403733769470463,
    0.00067544940645056936637,
    -0.00011747678412476953373,
];

/// Daubechies extremal-phase scaling filter, 10 vanishing moments (20 taps).
const DAUB10: [f64; 20] = [
    0.026670057900555553587,
    0.18817680007769148902,
    0.52720118893172558648,
    0.68845903945360356574,
    0.28117234366057746075,
    -0.24984642432731537942,
    -0.1959462743773770435,
    0.12736934033579326008,
    0.09305736460357235116,
    -0.071394147166397087145,
    -0.029457536821875812858,
    0.03321267405934100174,
    0.0036065535669561696554,
    -0.010733175483330575044,
    0.0013953517470529011658,
    0.0019924052951850561172,
    -0.00068585669495971162656,
    -0.00011646685512928545095,
    0.000093588670320069591334,
    -0.000013264202894521244812,
];

/// Names accepted by [`WaveletFilter::from_name`].
pub const FILTER_NAMES: [&str; 2] = ["daub8", "daub10"];

/// A quadrature-mirror filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    name: String,
    low_pass: Vec<f64>,
    high_pass: Vec<f64>,
}

impl WaveletFilter {
    /// Builds a filter from scaling taps and checks orthonormality.
    pub fn from_scaling(name: impl Into<String>, low_pass: Vec<f64>) -> Result<Self> {
        let l = low_pass.len();
        if l < 2 || l % 2 != 0 {
            return Err(Error::param(format!("filter needs an even tap count >= 2, got {l}")));
        }
        let high_pass = (0..l)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * low_pass[l - 1 - i])
            .collect();
        let filter = Self {
            name: name.into(),
            low_pass,
            high_pass,
        };
        filter.validate()?;
        Ok(filter)
    }

    pub fn daub8() -> Self {
        Self::from_scaling("daub8", DAUB8.to_vec()).expect("embedded daub8 taps are orthonormal")
    }

    pub fn daub10() -> Self {
        Self::from_scaling("daub10", DAUB10.to_vec()).expect("embedded daub10 taps are orthonormal")
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "daub8" | "db8" => Ok(Self::daub8()),
            "daub10" | "db10" => Ok(Self::daub10()),
            other => Err(Error::param(format!(
                "unknown wavelet '{other}' (expected one of {FILTER_NAMES:?})"
            ))),
        }
    }

    /// Unit energy, DC gain √2, and double-shift orthogonality.
    pub fn validate(&self) -> Result<()> {
        let h = &self.low_pass;
        let energy: f64 = h.iter().map(|x| x * x).sum();
        let sum: f64 = h.iter().sum();
        if (energy - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("{}: Σh² = {energy}", self.name)));
        }
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-12 {
            return Err(Error::param(format!("{}: Σh = {sum}", self.name)));
        }
        for shift in (2..h.len()).step_by(2) {
            let c: f64 = h.iter().zip(&h[shift..]).map(|(a, b)| a * b).sum();
            if c.abs() > 1e-12 {
                return Err(Error::param(format!("{}: shift-{shift} correlation {c}", self.name)));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn low_pass(&self) -> &[f64] {
        &self.low_pass
    }

    pub fn high_pass(&self) -> &[f64] {
        &self.high_pass
    }

    pub fn len(&self) -> usize {
        self.low_pass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low_pass.is_empty()
    }
}

/// Returns `J` with `n = 2^J`, or a length error.
pub fn dyadic_levels(n: usize) -> Result<usize> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Length(n));
    }
    Ok(n.trailing_zeros() as usize)
}

/// Multiresolution coefficients: scaling coefficients at level `J0` and
/// detail coefficients for levels `J0..J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPyramid {
    n: usize,
    j0: usize,
    coarse: Vec<f64>,
    /// `details[i]` holds level `j0 + i` (length `2^(j0+i)`).
    details: Vec<Vec<f64>>,
}

impl CoefficientPyramid {
    pub fn new(n: usize, j0: usize, coarse: Vec<f64>, details: Vec<Vec<f64>>) -> Result<Self> {
        let pyramid = Self {
            n,
            j0,
            coarse,
            details,
        };
        pyramid.check_shape()?;
        Ok(pyramid)
    }

    /// All-zero pyramid of the given shape.
    pub fn zeros(n: usize, j0: usize) -> Result<Self> {
        let levels = dyadic_levels(n)?;
        if j0 >= levels {
            return Err(Error::Level { j0, levels });
        }
        Ok(Self {
            n,
            j0,
            coarse: vec![0.0; 1 << j0],
            details: (j0..levels).map(|j| vec![0.0; 1 << j]).collect(),
        })
    }

    /// Splits a flat vector laid out as `[coarse, d_J0, d_J0+1, …, d_J-1]`.
    pub fn from_flat(flat: &[f64], j0: usize) -> Result<Self> {
        let n = flat.len();
        let levels = dyadic_levels(n)?;
        if j0 >= levels {
            return Err(Error::Level { j0, levels });
        }
        let coarse = flat[..1 << j0].to_vec();
        let details = (j0..levels).map(|j| flat[1 << j..2 << j].to_vec()).collect();
        Ok(Self {
            n,
            j0,
            coarse,
            details,
        })
    }

    /// Inverse of [`from_flat`](Self::from_flat).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        out.extend_from_slice(&self.coarse);
        for d in &self.details {
            out.extend_from_slice(d);
        }
        out
    }

    pub fn check_shape(&self) -> Result<()> {
        let levels = dyadic_levels(self.n).map_err(|_| Error::Structure(format!("n = {} is not dyadic", self.n)))?;
        if self.j0 >= levels {
            return Err(Error::Structure(format!("J0 = {} must be below J = {levels}", self.j0)));
        }
        if self.coarse.len() != 1 << self.j0 {
            return Err(Error::Structure(format!(
                "coarse part has {} entries, expected {}",
                self.coarse.len(),
                1usize << self.j0
            )));
        }
        if self.details.len() != levels - self.j0 {
            return Err(Error::Structure(format!(
                "{} detail levels stored, expected {}",
                self.details.len(),
                levels - self.j0
            )));
        }
        for (i, d) in self.details.iter().enumerate() {
            let j = self.j0 + i;
            if d.len() != 1 << j {
                return Err(Error::Structure(format!("level {j} has {} entries, expected {}", d.len(), 1usize << j)));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j0(&self) -> usize {
        self.j0
    }

    /// Total number of levels `J = log2 n`.
    pub fn levels(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    /// Detail level indices `J0..J`.
    pub fn detail_levels(&self) -> std::ops::Range<usize> {
        self.j0..self.levels()
    }

    pub fn coarse(&self) -> &[f64] {
        &self.coarse
    }

    pub fn coarse_mut(&mut self) -> &mut [f64] {
        &mut self.coarse
    }

    pub fn detail(&self, j: usize) -> Option<&[f64]> {
        j.checked_sub(self.j0)
            .and_then(|i| self.details.get(i))
            .map(Vec::as_slice)
    }

    pub fn detail_mut(&mut self, j: usize) -> Option<&mut [f64]> {
        j.checked_sub(self.j0)
            .and_then(|i| self.details.get_mut(i))
            .map(Vec::as_mut_slice)
    }

    /// Finest detail level `J - 1`.
    pub fn finest(&self) -> &[f64] {
        self.details.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// `(level, coefficients)` pairs, coarsest first.
    pub fn iter_details(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.details
            .iter()
            .enumerate()
            .map(move |(i, d)| (self.j0 + i, d.as_slice()))
    }

    /// All detail coefficients, coarsest level first.
    pub fn detail_coefficients(&self) -> Vec<f64> {
        self.details.iter().flatten().copied().collect()
    }

    pub fn detail_count(&self) -> usize {
        self.n - self.coarse.len()
    }

    /// Sum of squares of every coefficient.
    pub fn energy(&self) -> f64 {
        self.coarse.iter().chain(self.details.iter().flatten()).map(|x| x * x).sum()
    }
}

fn analysis_step(s: &[f64], filter: &WaveletFilter) -> (Vec<f64>, Vec<f64>) {
    let n = s.len();
    let half = n / 2;
    let h = filter.low_pass();
    let g = filter.high_pass();
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (i, (&hi, &gi)) in h.iter().zip(g).enumerate() {
            let x = s[(2 * k + i) % n];
            a += hi * x;
            d += gi * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], filter: &WaveletFilter) -> Vec<f64> {
    let half = approx.len();
    let n = 2 * half;
    let h = filter.low_pass();
    let g = filter.high_pass();
    let mut s = vec![0.0; n];
    for k in 0..half {
        let (a, d) = (approx[k], detail[k]);
        for (i, (&hi, &gi)) in h.iter().zip(g).enumerate() {
            s[(2 * k + i) % n] += hi * a + gi * d;
        }
    }
    s
}

/// Forward transform down to primary level `j0`.
pub fn forward(signal: &[f64], filter: &WaveletFilter, j0: usize) -> Result<CoefficientPyramid> {
    let n = signal.len();
    let levels = dyadic_levels(n)?;
    if j0 >= levels {
        return Err(Error::Level { j0, levels });
    }
    let mut details = vec![Vec::new(); levels - j0];
    let mut current = signal.to_vec();
    for j in (j0..levels).rev() {
        let (approx, detail) = analysis_step(&current, filter);
        details[j - j0] = detail;
        current = approx;
    }
    Ok(CoefficientPyramid {
        n,
        j0,
        coarse: current,
        details,
    })
}

/// Inverse transform; exact inverse of [`forward`] for the same filter.
pub fn inverse(pyramid: &CoefficientPyramid, filter: &WaveletFilter) -> Result<Vec<f64>> {
    pyramid.check_shape()?;
    let mut current = pyramid.coarse.clone();
    for detail in &pyramid.details {
        current = synthesis_step(&current, detail, filter);
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()
    }

    #[test]
    fn embedded_filters_satisfy_qmf_relations() {
        for f in [WaveletFilter::daub8(), WaveletFilter::daub10()] {
            let l = f.len();
            for i in 0..l {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(f.high_pass()[i], sign * f.low_pass()[l - 1 - i]);
            }
            // high-pass is orthogonal to constants and to the low-pass
            assert_abs_diff_eq!(f.high_pass().iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        }
        assert_eq!(WaveletFilter::daub8().len(), 16);
        assert_eq!(WaveletFilter::daub10().len(), 20);
    }

    #[test]
    fn bad_filter_rejected() {
        assert!(WaveletFilter::from_scaling("bad", vec![0.5, 0.5]).is_err());
        assert!(WaveletFilter::from_scaling("odd", vec![1.0]).is_err());
        assert!(WaveletFilter::from_name("haar9").is_err());
    }

    #[test]
    fn constant_signal_has_no_details() {
        for f in [WaveletFilter::daub8(), WaveletFilter::daub10()] {
            let y = vec![3.7; 256];
            let p = forward(&y, &f, 0).unwrap();
            for (_, d) in p.iter_details() {
                assert!(d.iter().all(|x| x.abs() < 1e-10));
            }
            assert_abs_diff_eq!(p.coarse()[0], 3.7 * 16.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let f = WaveletFilter::daub8();
        let y = random_signal(512, 1);
        for j0 in [0, 3, 8] {
            let p = forward(&y, &f, j0).unwrap();
            let back = inverse(&p, &f).unwrap();
            let err = y.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "round trip error {err}");
            let e: f64 = y.iter().map(|x| x * x).sum();
            assert!((e - p.energy()).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_pyramid_inverts_to_zero() {
        let p = CoefficientPyramid::zeros(64, 2).unwrap();
        let y = inverse(&p, &WaveletFilter::daub10()).unwrap();
        assert_eq!(y, vec![0.0; 64]);
    }

    #[test]
    fn unit_detail_is_unit_norm_basis_vector() {
        let f = WaveletFilter::daub8();
        let mut p = CoefficientPyramid::zeros(128, 0).unwrap();
        p.detail_mut(4).unwrap()[5] = 1.0;
        let psi = inverse(&p, &f).unwrap();
        let norm: f64 = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
        let q = forward(&psi, &f, 0).unwrap();
        let flat_p = p.to_flat();
        let flat_q = q.to_flat();
        for (a, b) in flat_p.iter().zip(&flat_q) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn length_and_level_errors() {
        let f = WaveletFilter::daub8();
        assert!(matches!(forward(&[1.0; 100], &f, 0), Err(Error::Length(100))));
        assert!(matches!(forward(&[1.0; 1], &f, 0), Err(Error::Length(1))));
        assert!(matches!(forward(&[1.0; 64], &f, 6), Err(Error::Level { j0: 6, levels: 6 })));
    }

    #[test]
    fn inconsistent_pyramid_rejected() {
        let bad = CoefficientPyramid {
            n: 16,
            j0: 1,
            coarse: vec![0.0; 2],
            details: vec![vec![0.0; 2], vec![0.0; 4], vec![0.0; 7]],
        };
        assert!(matches!(inverse(&bad, &WaveletFilter::daub8()), Err(Error::Structure(_))));
        assert!(CoefficientPyramid::new(16, 1, vec![0.0; 3], vec![]).is_err());
    }

    #[test]
    fn flat_layout_round_trips() {
        let y = random_signal(64, 9);
        let p = CoefficientPyramid::from_flat(&y, 2).unwrap();
        assert_eq!(p.coarse().len(), 4);
        assert_eq!(p.detail(2).unwrap().len(), 4);
        assert_eq!(p.detail(5).unwrap().len(), 32);
        assert_eq!(p.finest(), &y[32..]);
        assert_eq!(p.to_flat(), y);
        assert_eq!(p.detail_count(), 60);
    }
}
