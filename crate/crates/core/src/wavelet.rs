//! Periodic orthogonal discrete wavelet transform with Daubechies filters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::DAUBECHIES;

pub const MAX_VANISHING_MOMENTS: usize = 20;

/// A dyadic-length vector of finite samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Shape(format!(
                "signal length {n} is not a power of two >= 2"
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Shape(format!("sample {i} is not finite")));
        }
        Ok(Self(samples))
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `J` such that the length is `2^J`.
    pub fn depth(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }
}

impl TryFrom<Vec<f64>> for Signal {
    type Error = Error;

    fn try_from(samples: Vec<f64>) -> Result<Self> {
        Signal::new(samples)
    }
}

impl From<Signal> for Vec<f64> {
    fn from(signal: Signal) -> Self {
        signal.0
    }
}

/// Orthonormal lowpass filter plus its quadrature-mirror highpass.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
    vanishing_moments: usize,
}

impl WaveletFilter {
    /// Extremal-phase Daubechies filter with `vanishing_moments` (1 = Haar).
    pub fn daubechies(vanishing_moments: usize) -> Result<Self> {
        if !(1..=MAX_VANISHING_MOMENTS).contains(&vanishing_moments) {
            return Err(Error::UnsupportedFilter(vanishing_moments));
        }
        let lowpass = DAUBECHIES[vanishing_moments - 1].to_vec();
        let filter = Self::from_lowpass(lowpass, vanishing_moments)?;
        Ok(filter)
    }

    /// Wraps custom lowpass taps after checking the orthonormality conditions.
    pub fn from_lowpass(lowpass: Vec<f64>, vanishing_moments: usize) -> Result<Self> {
        if lowpass.len() != 2 * vanishing_moments {
            return Err(Error::Argument(format!(
                "{} taps given for {} vanishing moments",
                lowpass.len(),
                vanishing_moments
            )));
        }
        let sum: f64 = lowpass.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-10 {
            return Err(Error::Argument(format!(
                "lowpass taps sum to {sum}, expected sqrt(2)"
            )));
        }
        let worst = orthogonality_defect(&lowpass);
        if worst > 1e-10 {
            return Err(Error::Argument(format!(
                "lowpass taps violate orthogonality by {worst:e}"
            )));
        }
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                if k % 2 == 0 {
                    lowpass[len - 1 - k]
                } else {
                    -lowpass[len - 1 - k]
                }
            })
            .collect();
        Ok(Self {
            lowpass,
            highpass,
            vanishing_moments,
        })
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

/// `max_l |Σ_k h_k h_{k+2l} - δ_{l0}|`.
pub fn orthogonality_defect(taps: &[f64]) -> f64 {
    let len = taps.len();
    (0..len.div_ceil(2))
        .map(|l| {
            let dot: f64 = (0..len.saturating_sub(2 * l))
                .map(|k| taps[k] * taps[k + 2 * l])
                .sum();
            (dot - if l == 0 { 1.0 } else { 0.0 }).abs()
        })
        .fold(0.0, f64::max)
}

/// Scaling coefficients at level `J0` plus detail vectors for `J0 <= j < J`.
///
/// Level `j` holds `2^j` detail coefficients; `J - 1` is the finest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    scaling: Vec<f64>,
    details: Vec<Vec<f64>>,
    depth: usize,
    primary_level: usize,
}

impl WaveletDecomposition {
    /// Assembles a decomposition; `details[i]` is level `primary_level + i`.
    pub fn from_parts(
        scaling: Vec<f64>,
        details: Vec<Vec<f64>>,
        primary_level: usize,
    ) -> Result<Self> {
        if scaling.len() != 1 << primary_level {
            return Err(Error::Shape(format!(
                "{} scaling coefficients at level {primary_level}, expected {}",
                scaling.len(),
                1usize << primary_level
            )));
        }
        if details.is_empty() {
            return Err(Error::Shape("no detail levels".into()));
        }
        for (i, level) in details.iter().enumerate() {
            let j = primary_level + i;
            if level.len() != 1 << j {
                return Err(Error::Shape(format!(
                    "detail level {j} has {} coefficients, expected {}",
                    level.len(),
                    1usize << j
                )));
            }
        }
        let depth = primary_level + details.len();
        Ok(Self {
            scaling,
            details,
            depth,
            primary_level,
        })
    }

    /// All-zero decomposition of a length-`2^depth` signal.
    pub fn zeros(depth: usize, primary_level: usize) -> Result<Self> {
        if primary_level >= depth {
            return Err(Error::Level(format!(
                "primary level {primary_level} must be below depth {depth}"
            )));
        }
        let details = (primary_level..depth).map(|j| vec![0.0; 1 << j]).collect();
        Self::from_parts(vec![0.0; 1 << primary_level], details, primary_level)
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn primary_level(&self) -> usize {
        self.primary_level
    }

    pub fn finest_level(&self) -> usize {
        self.depth - 1
    }

    pub fn detail(&self, level: usize) -> Option<&[f64]> {
        level
            .checked_sub(self.primary_level)
            .and_then(|i| self.details.get(i))
            .map(Vec::as_slice)
    }

    pub fn detail_mut(&mut self, level: usize) -> Option<&mut [f64]> {
        level
            .checked_sub(self.primary_level)
            .and_then(|i| self.details.get_mut(i))
            .map(Vec::as_mut_slice)
    }

    /// `(j, d_j)` from coarsest to finest.
    pub fn levels(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.details
            .iter()
            .enumerate()
            .map(|(i, d)| (self.primary_level + i, d.as_slice()))
    }

    pub fn coefficient_count(&self) -> usize {
        self.scaling.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn energy(&self) -> f64 {
        self.scaling
            .iter()
            .chain(self.details.iter().flatten())
            .map(|c| c * c)
            .sum()
    }
}

/// Periodic pyramid transform down to `primary_level`.
pub fn dwt(
    signal: &Signal,
    filter: &WaveletFilter,
    primary_level: usize,
) -> Result<WaveletDecomposition> {
    let depth = signal.depth();
    if primary_level >= depth {
        return Err(Error::Level(format!(
            "primary level {primary_level} must be below signal depth {depth}"
        )));
    }
    let mut approx = signal.samples().to_vec();
    let mut details = Vec::with_capacity(depth - primary_level);
    for _ in primary_level..depth {
        let (coarse, detail) = analysis_step(&approx, filter);
        details.push(detail);
        approx = coarse;
    }
    details.reverse();
    WaveletDecomposition::from_parts(approx, details, primary_level)
}

/// Inverse of [`dwt`] for the same filter.
pub fn idwt(decomp: &WaveletDecomposition, filter: &WaveletFilter) -> Result<Signal> {
    let mut approx = decomp.scaling.clone();
    for (j, detail) in decomp.levels() {
        if detail.len() != approx.len() {
            return Err(Error::Shape(format!(
                "level {j}: {} detail coefficients against {} scaling coefficients",
                detail.len(),
                approx.len()
            )));
        }
        approx = synthesis_step(&approx, detail, filter);
    }
    Signal::new(approx)
}

fn analysis_step(input: &[f64], filter: &WaveletFilter) -> (Vec<f64>, Vec<f64>) {
    let n = input.len();
    let half = n / 2;
    let (h, g) = (filter.lowpass(), filter.highpass());
    let mut coarse = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut s, mut d) = (0.0, 0.0);
        for (l, (hl, gl)) in h.iter().zip(g).enumerate() {
            let x = input[(2 * k + l) % n];
            s += hl * x;
            d += gl * x;
        }
        coarse[k] = s;
        detail[k] = d;
    }
    (coarse, detail)
}

fn synthesis_step(coarse: &[f64], detail: &[f64], filter: &WaveletFilter) -> Vec<f64> {
    let n = 2 * coarse.len();
    let (h, g) = (filter.lowpass(), filter.highpass());
    let mut out = vec![0.0; n];
    for (k, (s, d)) in coarse.iter().zip(detail).enumerate() {
        for (l, (hl, gl)) in h.iter().zip(g).enumerate() {
            out[(2 * k + l) % n] += hl * s + gl * d;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn lcg_signal(n: usize, seed: u64) -> Signal {
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let samples = (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        Signal::new(samples).unwrap()
    }

    #[test]
    fn haar_is_first_daubechies_filter() {
        let f = WaveletFilter::daubechies(1).unwrap();
        assert_eq!(f.lowpass(), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    }

    #[test]
    fn every_table_satisfies_filter_invariants() {
        for n in 1..=MAX_VANISHING_MOMENTS {
            let f = WaveletFilter::daubechies(n).unwrap();
            assert_eq!(f.len(), 2 * n);
            let sum: f64 = f.lowpass().iter().sum();
            assert!((sum - SQRT_2).abs() < 1e-10, "N={n}");
            assert!(orthogonality_defect(f.lowpass()) < 1e-10, "N={n}");
        }
    }

    #[test]
    fn highpass_annihilates_low_degree_monomials() {
        // Σ_k g_k k^p = 0 for p < N, checked in scaled form to tame growth.
        for n in [2, 4, 10] {
            let f = WaveletFilter::daubechies(n).unwrap();
            let len = f.len() as f64;
            for p in 0..n {
                let moment: f64 = f
                    .highpass()
                    .iter()
                    .enumerate()
                    .map(|(k, g)| g * (k as f64 / len).powi(p as i32))
                    .sum();
                assert!(moment.abs() < 1e-8, "N={n} p={p} moment={moment}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range_filters() {
        assert!(matches!(
            WaveletFilter::daubechies(0),
            Err(Error::UnsupportedFilter(0))
        ));
        assert!(matches!(
            WaveletFilter::daubechies(21),
            Err(Error::UnsupportedFilter(21))
        ));
    }

    #[test]
    fn haar_hand_computed_step() {
        let f = WaveletFilter::daubechies(1).unwrap();
        let y = Signal::new(vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let d = dwt(&y, &f, 1).unwrap();
        assert_eq!(d.detail(1).unwrap(), &[0.0, 0.0]);
        let s = d.scaling();
        assert!((s[0] - SQRT_2).abs() < 1e-15 && (s[1] + SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn constant_signal_has_no_detail() {
        for n in [1, 4, 10] {
            let f = WaveletFilter::daubechies(n).unwrap();
            let d = dwt(&Signal::new(vec![3.5; 256]).unwrap(), &f, 2).unwrap();
            for (_, level) in d.levels() {
                assert!(level.iter().all(|c| c.abs() < 1e-10), "N={n}");
            }
        }
    }

    #[test]
    fn shapes_follow_levels() {
        let f = WaveletFilter::daubechies(4).unwrap();
        let d = dwt(&lcg_signal(512, 1), &f, 3).unwrap();
        assert_eq!(d.scaling().len(), 8);
        for (j, level) in d.levels() {
            assert_eq!(level.len(), 1 << j);
        }
        assert_eq!(d.coefficient_count(), 512);
        assert_eq!(d.finest_level(), 8);
    }

    #[test]
    fn level_errors() {
        let f = WaveletFilter::daubechies(2).unwrap();
        assert!(matches!(
            dwt(&lcg_signal(16, 2), &f, 4),
            Err(Error::Level(_))
        ));
        assert!(matches!(Signal::new(vec![0.0; 24]), Err(Error::Shape(_))));
        assert!(matches!(Signal::new(vec![1.0]), Err(Error::Shape(_))));
        assert!(matches!(
            Signal::new(vec![1.0, f64::NAN]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_decomposition_inverts_to_zero() {
        let f = WaveletFilter::daubechies(10).unwrap();
        let z = WaveletDecomposition::zeros(10, 3).unwrap();
        assert!(idwt(&z, &f).unwrap().samples().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn malformed_parts_are_rejected() {
        assert!(WaveletDecomposition::from_parts(vec![0.0; 2], vec![vec![0.0; 3]], 1).is_err());
        assert!(WaveletDecomposition::from_parts(vec![0.0; 3], vec![vec![0.0; 4]], 2).is_err());
    }

    #[test]
    fn round_trip_on_1024_samples() {
        let f = WaveletFilter::daubechies(10).unwrap();
        let y = lcg_signal(1024, 7);
        let back = idwt(&dwt(&y, &f, 3).unwrap(), &f).unwrap();
        let err = y
            .samples()
            .iter()
            .zip(back.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn inverse_preserves_norm_of_arbitrary_coefficients() {
        let f = WaveletFilter::daubechies(6).unwrap();
        for seed in 0..5 {
            let flat = lcg_signal(256, seed).into_samples();
            let mut details = Vec::new();
            let mut offset = 4;
            for j in 2..8 {
                details.push(flat[offset..offset + (1 << j)].to_vec());
                offset += 1 << j;
            }
            let c = WaveletDecomposition::from_parts(flat[..4].to_vec(), details, 2).unwrap();
            let y = idwt(&c, &f).unwrap();
            let ey: f64 = y.samples().iter().map(|v| v * v).sum();
            assert!((ey.sqrt() - c.energy().sqrt()).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn parseval_and_reconstruction(seed in any::<u64>(), depth in 1usize..11, n in 1usize..=20, j0_frac in 0.0f64..1.0) {
            let f = WaveletFilter::daubechies(n).unwrap();
            let y = lcg_signal(1 << depth, seed);
            let j0 = ((depth as f64) * j0_frac) as usize % depth;
            let d = dwt(&y, &f, j0).unwrap();
            let ey: f64 = y.samples().iter().map(|v| v * v).sum();
            prop_assert!((ey - d.energy()).abs() / ey < 1e-10);
            let back = idwt(&d, &f).unwrap();
            for (a, b) in y.samples().iter().zip(back.samples()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn transform_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let f = WaveletFilter::daubechies(10).unwrap();
            let y1 = lcg_signal(128, s1);
            let y2 = lcg_signal(128, s2);
            let mix = Signal::new(y1.samples().iter().zip(y2.samples()).map(|(u, v)| a * u + b * v).collect()).unwrap();
            let (d1, d2, dm) = (dwt(&y1, &f, 2).unwrap(), dwt(&y2, &f, 2).unwrap(), dwt(&mix, &f, 2).unwrap());
            for ((j, l1), (_, l2)) in d1.levels().zip(d2.levels()) {
                for ((u, v), w) in l1.iter().zip(l2).zip(dm.detail(j).unwrap()) {
                    prop_assert!((a * u + b * v - w).abs() < 1e-10);
                }
            }
        }
    }
}
