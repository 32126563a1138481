//! Correlated heavy-tailed AR(p) clutter-plus-noise: generation, spectral
//! density, and the single-snapshot banded covariance estimator.
//!
//! The process is `c_n = Σ_{i=1..p} ρ_i c_{n−i} + w_n` with circular complex
//! t-distributed innovations realized as a Gaussian scale mixture: a complex
//! Gaussian draw multiplied by an inverse-gamma-distributed power texture.
//! The texture scale is chosen so that `E|w|² = σ_w²` exactly, which makes
//! the marginal variance of the process equal the integral of its spectral
//! density `S(ν) = σ_w²·|1 − Σ ρ_n e^{−j2πνn}|^{−2}` over one period.

use crate::error::{Error, Result};
use crate::C64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use std::f64::consts::TAU;

/// AR order, complex tap vector, and t-innovation shape/scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSpec {
    taps: Vec<C64>,
    mu: f64,
    sigma2: f64,
}

impl DisturbanceSpec {
    /// Validates the shape parameter and the stationarity of the taps.
    pub fn new(taps: Vec<C64>, mu: f64, sigma2: f64) -> Result<Self> {
        if !(mu > 1.0) {
            return Err(Error::invalid(format!(
                "shape parameter must satisfy mu > 1 (finite variance), got {mu}"
            )));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::invalid("innovation power sigma2 must be positive"));
        }
        let r = max_root_modulus(&taps);
        if r >= 1.0 - 1e-9 {
            return Err(Error::invalid(format!(
                "AR taps are not stationary: characteristic root modulus {r:.6} >= 1"
            )));
        }
        Ok(DisturbanceSpec { taps, mu, sigma2 })
    }

    /// Builds the taps from pole locations `mag·e^{j·2π·cycles}` by expanding
    /// `Π_i (1 − p_i z^{−1}) = 1 − Σ ρ_n z^{−n}`. Pole magnitudes must be < 1.
    pub fn from_poles(poles: &[(f64, f64)], mu: f64, sigma2: f64) -> Result<Self> {
        for &(mag, _) in poles {
            if !(0.0..1.0).contains(&mag) {
                return Err(Error::invalid(format!(
                    "pole magnitude {mag} outside [0, 1)"
                )));
            }
        }
        // Convolve the monic factors (1, −p_i); taps are the negated tail.
        let mut poly = vec![C64::new(1.0, 0.0)];
        for &(mag, cycles) in poles {
            let p = C64::from_polar(mag, TAU * cycles);
            let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
            for (k, &coef) in poly.iter().enumerate() {
                next[k] += coef;
                next[k + 1] -= coef * p;
            }
            poly = next;
        }
        let taps = poly[1..].iter().map(|&v| -v).collect();
        DisturbanceSpec::new(taps, mu, sigma2)
    }

    /// White innovations (AR order zero).
    pub fn white(mu: f64, sigma2: f64) -> Result<Self> {
        DisturbanceSpec::new(Vec::new(), mu, sigma2)
    }

    pub fn order(&self) -> usize {
        self.taps.len()
    }

    pub fn taps(&self) -> &[C64] {
        &self.taps
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Derived scale parameter ξ = μ/(σ_w²(μ−1)) reported alongside the
    /// shape; the sampler itself is parameterized so that E|w|² = σ_w².
    pub fn xi(&self) -> f64 {
        self.mu / (self.sigma2 * (self.mu - 1.0))
    }

    /// Default number of discarded warm-up samples.
    pub const DEFAULT_BURN_IN: usize = 1000;

    /// Spectral density `S(ν) = σ_w²·|1 − Σ ρ_n e^{−j2πνn}|^{−2}`.
    pub fn psd(&self, nu: f64) -> f64 {
        let mut denom = C64::new(1.0, 0.0);
        for (n, tap) in self.taps.iter().enumerate() {
            denom -= tap * C64::from_polar(1.0, -TAU * nu * (n + 1) as f64);
        }
        self.sigma2 / denom.norm_sqr()
    }

    /// Marginal variance `E|c_n|² = ∫_{−1/2}^{1/2} S(ν) dν` by composite
    /// Simpson quadrature.
    pub fn variance(&self) -> f64 {
        let m = 1 << 15;
        let h = 1.0 / m as f64;
        let mut acc = self.psd(-0.5) + self.psd(0.5);
        for i in 1..m {
            let nu = -0.5 + i as f64 * h;
            acc += self.psd(nu) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    /// One circular complex t-distributed innovation draw.
    pub fn sample_innovation<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        // Inverse-gamma texture with scale σ_w²(μ−1) so that E[τ] = σ_w².
        let gamma = Gamma::new(self.mu, 1.0).expect("mu > 1 validated");
        self.draw(rng, &gamma)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, gamma: &Gamma<f64>) -> C64 {
        let g: f64 = gamma.sample(rng);
        let tau = self.sigma2 * (self.mu - 1.0) / g;
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let s = (tau * 0.5).sqrt();
        C64::new(re * s, im * s)
    }

    /// `n` consecutive samples of the stationary recursion after discarding
    /// `burn_in` warm-up samples (must be at least 10× the AR order).
    pub fn generate<R: Rng + ?Sized>(
        &self,
        n: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> Result<Vec<C64>> {
        if burn_in < 10 * self.order() {
            return Err(Error::invalid(format!(
                "burn_in {burn_in} below 10x the AR order {}",
                self.order()
            )));
        }
        let gamma = Gamma::new(self.mu, 1.0).expect("mu > 1 validated");
        let p = self.order();
        let mut window = vec![C64::new(0.0, 0.0); p];
        let mut out = Vec::with_capacity(n);
        for step in 0..burn_in + n {
            let mut c = self.draw(rng, &gamma);
            for (i, tap) in self.taps.iter().enumerate() {
                c += tap * window[i];
            }
            if p > 0 {
                window.rotate_right(1);
                window[0] = c;
            }
            if step >= burn_in {
                out.push(c);
            }
        }
        Ok(out)
    }
}

/// Six-pole clutter configuration used by the bundled presets: a broad
/// spectral ridge over positive normalized frequencies with a deep valley on
/// the negative side.
pub fn ridge_poles() -> Vec<(f64, f64)> {
    vec![
        (0.5, 0.4),
        (0.6, 0.2),
        (0.7, 0.0),
        (0.4, 0.1),
        (0.5, 0.3),
        (0.6, 0.35),
    ]
}

/// Modulus of the largest root of `z^p − ρ₁ z^{p−1} − … − ρ_p` via
/// Durand–Kerner iteration (all roots simultaneously).
fn max_root_modulus(taps: &[C64]) -> f64 {
    let p = taps.len();
    if p == 0 {
        return 0.0;
    }
    // Monic coefficients c_0..c_p with c_0 = 1: z^p - Σ taps[n-1] z^{p-n}.
    let mut coeffs = vec![C64::new(1.0, 0.0)];
    coeffs.extend(taps.iter().map(|&t| -t));
    let eval = |z: C64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &c in &coeffs {
            acc = acc * z + c;
        }
        acc
    };
    // Distinct non-real starting points on a spiral.
    let mut roots: Vec<C64> = (0..p)
        .map(|k| C64::from_polar(0.4 + 0.9 * k as f64 / p as f64, 0.7 + 2.1 * k as f64))
        .collect();
    for _ in 0..500 {
        let mut delta = 0.0_f64;
        for i in 0..p {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..p {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-13 {
            break;
        }
    }
    roots.iter().map(|r| r.norm()).fold(0.0, f64::max)
}

/// Hermitian single-snapshot covariance estimate truncated to `|i−j| ≤ lag`:
/// `[Γ̂]_{i,j} = ĉ_i ĉ*_j` inside the band, zero outside.
#[derive(Debug, Clone)]
pub struct BandedCovariance {
    dim: usize,
    lag: usize,
    /// `bands[m][i] = Γ̂_{i, i+m}` for m = 0..=lag; band m has dim−m entries.
    bands: Vec<Vec<C64>>,
}

impl BandedCovariance {
    /// Builds the estimate from a residual vector.
    pub fn from_residual(residual: &[C64], lag: usize) -> Result<Self> {
        let dim = residual.len();
        if lag >= dim {
            return Err(Error::invalid(format!(
                "truncation lag {lag} must be < dimension {dim}"
            )));
        }
        let mut bands = Vec::with_capacity(lag + 1);
        for m in 0..=lag {
            let band: Vec<C64> = (0..dim - m)
                .map(|i| residual[i] * residual[i + m].conj())
                .collect();
            bands.push(band);
        }
        Ok(BandedCovariance { dim, lag, bands })
    }

    /// Diagonal matrix (lag 0) with the given real entries; used to supply a
    /// known true covariance such as the identity.
    pub fn diagonal(entries: Vec<f64>) -> Self {
        let dim = entries.len();
        BandedCovariance {
            dim,
            lag: 0,
            bands: vec![entries.into_iter().map(|v| C64::new(v, 0.0)).collect()],
        }
    }

    /// Banded Hermitian matrix from explicit upper bands
    /// (`bands[m][i] = Γ_{i,i+m}`); used to supply arbitrary true covariances.
    pub fn from_bands(dim: usize, bands: Vec<Vec<C64>>) -> Result<Self> {
        if bands.is_empty() || bands.len() > dim {
            return Err(Error::invalid("need 1..=dim bands"));
        }
        for (m, band) in bands.iter().enumerate() {
            if band.len() != dim - m {
                return Err(Error::invalid(format!(
                    "band {m} has {} entries, expected {}",
                    band.len(),
                    dim - m
                )));
            }
        }
        if bands[0].iter().any(|v| v.im != 0.0) {
            return Err(Error::invalid("diagonal band must be real"));
        }
        Ok(BandedCovariance {
            dim,
            lag: bands.len() - 1,
            bands,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Matrix entry (i, j); zero outside the band, conjugate-symmetric by
    /// construction.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let m = hi - lo;
        if m > self.lag {
            return C64::new(0.0, 0.0);
        }
        let upper = self.bands[m][lo];
        if i <= j {
            upper
        } else {
            upper.conj()
        }
    }

    /// `Re{hᴴ Γ h}` in O(dim·lag) using the band structure.
    pub fn quadratic_form(&self, h: &[C64]) -> Result<f64> {
        if h.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector length {} does not match covariance dimension {}",
                h.len(),
                self.dim
            )));
        }
        let mut acc = 0.0;
        for (i, v) in self.bands[0].iter().enumerate() {
            acc += h[i].norm_sqr() * v.re;
        }
        for m in 1..=self.lag {
            let mut cross = C64::new(0.0, 0.0);
            for i in 0..self.dim - m {
                cross += h[i].conj() * self.bands[m][i] * h[i + m];
            }
            acc += 2.0 * cross.re;
        }
        Ok(acc)
    }
}

/// Fused fast path for the detector: `Re{hᴴ Γ̂_l h}` together with the
/// lag-0 term `Σ_i |h_i ĉ_i|²`, computed directly from the residual without
/// materializing the band matrix. Matches
/// `BandedCovariance::from_residual(c, lag).quadratic_form(h)` exactly.
pub(crate) fn banded_form_from_residual(residual: &[C64], h: &[C64], lag: usize) -> (f64, f64) {
    let n = residual.len();
    debug_assert_eq!(h.len(), n);
    debug_assert!(lag < n);
    let u: Vec<C64> = (0..n).map(|i| h[i].conj() * residual[i]).collect();
    let s0: f64 = u.iter().map(|v| v.norm_sqr()).sum();
    let mut acc = s0;
    for m in 1..=lag {
        let mut cross = C64::new(0.0, 0.0);
        for i in 0..n - m {
            cross += u[i] * u[i + m].conj();
        }
        acc += 2.0 * cross.re;
    }
    (acc, s0)
}
