//! Boundary Gaussian fields on the unit circle: Fourier sampling, harmonic
//! extensions, actions, stress tensors and subcritical chaos measures.

use crate::beltrami::{BeltramiSpec, CauchyRule};
use crate::conformal::{pair_q_beltrami_with, QuadDiffFn};
use crate::quadrature::{Annulus, QuadOptions};
use crate::real::{cabs, cis, Cx, Real};
use crate::spectral::{grid, ifft, TrigSeries};
use crate::ConfError;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Mode variance convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldVariant {
    /// `E|phi_m|^2 = 1/m`: covariance `-2 log|z - w|`.
    NeumannDot,
    /// `E|phi_m|^2 = 1/(2m)`.
    HalfLog,
}

impl FieldVariant {
    pub fn mode_variance(self, m: usize) -> f64 {
        match self {
            FieldVariant::NeumannDot => 1.0 / m as f64,
            FieldVariant::HalfLog => 0.5 / m as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// `phi(e^{i theta}) = c + 2 Re sum_{m >= 1} phi_m e^{i m theta}`; `modes[m-1] = phi_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField<T> {
    pub variant: FieldVariant,
    pub c: T,
    pub modes: Vec<Cx<T>>,
}

impl<T: Real> FourierField<T> {
    pub fn new(variant: FieldVariant, c: T, modes: Vec<Cx<T>>) -> Self {
        FourierField { variant, c, modes }
    }

    pub fn zero() -> Self {
        Self::new(FieldVariant::NeumannDot, T::zero(), Vec::new())
    }

    pub fn constant(c: T) -> Self {
        Self::new(FieldVariant::NeumannDot, c, Vec::new())
    }

    /// Interpolates samples on the uniform grid, keeping modes up to `max_mode`.
    pub fn from_samples(variant: FieldVariant, samples: &[T], max_mode: Option<usize>) -> Self {
        let ts = TrigSeries::from_samples(samples);
        let mut modes = ts.modes;
        if let Some(m) = max_mode {
            modes.truncate(m);
        }
        Self::new(variant, ts.mean, modes)
    }

    pub fn series(&self) -> TrigSeries<T> {
        TrigSeries { mean: self.c, modes: self.modes.clone() }
    }

    pub fn eval(&self, theta: T) -> T {
        self.series().eval(theta)
    }

    pub fn samples(&self, n: usize) -> Vec<T> {
        self.series().samples(n)
    }

    /// `phi(e^{i(theta + alpha)})`, i.e. `phi_m -> e^{i m alpha} phi_m`.
    pub fn rotated(&self, alpha: T) -> Self {
        let modes = self.modes.iter().enumerate().map(|(k, &c)| c * cis(alpha * T::lit((k + 1) as f64))).collect();
        Self::new(self.variant, self.c, modes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZeroMode {
    Fixed(f64),
    None,
}

/// Seeded generator for stream `stream` of run `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Draws `M` independent complex Gaussian modes.
pub fn sample_field<T: Real>(variant: FieldVariant, m: usize, seed: u64, zero_mode: ZeroMode) -> Result<FourierField<T>, ConfError> {
    sample_field_stream(variant, m, seed, 0, zero_mode)
}

pub fn sample_field_stream<T: Real>(variant: FieldVariant, m: usize, seed: u64, stream: u64, zero_mode: ZeroMode) -> Result<FourierField<T>, ConfError> {
    if m == 0 {
        return Err(ConfError::Domain("at least one mode is required".into()));
    }
    let mut rng = rng_for(seed, stream);
    Ok(sample_with(variant, m, &mut rng, zero_mode))
}

pub fn sample_with<T: Real, R: rand::Rng>(variant: FieldVariant, m: usize, rng: &mut R, zero_mode: ZeroMode) -> FourierField<T> {
    let modes = (1..=m)
        .map(|k| {
            let s = (variant.mode_variance(k) * 0.5).sqrt();
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            Complex::new(T::lit(a * s), T::lit(b * s))
        })
        .collect();
    let c = match zero_mode {
        ZeroMode::Fixed(c) => T::lit(c),
        ZeroMode::None => T::zero(),
    };
    FourierField::new(variant, c, modes)
}

fn side_point<T: Real>(z: Cx<T>, side: Side) -> Result<Cx<T>, ConfError> {
    let r = cabs(z);
    match side {
        Side::Interior if r < T::one() => Ok(z),
        Side::Exterior if r > T::one() => Ok(Complex::new(T::one(), T::zero()) / z.conj()),
        _ if r == T::one() => Err(ConfError::Boundary),
        _ => Err(ConfError::Domain(format!("|z| = {} on the wrong side", r.f64()))),
    }
}

/// `sum_m phi_m z^m` by Horner.
fn holo<T: Real>(modes: &[Cx<T>], z: Cx<T>) -> Cx<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &c in modes.iter().rev() {
        acc = (acc + c) * z;
    }
    acc
}

/// Poisson extension `P phi(z)`; the exterior one is the interior one at `1/zbar`.
pub fn harmonic_extension<T: Real>(field: &FourierField<T>, z: Cx<T>, side: Side) -> Result<T, ConfError> {
    let w = side_point(z, side)?;
    Ok(field.c + T::lit(2.0) * holo(&field.modes, w).re)
}

/// `sum_m 2m |phi_m|^2`, the Dirichlet energy of either harmonic extension.
pub fn dirichlet_energy<T: Real>(field: &FourierField<T>, _side: Side) -> T {
    field.modes.iter().enumerate().fold(T::zero(), |a, (k, c)| a + T::lit(2.0 * (k + 1) as f64) * c.norm_sqr())
}

/// Dirichlet energy plus `2Q` times the value at the centre (0 or infinity).
pub fn liouville_action_disc<T: Real>(field: &FourierField<T>, side: Side, q: T) -> T {
    dirichlet_energy(field, side) + T::lit(2.0) * q * field.c
}

/// `(dP, d^2 P)` of the harmonic extension at `z`.
fn extension_derivs<T: Real>(field: &FourierField<T>, z: Cx<T>, side: Side) -> Result<(Cx<T>, Cx<T>), ConfError> {
    side_point(z, side)?;
    let mut d1 = Complex::new(T::zero(), T::zero());
    let mut d2 = Complex::new(T::zero(), T::zero());
    match side {
        Side::Interior => {
            for (k, &c) in field.modes.iter().enumerate().rev() {
                let m = T::lit((k + 1) as f64);
                d1 = d1 * z + c * m;
            }
            for (k, &c) in field.modes.iter().enumerate().skip(1).rev() {
                let m = T::lit((k + 1) as f64);
                d2 = d2 * z + c * m * (m - T::one());
            }
        }
        Side::Exterior => {
            // P = c + 2 Re sum phibar_m z^{-m}
            let u = Complex::new(T::one(), T::zero()) / z;
            for (k, &c) in field.modes.iter().enumerate().rev() {
                let m = T::lit((k + 1) as f64);
                d1 = d1 * u - c.conj() * m;
                d2 = d2 * u + c.conj() * m * (m + T::one());
            }
            d1 = d1 * u * u;
            d2 = d2 * u * u * u;
        }
    }
    Ok((d1, d2))
}

/// Stress-energy tensor `T = -(dP)^2 + Q d^2 P` and Heisenberg tensor `J = dP / z`.
pub fn stress_tensors<T: Real>(field: &FourierField<T>, z: Cx<T>, side: Side, q: T) -> Result<(Cx<T>, Cx<T>), ConfError> {
    let (d1, d2) = extension_derivs(field, z, side)?;
    let t = -d1 * d1 + d2 * q;
    if z == Complex::new(T::zero(), T::zero()) {
        return Ok((t, Complex::new(T::lit(f64::INFINITY), T::zero())));
    }
    Ok((t, d1 / z))
}

/// `(dF, d^2 F)` at `z0` of a real harmonic function `u`, read off from the
/// first two Fourier coefficients of `u` on the circle of radius `rho`.
pub fn harmonic_derivatives<T: Real>(u: impl Fn(Cx<T>) -> T, z0: Cx<T>, rho: T, n: usize) -> (Cx<T>, Cx<T>) {
    let mut a1 = Complex::new(T::zero(), T::zero());
    let mut a2 = Complex::new(T::zero(), T::zero());
    for j in 0..n {
        let e = cis(T::two_pi() * T::lit(j as f64 / n as f64));
        let v = u(z0 + e * rho);
        a1 += e.conj() * v;
        a2 += (e * e).conj() * v;
    }
    let inv = T::one() / T::lit(n as f64);
    (a1 * inv / rho, a2 * inv * T::lit(2.0) / (rho * rho))
}

/// Chaos regularization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularization<T> {
    /// Evaluate at `|z| = r`, `epsilon = -log r`.
    Radius(T),
    Epsilon(T),
    /// `epsilon = 4 / M` with `M` the number of field modes.
    Coupled,
}

/// Boundary chaos measure on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GmcMeasure<T> {
    pub gamma: T,
    pub grid: Vec<T>,
    /// Mass of cell `[theta_i, theta_{i+1})`.
    pub weights: Vec<T>,
    /// `cdf[i]` is the mass of `[0, theta_{i+1})`.
    pub cdf: Vec<T>,
    /// Largest log-weight, subtracted before exponentiation.
    pub log_scale: T,
}

impl<T: Real> GmcMeasure<T> {
    pub fn total_mass(&self) -> T {
        self.cdf.last().copied().unwrap_or_else(T::zero)
    }

    /// Uniform measure with total mass `mass`.
    pub fn uniform(n: usize, mass: T) -> Self {
        let w = mass / T::lit(n as f64);
        Self::from_weights(T::zero(), vec![w; n])
    }

    pub fn from_weights(gamma: T, weights: Vec<T>) -> Self {
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = T::zero();
        for &w in &weights {
            acc += w;
            cdf.push(acc);
        }
        GmcMeasure { gamma, grid: grid(weights.len()), weights, cdf, log_scale: T::zero() }
    }

    pub fn rotated_cells(&self, shift: usize) -> Self {
        let n = self.weights.len();
        let w = (0..n).map(|i| self.weights[(i + n - shift % n) % n]).collect();
        Self::from_weights(self.gamma, w)
    }
}

/// `w_i = dtheta eps^{gamma^2/4} exp((gamma/2) P phi(e^{-eps + i theta_i}))`.
pub fn gmc_measure<T: Real>(field: &FourierField<T>, gamma: T, grid_n: usize, reg: Regularization<T>) -> Result<GmcMeasure<T>, ConfError> {
    if !(gamma > T::zero() && gamma < T::lit(2.0)) {
        return Err(ConfError::Domain(format!("gamma = {} outside (0, 2)", gamma.f64())));
    }
    if field.variant != FieldVariant::NeumannDot {
        return Err(ConfError::Domain("chaos measures use the Neumann field".into()));
    }
    if !grid_n.is_power_of_two() {
        return Err(ConfError::Domain(format!("grid size {grid_n} is not a power of two")));
    }
    let eps = match reg {
        Regularization::Radius(r) if r > T::zero() && r < T::one() => -r.ln(),
        Regularization::Epsilon(e) if e > T::zero() => e,
        Regularization::Coupled if !field.modes.is_empty() => T::lit(4.0) / T::lit(field.modes.len() as f64),
        _ => return Err(ConfError::Domain("invalid chaos regularization".into())),
    };
    let r = (-eps).exp();
    // P on the grid: fold each mode into its alias bin and invert
    let mut buf = vec![Complex::new(T::zero(), T::zero()); grid_n];
    let mut rm = T::one();
    for (k, &c) in field.modes.iter().enumerate() {
        rm *= r;
        let m = k + 1;
        buf[m % grid_n] += c * rm;
        buf[(grid_n - m % grid_n) % grid_n] += c.conj() * rm;
    }
    ifft(&mut buf);
    let half = gamma / T::lit(2.0);
    let logs: Vec<T> = buf.iter().map(|p| half * (field.c + p.re)).collect();
    let log_scale = logs.iter().copied().fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b));
    let base = T::two_pi() / T::lit(grid_n as f64) * eps.powf(gamma * gamma / T::lit(4.0));
    let scale = log_scale.exp();
    if !scale.f64().is_finite() {
        return Err(ConfError::Evaluation("chaos mass overflows".into()));
    }
    let weights: Vec<T> = logs.iter().map(|&l| (l - log_scale).exp() * scale * base).collect();
    let mut m = GmcMeasure::from_weights(gamma, weights);
    m.log_scale = log_scale;
    Ok(m)
}

/// `phi . h = phi o H + Q log H'` on the `n`-point grid, for a circle map
/// given by its angle function `theta -> (H(theta), H'(theta))`.
pub fn field_dot_homeo<T: Real>(field: &FourierField<T>, h: impl Fn(T) -> (T, T), n: usize, q: T) -> Result<FourierField<T>, ConfError> {
    let series = field.series();
    let mut samples = Vec::with_capacity(n);
    for th in grid::<T>(n) {
        let (a, d) = h(th);
        if !(d > T::zero()) {
            return Err(ConfError::Domain("circle map is not increasing".into()));
        }
        samples.push(series.eval(a) + q * d.ln());
    }
    Ok(FourierField::from_samples(field.variant, &samples, None))
}

/// Finite-difference and predicted first variations of a disc Liouville action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationCheck<T> {
    pub finite_difference: T,
    pub predicted: T,
}

impl<T: Real> VariationCheck<T> {
    pub fn relative_error(&self) -> T {
        let d = (self.finite_difference - self.predicted).abs();
        let s = self.predicted.abs().max(self.finite_difference.abs());
        if s == T::zero() {
            T::zero()
        } else {
            d / s
        }
    }
}

/// Compares `d/ds S(phi . h_{s tau}^{-1})` at `s = 0` with `4 Re(tau (T, mu))`.
///
/// `h_t` is the symmetric first-order flow of `mu`, which on the circle is the
/// angle map `theta + 2 Re(t w_mu(e^{i theta}))`. On the interior side `mu`
/// must live in the disc and the pairing uses `T`; on the exterior side it
/// lives outside and the pairing uses `T + 2Q J`.
pub fn liouville_variation<T: Real>(field: &FourierField<T>, mu: &BeltramiSpec<T>, side: Side, tau: Cx<T>, step: T, q: T, n: usize) -> Result<VariationCheck<T>, ConfError> {
    let inside = match side {
        Side::Interior => mu.support.r_out.map_or(false, |o| o < T::one()),
        Side::Exterior => mu.support.r_in > T::one(),
    };
    if !mu.is_zero() && !inside {
        return Err(ConfError::Domain("support of mu on the wrong side of the circle".into()));
    }
    let th = grid::<T>(n);
    let probes: Vec<Cx<T>> = th.iter().step_by((n / 16).max(1)).map(|&t| cis(t)).collect();
    let rule = CauchyRule::new(mu, &probes, QuadOptions::default().with_tol(1e-13, 1e-12))?;
    let w: Vec<Cx<T>> = th.iter().map(|&t| rule.w(cis(t))).collect();
    let action = |s: T| -> Result<T, ConfError> {
        let t = tau * s;
        let shift: Vec<T> = w.iter().map(|&wv| T::lit(2.0) * (t * wv).re).collect();
        let a = TrigSeries::from_samples(&shift).trimmed(T::lit(1e-17));
        let moved = field_dot_homeo(field, |x| a.invert_shift(x).unwrap_or((T::lit(f64::NAN), T::lit(f64::NAN))), n, q)?;
        if !moved.c.f64().is_finite() {
            return Err(ConfError::Solver { residual: f64::NAN, detail: "circle inverse".into() });
        }
        Ok(liouville_action_disc(&moved, side, q))
    };
    let fd = (action(step)? - action(-step)?) / (T::lit(2.0) * step);
    let f2 = field.clone();
    let qd = match side {
        Side::Interior => QuadDiffFn::new(Annulus::new(T::zero(), Some(T::one())), move |z| stress_tensors(&f2, z, Side::Interior, q).map_or(crate::real::cnan(), |p| p.0)),
        Side::Exterior => QuadDiffFn::new(Annulus::exterior(T::one()), move |z| {
            stress_tensors(&f2, z, Side::Exterior, q).map_or(crate::real::cnan(), |(t, j)| t + j * q * T::lit(2.0))
        }),
    };
    let pairing = pair_q_beltrami_with(&qd, mu, QuadOptions::default().with_tol(1e-12, 1e-11))?.value;
    Ok(VariationCheck { finite_difference: fd, predicted: T::lit(4.0) * (tau * pairing).re })
}
