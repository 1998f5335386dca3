//! Beltrami-coefficient providers: constant, radially symmetric, sectorial,
//! the two exterior-mapping test coefficients, and grid-sampled data, plus
//! triangle averaging and the closed-form maps used as validation oracles.

use crate::affine::Triangle;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Deserialize;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

/// Evaluation contract for a Beltrami coefficient on the closed unit disk,
/// with a certified bound `sup |mu| <= kappa < 1`.
pub trait BeltramiField: Send + Sync {
    fn eval(&self, z: Complex64) -> Complex64;
    fn sup_bound(&self) -> f64;
}

const DENSE_RADII: usize = 2048;
const DENSE_ANGLES: usize = 2048;
const SAMPLING_MARGIN: f64 = 1.05;

fn certify_dense<F: Fn(Complex64) -> Complex64>(eval: F, n_r: usize, n_t: usize) -> Result<f64> {
    let mut max = 0.0f64;
    for i in 0..n_r {
        let r = (i as f64 + 1.0) / n_r as f64;
        for j in 0..n_t {
            let t = TAU * j as f64 / n_t as f64;
            let v = eval(Complex64::from_polar(r, t)).norm();
            if v > max {
                max = v;
            }
        }
    }
    let bound = max * SAMPLING_MARGIN;
    if bound >= 1.0 {
        return Err(Error::Domain(format!(
            "certified sup bound {bound} reaches 1; not uniformly quasiconformal"
        )));
    }
    Ok(bound)
}

/// Constant coefficient.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMu {
    c: Complex64,
}

pub fn constant_mu(c: Complex64) -> Result<ConstantMu> {
    if c.norm() >= 1.0 {
        return Err(Error::Domain(format!("|mu| = {} >= 1", c.norm())));
    }
    Ok(ConstantMu { c })
}

impl BeltramiField for ConstantMu {
    fn eval(&self, _z: Complex64) -> Complex64 {
        self.c
    }
    fn sup_bound(&self) -> f64 {
        self.c.norm()
    }
}

/// Radial profile: an increasing diffeomorphism of [0,1] with its derivative.
#[derive(Clone)]
pub struct RadialProfile {
    pub phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub phi_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Limit of mu at the origin.
    pub mu_at_zero: Complex64,
}

impl RadialProfile {
    /// `phi(r) = r - sin(2 pi r)/(4 pi)`: smooth, increasing, fixes 0 and 1,
    /// `phi' in [1/2, 3/2]`; the coefficient limit at the origin is 0.
    pub fn default_profile() -> Self {
        RadialProfile {
            phi: Arc::new(|r| r - (TAU * r).sin() / (4.0 * PI)),
            phi_prime: Arc::new(|r| 1.0 - 0.5 * (TAU * r).cos()),
            mu_at_zero: Complex64::new(0.0, 0.0),
        }
    }

    /// `phi(r) = 1 + sin^2(pi (r - 1/2))/2`. Not an increasing self-map of
    /// [0,1] (it fixes neither endpoint); kept only for figure comparison.
    /// The formula limit of `r phi'/phi` at 0 is 0, giving `mu(0) = -1`,
    /// so the origin value is clamped to the r->0+ formula limit direction.
    pub fn figure_profile() -> Self {
        RadialProfile {
            phi: Arc::new(|r| 1.0 + 0.5 * (PI * (r - 0.5)).sin().powi(2)),
            phi_prime: Arc::new(|r| {
                0.5 * PI * (2.0 * PI * (r - 0.5)).sin()
            }),
            mu_at_zero: Complex64::new(-1.0 + 1e-9, 0.0),
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        (self.phi)(r)
    }

    pub fn phi_prime(&self, r: f64) -> f64 {
        (self.phi_prime)(r)
    }
}

/// Radially symmetric coefficient
/// `mu(z) = (r phi'/phi - 1)/(r phi'/phi + 1)` at `r = |z|`.
#[derive(Clone)]
pub struct RadialMu {
    profile: RadialProfile,
    bound: f64,
}

pub fn radial_mu(profile: RadialProfile) -> Result<RadialMu> {
    // Reject non-monotone profiles by sampling.
    let mut prev = profile.phi(0.0);
    for i in 1..=512 {
        let r = i as f64 / 512.0;
        let v = profile.phi(r);
        if v <= prev {
            return Err(Error::Domain(format!(
                "radial profile not increasing near r = {r}"
            )));
        }
        prev = v;
    }
    // The coefficient depends on |z| only; dense radial sampling with the
    // same total budget as the polar grid.
    let mut max = 0.0f64;
    let samples = DENSE_RADII * 4;
    {
        let eval = radial_eval(&profile);
        for i in 0..=samples {
            let r = (i as f64 / samples as f64).max(1e-12);
            let v = eval(Complex64::new(r, 0.0)).norm();
            if v > max {
                max = v;
            }
        }
    }
    let bound = max * SAMPLING_MARGIN;
    if bound >= 1.0 {
        return Err(Error::Domain(format!(
            "certified sup bound {bound} reaches 1; not uniformly quasiconformal"
        )));
    }
    Ok(RadialMu { profile, bound })
}

fn radial_eval(profile: &RadialProfile) -> impl Fn(Complex64) -> Complex64 + '_ {
    move |z: Complex64| {
        let r = z.norm();
        if r == 0.0 {
            return profile.mu_at_zero;
        }
        let rho = r * profile.phi_prime(r) / profile.phi(r);
        Complex64::new((rho - 1.0) / (rho + 1.0), 0.0)
    }
}

impl BeltramiField for RadialMu {
    fn eval(&self, z: Complex64) -> Complex64 {
        radial_eval(&self.profile)(z)
    }
    fn sup_bound(&self) -> f64 {
        self.bound
    }
}

impl RadialMu {
    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }
}

/// Sectorial coefficient for the fixed angular reparametrization
/// `psi(t) = t/2` on `[0, pi]`, `pi/2 + 3(t - pi)/2` on `[pi, 2 pi]`:
/// `mu(z) = (1 - psi')/(1 + psi') * conj(z)/z`, so `|mu|` is 1/3 on the
/// upper half-disk and 1/5 on the lower.
#[derive(Debug, Clone, Copy)]
pub struct SectorialMu;

pub fn sectorial_mu() -> SectorialMu {
    SectorialMu
}

/// The paper-fixed angular map `psi`.
pub fn sectorial_psi(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t <= PI {
        t / 2.0
    } else {
        PI / 2.0 + 1.5 * (t - PI)
    }
}

impl BeltramiField for SectorialMu {
    fn eval(&self, z: Complex64) -> Complex64 {
        if z.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let theta = z.arg().rem_euclid(TAU);
        let psi_prime = if theta < PI { 0.5 } else { 1.5 };
        let factor = (1.0 - psi_prime) / (1.0 + psi_prime);
        factor * (z.conj() / z)
    }
    fn sup_bound(&self) -> f64 {
        1.0 / 3.0
    }
}

/// The two exterior-example coefficients:
/// `mu1(z) = |z|^2 exp(0.65 (i z^5 - 2))`, `mu2(z) = |z|^2 sin(5 Re z)/2`.
#[derive(Debug, Clone, Copy)]
pub struct DaripaMu {
    which: u8,
    bound: f64,
}

pub fn daripa_mu(which: u8) -> Result<DaripaMu> {
    let eval = daripa_eval(which)?;
    let bound = certify_dense(eval, DENSE_RADII, DENSE_ANGLES)?;
    Ok(DaripaMu { which, bound })
}

fn daripa_eval(which: u8) -> Result<fn(Complex64) -> Complex64> {
    match which {
        1 => Ok(|z: Complex64| {
            let z5 = z * z * z * z * z;
            z.norm_sqr() * (0.65 * (Complex64::i() * z5 - 2.0)).exp()
        }),
        2 => Ok(|z: Complex64| {
            Complex64::new(0.5 * z.norm_sqr() * (5.0 * z.re).sin(), 0.0)
        }),
        other => Err(Error::Domain(format!("no such coefficient: {other}"))),
    }
}

impl BeltramiField for DaripaMu {
    fn eval(&self, z: Complex64) -> Complex64 {
        daripa_eval(self.which).expect("validated at construction")(z)
    }
    fn sup_bound(&self) -> f64 {
        self.bound
    }
}

/// Polar-grid samples with bilinear interpolation in `(r, theta)` and
/// wraparound in `theta`. Radii run uniformly over [0, 1] (inclusive),
/// angles over [0, 2 pi).
#[derive(Debug, Clone)]
pub struct GridMu {
    n_r: usize,
    n_theta: usize,
    values: Vec<Complex64>, // index i_r * n_theta + i_t
    bound: f64,
}

pub fn grid_mu(n_r: usize, n_theta: usize, values: Vec<Complex64>) -> Result<GridMu> {
    if n_r < 2 || n_theta < 2 {
        return Err(Error::Domain(format!(
            "grid must have at least 2 radii and 2 angles, got {n_r} x {n_theta}"
        )));
    }
    if values.len() != n_r * n_theta {
        return Err(Error::Domain(format!(
            "expected {} samples, got {}",
            n_r * n_theta,
            values.len()
        )));
    }
    let mut max = 0.0f64;
    for v in &values {
        if !v.is_finite() {
            return Err(Error::Domain("non-finite grid sample".into()));
        }
        max = max.max(v.norm());
    }
    if max >= 1.0 {
        return Err(Error::Domain(format!("grid sample with |mu| = {max} >= 1")));
    }
    // Bilinear interpolation is a convex combination per cell, so the
    // interpolant's sup equals the sample max; a sampling check confirms.
    let grid = GridMu {
        n_r,
        n_theta,
        values,
        bound: max,
    };
    for i in 0..64 {
        for j in 0..64 {
            let z = Complex64::from_polar(i as f64 / 63.0, TAU * j as f64 / 64.0);
            if grid.eval(z).norm() > grid.bound + 1e-12 {
                return Err(Error::Domain("interpolated modulus exceeds bound".into()));
            }
        }
    }
    Ok(grid)
}

/// JSON header describing a grid CSV: `{"n_r": ..., "n_theta": ...}`.
#[derive(Debug, Deserialize)]
struct GridHeader {
    n_r: usize,
    n_theta: usize,
}

/// Ingest a polar grid from a JSON header and a CSV body with columns
/// `r,theta,re_mu,im_mu`; rows must enumerate the lattice in row-major
/// `(i_r, i_theta)` order.
pub fn grid_from_files(header_path: &std::path::Path, csv_path: &std::path::Path) -> Result<GridMu> {
    let header: GridHeader = serde_json::from_str(&std::fs::read_to_string(header_path)?)
        .map_err(|e| Error::Parse(format!("grid header: {e}")))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(csv_path)
        .map_err(|e| Error::Parse(format!("grid csv: {e}")))?;
    let mut values = Vec::with_capacity(header.n_r * header.n_theta);
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("grid csv row {row_idx}: {e}")))?;
        if record.len() != 4 {
            return Err(Error::Parse(format!(
                "grid csv row {row_idx}: expected 4 columns"
            )));
        }
        let field = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("grid csv row {row_idx} col {i}: {e}")))
        };
        let (r, theta) = (field(0)?, field(1)?);
        let i_r = row_idx / header.n_theta;
        let i_t = row_idx % header.n_theta;
        let r_expect = i_r as f64 / (header.n_r - 1) as f64;
        let t_expect = TAU * i_t as f64 / header.n_theta as f64;
        if (r - r_expect).abs() > 1e-9 || (theta - t_expect).abs() > 1e-9 {
            return Err(Error::Parse(format!(
                "grid csv row {row_idx}: lattice point ({r}, {theta}) does not match ({r_expect}, {t_expect})"
            )));
        }
        values.push(Complex64::new(field(2)?, field(3)?));
    }
    grid_mu(header.n_r, header.n_theta, values)
}

impl GridMu {
    #[inline]
    fn sample(&self, i_r: usize, i_t: usize) -> Complex64 {
        self.values[i_r * self.n_theta + (i_t % self.n_theta)]
    }
}

impl BeltramiField for GridMu {
    fn eval(&self, z: Complex64) -> Complex64 {
        let r = z.norm().clamp(0.0, 1.0);
        let t = z.arg().rem_euclid(TAU);
        let fr = r * (self.n_r - 1) as f64;
        let ft = t / TAU * self.n_theta as f64;
        let i_r = (fr.floor() as usize).min(self.n_r - 2);
        let i_t = ft.floor() as usize % self.n_theta;
        let ur = fr - i_r as f64;
        let ut = ft - ft.floor();
        let v00 = self.sample(i_r, i_t);
        let v01 = self.sample(i_r, i_t + 1);
        let v10 = self.sample(i_r + 1, i_t);
        let v11 = self.sample(i_r + 1, i_t + 1);
        (1.0 - ur) * ((1.0 - ut) * v00 + ut * v01) + ur * ((1.0 - ut) * v10 + ut * v11)
    }
    fn sup_bound(&self) -> f64 {
        self.bound
    }
}

/// Average of the field over a triangle: order 1 samples the centroid, order
/// 3 averages the three edge midpoints (exact for affine integrands).
pub fn triangle_average(field: &dyn BeltramiField, tri: &Triangle, order: u8) -> Complex64 {
    match order {
        1 => field.eval(tri.centroid()),
        _ => {
            let m = tri.edge_midpoints();
            (field.eval(m[0]) + field.eval(m[1]) + field.eval(m[2])) / 3.0
        }
    }
}

/// Closed-form radially symmetric quasiconformal map
/// `f(z) = phi(|z|) e^{i arg z}`; validation oracle for [`RadialMu`].
pub fn exact_radial_map(z: Complex64, profile: &RadialProfile) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(profile.phi(r), z.arg())
}

/// Closed-form sectorial map `f(z) = |z| e^{i psi(arg z)}`; validation oracle
/// for [`SectorialMu`].
pub fn exact_sectorial_map(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(r, sectorial_psi(z.arg()))
}
