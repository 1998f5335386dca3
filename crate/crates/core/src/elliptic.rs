//! Theta series, complete elliptic integral, Jacobi sn, and the closed-form
//! conformal map from an ellipse with foci ±1 onto the unit disk. These seed
//! the innermost ring of the solver: the stretched first circle is an
//! ellipse, which is normalized, mapped to the disk, and rescaled.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const SERIES_TAIL: f64 = 1e-16;
const LANDEN_MODULUS_FLOOR: f64 = 1e-14;
const LANDEN_MAX_DEPTH: usize = 32;

/// Ellipse with semi-axes `a > b >= 0` and foci at ±1 (`a^2 - b^2 = 1`).
#[derive(Debug, Clone, Copy)]
pub struct EllipseGeometry {
    a: f64,
    b: f64,
}

impl EllipseGeometry {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a <= b || b < 0.0 {
            return Err(Error::Domain(format!("invalid ellipse axes a={a}, b={b}")));
        }
        // Focal condition; the tolerance scales with the representable
        // precision of a^2 for very eccentric-parameter ellipses.
        let tol = 1e-10 + 64.0 * f64::EPSILON * a * a;
        if ((a * a - b * b) - 1.0).abs() > tol {
            return Err(Error::Domain(format!(
                "a^2 - b^2 = {} but foci must sit at ±1",
                a * a - b * b
            )));
        }
        Ok(EllipseGeometry { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Residual of the ellipse equation, < 1 strictly inside.
    pub fn boundary_residual(&self, u: Complex64) -> f64 {
        let x = u.re / self.a;
        let y = if self.b > 0.0 { u.im / self.b } else { f64::INFINITY };
        x * x + y * y
    }
}

/// Nome `q = (a+b)^{-4}` of the ellipse-to-disk map.
pub fn nome_from_axes(geom: &EllipseGeometry) -> f64 {
    (geom.a + geom.b).powi(-4)
}

/// `theta2(q) = 2 * sum_{n>=0} q^{(n+1/2)^2}`.
pub fn theta2(q: f64) -> Result<f64> {
    check_nome(q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for n in 0..100_000u32 {
        let e = (n as f64 + 0.5) * (n as f64 + 0.5);
        let term = q.powf(e);
        sum += term;
        if term < SERIES_TAIL * sum {
            return Ok(2.0 * sum);
        }
    }
    Err(Error::NoConvergence(format!("theta2 series at q = {q}")))
}

/// `theta3(q) = 1 + 2 * sum_{n>=1} q^{n^2}`.
pub fn theta3(q: f64) -> Result<f64> {
    check_nome(q)?;
    let mut sum = 1.0;
    for n in 1..100_000u32 {
        let term = 2.0 * q.powf((n * n) as f64);
        sum += term;
        if term < SERIES_TAIL * sum {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence(format!("theta3 series at q = {q}")))
}

fn check_nome(q: f64) -> Result<()> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("nome q = {q} outside [0, 1)")));
    }
    Ok(())
}

/// Modulus `k = (theta2/theta3)^2` from the nome.
pub fn modulus_from_nome(q: f64) -> Result<f64> {
    let t2 = theta2(q)?;
    let t3 = theta3(q)?;
    let r = t2 / t3;
    Ok(r * r)
}

/// Complete elliptic integral `K(m)` by the arithmetic-geometric mean.
pub fn complete_elliptic_k(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!("parameter m = {m} outside [0, 1)")));
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..64 {
        if (a - b).abs() <= 1e-14 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(PI / (2.0 * a))
}

/// Bundled nome/modulus/parameter/integral for one ellipse.
#[derive(Debug, Clone, Copy)]
pub struct JacobiParams {
    pub q: f64,
    pub k: f64,
    pub m: f64,
    pub big_k: f64,
}

impl JacobiParams {
    pub fn from_nome(q: f64) -> Result<Self> {
        let k = modulus_from_nome(q)?;
        let m = k * k;
        let big_k = complete_elliptic_k(m)?;
        let p = JacobiParams { q, k, m, big_k };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if (self.k * self.k - self.m).abs() > 1e-12 {
            return Err(Error::Domain("k^2 != m".into()));
        }
        // Nome round-trip q = exp(-pi K(1-m)/K(m)); vacuous at q = 0.
        if self.q > 0.0 {
            let kc = complete_elliptic_k(1.0 - self.m)?;
            let q_back = (-PI * kc / self.big_k).exp();
            if (q_back - self.q).abs() > 1e-10 {
                return Err(Error::Domain(format!(
                    "nome round-trip failed: {} vs {}",
                    q_back, self.q
                )));
            }
        }
        Ok(())
    }
}

/// Jacobi `sn(u, m)` for complex `u`, by the descending Landen
/// transformation with `sn = sin` once the transformed modulus is
/// negligible.
pub fn jacobi_sn(u: Complex64, m: f64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!("parameter m = {m} outside [0, 1)")));
    }
    if !u.is_finite() {
        return Err(Error::Domain("non-finite argument".into()));
    }
    // Precompute the ladder of descending moduli.
    let mut ks = Vec::new();
    let mut mc = m;
    let mut depth = 0;
    while mc.sqrt() >= LANDEN_MODULUS_FLOOR {
        if depth >= LANDEN_MAX_DEPTH {
            return Err(Error::NoConvergence("Landen ladder did not descend".into()));
        }
        let kp = (1.0 - mc).sqrt();
        let k1 = (1.0 - kp) / (1.0 + kp);
        ks.push(k1);
        mc = k1 * k1;
        depth += 1;
    }
    let shrink: f64 = ks.iter().map(|k1| 1.0 + k1).product();
    let mut s = (u / shrink).sin();
    for &k1 in ks.iter().rev() {
        let denom = 1.0 + k1 * s * s;
        if denom.norm() < 1e-300 {
            return Err(Error::Pole("sn Landen ascent hit a pole".into()));
        }
        s = (1.0 + k1) * s / denom;
    }
    Ok(s)
}

/// Conformal map from the interior of an ellipse with foci ±1 onto the unit
/// disk, `u -> sqrt(k) * sn(2K/pi * asin(u); k^2)`, fixing 0 and the real
/// axis. Parameters are cached per geometry.
#[derive(Debug, Clone, Copy)]
pub struct EllipseToDisk {
    geom: EllipseGeometry,
    params: JacobiParams,
}

impl EllipseToDisk {
    pub fn new(geom: EllipseGeometry) -> Result<Self> {
        let params = JacobiParams::from_nome(nome_from_axes(&geom))?;
        Ok(EllipseToDisk { geom, params })
    }

    pub fn params(&self) -> &JacobiParams {
        &self.params
    }

    pub fn apply(&self, u: Complex64) -> Result<Complex64> {
        if self.geom.boundary_residual(u) > 1.0 + 1e-9 {
            return Err(Error::Domain(format!(
                "point {u} outside the ellipse (residual {})",
                self.geom.boundary_residual(u)
            )));
        }
        let v = u.asin() * (2.0 * self.params.big_k / PI);
        Ok(self.params.k.sqrt() * jacobi_sn(v, self.params.m)?)
    }
}

/// One-shot form of [`EllipseToDisk`].
pub fn ellipse_to_disk(u: Complex64, geom: &EllipseGeometry) -> Result<Complex64> {
    EllipseToDisk::new(*geom)?.apply(u)
}

/// Threshold under which the first-ring seed short-circuits to the identity;
/// the normalizing map blows up as mu0 -> 0 while the composite tends to the
/// identity.
pub const SEED_IDENTITY_THRESHOLD: f64 = 1e-8;

/// The mu0-conformal map taking the circle `|z| = r1` onto itself (up to a
/// modulus drift at roundoff scale): stretch by `L[mu0]`, normalize the image
/// ellipse to foci ±1, map to the disk, rescale by `r1`.
#[derive(Debug, Clone, Copy)]
pub struct FirstRingSeed {
    mu0: Complex64,
    r1: f64,
    inner: Option<(Complex64, EllipseToDisk)>, // (1/(2 r1 sqrt(mu0)), ellipse map)
}

impl FirstRingSeed {
    pub fn new(mu0: Complex64, r1: f64) -> Result<Self> {
        if mu0.norm() >= 1.0 {
            return Err(Error::Domain(format!("|mu0| = {} >= 1", mu0.norm())));
        }
        if !(r1 > 0.0) {
            return Err(Error::Domain(format!("first-ring radius r1 = {r1}")));
        }
        let inner = if mu0.norm() < SEED_IDENTITY_THRESHOLD {
            None
        } else {
            let s = mu0.norm();
            let a = (1.0 + s) / (2.0 * s.sqrt());
            let b = (a * a - 1.0).sqrt();
            let geom = EllipseGeometry::new(a, b)?;
            let norm = Complex64::new(1.0, 0.0) / (2.0 * r1 * mu0.sqrt());
            Some((norm, EllipseToDisk::new(geom)?))
        };
        Ok(FirstRingSeed { mu0, r1, inner })
    }

    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        match &self.inner {
            None => Ok(z),
            Some((norm, map)) => {
                let stretched = z + self.mu0 * z.conj();
                let u = norm * stretched;
                Ok(self.r1 * map.apply(u)?)
            }
        }
    }
}

/// Image of the first mesh ring under the seed map: one point per entry of
/// `offset_args`, with `z = r1 * exp(i * arg)`.
pub fn seed_first_ring(
    mu0: Complex64,
    r1: f64,
    offset_args: &[f64],
) -> Result<Vec<Complex64>> {
    let seed = FirstRingSeed::new(mu0, r1)?;
    offset_args
        .iter()
        .map(|&t| seed.apply(Complex64::from_polar(r1, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nome_examples() {
        let g = EllipseGeometry::new(1.25, 0.75).unwrap();
        assert!((nome_from_axes(&g) - 0.0625).abs() < 1e-15);

        // Thin-nome limit: a ~ 100, b = sqrt(a^2 - 1).
        let a = 100.005f64;
        let g = EllipseGeometry::new(a, (a * a - 1.0).sqrt()).unwrap();
        assert!(nome_from_axes(&g) < 1e-9);

        let g = EllipseGeometry::new(2f64.sqrt(), 1.0).unwrap();
        let q = nome_from_axes(&g);
        assert!((q - (2f64.sqrt() + 1.0).powi(-4)).abs() < 1e-15);
        assert!((q - 0.029437).abs() < 1e-6);
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta3(0.0).unwrap(), 1.0);
        assert_eq!(theta2(0.0).unwrap(), 0.0);
        // 20-term reference sums at q = 0.0625.
        let q: f64 = 0.0625;
        let mut t2 = 0.0;
        let mut t3 = 1.0;
        for n in 0..20 {
            t2 += 2.0 * q.powf((n as f64 + 0.5) * (n as f64 + 0.5));
            t3 += 2.0 * q.powf(((n + 1) * (n + 1)) as f64);
        }
        assert!((theta2(q).unwrap() - t2).abs() < 1e-14);
        assert!((theta3(q).unwrap() - t3).abs() < 1e-14);
        assert!((theta2(q).unwrap() - 1.003906).abs() < 1e-5);
        assert!((theta3(q).unwrap() - 1.125031).abs() < 1e-5);
        assert!(theta2(1.0).is_err());
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(modulus_from_nome(0.0).unwrap(), 0.0);
        assert!((modulus_from_nome(0.0625).unwrap() - 0.7963).abs() < 1e-4);
        // Small-q expansion k ~ 4 sqrt(q).
        for &q in &[1e-4, 1e-5, 1e-6] {
            let k = modulus_from_nome(q).unwrap();
            let approx = 4.0 * q.sqrt();
            assert!((k - approx).abs() / approx < 0.01, "q={q}: {k} vs {approx}");
        }
    }

    #[test]
    fn elliptic_k_examples() {
        assert!((complete_elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((complete_elliptic_k(0.5).unwrap() - 1.85407467730137).abs() < 1e-13);
        assert!(complete_elliptic_k(1.0).is_err());
    }

    #[test]
    fn elliptic_k_matches_quadrature() {
        // Composite Simpson oracle for the defining integral.
        let simpson = |m: f64| {
            let f = |t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt();
            let n = 20_000;
            let h = (PI / 2.0) / n as f64;
            let mut s = f(0.0) + f(PI / 2.0);
            for i in 1..n {
                let x = i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            s * h / 3.0
        };
        for &m in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let k = complete_elliptic_k(m).unwrap();
            assert!((k - simpson(m)).abs() < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn nome_modulus_round_trip() {
        for i in 1..10 {
            let m = i as f64 / 10.0;
            let k = complete_elliptic_k(m).unwrap();
            let kc = complete_elliptic_k(1.0 - m).unwrap();
            let q = (-PI * kc / k).exp();
            let k_back = modulus_from_nome(q).unwrap();
            assert!((k_back * k_back - m).abs() < 1e-9, "m = {m}");
        }
    }

    #[test]
    fn sn_identities() {
        for &m in &[0.1, 0.5, 0.9] {
            let zero = jacobi_sn(Complex64::new(0.0, 0.0), m).unwrap();
            assert!(zero.norm() < 1e-15);
            let k = complete_elliptic_k(m).unwrap();
            let at_k = jacobi_sn(Complex64::new(k, 0.0), m).unwrap();
            assert!((at_k - Complex64::new(1.0, 0.0)).norm() < 1e-10, "m = {m}");
        }
        // Degenerate parameter: sn(u, 0) = sin(u).
        let u = Complex64::new(0.7, 0.3);
        assert!((jacobi_sn(u, 0.0).unwrap() - u.sin()).norm() < 1e-14);
        assert!(jacobi_sn(u, 1.0).is_err());
    }

    #[test]
    fn sn_is_odd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = rng.gen_range(0.0..0.99);
            let u = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.8..0.8));
            let plus = jacobi_sn(u, m).unwrap();
            let minus = jacobi_sn(-u, m).unwrap();
            assert!((plus + minus).norm() < 1e-12);
        }
    }

    #[test]
    fn ellipse_map_basics() {
        let geom = EllipseGeometry::new(1.25, 0.75).unwrap();
        let map = EllipseToDisk::new(geom).unwrap();
        assert!(map.apply(Complex64::new(0.0, 0.0)).unwrap().norm() < 1e-14);
        // Boundary vertex maps to the unit circle.
        let w = map.apply(Complex64::new(1.25, 0.0)).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-8);
        // Real segment maps increasingly into (0, 1).
        let mut prev = 0.0;
        for i in 1..20 {
            let x = 1.25 * i as f64 / 20.0;
            let w = map.apply(Complex64::new(x, 0.0)).unwrap();
            assert!(w.im.abs() < 1e-12);
            assert!(w.re > prev && w.re < 1.0);
            prev = w.re;
        }
        // Outside point rejected.
        assert!(map.apply(Complex64::new(1.3, 0.0)).is_err());
    }

    #[test]
    fn ellipse_map_boundary_modulus() {
        let geom = EllipseGeometry::new(1.25, 0.75).unwrap();
        let map = EllipseToDisk::new(geom).unwrap();
        for i in 0..256 {
            let t = 2.0 * PI * i as f64 / 256.0;
            let u = Complex64::new(1.25 * t.cos(), 0.75 * t.sin());
            let w = map.apply(u).unwrap();
            assert!((w.norm() - 1.0).abs() < 1e-8, "t = {t}: |w| = {}", w.norm());
        }
    }

    #[test]
    fn ellipse_map_is_conformal() {
        // Discrete Cauchy-Riemann check at random interior points.
        let geom = EllipseGeometry::new(1.25, 0.75).unwrap();
        let map = EllipseToDisk::new(geom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        let mut checked = 0;
        while checked < 100 {
            let u = Complex64::new(rng.gen_range(-1.25..1.25), rng.gen_range(-0.75..0.75));
            if geom.boundary_residual(u) > 0.9 {
                continue;
            }
            let fx = (map.apply(u + Complex64::new(h, 0.0)).unwrap()
                - map.apply(u - Complex64::new(h, 0.0)).unwrap())
                / (2.0 * h);
            let fy = (map.apply(u + Complex64::new(0.0, h)).unwrap()
                - map.apply(u - Complex64::new(0.0, h)).unwrap())
                / (2.0 * h);
            let dz = (fx - Complex64::i() * fy) * 0.5;
            let dzbar = (fx + Complex64::i() * fy) * 0.5;
            assert!(
                dzbar.norm() <= 1e-6 * dz.norm(),
                "CR residual at {u}: {} vs {}",
                dzbar.norm(),
                dz.norm()
            );
            checked += 1;
        }
    }

    #[test]
    fn seed_identity_short_circuit() {
        let args: Vec<f64> = (0..8).map(|k| 2.0 * PI * (k as f64 + 0.5) / 8.0).collect();
        let pts = seed_first_ring(Complex64::new(0.0, 0.0), 0.37, &args).unwrap();
        for (k, &t) in args.iter().enumerate() {
            assert_eq!(pts[k], Complex64::from_polar(0.37, t));
        }
    }

    #[test]
    fn seed_modulus_and_order() {
        let args: Vec<f64> = (0..8).map(|k| 2.0 * PI * (k as f64 + 0.5) / 8.0).collect();
        let pts = seed_first_ring(Complex64::new(0.4, 0.0), 0.1, &args).unwrap();
        for w in &pts {
            assert!((w.norm() - 0.1).abs() < 1e-6, "|w| = {}", w.norm());
        }
        // Cyclic order preserved: arguments strictly increasing mod 2pi.
        let mut total = 0.0;
        for k in 0..8 {
            let d = (pts[(k + 1) % 8].arg() - pts[k].arg()).rem_euclid(2.0 * PI);
            assert!(d > 0.0 && d < PI);
            total += d;
        }
        assert!((total - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn seed_preserves_positive_real_axis() {
        let seed = FirstRingSeed::new(Complex64::new(0.3, 0.0), 0.2).unwrap();
        let w = seed.apply(Complex64::new(0.2, 0.0)).unwrap();
        assert!(w.im.abs() < 1e-12 && w.re > 0.0);
    }

    #[test]
    fn seed_is_mu_conformal() {
        // Finite-difference Beltrami of the composite equals mu0.
        let mu0 = Complex64::new(0.25, 0.13);
        let seed = FirstRingSeed::new(mu0, 0.15).unwrap();
        let h = 1e-6;
        for &(x, y) in &[(0.05, 0.02), (-0.06, 0.08), (0.0, -0.1), (0.09, 0.0)] {
            let z = Complex64::new(x, y);
            let fx = (seed.apply(z + Complex64::new(h, 0.0)).unwrap()
                - seed.apply(z - Complex64::new(h, 0.0)).unwrap())
                / (2.0 * h);
            let fy = (seed.apply(z + Complex64::new(0.0, h)).unwrap()
                - seed.apply(z - Complex64::new(0.0, h)).unwrap())
                / (2.0 * h);
            let dz = (fx - Complex64::i() * fy) * 0.5;
            let dzbar = (fx + Complex64::i() * fy) * 0.5;
            assert!(
                (dzbar / dz - mu0).norm() < 1e-5,
                "mu mismatch at {z}: {}",
                dzbar / dz
            );
        }
    }
}
