//! Real-linear affine maps of the plane and their Beltrami derivatives.
//!
//! The building blocks are the stretch `L[mu](z) = z + mu*conj(z)`, the
//! conformal affine map `A[a,b](z) = a*z + b`, the unique stretch-then-affine
//! interpolant through two point pairs, and the unique real-affine map through
//! three point pairs. Every such map is stored as `alpha*z + beta*conj(z) + gamma`;
//! the Beltrami derivative is `beta/alpha`.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Signed cross product `Im(conj(p) * q)`; positive when `q` is
/// counterclockwise from `p`.
#[inline]
pub fn cross(p: Complex64, q: Complex64) -> f64 {
    p.re * q.im - p.im * q.re
}

/// `L[mu](z) = z + mu*conj(z)`, the linear map with constant Beltrami
/// derivative `mu`.
pub fn linear_stretch(mu: Complex64, z: Complex64) -> Result<Complex64> {
    if mu.norm() >= 1.0 {
        return Err(Error::Domain(format!(
            "|mu| = {} >= 1 is not a quasiconformal stretch",
            mu.norm()
        )));
    }
    Ok(z + mu * z.conj())
}

/// `A[a,b](z) = a*z + b`, conformal and affine.
pub fn affine_conformal(a: Complex64, b: Complex64, z: Complex64) -> Result<Complex64> {
    if a == Complex64::new(0.0, 0.0) {
        return Err(Error::Degenerate("conformal coefficient a = 0".into()));
    }
    Ok(a * z + b)
}

/// A real-affine map of the plane, `z -> alpha*z + beta*conj(z) + gamma`.
///
/// Orientation-reversing maps (`|beta| > |alpha|`) are representable and
/// flagged rather than rejected, so callers can report mesh failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralAffine {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
}

impl GeneralAffine {
    pub fn identity() -> Self {
        GeneralAffine {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
            gamma: Complex64::new(0.0, 0.0),
        }
    }

    /// `L[mu]` as a `GeneralAffine`.
    pub fn stretch(mu: Complex64) -> Self {
        GeneralAffine {
            alpha: Complex64::new(1.0, 0.0),
            beta: mu,
            gamma: Complex64::new(0.0, 0.0),
        }
    }

    /// `A[a,b]` as a `GeneralAffine`.
    pub fn conformal(a: Complex64, b: Complex64) -> Self {
        GeneralAffine {
            alpha: a,
            beta: Complex64::new(0.0, 0.0),
            gamma: b,
        }
    }

    #[inline]
    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.alpha * z + self.beta * z.conj() + self.gamma
    }

    /// Beltrami derivative `beta/alpha`. Values with modulus >= 1 are
    /// returned as-is; check [`GeneralAffine::is_orientation_preserving`].
    pub fn beltrami(&self) -> Result<Complex64> {
        if self.alpha == Complex64::new(0.0, 0.0) {
            return Err(Error::Degenerate(
                "alpha = 0: map is anticonformal-degenerate".into(),
            ));
        }
        Ok(self.beta / self.alpha)
    }

    #[inline]
    pub fn is_orientation_preserving(&self) -> bool {
        self.beta.norm_sqr() < self.alpha.norm_sqr()
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.alpha.norm() == self.beta.norm()
    }

    /// Post-compose with the conformal map `A[a,b]`; leaves the Beltrami
    /// derivative unchanged.
    pub fn then_conformal(&self, a: Complex64, b: Complex64) -> Self {
        GeneralAffine {
            alpha: a * self.alpha,
            beta: a * self.beta,
            gamma: a * self.gamma + b,
        }
    }
}

/// Beltrami derivative of an affine map; same contract as
/// [`GeneralAffine::beltrami`].
pub fn beltrami_of_affine(map: &GeneralAffine) -> Result<Complex64> {
    map.beltrami()
}

/// The unique mu-conformal affine map `B[mu; z1,z2; w1,w2]` with
/// `B(z1) = w1`, `B(z2) = w2`, built as `A[a,b] . L[mu]`.
pub fn interpolate_two_points(
    mu: Complex64,
    z1: Complex64,
    z2: Complex64,
    w1: Complex64,
    w2: Complex64,
) -> Result<GeneralAffine> {
    if mu.norm() >= 1.0 {
        return Err(Error::Domain(format!("|mu| = {} >= 1", mu.norm())));
    }
    if z1 == z2 {
        return Err(Error::Degenerate("coincident source points".into()));
    }
    if w1 == w2 {
        return Err(Error::Degenerate("coincident image points".into()));
    }
    let l1 = z1 + mu * z1.conj();
    let l2 = z2 + mu * z2.conj();
    // L is injective for |mu| < 1, so l1 != l2.
    let a = (w2 - w1) / (l2 - l1);
    let b = w1 - a * l1;
    Ok(GeneralAffine {
        alpha: a,
        beta: a * mu,
        gamma: b,
    })
}

/// Triangle with vertices in the complex plane. Vertices are validated to be
/// noncollinear; positive orientation is not required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub v0: Complex64,
    pub v1: Complex64,
    pub v2: Complex64,
}

impl Triangle {
    pub fn new(v0: Complex64, v1: Complex64, v2: Complex64) -> Result<Self> {
        let t = Triangle { v0, v1, v2 };
        if t.doubled_signed_area() == 0.0 {
            return Err(Error::Degenerate("collinear triangle vertices".into()));
        }
        Ok(t)
    }

    /// Twice the signed area; positive for counterclockwise vertices.
    #[inline]
    pub fn doubled_signed_area(&self) -> f64 {
        cross(self.v1 - self.v0, self.v2 - self.v0)
    }

    #[inline]
    pub fn is_positively_oriented(&self) -> bool {
        self.doubled_signed_area() > 0.0
    }

    #[inline]
    pub fn centroid(&self) -> Complex64 {
        (self.v0 + self.v1 + self.v2) / 3.0
    }

    pub fn edge_midpoints(&self) -> [Complex64; 3] {
        [
            (self.v0 + self.v1) * 0.5,
            (self.v1 + self.v2) * 0.5,
            (self.v2 + self.v0) * 0.5,
        ]
    }
}

/// The unique real-affine map sending `src.vi` to `dst.vi`.
pub fn affine_from_triangles(src: &Triangle, dst: &Triangle) -> Result<GeneralAffine> {
    let d1 = src.v1 - src.v0;
    let d2 = src.v2 - src.v0;
    let e1 = dst.v1 - dst.v0;
    let e2 = dst.v2 - dst.v0;
    // Solve alpha*d + beta*conj(d) = e for the two edge vectors.
    let det = d1 * d2.conj() - d2 * d1.conj();
    if det.norm() == 0.0 {
        return Err(Error::Degenerate("collinear triangle vertices".into()));
    }
    let alpha = (e1 * d2.conj() - e2 * d1.conj()) / det;
    let beta = (d1 * e2 - d2 * e1) / det;
    let gamma = dst.v0 - alpha * src.v0 - beta * src.v0.conj();
    Ok(GeneralAffine { alpha, beta, gamma })
}

/// True when the triangle with base `(base0, base1)` and apex `apex` has a
/// base angle strictly greater than pi/2, i.e. the foot of the perpendicular
/// from the apex falls outside the closed base segment. A right angle exactly
/// at a base vertex is not skewed.
pub fn is_skewed(base0: Complex64, base1: Complex64, apex: Complex64) -> Result<bool> {
    let d = base1 - base0;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return Err(Error::Degenerate("coincident base points".into()));
    }
    let t = ((apex - base0) * d.conj()).re / len2;
    Ok(t < 0.0 || t > 1.0)
}
