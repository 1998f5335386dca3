//! Geodesic zipper conformal mapping: the interior of an N-vertex Jordan
//! polygon is mapped onto the unit disk by a composition of Mobius
//! transformations and square roots. Construction costs O(N^2), evaluation
//! O(N) per point.
//!
//! The working model is the upper half-plane. The initial square root opens
//! the first edge; each subsequent vertex is absorbed by a slit map that
//! zips the hyperbolic geodesic from the origin to the vertex image onto the
//! real axis; a final Mobius-plus-square closes the curve, and a Cayley-type
//! map carries the half-plane onto the disk with the anchor at 0.

use crate::affine::cross;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Square root with values in the closed upper half-plane (the argument is
/// taken in [0, 2pi) before halving).
#[inline]
fn upper_sqrt(w: Complex64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

/// `m_c(z) = z/(1 - z/c)`; `None` stands for `c = infinity` where the map is
/// the identity. Fixes 0, maps the real line to itself and the upper
/// half-plane onto itself.
#[inline]
fn mobius_c(c: Option<f64>, z: Complex64) -> Complex64 {
    match c {
        None => z,
        Some(c) => z / (1.0 - z / c),
    }
}

/// `sqrt(m^2 + h^2)/h` evaluated as `(m/h) * sqrt(1 + (h/m)^2)` with the
/// principal branch; this form is continuous up to the real axis from inside
/// the upper half-plane and therefore maps already-zipped boundary points
/// correctly. The division by `h` renormalizes the zipped interval to
/// `[-1, 1]` each stage, keeping intermediate magnitudes of order one (the
/// raw composition grows exponentially in the stage count and overflows for
/// polygons of a few hundred vertices).
#[inline]
fn slit_open(m: Complex64, h: f64) -> Complex64 {
    if m.re == 0.0 && m.im == 0.0 {
        // Base of the slit: the processed boundary continues on the right.
        return Complex64::new(1.0, 0.0);
    }
    let r = Complex64::new(h, 0.0) / m;
    m / h * (Complex64::new(1.0, 0.0) + r * r).sqrt()
}

#[inline]
fn slit_open_real(m: f64, h: f64) -> f64 {
    if m == 0.0 {
        return 1.0;
    }
    let r = h / m;
    m / h * (1.0 + r * r).sqrt()
}

/// One stage of the composition.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Stage {
    /// `z -> sqrt(M(z))` where the Mobius map `M` sends `pole -> inf`,
    /// `unit -> 1`, `zero -> 0`. The boundary arc through the three points
    /// is carried to the positive real axis and the square root opens the
    /// cut plane into the upper half-plane, so the curve continues from the
    /// origin perpendicular to the axis (a two-point root leaves it nearly
    /// tangent and ruins the geodesic approximation of the next arc).
    InitialRoot {
        pole: Complex64,
        unit: Complex64,
        zero: Complex64,
    },
    /// `z -> sqrt(m_c(z)^2 + h^2)/h`, zipping the geodesic from 0 to the
    /// point with parameters (c, h); the trailing dilation keeps coordinates
    /// of order one. `c = None` is the vertical-geodesic case.
    GeodesicSlit { c: Option<f64>, h: f64 },
    /// `z -> (m_c(z))^2`, closing the remaining boundary arc.
    FinalClose { c: Option<f64> },
    /// `z -> z - dx`: re-bases a vertex whose image landed on the real axis
    /// (the polygon continues straight through the current base point, so
    /// there is no geodesic to zip).
    Shift { dx: f64 },
    /// `z -> (z - anchor)/(z - conj(anchor))`, half-plane onto disk.
    HalfPlaneToDisk { anchor: Complex64 },
    /// `z -> e^{i rotation} (z - center)/(1 - conj(center) z)`.
    DiskAutomorphism { center: Complex64, rotation: f64 },
    /// `z -> factor * z`.
    Scale { factor: f64 },
}

impl Stage {
    #[inline]
    pub fn apply(&self, z: Complex64) -> Complex64 {
        match *self {
            Stage::InitialRoot { pole, unit, zero } => {
                upper_sqrt((z - zero) / (z - pole) * ((unit - pole) / (unit - zero)))
            }
            Stage::GeodesicSlit { c, h } => slit_open(mobius_c(c, z), h),
            Stage::Shift { dx } => z - dx,
            Stage::FinalClose { c } => {
                let m = mobius_c(c, z);
                m * m
            }
            Stage::HalfPlaneToDisk { anchor } => (z - anchor) / (z - anchor.conj()),
            Stage::DiskAutomorphism { center, rotation } => {
                Complex64::from_polar(1.0, rotation) * (z - center)
                    / (Complex64::new(1.0, 0.0) - center.conj() * z)
            }
            Stage::Scale { factor } => factor * z,
        }
    }
}

/// Geodesic parameters of a point `a` in the open upper half-plane: the
/// hyperbolic geodesic from 0 to `a` lies on the circle through 0 orthogonal
/// to the real axis hitting it again at `c = |a|^2 / Re(a)` (infinite when
/// `Re(a) = 0`), and `m_c` carries it onto the vertical segment `[0, i*h]`
/// with `h = |m_c(a)| = |a|^2 / Im(a)`.
pub fn geodesic_parameters(a: Complex64) -> Result<(Option<f64>, f64)> {
    if !(a.im > 0.0) {
        return Err(Error::Domain(format!("point {a} not in the upper half-plane")));
    }
    let c = if a.re == 0.0 {
        None
    } else {
        Some(a.norm_sqr() / a.re)
    };
    let h = a.norm_sqr() / a.im;
    debug_assert!(mobius_c(c, a).re.abs() <= 1e-10 * h.max(1.0));
    Ok((c, h))
}

/// Position of a boundary point while the construction tracks it along the
/// extended real line.
#[derive(Debug, Clone, Copy)]
enum Tracked {
    Interior(Complex64),
    Boundary(f64),
    Infinity,
}

impl Tracked {
    fn shift(self, dx: f64) -> Tracked {
        match self {
            Tracked::Interior(z) => Tracked::Interior(z - dx),
            Tracked::Boundary(x) => Tracked::Boundary(x - dx),
            Tracked::Infinity => Tracked::Infinity,
        }
    }

    fn slit(self, c: Option<f64>, h: f64) -> Tracked {
        match self {
            Tracked::Interior(z) => Tracked::Interior(slit_open(mobius_c(c, z), h)),
            Tracked::Boundary(x) => match c {
                Some(c) if x == c => Tracked::Infinity,
                _ => {
                    let m = match c {
                        None => x,
                        Some(c) => x / (1.0 - x / c),
                    };
                    if m.is_infinite() {
                        Tracked::Infinity
                    } else {
                        Tracked::Boundary(slit_open_real(m, h))
                    }
                }
            },
            Tracked::Infinity => match c {
                None => Tracked::Infinity,
                Some(c) => Tracked::Boundary(slit_open_real(-c, h)),
            },
        }
    }

    fn final_close(self, c: Option<f64>) -> Tracked {
        match self {
            Tracked::Interior(z) => {
                let m = mobius_c(c, z);
                Tracked::Interior(m * m)
            }
            Tracked::Boundary(x) => match c {
                Some(c) if x == c => Tracked::Infinity,
                _ => {
                    let m = match c {
                        None => x,
                        Some(c) => x / (1.0 - x / c),
                    };
                    if m.is_infinite() {
                        Tracked::Infinity
                    } else {
                        Tracked::Boundary(m * m)
                    }
                }
            },
            Tracked::Infinity => match c {
                None => Tracked::Infinity,
                Some(c) => Tracked::Boundary(c * c),
            },
        }
    }

    fn to_disk(self, anchor: Complex64) -> Complex64 {
        match self {
            Tracked::Interior(z) => (z - anchor) / (z - anchor.conj()),
            Tracked::Boundary(x) => {
                let z = Complex64::new(x, 0.0);
                (z - anchor) / (z - anchor.conj())
            }
            Tracked::Infinity => Complex64::new(1.0, 0.0),
        }
    }
}

/// Conformal map from a polygon interior onto the unit disk, represented as
/// an ordered list of elementary stages. Immutable after construction; safe
/// to apply concurrently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZipperMap {
    stages: Vec<Stage>,
    vertex_images: Vec<Complex64>,
    /// Indices of input vertices skipped as duplicates of their predecessor.
    skipped: Vec<usize>,
}

/// Build the zipper map for a positively oriented simple polygon with the
/// given interior anchor; the anchor maps exactly to 0.
pub fn geodesic_zipper_build(vertices: &[Complex64], anchor: Complex64) -> Result<ZipperMap> {
    let n = vertices.len();
    if n < 4 {
        return Err(Error::Domain(format!("need at least 4 vertices, got {n}")));
    }
    let mut area2 = 0.0;
    for k in 0..n {
        area2 += cross(vertices[k], vertices[(k + 1) % n]);
    }
    if !(area2 > 0.0) {
        return Err(Error::Domain(
            "polygon must be positively oriented (counterclockwise)".into(),
        ));
    }

    if vertices[0] == vertices[1] || vertices[1] == vertices[2] || vertices[0] == vertices[2] {
        return Err(Error::Degenerate(
            "coincident vertices among the first three".into(),
        ));
    }
    let first = Stage::InitialRoot {
        pole: vertices[0],
        unit: vertices[1],
        zero: vertices[2],
    };
    let mut stages = vec![first];
    let mut skipped = Vec::new();

    let mut tracked: Vec<Tracked> = Vec::with_capacity(n);
    tracked.push(Tracked::Infinity);
    tracked.push(Tracked::Boundary(1.0));
    tracked.push(Tracked::Boundary(0.0));
    for v in &vertices[3..] {
        tracked.push(Tracked::Interior(first.apply(*v)));
    }
    let mut anchor_img = first.apply(anchor);

    for k in 3..n {
        let a = match tracked[k] {
            Tracked::Interior(a) => a,
            _ => unreachable!("unprocessed vertex tracked as boundary"),
        };
        if !a.is_finite() {
            return Err(Error::ZipperGeometry {
                stage: k,
                detail: "vertex image not finite".into(),
            });
        }
        if a.norm() < 1e-12 {
            // Collided with the current base point (duplicate input vertex):
            // skip the stage, the vertex inherits its neighbor's image.
            skipped.push(k);
            tracked[k] = Tracked::Boundary(0.0);
            continue;
        }
        if a.im <= 1e-9 * a.norm() {
            if a.im < -1e-9 * a.norm() {
                return Err(Error::ZipperGeometry {
                    stage: k,
                    detail: format!("vertex image {a} left the upper half-plane"),
                });
            }
            // The boundary continues straight through the base point; no
            // geodesic to zip, just re-base at the vertex.
            let dx = a.re;
            stages.push(Stage::Shift { dx });
            for t in tracked.iter_mut() {
                *t = t.shift(dx);
            }
            tracked[k] = Tracked::Boundary(0.0);
            anchor_img -= dx;
            continue;
        }
        let (c, h) = geodesic_parameters(a)?;
        stages.push(Stage::GeodesicSlit { c, h });
        for t in tracked.iter_mut() {
            *t = t.slit(c, h);
        }
        tracked[k] = Tracked::Boundary(0.0); // tip of the zipped geodesic
        anchor_img = slit_open(mobius_c(c, anchor_img), h);
        if !anchor_img.is_finite() || anchor_img.im <= 0.0 {
            return Err(Error::ZipperGeometry {
                stage: k,
                detail: "anchor left the upper half-plane".into(),
            });
        }
    }

    let c_close = match tracked[0] {
        Tracked::Boundary(x) => {
            if x.abs() < 1e-12 {
                return Err(Error::ZipperGeometry {
                    stage: n,
                    detail: "degenerate closing arc: endpoint collided with the base".into(),
                });
            }
            Some(x)
        }
        Tracked::Infinity => None,
        Tracked::Interior(_) => unreachable!(),
    };
    stages.push(Stage::FinalClose { c: c_close });
    for t in tracked.iter_mut() {
        *t = t.final_close(c_close);
    }
    {
        let m = mobius_c(c_close, anchor_img);
        anchor_img = m * m;
    }
    if !anchor_img.is_finite() || anchor_img.im <= 0.0 {
        return Err(Error::ZipperGeometry {
            stage: n,
            detail: format!("anchor image {anchor_img} not interior after closing"),
        });
    }

    stages.push(Stage::HalfPlaneToDisk { anchor: anchor_img });
    let vertex_images: Vec<Complex64> = tracked.iter().map(|t| t.to_disk(anchor_img)).collect();
    stages.push(Stage::DiskAutomorphism {
        center: Complex64::new(0.0, 0.0),
        rotation: 0.0,
    });
    stages.push(Stage::Scale { factor: 1.0 });

    Ok(ZipperMap {
        stages,
        vertex_images,
        skipped,
    })
}

impl ZipperMap {
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn vertex_images(&self) -> &[Complex64] {
        &self.vertex_images
    }

    pub fn skipped_vertices(&self) -> &[usize] {
        &self.skipped
    }

    /// Apply the composition; O(number of stages).
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let mut w = z;
        for s in &self.stages {
            w = s.apply(w);
        }
        w
    }

    fn rotation_scale_slots(&mut self) -> (&mut f64, &mut f64) {
        let n = self.stages.len();
        let (head, tail) = self.stages.split_at_mut(n - 1);
        let rot = match &mut head[n - 2] {
            Stage::DiskAutomorphism { rotation, .. } => rotation,
            _ => unreachable!("stage layout"),
        };
        let scale = match &mut tail[0] {
            Stage::Scale { factor } => factor,
            _ => unreachable!("stage layout"),
        };
        (rot, scale)
    }

    /// Post-compose multiplication by `r`; the anchor image stays 0.
    pub fn scale_to_radius(&self, r: f64) -> Result<ZipperMap> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("scale radius {r} must be positive")));
        }
        let mut out = self.clone();
        {
            let (_, scale) = out.rotation_scale_slots();
            *scale *= r;
        }
        for w in out.vertex_images.iter_mut() {
            *w *= r;
        }
        Ok(out)
    }

    /// Post-compose the rotation that makes the image of the given vertex
    /// positive real.
    pub fn rotate_vertex_positive_real(&self, vertex_index: usize) -> Result<ZipperMap> {
        let v = *self
            .vertex_images
            .get(vertex_index)
            .ok_or_else(|| Error::Domain(format!("vertex index {vertex_index} out of range")))?;
        if v.norm() == 0.0 {
            return Err(Error::Normalization(format!(
                "vertex {vertex_index} image is 0, cannot normalize"
            )));
        }
        let theta = -v.arg();
        let mut out = self.clone();
        {
            let (rot, _) = out.rotation_scale_slots();
            *rot += theta;
        }
        let phase = Complex64::from_polar(1.0, theta);
        for w in out.vertex_images.iter_mut() {
            *w *= phase;
        }
        Ok(out)
    }
}
