//! The disk algorithm: seed the innermost ring through the elliptic map,
//! extend outward ring by ring with affine mu-conformal interpolants (Step 1),
//! correct each new ring back to a round disk with a zipper conformal map
//! (Step 2), and push the correction forward to the retained image points
//! (Step 3). The result is a piecewise-linear mu-conformal self-map of the
//! disk normalized by f(0) = 0 and a positive-real boundary anchor.

use crate::affine::{
    affine_from_triangles, cross, interpolate_two_points, is_skewed, GeneralAffine, Triangle,
};
use crate::beltrami::{triangle_average, BeltramiField};
use crate::conformal::{geodesic_zipper_build, ZipperMap};
use crate::elliptic::FirstRingSeed;
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, max_ratio_bound, MeshConfig, RingMesh, TriangleId, TriangleKind};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::time::Instant;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Which image points Step 3 keeps updated. The boundary ring is always
/// retained. `PositiveRealRay` keeps the vertex on the positive real axis of
/// every even ring, which is all the radial experiment needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Retention {
    Full,
    Submesh { rings: usize, spokes: usize },
    BoundaryOnly,
    PositiveRealRay,
}

/// Normalization mode: rotate each produced ring so its designated vertex is
/// positive real, or apply a single terminal rotation. Both yield the same
/// final map up to roundoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    PerRingRotation,
    FinalOnly,
}

/// What to do when the ring extension is not applicable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkewPolicy {
    ErrorOnSkew,
    WarnOnSkew,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mesh: MeshConfig,
    pub retention: Retention,
    pub quadrature_order: u8,
    pub normalization: Normalization,
    pub skew_policy: SkewPolicy,
}

impl SolverConfig {
    pub fn new(mesh: MeshConfig) -> Self {
        SolverConfig {
            mesh,
            retention: Retention::Full,
            quadrature_order: 3,
            normalization: Normalization::PerRingRotation,
            skew_policy: SkewPolicy::ErrorOnSkew,
        }
    }

    pub fn retention(mut self, retention: Retention) -> Self {
        self.retention = retention;
        self
    }

    pub fn quadrature_order(mut self, order: u8) -> Self {
        self.quadrature_order = order;
        self
    }

    pub fn normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn skew_policy(mut self, policy: SkewPolicy) -> Self {
        self.skew_policy = policy;
        self
    }
}

/// One ring extension step: `w~_k = B[mu_k; z_k, z_{k+1}; w_k, w_{k+1}](z'_k)`
/// with indices modulo N.
pub fn ring_extension(
    inner_z: &[Complex64],
    outer_z: &[Complex64],
    inner_w: &[Complex64],
    mu: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = inner_z.len();
    if n < 3 || outer_z.len() != n || inner_w.len() != n || mu.len() != n {
        return Err(Error::Domain("ring arrays must share a length >= 3".into()));
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let k1 = (k + 1) % n;
        if mu[k].norm() >= 1.0 {
            return Err(Error::Domain(format!("|mu_{k}| = {} >= 1", mu[k].norm())));
        }
        if inner_w[k] == inner_w[k1] {
            return Err(Error::Degenerate(format!(
                "coincident image vertices at edge {k}"
            )));
        }
        let b = interpolate_two_points(mu[k], inner_z[k], inner_z[k1], inner_w[k], inner_w[k1])?;
        out.push(b.apply(outer_z[k]));
    }
    Ok(out)
}

/// Applicability diagnosis of one ring extension: per-edge skew flags for the
/// image triangles `(w_k, w_{k+1}, w~_k)` and simplicity of the produced
/// polygon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApplicabilityReport {
    pub skew: Vec<bool>,
    pub simple: bool,
}

impl ApplicabilityReport {
    pub fn skew_count(&self) -> usize {
        self.skew.iter().filter(|s| **s).count()
    }

    pub fn applicable(&self) -> bool {
        self.simple && self.skew_count() == 0
    }
}

pub fn check_applicability(inner_w: &[Complex64], outer_w_tilde: &[Complex64]) -> ApplicabilityReport {
    let n = inner_w.len();
    let skew = (0..n)
        .map(|k| {
            let k1 = (k + 1) % n;
            is_skewed(inner_w[k], inner_w[k1], outer_w_tilde[k]).unwrap_or(true)
        })
        .collect();
    ApplicabilityReport {
        skew,
        simple: polygon_is_simple(outer_w_tilde),
    }
}

fn on_segment(p: Complex64, q: Complex64, r: Complex64) -> bool {
    r.re >= p.re.min(q.re) && r.re <= p.re.max(q.re) && r.im >= p.im.min(q.im) && r.im <= p.im.max(q.im)
}

fn segments_intersect(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Pairwise sweep over non-adjacent edges of the closed polygon.
fn polygon_is_simple(poly: &[Complex64]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            // Skip edge pairs that legitimately share an endpoint.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Per-ring trace emitted to an observer: extension output, corrected ring
/// and skew report.
#[derive(Debug, Clone, Serialize)]
pub struct RingTrace {
    pub ring: usize,
    pub r: f64,
    pub w_tilde: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub skew: Vec<bool>,
    pub simple: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StepTimings {
    pub seed_s: f64,
    pub step1_s: f64,
    pub step2_s: f64,
    pub step3_s: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub skew_count: usize,
    pub per_ring_skew: Vec<usize>,
    pub nonsimple_rings: Vec<usize>,
    /// Max over retained vertices of |w|/r - 1, per produced ring and overall.
    pub per_ring_modulus_drift: Vec<f64>,
    pub max_modulus_drift: f64,
    pub orientation_violations: usize,
    pub warnings: Vec<String>,
    pub timings: StepTimings,
}

/// The solved piecewise-linear map: retained image vertices, the seed map and
/// correction chain for evaluation inside the mesh hole, and diagnostics.
pub struct PiecewiseLinearResult {
    mesh: RingMesh,
    config: SolverConfig,
    mask: Vec<bool>,
    images: Vec<Complex64>,
    seed: FirstRingSeed,
    seed_rotation: f64,
    corrections: Vec<ZipperMap>,
    final_rotation: f64,
    diagnostics: Diagnostics,
}

fn retention_mask(mesh: &RingMesh, retention: Retention) -> Result<Vec<bool>> {
    let m = mesh.ring_count();
    let n = mesh.n();
    let mut mask = vec![false; m * n];
    match retention {
        Retention::Full => mask.fill(true),
        Retention::BoundaryOnly => {}
        Retention::PositiveRealRay => {
            for j in (2..=m).step_by(2) {
                mask[(j - 1) * n + mesh.designated_index(j)] = true;
            }
        }
        Retention::Submesh { rings, spokes } => {
            if rings == 0 || rings > m {
                return Err(Error::Domain(format!(
                    "submesh rings {rings} outside 1..={m}"
                )));
            }
            if spokes == 0 || spokes > n || n % spokes != 0 {
                return Err(Error::Domain(format!(
                    "submesh spokes {spokes} must divide {n}"
                )));
            }
            let stride_k = n / spokes;
            let stride_j = (m / rings).max(1);
            for t in 0..rings {
                let j = m - t * stride_j;
                for k in (0..n).step_by(stride_k) {
                    mask[(j - 1) * n + k] = true;
                }
            }
        }
    }
    // The boundary ring is always retained in full.
    for k in 0..n {
        mask[(m - 1) * n + k] = true;
    }
    Ok(mask)
}

/// Run the disk algorithm for the given field.
pub fn solve(config: &SolverConfig, field: &dyn BeltramiField) -> Result<PiecewiseLinearResult> {
    solve_with_observer(config, field, |_| {})
}

pub fn solve_with_observer<F: FnMut(&RingTrace)>(
    config: &SolverConfig,
    field: &dyn BeltramiField,
    mut observer: F,
) -> Result<PiecewiseLinearResult> {
    let mesh = build_mesh(&config.mesh);
    let m = mesh.ring_count();
    let n = mesh.n();
    let mut diagnostics = Diagnostics::default();

    // Ratio admissibility against the certified sup of |mu|.
    let bound = max_ratio_bound(n, field.sup_bound())?;
    if m > 1 && config.mesh.ratio() >= bound {
        let msg = format!(
            "ring ratio {} exceeds the non-skew bound {} at kappa = {}",
            config.mesh.ratio(),
            bound,
            field.sup_bound()
        );
        match config.skew_policy {
            SkewPolicy::ErrorOnSkew => return Err(Error::Domain(msg)),
            SkewPolicy::WarnOnSkew => diagnostics.warnings.push(msg),
        }
    }

    let mask = retention_mask(&mesh, config.retention)?;
    let mut images = vec![Complex64::new(f64::NAN, f64::NAN); m * n];
    let mut active: Vec<usize> = Vec::new();

    // Seed the innermost ring; mu0 is the centroid sample of the hole.
    let t0 = Instant::now();
    let mu0 = field.eval(ZERO);
    let seed = FirstRingSeed::new(mu0, mesh.radius(1))?;
    let mut current: Vec<Complex64> = mesh
        .ring_args(1)
        .iter()
        .map(|&t| seed.apply(Complex64::from_polar(mesh.radius(1), t)))
        .collect::<Result<_>>()?;
    let mut seed_rotation = 0.0;
    if config.normalization == Normalization::PerRingRotation {
        let d = mesh.designated_index(1);
        if current[d].norm() == 0.0 {
            return Err(Error::Normalization("seed vertex at 0".into()));
        }
        seed_rotation = -current[d].arg();
        let phase = Complex64::from_polar(1.0, seed_rotation);
        for w in current.iter_mut() {
            *w *= phase;
        }
    }
    store_ring(&mut images, &mut active, &mask, n, 1, &current);
    diagnostics
        .per_ring_modulus_drift
        .push(ring_drift(&current, mesh.radius(1)));
    diagnostics.timings.seed_s = t0.elapsed().as_secs_f64();

    let mut corrections: Vec<ZipperMap> = Vec::with_capacity(m.saturating_sub(1));

    for j in 1..m {
        // Step 1: extend ring j to ring j+1.
        let t1 = Instant::now();
        let inner_z = mesh.ring(j);
        let outer_z = mesh.ring(j + 1);
        let mu: Vec<Complex64> = (0..n)
            .map(|k| {
                let tri = mesh.extension_triangle(j, k);
                triangle_average(field, &tri, config.quadrature_order)
            })
            .collect();
        let w_tilde = ring_extension(&inner_z, &outer_z, &current, &mu).map_err(|e| match e {
            Error::Degenerate(d) => Error::RingGeometry {
                ring: j + 1,
                skewed: 0,
                simple: true,
                detail: d,
            },
            other => other,
        })?;
        diagnostics.timings.step1_s += t1.elapsed().as_secs_f64();

        let report = check_applicability(&current, &w_tilde);
        let skewed = report.skew_count();
        diagnostics.per_ring_skew.push(skewed);
        diagnostics.skew_count += skewed;
        if !report.simple {
            diagnostics.nonsimple_rings.push(j + 1);
        }
        if !report.applicable() {
            let msg = format!(
                "ring extension not applicable at ring {} ({} skewed, simple: {})",
                j + 1,
                skewed,
                report.simple
            );
            match config.skew_policy {
                SkewPolicy::ErrorOnSkew => {
                    return Err(Error::RingGeometry {
                        ring: j + 1,
                        skewed,
                        simple: report.simple,
                        detail: "ring extension not applicable".into(),
                    })
                }
                SkewPolicy::WarnOnSkew => diagnostics.warnings.push(msg),
            }
        }

        // Step 2: conformal correction onto the disk of radius r_{j+1}.
        let t2 = Instant::now();
        let zipper = geodesic_zipper_build(&w_tilde, ZERO)
            .map_err(|e| attach_ring(e, j + 1))?
            .scale_to_radius(mesh.radius(j + 1))?;
        let zipper = match config.normalization {
            Normalization::PerRingRotation => {
                zipper.rotate_vertex_positive_real(mesh.designated_index(j + 1))?
            }
            Normalization::FinalOnly => zipper,
        };
        let new_ring = zipper.vertex_images().to_vec();
        diagnostics.timings.step2_s += t2.elapsed().as_secs_f64();

        // Step 3: push the correction forward to retained inner points.
        let t3 = Instant::now();
        if active.len() >= 256 {
            let updates: Vec<(usize, Complex64)> = active
                .par_iter()
                .map(|&idx| (idx, zipper.apply(images[idx])))
                .collect();
            for (idx, w) in updates {
                images[idx] = w;
            }
        } else {
            for &idx in &active {
                images[idx] = zipper.apply(images[idx]);
            }
        }
        diagnostics.timings.step3_s += t3.elapsed().as_secs_f64();

        observer(&RingTrace {
            ring: j + 1,
            r: mesh.radius(j + 1),
            w_tilde,
            w: new_ring.clone(),
            skew: report.skew,
            simple: report.simple,
        });

        current = new_ring;
        store_ring(&mut images, &mut active, &mask, n, j + 1, &current);
        diagnostics
            .per_ring_modulus_drift
            .push(ring_drift(&current, mesh.radius(j + 1)));
        corrections.push(zipper);
    }

    // Terminal normalization: the image of the boundary vertex of maximal
    // real part (the vertex at 1 when the ring count is even) becomes
    // positive real, fixing f(1) = 1 up to mesh resolution.
    let k_star = (0..n)
        .map(|k| (k, mesh.vertex(m, k as i64).re))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    let anchor_image = images[(m - 1) * n + k_star];
    if anchor_image.norm() == 0.0 {
        return Err(Error::Normalization("boundary anchor image is 0".into()));
    }
    let final_rotation = -anchor_image.arg();
    let phase = Complex64::from_polar(1.0, final_rotation);
    for &idx in &active {
        images[idx] *= phase;
    }

    let mut result = PiecewiseLinearResult {
        mesh,
        config: *config,
        mask,
        images,
        seed,
        seed_rotation,
        corrections,
        final_rotation,
        diagnostics,
    };
    result.diagnostics.max_modulus_drift = result
        .diagnostics
        .per_ring_modulus_drift
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    result.diagnostics.orientation_violations = result.count_orientation_violations();
    Ok(result)
}

fn attach_ring(e: Error, ring: usize) -> Error {
    match e {
        Error::ZipperGeometry { stage, detail } => Error::RingGeometry {
            ring,
            skewed: 0,
            simple: true,
            detail: format!("zipper stage {stage}: {detail}"),
        },
        other => other,
    }
}

fn store_ring(
    images: &mut [Complex64],
    active: &mut Vec<usize>,
    mask: &[bool],
    n: usize,
    j: usize,
    ring: &[Complex64],
) {
    for k in 0..n {
        let idx = (j - 1) * n + k;
        if mask[idx] {
            images[idx] = ring[k];
            active.push(idx);
        }
    }
}

fn ring_drift(ring: &[Complex64], r: f64) -> f64 {
    ring.iter()
        .map(|w| (w.norm() / r - 1.0).abs())
        .fold(0.0, f64::max)
}

impl PiecewiseLinearResult {
    pub fn mesh(&self) -> &RingMesh {
        &self.mesh
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn is_retained(&self, j: usize, k: usize) -> bool {
        self.mask[(j - 1) * self.mesh.n() + k]
    }

    /// Image of vertex `(j, k)` if retained.
    pub fn image(&self, j: usize, k: usize) -> Option<Complex64> {
        let idx = (j - 1) * self.mesh.n() + k;
        if self.mask[idx] {
            Some(self.images[idx])
        } else {
            None
        }
    }

    /// Boundary ring images (always retained).
    pub fn boundary_images(&self) -> &[Complex64] {
        let n = self.mesh.n();
        let m = self.mesh.ring_count();
        &self.images[(m - 1) * n..m * n]
    }

    /// All retained `(ring, vertex, image)` triples in storage order.
    pub fn retained(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let n = self.mesh.n();
        self.mask.iter().enumerate().filter_map(move |(idx, &keep)| {
            if keep {
                Some((idx / n + 1, idx % n, self.images[idx]))
            } else {
                None
            }
        })
    }

    /// Affine map of one mesh triangle (domain triangle onto its image).
    pub fn triangle_map(&self, id: TriangleId) -> Result<GeneralAffine> {
        let dom = self.mesh.triangle(id);
        let img = self.image_triangle(id)?;
        affine_from_triangles(&dom, &img)
    }

    fn image_triangle(&self, id: TriangleId) -> Result<Triangle> {
        let j = id.ring_pair;
        let k = id.k;
        let n = self.mesh.n();
        let k1 = (k + 1) % n;
        let get = |jj: usize, kk: usize| {
            self.image(jj, kk).ok_or_else(|| {
                Error::Retention(format!("vertex ({jj}, {kk}) was not retained"))
            })
        };
        let (a, b, c) = match id.kind {
            TriangleKind::Outward => (get(j, k)?, get(j + 1, k)?, get(j, k1)?),
            TriangleKind::Inward => (get(j + 1, k)?, get(j + 1, k1)?, get(j, k1)?),
        };
        Ok(Triangle { v0: a, v1: b, v2: c })
    }

    fn count_orientation_violations(&self) -> usize {
        self.mesh
            .triangle_ids()
            .filter(|&id| match self.image_triangle(id) {
                Ok(t) => !t.is_positively_oriented(),
                Err(_) => false,
            })
            .count()
    }

    /// Beltrami derivative of every mesh triangle's affine map; requires the
    /// triangle's vertices to be retained.
    pub fn per_triangle_beltrami(&self) -> Result<Vec<(TriangleId, Complex64)>> {
        self.mesh
            .triangle_ids()
            .map(|id| Ok((id, self.triangle_map(id)?.beltrami()?)))
            .collect()
    }

    /// Evaluate the piecewise-linear map. Points inside the mesh hole go
    /// through the seed composite and the correction chain; mesh points are
    /// interpolated by their containing triangle's affine map.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        if r > 1.0 + 1e-9 {
            return Err(Error::Domain(format!("|z| = {r} outside the closed disk")));
        }
        if r < self.mesh.radius(1) {
            let mut w = self.seed.apply(z)?;
            w *= Complex64::from_polar(1.0, self.seed_rotation);
            for c in &self.corrections {
                w = c.apply(w);
            }
            return Ok(w * Complex64::from_polar(1.0, self.final_rotation));
        }
        let id = self.locate_triangle(z)?;
        Ok(self.triangle_map(id)?.apply(z))
    }

    /// O(1) containing-triangle lookup from (log-radius, argument).
    fn locate_triangle(&self, z: Complex64) -> Result<TriangleId> {
        let m = self.mesh.ring_count();
        let n = self.mesh.n();
        if m < 2 {
            return Err(Error::Domain("mesh has a single ring, no triangles".into()));
        }
        let r = z.norm();
        let lnb = self.config.mesh.ratio().ln();
        let mut j = ((m as f64 + r.ln() / lnb).floor() as i64).clamp(1, m as i64 - 1) as usize;
        while j > 1 && r < self.mesh.radius(j) {
            j -= 1;
        }
        while j < m - 1 && r > self.mesh.radius(j + 1) {
            j += 1;
        }
        let s = (z.arg().rem_euclid(TAU) / TAU * n as f64 - j as f64 * 0.5).rem_euclid(n as f64);
        let k0 = (s.floor() as usize).min(n - 1);
        let mut best: Option<(f64, TriangleId)> = None;
        for dk in [0i64, -1, 1] {
            let k = (k0 as i64 + dk).rem_euclid(n as i64) as usize;
            for kind in [TriangleKind::Outward, TriangleKind::Inward] {
                let id = TriangleId {
                    ring_pair: j,
                    k,
                    kind,
                };
                let t = self.mesh.triangle(id);
                let q = containment_quality(&t, z);
                if best.map_or(true, |(bq, _)| q > bq) {
                    best = Some((q, id));
                }
            }
        }
        let (q, id) = best.unwrap();
        if q < -0.25 {
            return Err(Error::Domain(format!(
                "could not locate a mesh triangle containing {z}"
            )));
        }
        Ok(id)
    }

    /// Post-compose the exterior-ellipse map pointwise over the retained
    /// images; with aspect `alpha` the unit circle goes to the ellipse with
    /// semi-axes 1 and 1/alpha and z = 1 stays fixed.
    pub fn exterior_compose(&self, alpha: f64) -> Result<Vec<(usize, usize, Complex64)>> {
        self.retained()
            .map(|(j, k, w)| Ok((j, k, exterior_ellipse_map(w, alpha)?)))
            .collect()
    }
}

/// Smallest normalized barycentric coordinate of `z` in the triangle;
/// nonnegative inside, mildly negative in the circular slivers just outside
/// a chord (where the nearest triangle's map extrapolates).
fn containment_quality(t: &Triangle, z: Complex64) -> f64 {
    let area2 = t.doubled_signed_area();
    let b0 = cross(t.v1 - z, t.v2 - z) / area2;
    let b1 = cross(t.v2 - z, t.v0 - z) / area2;
    let b2 = cross(t.v0 - z, t.v1 - z) / area2;
    b0.min(b1).min(b2)
}

/// `h(z) = ((1+alpha) - (1-alpha) z^2) / (2 alpha z)`: conformal from the
/// unit disk onto the exterior of an ellipse with aspect ratio `alpha`,
/// sending 0 to infinity and fixing 1.
pub fn exterior_ellipse_map(z: Complex64, alpha: f64) -> Result<Complex64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Domain(format!("aspect ratio {alpha} outside (0, 1)")));
    }
    if z.norm() < 1e-9 {
        return Err(Error::Pole(format!("point {z} too close to the pole at 0")));
    }
    Ok(((1.0 + alpha) - (1.0 - alpha) * z * z) / (2.0 * alpha * z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::{constant_mu, sectorial_mu};
    use crate::mesh::Table1Variant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ring_extension_conformal_case_is_exact() {
        let cfg = MeshConfig::new(8, 4, 1.5).unwrap();
        let mesh = build_mesh(&cfg);
        let inner = mesh.ring(2);
        let outer = mesh.ring(3);
        let mu = vec![ZERO; 8];
        let out = ring_extension(&inner, &outer, &inner, &mu).unwrap();
        for k in 0..8 {
            assert!((out[k] - outer[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn ring_extension_matches_direct_interpolant() {
        // One edge at (M,N) = (4,8), constant mu = 0.4, hand-built B.
        let cfg = MeshConfig::new(8, 4, 1.4).unwrap();
        let mesh = build_mesh(&cfg);
        let inner = mesh.ring(1);
        let outer = mesh.ring(2);
        let mu = vec![c(0.4, 0.0); 8];
        let out = ring_extension(&inner, &outer, &inner, &mu).unwrap();

        // Independent arithmetic: solve a*L(z) + b through the edge k = 0.
        let l = |z: Complex64| z + 0.4 * z.conj();
        let a = (inner[1] - inner[0]) / (l(inner[1]) - l(inner[0]));
        let b = inner[0] - a * l(inner[0]);
        let expect = a * l(outer[0]) + b;
        assert!((out[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn ring_extension_rotation_equivariance() {
        let cfg = MeshConfig::new(8, 4, 1.4).unwrap();
        let mesh = build_mesh(&cfg);
        let inner = mesh.ring(1);
        let outer = mesh.ring(2);
        let mu0 = c(0.3, 0.0);
        let base = ring_extension(&inner, &outer, &inner, &vec![mu0; 8]).unwrap();

        let phi = TAU / 8.0;
        let rot = Complex64::from_polar(1.0, phi);
        let inner_r: Vec<_> = inner.iter().map(|z| z * rot).collect();
        let outer_r: Vec<_> = outer.iter().map(|z| z * rot).collect();
        // mu transforms by e^{-2 i phi} under rotation of the data.
        let mu_r = vec![mu0 * Complex64::from_polar(1.0, -2.0 * phi); 8];
        let out_r = ring_extension(&inner_r, &outer_r, &inner_r, &mu_r).unwrap();
        for k in 0..8 {
            assert!((out_r[k] - base[k] * rot).norm() < 1e-12);
        }
    }

    #[test]
    fn ring_extension_degenerate_edge() {
        let cfg = MeshConfig::new(8, 4, 1.4).unwrap();
        let mesh = build_mesh(&cfg);
        let inner = mesh.ring(1);
        let outer = mesh.ring(2);
        let mut w = inner.clone();
        w[3] = w[4];
        let out = ring_extension(&inner, &outer, &w, &vec![ZERO; 8]);
        assert!(matches!(out, Err(Error::Degenerate(_))));
    }

    #[test]
    fn applicability_cases() {
        // Concentric similar polygons: applicable.
        let inner: Vec<_> = (0..8)
            .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / 8.0))
            .collect();
        let outer: Vec<_> = (0..8)
            .map(|k| Complex64::from_polar(1.3, TAU * (k as f64 + 0.5) / 8.0))
            .collect();
        let report = check_applicability(&inner, &outer);
        assert!(report.applicable());
        assert_eq!(report.skew_count(), 0);

        // One outer vertex dragged azimuthally past its neighbor: the outer
        // polygon stops being simple.
        let mut bad = outer.clone();
        bad[3] = Complex64::from_polar(1.3, TAU * (4.6 + 0.5) / 8.0);
        let report = check_applicability(&inner, &bad);
        assert!(!report.simple);
        assert!(!report.applicable());

        // Apex exactly above a base endpoint: right angle, not skewed.
        let report = check_applicability(
            &vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 2.0), c(0.0, 2.0)],
            &vec![c(0.0, -1.0), c(1.0, -1.5), c(2.0, 2.0), c(-1.0, 2.0)],
        );
        assert_eq!(report.skew[0], is_skewed(c(0.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)).unwrap());
    }

    #[test]
    fn identity_field_smoke() {
        let field = constant_mu(ZERO).unwrap();
        let cfg = SolverConfig::new(MeshConfig::auto(16, 8, 0.0).unwrap());
        let result = solve(&cfg, &field).unwrap();
        let mesh = result.mesh();
        let mut max_err = 0.0f64;
        for (j, k, w) in result.retained() {
            max_err = max_err.max((w - mesh.vertex(j, k as i64)).norm());
        }
        assert!(max_err < 5e-3, "identity error {max_err}");
        assert_eq!(result.diagnostics().skew_count, 0);
        assert_eq!(result.diagnostics().orientation_violations, 0);
        assert!(result.diagnostics().max_modulus_drift < 1e-6);

        // evaluate: stored vertex, centroid consistency, identity quality.
        let id = TriangleId {
            ring_pair: 4,
            k: 3,
            kind: TriangleKind::Outward,
        };
        let tri = mesh.triangle(id);
        let at_vertex = result.evaluate(tri.v0).unwrap();
        assert!((at_vertex - result.image(4, 3).unwrap()).norm() < 1e-12);
        let at_centroid = result.evaluate(tri.centroid()).unwrap();
        let img = PiecewiseLinearResult::image_triangle(&result, id).unwrap();
        assert!((at_centroid - img.centroid()).norm() < 1e-12);
        // hole evaluation stays near the identity too
        let z = c(0.01, 0.02);
        assert!((result.evaluate(z).unwrap() - z).norm() < 5e-3);
    }

    #[test]
    fn per_ring_normalization_holds() {
        let field = constant_mu(c(0.3, 0.1)).unwrap();
        let cfg = SolverConfig::new(
            MeshConfig::auto(16, 8, field.sup_bound()).unwrap(),
        );
        let mut ring_args = Vec::new();
        let result = solve_with_observer(&cfg, &field, |trace| {
            ring_args.push((trace.ring, trace.w.clone()));
        })
        .unwrap();
        let mesh = result.mesh();
        for (ring, w) in &ring_args {
            let d = mesh.designated_index(*ring);
            assert!(
                w[d].arg().abs() < 1e-9,
                "ring {ring} designated arg {}",
                w[d].arg()
            );
        }
        // Modulus containment after every correction.
        assert!(result.diagnostics().max_modulus_drift <= 1e-6);
    }

    #[test]
    fn normalization_modes_agree() {
        let field = sectorial_mu();
        let mesh_cfg = MeshConfig::auto(16, 10, field.sup_bound()).unwrap();
        let a = solve(&SolverConfig::new(mesh_cfg), &field).unwrap();
        let b = solve(
            &SolverConfig::new(mesh_cfg).normalization(Normalization::FinalOnly),
            &field,
        )
        .unwrap();
        let mut max_diff = 0.0f64;
        for ((_, _, wa), (_, _, wb)) in a.retained().zip(b.retained()) {
            max_diff = max_diff.max((wa - wb).norm());
        }
        assert!(max_diff < 1e-6, "normalization modes diverge: {max_diff}");
    }

    #[test]
    fn skew_policy_gate() {
        let field = constant_mu(c(0.5, 0.0)).unwrap();
        // Ratio far above the bound for kappa = 0.5 at N = 16.
        let cfg = SolverConfig::new(MeshConfig::new(16, 6, 2.5).unwrap());
        assert!(matches!(solve(&cfg, &field), Err(Error::Domain(_))));
        // WarnOnSkew proceeds and reports.
        let cfg = cfg.skew_policy(SkewPolicy::WarnOnSkew);
        let result = solve(&cfg, &field).unwrap();
        assert!(!result.diagnostics().warnings.is_empty());
    }

    #[test]
    fn retention_masks() {
        let field = constant_mu(c(0.2, 0.0)).unwrap();
        let mesh_cfg = MeshConfig::auto(16, 8, 0.2).unwrap();

        let boundary = solve(
            &SolverConfig::new(mesh_cfg).retention(Retention::BoundaryOnly),
            &field,
        )
        .unwrap();
        assert_eq!(boundary.retained().count(), 16);
        assert!(boundary.image(3, 0).is_none());
        assert!(matches!(
            boundary.evaluate(Complex64::from_polar(0.9, 0.3)),
            Err(Error::Retention(_))
        ));

        let ray = solve(
            &SolverConfig::new(mesh_cfg).retention(Retention::PositiveRealRay),
            &field,
        )
        .unwrap();
        for j in (2..8).step_by(2) {
            let d = ray.mesh().designated_index(j);
            assert!(ray.image(j, d).is_some());
        }

        let sub = solve(
            &SolverConfig::new(mesh_cfg).retention(Retention::Submesh { rings: 4, spokes: 8 }),
            &field,
        )
        .unwrap();
        // 3 subsampled rings of 8 spokes + full boundary ring.
        assert_eq!(sub.retained().count(), 3 * 8 + 16);
        assert!(matches!(
            solve(
                &SolverConfig::new(mesh_cfg).retention(Retention::Submesh { rings: 4, spokes: 5 }),
                &field
            ),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exterior_map_examples() {
        for &alpha in &[0.3, 0.6, 0.9] {
            let w = exterior_ellipse_map(c(1.0, 0.0), alpha).unwrap();
            assert!((w - c(1.0, 0.0)).norm() < 1e-15);
        }
        let w = exterior_ellipse_map(c(0.0, 1.0), 0.6).unwrap();
        assert!((w - c(0.0, -5.0 / 3.0)).norm() < 1e-12);
        // Unit circle onto the aspect-0.6 ellipse: x^2 + (alpha y)^2 = 1.
        for i in 0..64 {
            let z = Complex64::from_polar(1.0, TAU * i as f64 / 64.0);
            let w = exterior_ellipse_map(z, 0.6).unwrap();
            let res = w.re * w.re + (0.6 * w.im) * (0.6 * w.im);
            assert!((res - 1.0).abs() < 1e-9, "residual {res}");
        }
        assert!(exterior_ellipse_map(c(1e-12, 0.0), 0.6).is_err());
        assert!(exterior_ellipse_map(c(0.5, 0.0), 1.5).is_err());
    }

    #[test]
    fn exterior_compose_on_result() {
        let field = constant_mu(c(0.2, 0.0)).unwrap();
        let cfg = SolverConfig::new(MeshConfig::auto(16, 6, 0.2).unwrap())
            .retention(Retention::BoundaryOnly);
        let result = solve(&cfg, &field).unwrap();
        let composed = result.exterior_compose(0.6).unwrap();
        assert_eq!(composed.len(), 16);
        for (_, _, w) in composed {
            let res = w.re * w.re + (0.6 * w.im) * (0.6 * w.im);
            assert!(res >= 1.0 - 1e-9, "image inside the ellipse: {res}");
        }
    }

    #[test]
    fn theorem2_companion_half_angle_bound_never_skews() {
        // The sharp sufficient condition with the half-step apex geometry:
        // ratios below cos(pi/N) + (1-k)^2/(2k) sin(pi/N) cannot skew.
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..10_000 {
            let n = 2 * rng.gen_range(4..=256usize);
            let kappa: f64 = rng.gen_range(0.02..0.9);
            let a = std::f64::consts::PI / n as f64;
            let bound = a.cos() + (1.0 - kappa).powi(2) / (2.0 * kappa) * a.sin();
            let beta = 1.0 + rng.gen_range(0.0..1.0) * 0.99 * (bound - 1.0);
            let r = rng.gen_range(0.05..0.95);
            let phi = rng.gen_range(0.0..TAU);
            let mu = Complex64::from_polar(kappa * rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..TAU));
            let z0 = Complex64::from_polar(r, phi);
            let z1 = Complex64::from_polar(r, phi + TAU / n as f64);
            let apex = Complex64::from_polar(beta * r, phi + std::f64::consts::PI / n as f64);
            let b = interpolate_two_points(mu, z0, z1, z0, z1).unwrap();
            let w_tilde = b.apply(apex);
            assert!(
                !is_skewed(z0, z1, w_tilde).unwrap(),
                "skewed at n={n} kappa={kappa} beta={beta} mu={mu}"
            );
        }
    }

    #[test]
    fn solve_reproduces_table_style_run() {
        // A small constant-mu run completes with zero skew and ordered rings.
        let field = constant_mu(c(0.4, 0.0)).unwrap();
        let cfg = SolverConfig::new(MeshConfig::auto(32, 16, 0.4).unwrap());
        let result = solve(&cfg, &field).unwrap();
        assert_eq!(result.diagnostics().skew_count, 0);
        assert_eq!(result.diagnostics().orientation_violations, 0);
        for w in result.boundary_images() {
            assert!((w.norm() - 1.0).abs() < 1e-6);
        }
        // Printed-variant bound actually admits this auto ratio.
        let rows = crate::mesh::table1_generate(&[32], &[0.4], Table1Variant::Printed).unwrap();
        assert!(cfg.mesh.ratio() < rows[0].beta);
    }

    #[test]
    fn evaluate_rejects_outside() {
        let field = constant_mu(ZERO).unwrap();
        let cfg = SolverConfig::new(MeshConfig::auto(16, 6, 0.0).unwrap());
        let result = solve(&cfg, &field).unwrap();
        assert!(result.evaluate(c(1.5, 0.0)).is_err());
    }
}
