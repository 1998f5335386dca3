//! Concentric-ring triangular meshes of the unit disk.
//!
//! Vertices sit at `z_{jk} = r_j * exp(2*pi*i*(k + j/2)/N)` with radii
//! `r_j = beta^(j-M)`, so consecutive rings interleave by half a step and
//! `r_M = 1` exactly. The ratio bound keeps the outward image triangles of
//! the ring extension non-skewed; the ring count rule keeps the central hole
//! comparable to one triangle.

use crate::affine::Triangle;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Largest admissible ring ratio `r_{j+1}/r_j` for vertices-per-ring `n` and
/// sup-modulus `mu_abs` of the Beltrami coefficient:
/// `cos(2pi/N) + (1-|mu|)^2/(2|mu|) * sin(2pi/N)`, infinite when `mu_abs = 0`.
pub fn max_ratio_bound(n: usize, mu_abs: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 vertices, got {n}")));
    }
    if !(0.0..1.0).contains(&mu_abs) {
        return Err(Error::Domain(format!("|mu| = {mu_abs} outside [0, 1)")));
    }
    if mu_abs == 0.0 {
        return Ok(f64::INFINITY);
    }
    let t = TAU / n as f64;
    Ok(t.cos() + (1.0 - mu_abs).powi(2) / (2.0 * mu_abs) * t.sin())
}

/// Ring count `ceil(log(N/(2pi)) / log(beta))`, clamped to at least 1, so the
/// central hole is not much larger than one outer triangle.
pub fn ring_count(n: usize, beta: f64) -> Result<usize> {
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 vertices, got {n}")));
    }
    if !(beta > 1.0) {
        return Err(Error::Domain(format!("ratio beta = {beta} must exceed 1")));
    }
    let m = ((n as f64 / TAU).ln() / beta.ln()).ceil();
    Ok(if m < 1.0 { 1 } else { m as usize })
}

/// Mesh parameters: `n` vertices per ring (even, so the half-step lands a
/// vertex exactly on the positive real axis on even rings), `m` rings, and
/// the uniform radius ratio.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeshConfig {
    n: usize,
    m: usize,
    ratio: f64,
    kappa: f64,
}

impl MeshConfig {
    pub fn new(n: usize, m: usize, ratio: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Domain(format!(
                "vertices per ring must be even and >= 4, got {n}"
            )));
        }
        if m < 1 {
            return Err(Error::Domain("need at least one ring".into()));
        }
        if m > 1 && !(ratio > 1.0) {
            return Err(Error::Domain(format!("ratio {ratio} must exceed 1")));
        }
        Ok(MeshConfig {
            n,
            m,
            ratio,
            kappa: 0.0,
        })
    }

    /// Coverage-driven configuration: the ratio is chosen so the central hole
    /// has roughly the size of one outer triangle, `beta = (N/2pi)^(1/M)`.
    /// `kappa` records the certified sup of `|mu|` for applicability checks.
    pub fn auto(n: usize, m: usize, kappa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(Error::Domain(format!("kappa = {kappa} outside [0, 1)")));
        }
        let ratio = (n as f64 / TAU).powf(1.0 / m as f64);
        let mut cfg = MeshConfig::new(n, m, ratio.max(1.0 + 1e-12))?;
        cfg.kappa = kappa;
        Ok(cfg)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(Error::Domain(format!("kappa = {kappa} outside [0, 1)")));
        }
        self.kappa = kappa;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Whether the configured ratio respects the non-skew bound at `kappa`.
    pub fn satisfies_ratio_bound(&self) -> Result<bool> {
        Ok(self.m == 1 || self.ratio < max_ratio_bound(self.n, self.kappa)?)
    }
}

/// Immutable ring mesh; vertices are generated on demand from the radii.
#[derive(Debug, Clone)]
pub struct RingMesh {
    n: usize,
    radii: Vec<f64>, // radii[j-1] = r_j, r_M = 1 exactly
}

/// Which half of a quad cell a triangle occupies: outward triangles point
/// away from the center (base on the inner ring), inward triangles point
/// toward it (base on the outer ring).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriangleKind {
    Outward,
    Inward,
}

/// Identifies one mesh triangle: ring pair `j` (between rings j and j+1,
/// 1-based), sector `k`, and kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangleId {
    pub ring_pair: usize,
    pub k: usize,
    pub kind: TriangleKind,
}

/// Build the mesh for a configuration.
pub fn build_mesh(config: &MeshConfig) -> RingMesh {
    let m = config.m;
    let radii = (1..=m)
        .map(|j| config.ratio.powi(j as i32 - m as i32))
        .collect();
    RingMesh {
        n: config.n,
        radii,
    }
}

impl RingMesh {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring_count(&self) -> usize {
        self.radii.len()
    }

    /// Radius of ring `j` (1-based).
    pub fn radius(&self, j: usize) -> f64 {
        self.radii[j - 1]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Argument of vertex `(j, k)`; the index is reduced modulo `n` before
    /// exponentiation to keep trig arguments small.
    pub fn vertex_arg(&self, j: usize, k: i64) -> f64 {
        let n = self.n as f64;
        let t = (k as f64 + j as f64 * 0.5).rem_euclid(n);
        TAU * t / n
    }

    /// Vertex `z_{jk}` (ring `j` is 1-based; `k` is taken modulo `n`).
    pub fn vertex(&self, j: usize, k: i64) -> Complex64 {
        Complex64::from_polar(self.radius(j), self.vertex_arg(j, k))
    }

    /// All vertices of ring `j` for `k = 0..n`.
    pub fn ring(&self, j: usize) -> Vec<Complex64> {
        (0..self.n as i64).map(|k| self.vertex(j, k)).collect()
    }

    /// Ring-`j` vertex arguments for `k = 0..n`.
    pub fn ring_args(&self, j: usize) -> Vec<f64> {
        (0..self.n as i64).map(|k| self.vertex_arg(j, k)).collect()
    }

    /// Index whose vertex is the normalization anchor of ring `j`: the vertex
    /// `z_{j, -floor(j/2)}`, positive real when `j` is even.
    pub fn designated_index(&self, j: usize) -> usize {
        let half = (j / 2) as i64;
        (-half).rem_euclid(self.n as i64) as usize
    }

    /// Domain triangle for an id, in positively oriented vertex order.
    pub fn triangle(&self, id: TriangleId) -> Triangle {
        let j = id.ring_pair;
        let k = id.k as i64;
        let (a, b, c) = match id.kind {
            TriangleKind::Outward => (self.vertex(j, k), self.vertex(j + 1, k), self.vertex(j, k + 1)),
            TriangleKind::Inward => (
                self.vertex(j + 1, k),
                self.vertex(j + 1, k + 1),
                self.vertex(j, k + 1),
            ),
        };
        Triangle { v0: a, v1: b, v2: c }
    }

    /// Outward averaging triangle whose apex is the point produced by the
    /// ring extension: `(z_{j,k}, z_{j,k+1}, z_{j+1,k})`.
    pub fn extension_triangle(&self, j: usize, k: usize) -> Triangle {
        Triangle {
            v0: self.vertex(j, k as i64),
            v1: self.vertex(j, k as i64 + 1),
            v2: self.vertex(j + 1, k as i64),
        }
    }

    /// Iterator over all triangle ids between consecutive rings.
    pub fn triangle_ids(&self) -> impl Iterator<Item = TriangleId> + '_ {
        let n = self.n;
        let m = self.ring_count();
        (1..m).flat_map(move |j| {
            (0..n).flat_map(move |k| {
                [
                    TriangleId {
                        ring_pair: j,
                        k,
                        kind: TriangleKind::Outward,
                    },
                    TriangleId {
                        ring_pair: j,
                        k,
                        kind: TriangleKind::Inward,
                    },
                ]
            })
        })
    }
}

/// Which generator the table uses; `Printed` evaluates the stated bound and
/// ring-count rule directly, `TableCompatible` the variant that reproduces
/// the published table (`beta` without the factor 2 in the denominator, `M`
/// from `ln(N*pi/2)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table1Variant {
    Printed,
    TableCompatible,
}

impl Table1Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Table1Variant::Printed => "printed",
            Table1Variant::TableCompatible => "table_compatible",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Table1Row {
    pub n: usize,
    pub mu: f64,
    pub beta: f64,
    pub m: usize,
    pub variant: Table1Variant,
}

/// Ratio/ring-count table over a grid of `N` and `|mu|` values.
pub fn table1_generate(ns: &[usize], mus: &[f64], variant: Table1Variant) -> Result<Vec<Table1Row>> {
    let mut rows = Vec::with_capacity(ns.len() * mus.len());
    for &n in ns {
        for &mu in mus {
            if !(0.0 < mu && mu < 1.0) {
                return Err(Error::Domain(format!("mu = {mu} outside (0, 1)")));
            }
            let (beta, m) = match variant {
                Table1Variant::Printed => {
                    let beta = max_ratio_bound(n, mu)?;
                    (beta, ring_count(n, beta)?)
                }
                Table1Variant::TableCompatible => {
                    if n < 3 {
                        return Err(Error::Domain(format!("N = {n} too small")));
                    }
                    let t = TAU / n as f64;
                    let beta = t.cos() + (1.0 - mu).powi(2) / mu * t.sin();
                    let m = ((n as f64 * PI / 2.0).ln() / beta.ln()).ceil().max(1.0) as usize;
                    (beta, m)
                }
            };
            rows.push(Table1Row {
                n,
                mu,
                beta,
                m,
                variant,
            });
        }
    }
    Ok(rows)
}

/// The published table's grid.
pub const TABLE1_NS: [usize; 5] = [32, 64, 128, 256, 512];
pub const TABLE1_MUS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Serialize rows as CSV with header `N,mu,beta,M,variant`.
pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from("N,mu,beta,M,variant\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            r.mu,
            r.beta,
            r.m,
            r.variant.label()
        ));
    }
    out
}
