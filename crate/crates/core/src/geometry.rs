//! Domains, flat boundary patches, tensor grids and surface quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    Box2D,
    Box3D,
    LShape2D,
}

/// Axis-aligned box `[0,L_0] x ... x [0,L_{n-1}]`, or the L-shape
/// `[0,a1]x[0,w] ∪ [0,w]x[0,a2]` with arm lengths `a1, a2` and thickness `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    extents: Vec<f64>,
    thickness: Option<f64>,
}

/// A flat piece of the boundary lying in the hyperplane `x[normal_axis] = offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub name: &'static str,
    pub normal_axis: usize,
    pub offset: f64,
    /// +1 or -1: sign of the outward normal along `normal_axis`.
    pub outward: f64,
    pub tangent_axes: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Face {
    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn tangent_coords(&self, p: &[f64]) -> Vec<f64> {
        self.tangent_axes.iter().map(|&a| p[a]).collect()
    }

    pub fn embed(&self, tangent: &[f64]) -> Vec<f64> {
        let n = self.tangent_axes.len() + 1;
        let mut p = vec![0.0; n];
        p[self.normal_axis] = self.offset;
        for (k, &a) in self.tangent_axes.iter().enumerate() {
            p[a] = tangent[k];
        }
        p
    }

    /// Whether `p` lies on the closed face.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        if (p[self.normal_axis] - self.offset).abs() > tol {
            return false;
        }
        self.tangent_axes
            .iter()
            .enumerate()
            .all(|(k, &a)| p[a] >= self.lo[k] - tol && p[a] <= self.hi[k] + tol)
    }
}

impl Domain {
    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        match self.kind {
            DomainKind::Box3D => 3,
            _ => 2,
        }
    }

    /// Per-axis lengths of the bounding box.
    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn thickness(&self) -> Option<f64> {
        self.thickness
    }

    pub fn is_box(&self) -> bool {
        self.kind != DomainKind::LShape2D
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            DomainKind::LShape2D => {
                let w = self.thickness.unwrap();
                w * (self.extents[0] + self.extents[1] - w)
            }
            _ => self.extents.iter().product(),
        }
    }

    pub fn faces(&self) -> Vec<Face> {
        let e = &self.extents;
        match self.kind {
            DomainKind::LShape2D => {
                let (a1, a2, w) = (e[0], e[1], self.thickness.unwrap());
                let f = |name, normal_axis, offset, outward, lo, hi| Face {
                    name,
                    normal_axis,
                    offset,
                    outward,
                    tangent_axes: vec![1 - normal_axis],
                    lo: vec![lo],
                    hi: vec![hi],
                };
                vec![
                    f("bottom", 1, 0.0, -1.0, 0.0, a1),
                    f("right", 0, a1, 1.0, 0.0, w),
                    f("inner-bottom", 1, w, 1.0, w, a1),
                    f("inner-vertical", 0, w, 1.0, w, a2),
                    f("top", 1, a2, 1.0, 0.0, w),
                    f("left", 0, 0.0, -1.0, 0.0, a2),
                ]
            }
            _ => {
                const NAMES: [[&str; 2]; 3] = [["x-", "x+"], ["y-", "y+"], ["z-", "z+"]];
                let n = self.n();
                let mut out = Vec::with_capacity(2 * n);
                for axis in 0..n {
                    let tangent_axes: Vec<usize> = (0..n).filter(|&b| b != axis).collect();
                    let lo = vec![0.0; n - 1];
                    let hi: Vec<f64> = tangent_axes.iter().map(|&b| e[b]).collect();
                    for (side, outward) in [(0usize, -1.0), (1, 1.0)] {
                        out.push(Face {
                            name: NAMES[axis][side],
                            normal_axis: axis,
                            offset: if side == 0 { 0.0 } else { e[axis] },
                            outward,
                            tangent_axes: tangent_axes.clone(),
                            lo: lo.clone(),
                            hi: hi.clone(),
                        });
                    }
                }
                out
            }
        }
    }

    pub fn face(&self, name: &str) -> Result<Face> {
        self.faces()
            .into_iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::InvalidGeometry(format!("no face named {name:?}")))
    }

    pub fn boundary_measure(&self) -> f64 {
        self.faces().iter().map(Face::measure).sum()
    }

    /// Strict interior test.
    pub fn contains_open(&self, p: &[f64]) -> bool {
        let e = &self.extents;
        let in_box = |p: &[f64], lim: &[f64]| p.iter().zip(lim).all(|(x, l)| *x > 0.0 && *x < *l);
        match self.kind {
            DomainKind::LShape2D => {
                let w = self.thickness.unwrap();
                in_box(p, &[e[0], w]) || in_box(p, &[w, e[1]])
            }
            _ => in_box(p, e),
        }
    }

    pub fn contains_closed(&self, p: &[f64]) -> bool {
        let e = &self.extents;
        let in_box =
            |p: &[f64], lim: &[f64]| p.iter().zip(lim).all(|(x, l)| *x >= -TOL && *x <= *l + TOL);
        match self.kind {
            DomainKind::LShape2D => {
                let w = self.thickness.unwrap();
                in_box(p, &[e[0], w]) || in_box(p, &[w, e[1]])
            }
            _ => in_box(p, e),
        }
    }
}

pub fn make_box(n: usize, extents: &[f64]) -> Result<Domain> {
    let kind = match n {
        2 => DomainKind::Box2D,
        3 => DomainKind::Box3D,
        _ => return Err(Error::InvalidGeometry(format!("dimension {n} not supported"))),
    };
    if extents.len() != n {
        return Err(Error::InvalidGeometry(format!(
            "expected {n} extents, got {}",
            extents.len()
        )));
    }
    if extents.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidGeometry(format!("extents must be positive: {extents:?}")));
    }
    Ok(Domain {
        kind,
        extents: extents.to_vec(),
        thickness: None,
    })
}

pub fn make_lshape(arms: [f64; 2], thickness: f64) -> Result<Domain> {
    if !(thickness > 0.0) || arms.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidGeometry("L-shape lengths must be positive".into()));
    }
    if arms.iter().any(|&a| thickness >= a) {
        return Err(Error::InvalidGeometry(format!(
            "thickness {thickness} must be below both arm lengths {arms:?}"
        )));
    }
    Ok(Domain {
        kind: DomainKind::LShape2D,
        extents: arms.to_vec(),
        thickness: Some(thickness),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatchShape {
    /// Interval (2-D) or rectangle (3-D) in the face's tangent coordinates.
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    /// Flat disk in a 3-D face, or an interval written as centre and half-length in 2-D.
    Disk { center: Vec<f64>, radius: f64 },
}

/// The radiating part of the boundary; everything else is insulated.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPatch {
    pub face: Face,
    pub shape: PatchShape,
    pub area: f64,
}

pub fn make_patch(domain: &Domain, face: &str, shape: PatchShape) -> Result<BoundaryPatch> {
    let face = domain.face(face)?;
    let m = face.tangent_axes.len();
    let (lo, hi) = match &shape {
        PatchShape::Rect { lo, hi } => (lo.clone(), hi.clone()),
        PatchShape::Disk { center, radius } => {
            if !(*radius > 0.0) {
                return Err(Error::InvalidGeometry("disk radius must be positive".into()));
            }
            (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )
        }
    };
    if lo.len() != m || hi.len() != m {
        return Err(Error::InvalidGeometry(format!(
            "face {} has {m} tangent coordinates",
            face.name
        )));
    }
    for k in 0..m {
        if !(lo[k] < hi[k]) {
            return Err(Error::InvalidGeometry(format!("empty patch along axis {k}")));
        }
        if lo[k] < face.lo[k] - TOL || hi[k] > face.hi[k] + TOL {
            return Err(Error::InvalidGeometry(format!(
                "patch [{}, {}] leaves face {} range [{}, {}]",
                lo[k], hi[k], face.name, face.lo[k], face.hi[k]
            )));
        }
    }
    let area = match &shape {
        PatchShape::Rect { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
        PatchShape::Disk { radius, .. } => match m {
            1 => 2.0 * radius,
            _ => std::f64::consts::PI * radius * radius,
        },
    };
    Ok(BoundaryPatch { face, shape, area })
}

impl BoundaryPatch {
    pub fn n(&self) -> usize {
        self.face.tangent_axes.len() + 1
    }

    /// Bounding box of the patch in tangent coordinates.
    pub fn tangent_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            PatchShape::Rect { lo, hi } => (lo.clone(), hi.clone()),
            PatchShape::Disk { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// Closed-patch membership for a point already on the face.
    pub fn contains_tangent(&self, tc: &[f64], tol: f64) -> bool {
        match &self.shape {
            PatchShape::Rect { lo, hi } => {
                tc.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| *x >= a - tol && *x <= b + tol)
            }
            PatchShape::Disk { center, radius } => dist(tc, center) <= radius + tol,
        }
    }

    pub fn on_relative_boundary(&self, tc: &[f64], tol: f64) -> bool {
        if !self.contains_tangent(tc, tol) {
            return false;
        }
        match &self.shape {
            PatchShape::Rect { lo, hi } => tc
                .iter()
                .zip(lo.iter().zip(hi))
                .any(|(x, (a, b))| (x - a).abs() <= tol || (x - b).abs() <= tol),
            PatchShape::Disk { center, radius } => (dist(tc, center) - radius).abs() <= tol,
        }
    }

    /// Measure of the intersection of the patch with a tangent-coordinate box.
    /// Only rectangular patches are supported.
    pub fn overlap(&self, lo: &[f64], hi: &[f64]) -> Result<f64> {
        match &self.shape {
            PatchShape::Rect { lo: plo, hi: phi } => Ok((0..lo.len())
                .map(|k| (hi[k].min(phi[k]) - lo[k].max(plo[k])).max(0.0))
                .product()),
            PatchShape::Disk { .. } => Err(Error::InvalidGeometry(
                "grid coupling needs a rectangular patch".into(),
            )),
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceNode {
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Composite midpoint rule on the patch: `resolution` cells per tangent axis for
/// rectangles, `resolution` radial by `4*resolution` angular cells for disks.
pub fn surface_nodes(patch: &BoundaryPatch, resolution: usize) -> Result<Vec<SurfaceNode>> {
    if resolution < 2 {
        return Err(Error::PreconditionViolated("resolution must be at least 2".into()));
    }
    let face = &patch.face;
    let mut out = Vec::new();
    match &patch.shape {
        PatchShape::Rect { lo, hi } => {
            let m = lo.len();
            let widths: Vec<f64> = (0..m).map(|k| (hi[k] - lo[k]) / resolution as f64).collect();
            let w: f64 = widths.iter().product();
            let total = resolution.pow(m as u32);
            for flat in 0..total {
                let mut rem = flat;
                let tc: Vec<f64> = (0..m)
                    .map(|k| {
                        let i = rem % resolution;
                        rem /= resolution;
                        lo[k] + (i as f64 + 0.5) * widths[k]
                    })
                    .collect();
                out.push(SurfaceNode {
                    point: face.embed(&tc),
                    weight: w,
                });
            }
        }
        PatchShape::Disk { center, radius } => {
            if center.len() == 1 {
                let dx = 2.0 * radius / resolution as f64;
                for i in 0..resolution {
                    let tc = [center[0] - radius + (i as f64 + 0.5) * dx];
                    out.push(SurfaceNode {
                        point: face.embed(&tc),
                        weight: dx,
                    });
                }
            } else {
                let nr = resolution;
                let nt = 4 * resolution;
                let dr = radius / nr as f64;
                let dth = 2.0 * std::f64::consts::PI / nt as f64;
                for i in 0..nr {
                    let r = (i as f64 + 0.5) * dr;
                    for j in 0..nt {
                        let th = (j as f64 + 0.5) * dth;
                        let tc = [center[0] + r * th.cos(), center[1] + r * th.sin()];
                        out.push(SurfaceNode {
                            point: face.embed(&tc),
                            weight: r * dr * dth,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    Outside,
    Interior,
    Gamma1,
    Gamma2,
    Interface,
}

/// Uniform tensor grid over the bounding box of a domain, axis 0 fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub counts: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl Grid {
    /// Grid with spacing as close to `h` as the extents allow. For the L-shape the
    /// thickness must fall on a grid line.
    pub fn new(domain: &Domain, h: f64) -> Result<Grid> {
        if !(h > 0.0) {
            return Err(Error::InvalidGeometry("grid spacing must be positive".into()));
        }
        let counts: Vec<usize> = domain
            .extents()
            .iter()
            .map(|l| ((l / h).round() as usize).max(1) + 1)
            .collect();
        let spacing: Vec<f64> = domain
            .extents()
            .iter()
            .zip(&counts)
            .map(|(l, c)| l / (*c - 1) as f64)
            .collect();
        if let Some(w) = domain.thickness() {
            for s in &spacing {
                let k = w / s;
                if (k - k.round()).abs() > 1e-9 {
                    return Err(Error::InvalidGeometry(format!(
                        "L-shape thickness {w} is not a multiple of spacing {s}"
                    )));
                }
            }
        }
        Ok(Grid { counts, spacing })
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        self.counts
            .iter()
            .map(|c| {
                let i = rem % c;
                rem /= c;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        let mut stride = 1;
        for (i, c) in idx.iter().zip(&self.counts) {
            flat += i * stride;
            stride *= c;
        }
        flat
    }

    pub fn coord(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.spacing)
            .map(|(i, h)| *i as f64 * h)
            .collect()
    }

    /// Node coordinates along one axis.
    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| i as f64 * self.spacing[axis]).collect()
    }

    /// Classification of every node with respect to the domain and patch.
    pub fn classify(&self, domain: &Domain, patch: &BoundaryPatch) -> Vec<NodeClass> {
        let faces = domain.faces();
        let tol = 1e-9 * self.min_spacing();
        (0..self.len())
            .map(|flat| {
                let p = self.coord(flat);
                if !domain.contains_closed(&p) {
                    return NodeClass::Outside;
                }
                if !faces.iter().any(|f| f.contains(&p, tol)) {
                    return NodeClass::Interior;
                }
                if patch.face.contains(&p, tol) {
                    let tc = patch.face.tangent_coords(&p);
                    if patch.on_relative_boundary(&tc, tol) {
                        return NodeClass::Interface;
                    }
                    if patch.contains_tangent(&tc, tol) {
                        return NodeClass::Gamma1;
                    }
                }
                NodeClass::Gamma2
            })
            .collect()
    }

    /// Grid nodes of the closed patch, per tangent axis. Rectangular patches only;
    /// the patch edges must fall on grid lines.
    pub fn patch_axis_nodes(&self, patch: &BoundaryPatch) -> Result<Vec<Vec<f64>>> {
        let (lo, hi) = match &patch.shape {
            PatchShape::Rect { lo, hi } => (lo, hi),
            PatchShape::Disk { .. } => {
                return Err(Error::InvalidGeometry("patch nodes need a rectangular patch".into()))
            }
        };
        patch
            .face
            .tangent_axes
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let h = self.spacing[a];
                let i0 = lo[k] / h;
                let i1 = hi[k] / h;
                if (i0 - i0.round()).abs() > 1e-9 || (i1 - i1.round()).abs() > 1e-9 {
                    return Err(Error::InvalidGeometry(format!(
                        "patch edge not on a grid line along axis {a}"
                    )));
                }
                Ok((i0.round() as usize..=i1.round() as usize).map(|i| i as f64 * h).collect())
            })
            .collect()
    }
}
