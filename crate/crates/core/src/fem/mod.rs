//! Nonconforming velocity/pressure spaces and their broken operators.
//!
//! Velocity lives in the space of piecewise-linear vector fields whose
//! traces agree at facet midpoints; each facet carries one vector degree
//! of freedom, the value at its midpoint. Pressure is piecewise constant.
//! Element gradients are constant matrices, so stiffness and divergence
//! couplings are assembled exactly.

mod assembly;
mod reconstruction;

pub use assembly::{assemble, assemble_with_dirichlet, FemError, StokesSystem};
pub use reconstruction::{bdm1_local, bdm1_reconstruct, rt0_local, rt0_reconstruct, Bdm1Local, Rt0Local};

use std::sync::Arc;

use nalgebra::{Matrix2, Point2, Vector2};

use crate::mesh::TriMesh;

/// Discretization variant: which interpolation is applied to the test
/// functions in the load term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    /// Test functions used as-is.
    Cr,
    /// Facet-flux (lowest-order Raviart-Thomas) reconstruction.
    CrRt,
    /// Facet-moment (lowest-order Brezzi-Douglas-Marini) reconstruction.
    CrBdm,
}

impl MethodKind {
    pub fn label(&self) -> &'static str {
        match self {
            MethodKind::Cr => "cr",
            MethodKind::CrRt => "cr-rt",
            MethodKind::CrBdm => "cr-bdm",
        }
    }

    pub const ALL: [MethodKind; 3] = [MethodKind::Cr, MethodKind::CrRt, MethodKind::CrBdm];
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-element geometry shared by assembly, reconstruction and norms.
///
/// Local facet `i` is opposite vertex `i`, directed counterclockwise from
/// vertex `i+1` to vertex `i+2`; `grad_psi[i]` is the gradient of the
/// facet basis function `psi_i = 1 - 2 lambda_i`, which equals
/// `|e_i| n_i / area` with the outward normal.
pub(crate) struct ElemGeom {
    pub verts: [Point2<f64>; 3],
    pub area: f64,
    pub facets: [usize; 3],
    pub grad_psi: [Vector2<f64>; 3],
    pub out_normals: [Vector2<f64>; 3],
    pub edge_lens: [f64; 3],
}

impl ElemGeom {
    pub fn new(mesh: &TriMesh, t: usize) -> Self {
        let verts = mesh.triangle_vertices(t);
        let area = mesh.area(t);
        let mut grad_psi = [Vector2::zeros(); 3];
        let mut out_normals = [Vector2::zeros(); 3];
        let mut edge_lens = [0.0; 3];
        for i in 0..3 {
            let d = verts[(i + 2) % 3] - verts[(i + 1) % 3];
            let len = d.norm();
            edge_lens[i] = len;
            out_normals[i] = Vector2::new(d.y, -d.x) / len;
            grad_psi[i] = Vector2::new(d.y, -d.x) / area;
        }
        ElemGeom { verts, area, facets: mesh.element_facets[t], grad_psi, out_normals, edge_lens }
    }

    /// Facet basis value at a barycentric point.
    pub fn psi(i: usize, bary: [f64; 3]) -> f64 {
        1.0 - 2.0 * bary[i]
    }
}

/// Barycentric coordinates of `p` with respect to element `t`.
pub(crate) fn barycentric(mesh: &TriMesh, t: usize, p: Point2<f64>) -> [f64; 3] {
    let [p0, p1, p2] = mesh.triangle_vertices(t);
    let area2 = 2.0 * mesh.area(t);
    let cross = |a: Vector2<f64>, b: Vector2<f64>| a.x * b.y - a.y * b.x;
    let l0 = cross(p1 - p, p2 - p) / area2;
    let l1 = cross(p2 - p, p0 - p) / area2;
    [l0, l1, 1.0 - l0 - l1]
}

/// Vector field with one midpoint value per facet.
#[derive(Debug, Clone)]
pub struct CRVectorField {
    pub mesh: Arc<TriMesh>,
    pub dofs: Vec<Vector2<f64>>,
}

impl CRVectorField {
    pub fn zeros(mesh: Arc<TriMesh>) -> Self {
        let dofs = vec![Vector2::zeros(); mesh.n_facets()];
        CRVectorField { mesh, dofs }
    }

    /// Constant velocity gradient on element `t`, entry (j, k) holding
    /// the derivative of component j along direction k.
    pub fn element_gradient(&self, t: usize) -> Matrix2<f64> {
        let geom = ElemGeom::new(&self.mesh, t);
        let mut g = Matrix2::zeros();
        for i in 0..3 {
            let u = self.dofs[geom.facets[i]];
            g += u * geom.grad_psi[i].transpose();
        }
        g
    }

    pub fn element_divergence(&self, t: usize) -> f64 {
        let geom = ElemGeom::new(&self.mesh, t);
        (0..3).map(|i| self.dofs[geom.facets[i]].dot(&geom.grad_psi[i])).sum()
    }

    /// Value of the local affine representative of element `t` at a
    /// barycentric point.
    pub fn eval_in_element(&self, t: usize, bary: [f64; 3]) -> Vector2<f64> {
        let facets = self.mesh.element_facets[t];
        (0..3).map(|i| self.dofs[facets[i]] * ElemGeom::psi(i, bary)).sum()
    }

    /// Broken H1 seminorm: sqrt of the sum of |grad|^2 * area over elements.
    pub fn broken_gradient_norm(&self) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.mesh.n_elements() {
            acc += self.mesh.area(t) * self.element_gradient(t).norm_squared();
        }
        acc.sqrt()
    }

    /// Zeroes the degrees of freedom on boundary facets.
    pub fn apply_homogeneous_bc(&mut self) {
        for (f, is_boundary) in self.mesh.boundary_facets.iter().enumerate() {
            if *is_boundary {
                self.dofs[f] = Vector2::zeros();
            }
        }
    }
}

/// Interpolation into the facet-midpoint space: exact for affine fields.
pub fn cr_interpolate(mesh: &Arc<TriMesh>, g: impl Fn(Point2<f64>) -> Vector2<f64>) -> CRVectorField {
    let dofs = mesh.facet_midpoints.iter().map(|&m| g(m)).collect();
    CRVectorField { mesh: Arc::clone(mesh), dofs }
}

/// Piecewise-constant scalar, one value per element.
#[derive(Debug, Clone)]
pub struct P0Scalar {
    pub mesh: Arc<TriMesh>,
    pub values: Vec<f64>,
}

impl P0Scalar {
    pub fn zeros(mesh: Arc<TriMesh>) -> Self {
        let values = vec![0.0; mesh.n_elements()];
        P0Scalar { mesh, values }
    }

    pub fn area_weighted_mean(&self) -> f64 {
        let mut int = 0.0;
        let mut area = 0.0;
        for (t, v) in self.values.iter().enumerate() {
            let a = self.mesh.area(t);
            int += a * v;
            area += a;
        }
        int / area
    }

    pub fn shift_to_zero_mean(&mut self) {
        let mean = self.area_weighted_mean();
        for v in &mut self.values {
            *v -= mean;
        }
    }

    pub fn l2_norm(&self) -> f64 {
        let acc: f64 = self.values.iter().enumerate().map(|(t, v)| self.mesh.area(t) * v * v).sum();
        acc.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_shishkin, build_uniform, Rect};
    use crate::quadrature::triangle_rule;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn study_rect() -> Rect {
        Rect::new(-1.0, 1.0, 0.0, 1.0).unwrap()
    }

    fn unit_square_mesh() -> Arc<TriMesh> {
        Arc::new(build_uniform(Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(), 1, 1).unwrap())
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let mesh = Arc::new(build_uniform(study_rect(), 6, 3).unwrap());
        let c = Vector2::new(0.3, -1.7);
        let field = cr_interpolate(&mesh, |_| c);
        for dof in &field.dofs {
            assert_eq!(*dof, c);
        }
        assert!(field.broken_gradient_norm() < 1e-12 * c.norm());
        for t in 0..mesh.n_elements() {
            assert!(field.element_divergence(t).abs() < 1e-13);
        }
    }

    #[test]
    fn shear_field_on_two_triangles() {
        let mesh = unit_square_mesh();
        let field = cr_interpolate(&mesh, |p| Vector2::new(p.y, 0.0));
        for (f, dof) in field.dofs.iter().enumerate() {
            assert_eq!(dof.x, mesh.facet_midpoints[f].y);
            assert_eq!(dof.y, 0.0);
        }
        // Gradient has a single unit entry, so the squared norm is the area.
        assert_relative_eq!(field.broken_gradient_norm(), 1.0, max_relative = 1e-13);
        for t in 0..mesh.n_elements() {
            let g = field.element_gradient(t);
            assert_relative_eq!(g.m12, 1.0, max_relative = 1e-13);
            assert!(g.m11.abs() + g.m21.abs() + g.m22.abs() < 1e-13);
        }
    }

    #[test]
    fn shear_norm_on_study_domain() {
        let mesh = Arc::new(build_uniform(study_rect(), 8, 4).unwrap());
        let field = cr_interpolate(&mesh, |p| Vector2::new(p.y, 0.0));
        assert_relative_eq!(field.broken_gradient_norm(), 2.0f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn gradient_matches_finite_differences_of_local_eval() {
        // Independent check of the basis gradient formula: differentiate
        // the local evaluation numerically on random fields.
        let mesh =
            Arc::new(build_shishkin(study_rect(), 6, 4, 0.2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut field = CRVectorField::zeros(Arc::clone(&mesh));
        for dof in &mut field.dofs {
            *dof = Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let h = 1e-6;
        for t in 0..mesh.n_elements() {
            let g = field.element_gradient(t);
            let c = mesh.centroid(t);
            let at = |p: Point2<f64>| field.eval_in_element(t, barycentric(&mesh, t, p));
            let dx = (at(Point2::new(c.x + h, c.y)) - at(Point2::new(c.x - h, c.y))) / (2.0 * h);
            let dy = (at(Point2::new(c.x, c.y + h)) - at(Point2::new(c.x, c.y - h))) / (2.0 * h);
            assert_relative_eq!(g.m11, dx.x, max_relative = 1e-5, epsilon = 1e-8);
            assert_relative_eq!(g.m21, dx.y, max_relative = 1e-5, epsilon = 1e-8);
            assert_relative_eq!(g.m12, dy.x, max_relative = 1e-5, epsilon = 1e-8);
            assert_relative_eq!(g.m22, dy.y, max_relative = 1e-5, epsilon = 1e-8);
        }
    }

    #[test]
    fn broken_norm_agrees_with_quadrature_oracle() {
        // The norm of the piecewise-constant gradient must equal a brute
        // quadrature of |grad|^2 evaluated through the local basis.
        let mesh = Arc::new(build_uniform(study_rect(), 5, 4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut field = CRVectorField::zeros(Arc::clone(&mesh));
        for dof in &mut field.dofs {
            *dof = Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        }
        let rule = triangle_rule(2).unwrap();
        let mut acc = 0.0;
        for t in 0..mesh.n_elements() {
            let g = field.element_gradient(t);
            let verts = mesh.triangle_vertices(t);
            acc += rule.integrate(&verts, mesh.area(t), |_| g.norm_squared());
        }
        assert_relative_eq!(field.broken_gradient_norm(), acc.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn midpoint_traces_are_single_valued() {
        // The local affine representatives of both neighbors agree at the
        // shared facet midpoint; that is the only continuity the space has.
        let mesh = Arc::new(build_shishkin(study_rect(), 4, 4, 0.3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut field = CRVectorField::zeros(Arc::clone(&mesh));
        for dof in &mut field.dofs {
            *dof = Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        for f in 0..mesh.n_facets() {
            if let (t0, Some(t1)) = mesh.facet_to_elements[f] {
                let m = mesh.facet_midpoints[f];
                let a = field.eval_in_element(t0, barycentric(&mesh, t0, m));
                let b = field.eval_in_element(t1, barycentric(&mesh, t1, m));
                assert!((a - b).norm() < 1e-12);
                assert!((a - field.dofs[f]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn p0_mean_shift() {
        let mesh = Arc::new(build_uniform(study_rect(), 3, 2).unwrap());
        let mut p = P0Scalar::zeros(Arc::clone(&mesh));
        for (t, v) in p.values.iter_mut().enumerate() {
            *v = t as f64 - 1.3;
        }
        p.shift_to_zero_mean();
        assert!(p.area_weighted_mean().abs() < 1e-13 * p.l2_norm().max(1.0));
    }
}
