//! Facet-flux reconstructions of midpoint-continuous fields.
//!
//! Both operators map a facet-dof vector field into an H(div)-conforming
//! local polynomial per element. The flux variant matches the mean normal
//! flux per facet; the moment variant additionally matches the first
//! moment of the averaged normal trace on interior facets. On boundary
//! facets the first moment is dropped, so any field with vanishing
//! boundary dofs reconstructs to a field with zero normal flux through
//! the domain boundary.

use nalgebra::{Matrix6, Point2, Vector2, Vector6};

use crate::mesh::TriMesh;
use crate::quadrature::EDGE_GAUSS_2;

use super::{barycentric, CRVectorField, ElemGeom};

/// Facet-flux coefficients on `element`: for local facet i (opposite
/// vertex i), `|e_i| * v(midpoint) . n_i` with the global facet normal.
pub fn rt0_reconstruct(v: &CRVectorField, element: usize) -> [f64; 3] {
    let mesh = &v.mesh;
    let facets = mesh.element_facets[element];
    let mut flux = [0.0; 3];
    for i in 0..3 {
        let f = facets[i];
        flux[i] = mesh.facet_length(f) * v.dofs[f].dot(&mesh.facet_normals[f]);
    }
    flux
}

/// Evaluable form of the facet-flux reconstruction on one element.
#[derive(Debug, Clone)]
pub struct Rt0Local {
    verts: [Point2<f64>; 3],
    area: f64,
    /// Flux with the element-outward sign applied.
    signed_flux: [f64; 3],
}

impl Rt0Local {
    pub fn evaluate(&self, p: Point2<f64>) -> Vector2<f64> {
        let mut out = Vector2::zeros();
        for i in 0..3 {
            out += self.signed_flux[i] / (2.0 * self.area) * (p - self.verts[i]);
        }
        out
    }

    /// Constant divergence of the local reconstruction.
    pub fn divergence(&self) -> f64 {
        self.signed_flux.iter().sum::<f64>() / self.area
    }
}

/// Builds the local function realizing the fluxes from [`rt0_reconstruct`].
pub fn rt0_local(mesh: &TriMesh, element: usize, flux: &[f64; 3]) -> Rt0Local {
    let geom = ElemGeom::new(mesh, element);
    let mut signed_flux = [0.0; 3];
    for i in 0..3 {
        signed_flux[i] = mesh.facet_sign(geom.facets[i], element) * flux[i];
    }
    Rt0Local { verts: geom.verts, area: geom.area, signed_flux }
}

/// Facet-moment dofs on `element`, ordered `[m0_0, m1_0, m0_1, m1_1,
/// m0_2, m1_2]` over the local facets.
///
/// `m0_i` is the integral of the averaged normal trace over facet i and
/// always equals the flux from [`rt0_reconstruct`]; `m1_i` weighs the
/// averaged trace with the linear function that is -1/2 and 1/2 at the
/// facet endpoints (ordered by vertex index) and is zero on boundary
/// facets by convention.
pub fn bdm1_reconstruct(v: &CRVectorField, element: usize) -> [f64; 6] {
    let mesh = &v.mesh;
    let facets = mesh.element_facets[element];
    let mut moments = [0.0; 6];
    for i in 0..3 {
        let f = facets[i];
        let (m0, m1) = facet_trace_moments(v, f);
        moments[2 * i] = m0;
        moments[2 * i + 1] = m1;
    }
    moments
}

/// Zeroth and first moments of the averaged normal trace on facet `f`.
fn facet_trace_moments(v: &CRVectorField, f: usize) -> (f64, f64) {
    let mesh = &v.mesh;
    let n = mesh.facet_normals[f];
    let len = mesh.facet_length(f);
    let [a, b] = mesh.facets[f];
    let edge = mesh.vertices[b] - mesh.vertices[a];
    let mid = mesh.facet_midpoints[f];
    let (t0, t1) = mesh.facet_to_elements[f];

    let mut m0 = 0.0;
    let mut m1 = 0.0;
    for &(q, w) in &EDGE_GAUSS_2 {
        let p = mid + q * edge;
        let trace = match t1 {
            Some(t1) => {
                0.5 * (v.eval_in_element(t0, barycentric(mesh, t0, p))
                    + v.eval_in_element(t1, barycentric(mesh, t1, p)))
            }
            None => v.eval_in_element(t0, barycentric(mesh, t0, p)),
        };
        let g = trace.dot(&n);
        m0 += w * len * g;
        m1 += w * len * g * q;
    }
    if t1.is_none() {
        m1 = 0.0;
    }
    (m0, m1)
}

/// Affine vector polynomial determined by facet-moment dofs on one element.
#[derive(Debug, Clone)]
pub struct Bdm1Local {
    center: Point2<f64>,
    /// Coefficients of (1,0), (0,1), (x,0), (y,0), (0,x), (0,y) in
    /// centered coordinates.
    coef: Vector6<f64>,
}

impl Bdm1Local {
    pub fn evaluate(&self, p: Point2<f64>) -> Vector2<f64> {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        Vector2::new(
            self.coef[0] + self.coef[2] * dx + self.coef[3] * dy,
            self.coef[1] + self.coef[4] * dx + self.coef[5] * dy,
        )
    }

    pub fn divergence(&self) -> f64 {
        self.coef[2] + self.coef[5]
    }
}

/// Value of centered monomial basis function `k` at offset (dx, dy).
fn monomial(k: usize, dx: f64, dy: f64) -> Vector2<f64> {
    match k {
        0 => Vector2::new(1.0, 0.0),
        1 => Vector2::new(0.0, 1.0),
        2 => Vector2::new(dx, 0.0),
        3 => Vector2::new(dy, 0.0),
        4 => Vector2::new(0.0, dx),
        5 => Vector2::new(0.0, dy),
        _ => unreachable!(),
    }
}

/// Moment matrix of the monomial basis on one element: row 2i holds the
/// zeroth and row 2i+1 the first normal-trace moment on local facet i.
pub(crate) fn bdm1_moment_matrix(mesh: &TriMesh, element: usize) -> Matrix6<f64> {
    let geom = ElemGeom::new(mesh, element);
    let center = mesh.centroid(element);
    let mut mat = Matrix6::zeros();
    for i in 0..3 {
        let f = geom.facets[i];
        let n = mesh.facet_normals[f];
        let len = geom.edge_lens[i];
        let [a, b] = mesh.facets[f];
        let edge = mesh.vertices[b] - mesh.vertices[a];
        let mid = mesh.facet_midpoints[f];
        for &(q, w) in &EDGE_GAUSS_2 {
            let p = mid + q * edge;
            for k in 0..6 {
                let g = monomial(k, p.x - center.x, p.y - center.y).dot(&n);
                mat[(2 * i, k)] += w * len * g;
                mat[(2 * i + 1, k)] += w * len * g * q;
            }
        }
    }
    mat
}

/// Builds the local polynomial realizing the moments from
/// [`bdm1_reconstruct`].
pub fn bdm1_local(mesh: &TriMesh, element: usize, moments: &[f64; 6]) -> Bdm1Local {
    let mat = bdm1_moment_matrix(mesh, element);
    let rhs = Vector6::from_row_slice(moments);
    let coef = mat.lu().solve(&rhs).expect("facet-moment system is unisolvent");
    Bdm1Local { center: mesh.centroid(element), coef }
}
