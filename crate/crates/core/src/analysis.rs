//! Error norms, convergence studies and robustness diagnostics.
//!
//! Velocity errors are measured in the broken H1 seminorm against the
//! exact gradient, element by element, which also yields the data for the
//! error maps. Pressure errors compare the mean-shifted exact pressure
//! with the piecewise-constant solution. The no-flow test probes how a
//! method reacts to purely irrotational forcing.

use std::sync::Arc;

use nalgebra::{Matrix2, Point2, Vector2};

use crate::boundary_layer::ExactFields;
use crate::fem::{assemble, assemble_with_dirichlet, CRVectorField, MethodKind, P0Scalar};
use crate::mesh::{build_shishkin, build_uniform, Grading, Rect, TriMesh};
use crate::quadrature::triangle_rule;
use crate::solver::{solve, SolveReport};
use crate::Error;

/// Error measures of one solve.
#[derive(Debug, Clone)]
pub struct ErrorSummary {
    /// Broken H1 seminorm of the velocity error.
    pub velocity_h1: f64,
    pub pressure_l2: f64,
    /// Per-element contribution: the L2 norm of the gradient error on
    /// each element; squares sum to `velocity_h1^2`.
    pub per_element: Vec<f64>,
    /// Share of the squared velocity error carried by elements whose
    /// centroid lies below the layer width.
    pub layer_fraction: f64,
}

/// Errors against the stagnation-point fields.
pub fn error_norms(
    u_h: &CRVectorField,
    p_h: &P0Scalar,
    exact: &ExactFields,
    quad_degree: usize,
) -> ErrorSummary {
    error_norms_against(
        u_h,
        p_h,
        &|p| exact.gradient(p),
        &|p| exact.pressure(p),
        exact.delta,
        quad_degree,
    )
}

/// Errors against arbitrary exact gradient and pressure fields.
pub fn error_norms_against(
    u_h: &CRVectorField,
    p_h: &P0Scalar,
    exact_gradient: &dyn Fn(Point2<f64>) -> Matrix2<f64>,
    exact_pressure: &dyn Fn(Point2<f64>) -> f64,
    layer_width: f64,
    quad_degree: usize,
) -> ErrorSummary {
    assert!(quad_degree >= 4, "error quadrature degree must be at least 4");
    let rule = triangle_rule(quad_degree).expect("supported degree");
    let mesh = &u_h.mesh;

    // The discrete pressure is mean-zero, so shift the exact one too.
    let mut pressure_integral = 0.0;
    let mut area_total = 0.0;
    for t in 0..mesh.n_elements() {
        let verts = mesh.triangle_vertices(t);
        let area = mesh.area(t);
        pressure_integral += rule.integrate(&verts, area, exact_pressure);
        area_total += area;
    }
    let pressure_mean = pressure_integral / area_total;

    let mut per_element = Vec::with_capacity(mesh.n_elements());
    let mut vel2 = 0.0;
    let mut layer2 = 0.0;
    let mut press2 = 0.0;
    for t in 0..mesh.n_elements() {
        let verts = mesh.triangle_vertices(t);
        let area = mesh.area(t);
        let grad_h = u_h.element_gradient(t);
        let e2 = rule.integrate(&verts, area, |p| (exact_gradient(p) - grad_h).norm_squared());
        per_element.push(e2.max(0.0).sqrt());
        vel2 += e2;
        if mesh.centroid(t).y < layer_width {
            layer2 += e2;
        }
        let p_t = p_h.values[t];
        press2 += rule.integrate(&verts, area, |p| {
            let diff = exact_pressure(p) - pressure_mean - p_t;
            diff * diff
        });
    }

    ErrorSummary {
        velocity_h1: vel2.max(0.0).sqrt(),
        pressure_l2: press2.max(0.0).sqrt(),
        per_element,
        layer_fraction: if vel2 > 0.0 { layer2 / vel2 } else { 0.0 },
    }
}

/// A Stokes problem with known solution fields.
pub struct ProblemSpec {
    pub nu: f64,
    pub forcing: Box<dyn Fn(Point2<f64>) -> Vector2<f64> + Send + Sync>,
    pub dirichlet: Box<dyn Fn(Point2<f64>) -> Vector2<f64> + Send + Sync>,
    pub exact_gradient: Box<dyn Fn(Point2<f64>) -> Matrix2<f64> + Send + Sync>,
    pub exact_pressure: Box<dyn Fn(Point2<f64>) -> f64 + Send + Sync>,
    /// Width of the wall layer used by the localization metric; zero for
    /// problems without a layer.
    pub layer_width: f64,
}

/// Stagnation-point problem: convective forcing, exact boundary values.
pub fn hiemenz_problem(fields: Arc<ExactFields>) -> ProblemSpec {
    let nu = fields.params.nu;
    let layer_width = fields.delta;
    let f1 = Arc::clone(&fields);
    let f2 = Arc::clone(&fields);
    let f3 = Arc::clone(&fields);
    let f4 = fields;
    ProblemSpec {
        nu,
        forcing: Box::new(move |p| f1.forcing(p)),
        dirichlet: Box::new(move |p| f2.velocity(p)),
        exact_gradient: Box::new(move |p| f3.gradient(p)),
        exact_pressure: Box::new(move |p| f4.pressure(p)),
        layer_width,
    }
}

/// Smooth polynomial solution u = (2x^2 y, -2x y^2), p = x y, used for
/// rate checks: the data f = -nu lap(u) + grad(p) is polynomial as well.
pub fn polynomial_problem(nu: f64) -> ProblemSpec {
    ProblemSpec {
        nu,
        forcing: Box::new(move |p| Vector2::new(-4.0 * nu * p.y + p.y, 4.0 * nu * p.x + p.x)),
        dirichlet: Box::new(|p| Vector2::new(2.0 * p.x * p.x * p.y, -2.0 * p.x * p.y * p.y)),
        exact_gradient: Box::new(|p| {
            Matrix2::new(4.0 * p.x * p.y, 2.0 * p.x * p.x, -2.0 * p.y * p.y, -4.0 * p.x * p.y)
        }),
        exact_pressure: Box::new(|p| p.x * p.y),
        layer_width: 0.0,
    }
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub ny: usize,
    pub h_max: f64,
    /// Velocity plus pressure degrees of freedom before elimination.
    pub n_dofs: usize,
    pub method: MethodKind,
    pub grading: Grading,
    pub errors: ErrorSummary,
    /// log2 of the error quotient against the previous level.
    pub observed_rate_velocity: Option<f64>,
    pub observed_rate_pressure: Option<f64>,
    pub report: SolveReport,
}

/// Mesh family and discretization choices of a study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub rect: Rect,
    pub method: MethodKind,
    pub grading: Grading,
    /// Rows at level 0; columns are always 2 ny.
    pub ny0: usize,
    pub levels: usize,
    pub quad_degree: usize,
    pub error_quad_degree: usize,
    pub solver_tol: f64,
}

impl StudyConfig {
    pub fn new(method: MethodKind, grading: Grading, ny0: usize, levels: usize) -> Self {
        StudyConfig {
            rect: Rect::new(-1.0, 1.0, 0.0, 1.0).expect("valid study domain"),
            method,
            grading,
            ny0,
            levels,
            quad_degree: 5,
            error_quad_degree: 6,
            solver_tol: 1e-9,
        }
    }

    pub fn build_mesh(&self, level: usize) -> Result<TriMesh, Error> {
        let ny = self.ny0 << level;
        let nx = 2 * ny;
        let mesh = match self.grading {
            Grading::Uniform => build_uniform(self.rect, nx, ny)?,
            Grading::Shishkin { tau } => build_shishkin(self.rect, nx, ny, tau)?,
        };
        Ok(mesh)
    }
}

/// Runs mesh -> assemble -> solve -> norms over all refinement levels.
pub fn convergence_study(cfg: &StudyConfig, problem: &ProblemSpec) -> Result<Vec<ConvergenceRecord>, Error> {
    assert!(cfg.levels >= 1, "need at least one refinement level");
    let mut records: Vec<ConvergenceRecord> = Vec::with_capacity(cfg.levels);
    for level in 0..cfg.levels {
        let record = run_level(cfg, problem, level)?;
        records.push(record);
        attach_rates(&mut records);
    }
    Ok(records)
}

/// Solves a single level of a study and measures its errors.
pub fn run_level(cfg: &StudyConfig, problem: &ProblemSpec, level: usize) -> Result<ConvergenceRecord, Error> {
    let mesh = Arc::new(cfg.build_mesh(level)?);
    let system = assemble_with_dirichlet(
        &mesh,
        cfg.method,
        problem.nu,
        &*problem.forcing,
        &*problem.dirichlet,
        cfg.quad_degree,
    )?;
    let (u_h, p_h, report) = solve(&system, cfg.solver_tol)?;
    let errors = error_norms_against(
        &u_h,
        &p_h,
        &*problem.exact_gradient,
        &*problem.exact_pressure,
        problem.layer_width,
        cfg.error_quad_degree,
    );
    Ok(ConvergenceRecord {
        level,
        ny: cfg.ny0 << level,
        h_max: mesh.quality().h_max,
        n_dofs: 2 * mesh.n_facets() + mesh.n_elements(),
        method: cfg.method,
        grading: mesh.grading,
        errors,
        observed_rate_velocity: None,
        observed_rate_pressure: None,
        report,
    })
}

/// Fills the rate fields from consecutive error quotients. Both mesh
/// families halve their spacings per level, so the quotient exponent is
/// the observed order.
pub fn attach_rates(records: &mut [ConvergenceRecord]) {
    for k in 1..records.len() {
        let prev = records[k - 1].errors.clone();
        let cur = &mut records[k];
        cur.observed_rate_velocity = Some((prev.velocity_h1 / cur.errors.velocity_h1).log2());
        cur.observed_rate_pressure = Some((prev.pressure_l2 / cur.errors.pressure_l2).log2());
    }
}

/// Solves with purely irrotational forcing and homogeneous boundary
/// values; the exact velocity is zero, so the returned broken norm is the
/// discrete velocity response to the gradient part of the data.
pub fn noflow_test(
    mesh: &Arc<TriMesh>,
    method: MethodKind,
    nu: f64,
    grad_phi: &dyn Fn(Point2<f64>) -> Vector2<f64>,
    quad_degree: usize,
) -> Result<f64, Error> {
    let system = assemble(mesh, method, nu, grad_phi, quad_degree)?;
    let (u_h, _, _) = solve(&system, 1e-10)?;
    Ok(u_h.broken_gradient_norm())
}
