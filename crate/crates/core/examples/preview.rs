use crstokes::analysis::*;
use crstokes::boundary_layer::{solve_profile, ExactFields, FlowParams};
use crstokes::fem::{assemble_with_dirichlet, MethodKind};
use crstokes::mesh::{build_uniform, Rect};
use crstokes::solver::solve;
use std::sync::Arc;

fn main() {
    let rect = Rect::new(-1.0, 1.0, 0.0, 1.0).unwrap();
    let profile = solve_profile(10.0, 1e-10).unwrap();
    let fields = Arc::new(ExactFields::new(FlowParams::new(1e-4, 1.0, 0.0), profile));
    // quadrature sensitivity of the error norm on coarse uniform meshes
    for ny in [8usize, 16] {
        let mesh = Arc::new(build_uniform(rect, 2 * ny, ny).unwrap());
        let sys = assemble_with_dirichlet(&mesh, MethodKind::CrRt, 1e-4,
            &|p| fields.forcing(p), &|p| fields.velocity(p), 5).unwrap();
        let (u, p, _) = solve(&sys, 1e-9).unwrap();
        for deg in [4usize, 6, 8, 10] {
            let e = error_norms(&u, &p, &fields, deg);
            println!("uniform ny={ny} deg={deg}: vel={:.6e} press={:.6e} lf={:.4}", e.velocity_h1, e.pressure_l2, e.layer_fraction);
        }
    }
}
