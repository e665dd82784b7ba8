//! Symmetric quadrature rules on triangles and short Gauss rules on edges.
//!
//! Rules are stored in barycentric coordinates with weights normalized so
//! that `integral = area * sum(w_k * g(x_k))`. Degrees 1-6 use compact
//! symmetric point sets; degrees 7-10 are generated from a collapsed
//! Gauss-Legendre product rule and symmetrized over the vertex
//! permutation group, which keeps all weights positive.

use std::sync::OnceLock;

use nalgebra::Point2;

/// Highest polynomial degree integrated exactly by any rule in this module.
pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuadratureError {
    #[error("unsupported triangle quadrature degree {0} (supported: 1..={MAX_DEGREE})")]
    UnsupportedDegree(usize),
}

/// Quadrature rule on the triangle, points in barycentric coordinates.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    /// Polynomial degree integrated exactly.
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    /// Weights summing to one.
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Physical location of quadrature point `k` in the triangle `verts`.
    pub fn physical_point(&self, k: usize, verts: &[Point2<f64>; 3]) -> Point2<f64> {
        let l = self.points[k];
        Point2::new(
            l[0] * verts[0].x + l[1] * verts[1].x + l[2] * verts[2].x,
            l[0] * verts[0].y + l[1] * verts[1].y + l[2] * verts[2].y,
        )
    }

    /// Integrates `g` over the triangle `verts` with the given area.
    pub fn integrate(&self, verts: &[Point2<f64>; 3], area: f64, mut g: impl FnMut(Point2<f64>) -> f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.points.len() {
            acc += self.weights[k] * g(self.physical_point(k, verts));
        }
        area * acc
    }
}

/// Returns a rule exact for polynomials of total degree at least `degree`.
pub fn triangle_rule(degree: usize) -> Result<&'static TriangleRule, QuadratureError> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    static RULES: OnceLock<Vec<TriangleRule>> = OnceLock::new();
    let rules = RULES.get_or_init(build_rules);
    // Rules are sorted by exactness degree; pick the first that suffices.
    Ok(rules
        .iter()
        .find(|r| r.degree >= degree)
        .expect("rule table covers 1..=MAX_DEGREE"))
}

/// Two-point Gauss rule on an edge, as offsets from the midpoint in units
/// of the edge vector, with weights summing to one.
pub const EDGE_GAUSS_2: [(f64, f64); 2] = [
    (-0.28867513459481288, 0.5), // -1/(2*sqrt(3))
    (0.28867513459481288, 0.5),
];

fn orbit1(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, w: f64) {
    points.push([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
    weights.push(w);
}

fn orbit3(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        points.push(p);
        weights.push(w);
    }
}

fn orbit6(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(p);
        weights.push(w);
    }
}

fn rule_degree_1() -> TriangleRule {
    let (mut p, mut w) = (Vec::new(), Vec::new());
    orbit1(&mut p, &mut w, 1.0);
    TriangleRule { degree: 1, points: p, weights: w }
}

fn rule_degree_2() -> TriangleRule {
    let (mut p, mut w) = (Vec::new(), Vec::new());
    orbit3(&mut p, &mut w, 1.0 / 6.0, 1.0 / 3.0);
    TriangleRule { degree: 2, points: p, weights: w }
}

fn rule_degree_4() -> TriangleRule {
    let (mut p, mut w) = (Vec::new(), Vec::new());
    orbit3(&mut p, &mut w, 0.445948490915965, 0.223381589678011);
    orbit3(&mut p, &mut w, 0.091576213509771, 0.109951743655322);
    TriangleRule { degree: 4, points: p, weights: w }
}

fn rule_degree_5() -> TriangleRule {
    let (mut p, mut w) = (Vec::new(), Vec::new());
    orbit1(&mut p, &mut w, 0.225);
    orbit3(&mut p, &mut w, 0.470142064105115, 0.132394152788506);
    orbit3(&mut p, &mut w, 0.101286507323456, 0.125939180544827);
    TriangleRule { degree: 5, points: p, weights: w }
}

fn rule_degree_6() -> TriangleRule {
    let (mut p, mut w) = (Vec::new(), Vec::new());
    orbit3(&mut p, &mut w, 0.249286745170910, 0.116786275726379);
    orbit3(&mut p, &mut w, 0.063089014491502, 0.050844906370207);
    orbit6(&mut p, &mut w, 0.053145049844816, 0.310352451033785, 0.082851075618374);
    TriangleRule { degree: 6, points: p, weights: w }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let x = 0.5773502691896258;
            (vec![-x, x], vec![1.0, 1.0])
        }
        3 => {
            let x = 0.7745966692414834;
            (vec![-x, 0.0, x], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let (x0, x1) = (0.3399810435848563, 0.8611363115940526);
            let (w0, w1) = (0.6521451548625461, 0.34785484513745386);
            (vec![-x1, -x0, x0, x1], vec![w1, w0, w0, w1])
        }
        5 => {
            let (x1, x2) = (0.5384693101056831, 0.9061798459386640);
            let (w0, w1, w2) = (0.5688888888888889, 0.4786286704993665, 0.2369268850561891);
            (vec![-x2, -x1, 0.0, x1, x2], vec![w2, w1, w0, w1, w2])
        }
        6 => {
            let (x0, x1, x2) = (0.2386191860831969, 0.6612093864662645, 0.9324695142031521);
            let (w0, w1, w2) = (0.4679139345726910, 0.3607615730481386, 0.1713244923791704);
            (vec![-x2, -x1, -x0, x0, x1, x2], vec![w2, w1, w0, w0, w1, w2])
        }
        _ => unreachable!("gauss_legendre order {n} not tabulated"),
    }
}

/// Degree-`d` rule from the collapsed product construction, symmetrized
/// over all vertex permutations so the result is invariant under affine
/// relabeling of the triangle.
fn rule_collapsed_symmetric(degree: usize) -> TriangleRule {
    // On the square: x = xi * (1 - eta), y = eta, Jacobian (1 - eta).
    // A polynomial of total degree d becomes degree d in xi and d + 1 in
    // eta including the Jacobian, so n Gauss points with 2n - 1 >= d + 1
    // are exact in each direction.
    let n = (degree + 3) / 2;
    let (nodes, wts) = gauss_legendre(n);
    let mut points = Vec::with_capacity(6 * n * n);
    let mut weights = Vec::with_capacity(6 * n * n);
    for i in 0..n {
        let xi = 0.5 * (nodes[i] + 1.0);
        let wxi = 0.5 * wts[i];
        for j in 0..n {
            let eta = 0.5 * (nodes[j] + 1.0);
            let weta = 0.5 * wts[j];
            let x = xi * (1.0 - eta);
            let y = eta;
            // Normalize so weights sum to 1 over the area-1/2 reference.
            let w = 2.0 * wxi * weta * (1.0 - eta);
            orbit6(&mut points, &mut weights, 1.0 - x - y, x, w / 6.0);
        }
    }
    TriangleRule { degree, points, weights }
}

fn build_rules() -> Vec<TriangleRule> {
    vec![
        rule_degree_1(),
        rule_degree_2(),
        rule_degree_4(),
        rule_degree_5(),
        rule_degree_6(),
        rule_collapsed_symmetric(8),
        rule_collapsed_symmetric(10),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Closed form of the monomial integral over the reference triangle:
    /// int x^p y^q dx dy = p! q! / (p + q + 2)!.
    fn exact_monomial(p: u32, q: u32) -> f64 {
        fn fact(n: u32) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        fact(p) * fact(q) / fact(p + q + 2)
    }

    fn reference() -> [Point2<f64>; 3] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
    }

    #[test]
    fn monomial_exactness_at_claimed_degree() {
        for degree in 1..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            assert!(rule.degree >= degree);
            for p in 0..=rule.degree as u32 {
                for q in 0..=(rule.degree as u32 - p) {
                    let num = rule.integrate(&reference(), 0.5, |x| {
                        x.x.powi(p as i32) * x.y.powi(q as i32)
                    });
                    let exact = exact_monomial(p, q);
                    assert_relative_eq!(num, exact, max_relative = 1e-12, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn weights_positive_and_normalized() {
        for degree in 1..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0), "degree {degree}");
            let sum: f64 = rule.weights.iter().sum();
            assert_relative_eq!(sum, 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn points_inside_triangle() {
        for degree in 1..=MAX_DEGREE {
            let rule = triangle_rule(degree).unwrap();
            for l in &rule.points {
                assert_relative_eq!(l[0] + l[1] + l[2], 1.0, max_relative = 1e-12);
                assert!(l.iter().all(|&c| c > -1e-14));
            }
        }
    }

    #[test]
    fn consistent_on_skewed_triangle() {
        // Low- and high-order rules must agree on a polynomial they both
        // integrate exactly, which cross-checks the barycentric mapping.
        let verts = [Point2::new(-0.3, 0.1), Point2::new(1.7, 0.4), Point2::new(0.2, 2.1)];
        let area = 0.5
            * ((verts[1].x - verts[0].x) * (verts[2].y - verts[0].y)
                - (verts[2].x - verts[0].x) * (verts[1].y - verts[0].y));
        let poly = |p: Point2<f64>| (p.x + 2.0 * p.y).powi(4) - 3.0 * p.x * p.y + 1.0;
        let lo = triangle_rule(4).unwrap().integrate(&verts, area, poly);
        for degree in 5..=MAX_DEGREE {
            let hi = triangle_rule(degree).unwrap().integrate(&verts, area, poly);
            assert_relative_eq!(lo, hi, max_relative = 1e-13);
        }
    }

    #[test]
    fn rejects_unsupported_degrees() {
        assert!(triangle_rule(0).is_err());
        assert!(triangle_rule(MAX_DEGREE + 1).is_err());
    }

    #[test]
    fn edge_gauss_integrates_cubics() {
        // int_{-1/2}^{1/2} t^k dt via the midpoint-offset convention.
        for k in 0..=3u32 {
            let num: f64 = EDGE_GAUSS_2.iter().map(|&(t, w)| w * t.powi(k as i32)).sum();
            let exact = if k % 2 == 1 {
                0.0
            } else {
                (0.5f64.powi(k as i32 + 1) - (-0.5f64).powi(k as i32 + 1)) / (k as f64 + 1.0)
            };
            assert_relative_eq!(num, exact, epsilon = 1e-15);
        }
    }
}
