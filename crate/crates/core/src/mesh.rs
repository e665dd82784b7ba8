//! Structured triangulations of axis-aligned rectangles.
//!
//! Both builders split every grid cell into two triangles along the
//! diagonal from the lower-left to the upper-right corner, so all elements
//! are axis-aligned right triangles and the largest angle in any mesh is
//! exactly pi/2. Facets are first-class entities because all velocity and
//! flux degrees of freedom live on them.

use nalgebra::{Point2, Vector2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("invalid rectangle: need x_min < x_max and y_min < y_max, got {0:?}")]
    InvalidRect(Rect),
    #[error("invalid cell counts nx={nx}, ny={ny}: both must be at least 1")]
    InvalidCounts { nx: usize, ny: usize },
    #[error("transition point tau={tau} outside (0, {height})")]
    InvalidTau { tau: f64, height: f64 },
    #[error("graded meshes need an even row count, got ny={ny}")]
    OddRowCount { ny: usize },
}

/// Axis-aligned rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, MeshError> {
        let rect = Rect { x_min, x_max, y_min, y_max };
        if !(x_min < x_max && y_min < y_max) || !rect.is_finite() {
            return Err(MeshError::InvalidRect(rect));
        }
        Ok(rect)
    }

    fn is_finite(&self) -> bool {
        [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Mesh grading in the y direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    /// Piecewise-uniform rows, half below and half above `y_min + tau`.
    Shishkin { tau: f64 },
}

impl Grading {
    pub fn label(&self) -> &'static str {
        match self {
            Grading::Uniform => "uniform",
            Grading::Shishkin { .. } => "shishkin",
        }
    }
}

/// Conforming triangulation of a rectangle with explicit facet entities.
///
/// `facets[f]` stores the vertex pair with the lower index first; the unit
/// normal `facet_normals[f]` points out of the first element listed in
/// `facet_to_elements[f]`, which is always the one with the smaller index.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub rect: Rect,
    pub vertices: Vec<Point2<f64>>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Facet index opposite each local vertex.
    pub element_facets: Vec<[usize; 3]>,
    pub facets: Vec<[usize; 2]>,
    pub facet_to_elements: Vec<(usize, Option<usize>)>,
    pub boundary_facets: Vec<bool>,
    pub facet_midpoints: Vec<Point2<f64>>,
    pub facet_normals: Vec<Vector2<f64>>,
    pub grading: Grading,
}

/// Per-mesh anisotropy and size diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct MeshQuality {
    /// Largest interior angle over all elements, radians.
    pub max_angle: f64,
    /// Largest ratio of longest edge to the matching height.
    pub max_aspect_ratio: f64,
    pub n_elements: usize,
    pub n_facets: usize,
    pub n_vertices: usize,
    /// Longest edge in the mesh.
    pub h_max: f64,
}

/// Uniform nx-by-ny grid of cells, two triangles per cell.
pub fn build_uniform(rect: Rect, nx: usize, ny: usize) -> Result<TriMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidCounts { nx, ny });
    }
    let xs = uniform_coords(rect.x_min, rect.x_max, nx);
    let ys = uniform_coords(rect.y_min, rect.y_max, ny);
    Ok(build_tensor(rect, &xs, &ys, Grading::Uniform))
}

/// Graded mesh with `ny / 2` uniform rows below `y_min + tau` and `ny / 2`
/// uniform rows above; the x direction stays uniform.
pub fn build_shishkin(rect: Rect, nx: usize, ny: usize, tau: f64) -> Result<TriMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidCounts { nx, ny });
    }
    if ny % 2 != 0 {
        return Err(MeshError::OddRowCount { ny });
    }
    if !(tau > 0.0 && tau < rect.height()) || !tau.is_finite() {
        return Err(MeshError::InvalidTau { tau, height: rect.height() });
    }
    let half = ny / 2;
    let lower = tau / half as f64;
    let upper = (rect.height() - tau) / half as f64;
    let mut ys = Vec::with_capacity(ny + 1);
    for j in 0..=half {
        ys.push(rect.y_min + j as f64 * lower);
    }
    for j in 1..=half {
        ys.push(rect.y_min + tau + j as f64 * upper);
    }
    ys[ny] = rect.y_max;
    let xs = uniform_coords(rect.x_min, rect.x_max, nx);
    Ok(build_tensor(rect, &xs, &ys, Grading::Shishkin { tau }))
}

fn uniform_coords(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    let mut coords: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    coords[n] = hi;
    coords
}

fn build_tensor(rect: Rect, xs: &[f64], ys: &[f64], grading: Grading) -> TriMesh {
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in ys {
        for &x in xs {
            vertices.push(Point2::new(x, y));
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            // Diagonal from the lower-left to the upper-right corner.
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    // Facet extraction: first element to touch a facet owns its normal.
    let mut facet_of_pair = std::collections::HashMap::new();
    let mut facets = Vec::new();
    let mut facet_to_elements: Vec<(usize, Option<usize>)> = Vec::new();
    let mut facet_normals = Vec::new();
    let mut element_facets = vec![[usize::MAX; 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for i in 0..3 {
            // Local facet i is opposite vertex i, directed counterclockwise.
            let (s, e) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
            let key = (s.min(e), s.max(e));
            match facet_of_pair.get(&key) {
                Some(&f) => {
                    element_facets[t][i] = f;
                    let entry: &mut (usize, Option<usize>) = &mut facet_to_elements[f];
                    debug_assert!(entry.1.is_none());
                    entry.1 = Some(t);
                }
                None => {
                    let f = facets.len();
                    facet_of_pair.insert(key, f);
                    facets.push([key.0, key.1]);
                    facet_to_elements.push((t, None));
                    element_facets[t][i] = f;
                    let d = vertices[e] - vertices[s];
                    facet_normals.push(Vector2::new(d.y, -d.x).normalize());
                }
            }
        }
    }

    let boundary_facets: Vec<bool> = facet_to_elements.iter().map(|e| e.1.is_none()).collect();
    let facet_midpoints: Vec<Point2<f64>> = facets
        .iter()
        .map(|&[a, b]| nalgebra::center(&vertices[a], &vertices[b]))
        .collect();

    TriMesh {
        rect,
        vertices,
        triangles,
        element_facets,
        facets,
        facet_to_elements,
        boundary_facets,
        facet_midpoints,
        facet_normals,
        grading,
    }
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point2<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area of element `t`; positive for counterclockwise triangles.
    pub fn area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_vertices(t);
        0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y))
    }

    pub fn centroid(&self, t: usize) -> Point2<f64> {
        let [p0, p1, p2] = self.triangle_vertices(t);
        Point2::new((p0.x + p1.x + p2.x) / 3.0, (p0.y + p1.y + p2.y) / 3.0)
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facets[f];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Unit tangent of facet `f`, pointing from the lower to the higher
    /// vertex index.
    pub fn facet_tangent(&self, f: usize) -> Vector2<f64> {
        let [a, b] = self.facets[f];
        (self.vertices[b] - self.vertices[a]).normalize()
    }

    /// +1 if the stored facet normal points out of element `t`, -1 if into it.
    pub fn facet_sign(&self, f: usize, t: usize) -> f64 {
        if self.facet_to_elements[f].0 == t {
            1.0
        } else {
            -1.0
        }
    }

    pub fn quality(&self) -> MeshQuality {
        let mut max_angle: f64 = 0.0;
        let mut max_aspect: f64 = 0.0;
        let mut h_max: f64 = 0.0;
        for t in 0..self.n_elements() {
            let p = self.triangle_vertices(t);
            let area = self.area(t);
            let mut longest: f64 = 0.0;
            for i in 0..3 {
                let u = p[(i + 1) % 3] - p[i];
                let v = p[(i + 2) % 3] - p[i];
                let cosine = u.dot(&v) / (u.norm() * v.norm());
                max_angle = max_angle.max(cosine.clamp(-1.0, 1.0).acos());
                longest = longest.max(u.norm());
            }
            // Height matching the longest edge is 2A / l, so the ratio is
            // l^2 / (2A).
            max_aspect = max_aspect.max(longest * longest / (2.0 * area));
            h_max = h_max.max(longest);
        }
        MeshQuality {
            max_angle,
            max_aspect_ratio: max_aspect,
            n_elements: self.n_elements(),
            n_facets: self.n_facets(),
            n_vertices: self.n_vertices(),
            h_max,
        }
    }
}
