//! Triangular meshes of the unit square, uniform red refinement and
//! element patches.
//!
//! Level `k` of a [`MeshHierarchy`] is the triangulation whose squares (pairs
//! of triangles sharing a diagonal) have side length `2^-k`. Vertices are
//! nested: the vertices of level `k` keep their indices on level `k + 1`, and
//! the midpoint of coarse facet `f` gets index `n_vertices + f`. Children of
//! triangle `t` are `4t..4t+4`, so the descendants of a coarse triangle on any
//! finer level form a contiguous index range.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::sync::Arc;

use crate::error::{LodError, Result};

pub type Point = [f64; 2];

const GEOM_TOL: f64 = 1e-12;

/// Adjacent elements of a facet; `second` is `None` on the boundary and
/// otherwise has a larger index than `first`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FacetElements {
    pub first: usize,
    pub second: Option<usize>,
}

impl FacetElements {
    pub fn count(&self) -> usize {
        1 + self.second.is_some() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.first).chain(self.second)
    }
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Vertex pairs with `v0 < v1`.
    pub facets: Vec<[usize; 2]>,
    /// Unit normal per facet. Points out of `facet_elements[f].first`, which
    /// is the lower-indexed neighbour; outward on the boundary.
    pub facet_normals: Vec<Point>,
    pub facet_elements: Vec<FacetElements>,
    /// `triangle_facets[t][k]` is the facet opposite local vertex `k`.
    pub triangle_facets: Vec<[usize; 3]>,
    pub boundary_facet: Vec<bool>,
    pub boundary_vertex: Vec<bool>,
    pub vertex_elements: Vec<Vec<usize>>,
    pub vertex_facets: Vec<Vec<usize>>,
    /// Maximal element diameter.
    pub level_size: f64,
}

impl TriMesh {
    /// Builds all connectivity from vertex coordinates and counter-clockwise
    /// triangles.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Self {
        let nv = vertices.len();
        let mut facet_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut facets = Vec::new();
        let mut facet_elements: Vec<FacetElements> = Vec::new();
        let mut facet_normals = Vec::new();
        let mut triangle_facets = Vec::with_capacity(triangles.len());

        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for k in 0..3 {
                let p = tri[(k + 1) % 3];
                let q = tri[(k + 2) % 3];
                let key = [p.min(q), p.max(q)];
                let f = *facet_index.entry(key).or_insert_with(|| {
                    facets.push(key);
                    facet_elements.push(FacetElements { first: t, second: None });
                    // outward normal of the counter-clockwise edge p -> q
                    let (a, b) = (vertices[p], vertices[q]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let len = dx.hypot(dy);
                    facet_normals.push([dy / len, -dx / len]);
                    facets.len() - 1
                });
                if facet_elements[f].first != t {
                    facet_elements[f].second = Some(t);
                }
                local[k] = f;
            }
            triangle_facets.push(local);
        }

        let boundary_facet: Vec<bool> = facet_elements.iter().map(|fe| fe.second.is_none()).collect();
        let mut boundary_vertex = vec![false; nv];
        let mut vertex_facets = vec![Vec::new(); nv];
        for (f, &[a, b]) in facets.iter().enumerate() {
            if boundary_facet[f] {
                boundary_vertex[a] = true;
                boundary_vertex[b] = true;
            }
            vertex_facets[a].push(f);
            vertex_facets[b].push(f);
        }
        let mut vertex_elements = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_elements[v].push(t);
            }
        }

        let mut mesh = TriMesh {
            vertices,
            triangles,
            facets,
            facet_normals,
            facet_elements,
            triangle_facets,
            boundary_facet,
            boundary_vertex,
            vertex_elements,
            vertex_facets,
            level_size: 0.0,
        };
        mesh.level_size = (0..mesh.n_triangles()).map(|t| mesh.diameter(t)).fold(0.0, f64::max);
        mesh
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.corners(t);
        (0..3)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(0.0, f64::max)
    }

    pub fn min_diameter(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| self.diameter(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facets[f];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn facet_midpoint(&self, f: usize) -> Point {
        let [a, b] = self.facets[f];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Gradients of the three barycentric coordinates (constant per element).
    pub fn barycentric_gradients(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.corners(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        [
            [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
            [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ]
    }

    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.corners(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// True if `p` lies on the closed facet `f`.
    pub fn point_on_facet(&self, f: usize, p: Point) -> bool {
        let [a, b] = self.facets[f];
        let (s, e) = (self.vertices[a], self.vertices[b]);
        let (dx, dy) = (e[0] - s[0], e[1] - s[1]);
        let len2 = dx * dx + dy * dy;
        let cross = (p[0] - s[0]) * dy - (p[1] - s[1]) * dx;
        if cross.abs() > GEOM_TOL * len2.sqrt() {
            return false;
        }
        let tpar = ((p[0] - s[0]) * dx + (p[1] - s[1]) * dy) / len2;
        (-GEOM_TOL..=1.0 + GEOM_TOL).contains(&tpar)
    }

    /// True if `p` lies strictly inside facet `f` (excluding its endpoints).
    pub fn point_in_facet_interior(&self, f: usize, p: Point) -> bool {
        if !self.point_on_facet(f, p) {
            return false;
        }
        let [a, b] = self.facets[f];
        let far = |q: Point| (q[0] - p[0]).hypot(q[1] - p[1]) > GEOM_TOL;
        far(self.vertices[a]) && far(self.vertices[b])
    }

    /// Plain-text dump: vertex, triangle and facet tables.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertices {}", self.n_vertices())?;
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(out, "{i} {:.17e} {:.17e} {}", p[0], p[1], self.boundary_vertex[i] as u8)?;
        }
        writeln!(out, "triangles {}", self.n_triangles())?;
        for (t, tri) in self.triangles.iter().enumerate() {
            writeln!(out, "{t} {} {} {}", tri[0], tri[1], tri[2])?;
        }
        writeln!(out, "facets {}", self.n_facets())?;
        for (f, fv) in self.facets.iter().enumerate() {
            let fe = self.facet_elements[f];
            let n = self.facet_normals[f];
            let second = fe.second.map_or(-1, |s| s as i64);
            writeln!(
                out,
                "{f} {} {} {} {} {:.17e} {:.17e}",
                fv[0], fv[1], fe.first, second, n[0], n[1]
            )?;
        }
        Ok(())
    }
}

/// The unit square split along the diagonal from (0,0) to (1,1).
pub fn build_initial_mesh() -> TriMesh {
    let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let triangles = vec![[0, 1, 2], [0, 2, 3]];
    TriMesh::from_parts(vertices, triangles)
}

/// Red refinement: every triangle is split into four similar children.
pub fn refine_uniform(mesh: &TriMesh) -> TriMesh {
    refine_with_map(mesh).0
}

/// Red refinement that also returns, for every coarse facet, the two fine
/// facets tiling it.
pub fn refine_with_map(mesh: &TriMesh) -> (TriMesh, Vec<[usize; 2]>) {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.extend((0..mesh.n_facets()).map(|f| mesh.facet_midpoint(f)));

    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let [fa, fb, fc] = mesh.triangle_facets[t];
        let (ma, mb, mc) = (nv + fa, nv + fb, nv + fc);
        triangles.push([a, mc, mb]);
        triangles.push([mc, b, ma]);
        triangles.push([mb, ma, c]);
        triangles.push([ma, mb, mc]);
    }
    let fine = TriMesh::from_parts(vertices, triangles);

    let lookup: HashMap<[usize; 2], usize> = fine.facets.iter().enumerate().map(|(f, &key)| (key, f)).collect();
    let key = |p: usize, q: usize| [p.min(q), p.max(q)];
    let children = mesh
        .facets
        .iter()
        .enumerate()
        .map(|(f, &[p, q])| {
            let m = nv + f;
            [lookup[&key(p, m)], lookup[&key(m, q)]]
        })
        .collect();
    (fine, children)
}

/// Uniformly refined meshes `levels[0..=max_level]`, level `k` having squares
/// of side `2^-k`.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    pub levels: Vec<TriMesh>,
    /// `parent_maps[k][t]` is the level-`k` parent of triangle `t` on level `k + 1`.
    pub parent_maps: Vec<Vec<usize>>,
    /// `facet_children[k][f]` are the two level-`k + 1` facets tiling facet `f`.
    pub facet_children: Vec<Vec<[usize; 2]>>,
}

impl MeshHierarchy {
    pub fn new(max_level: usize) -> Self {
        let mut levels = vec![build_initial_mesh()];
        let mut parent_maps = Vec::new();
        let mut facet_children = Vec::new();
        for _ in 0..max_level {
            let coarse = levels.last().unwrap();
            let (fine, children) = refine_with_map(coarse);
            parent_maps.push((0..fine.n_triangles()).map(|t| t / 4).collect());
            facet_children.push(children);
            levels.push(fine);
        }
        MeshHierarchy {
            levels,
            parent_maps,
            facet_children,
        }
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &TriMesh {
        &self.levels[k]
    }

    /// Ancestor on level `coarse` of triangle `t` on level `fine`.
    pub fn ancestor(&self, coarse: usize, fine: usize, t: usize) -> usize {
        (coarse..fine).rev().fold(t, |t, k| self.parent_maps[k][t])
    }

    /// Level-`fine` facets tiling facet `f` of level `coarse`.
    pub fn coarse_facet_to_fine_facets(&self, coarse: usize, fine: usize, f: usize) -> Vec<usize> {
        let mut current = vec![f];
        for k in coarse..fine {
            current = current.iter().flat_map(|&g| self.facet_children[k][g]).collect();
        }
        current
    }

    pub fn pair(&self, coarse: usize, fine: usize) -> Result<LevelPair> {
        LevelPair::new(self, coarse, fine)
    }
}

/// A coarse and a fine level of a hierarchy together with the transfer data
/// needed by the multiscale method.
#[derive(Clone, Debug)]
pub struct LevelPair {
    pub coarse_level: usize,
    pub fine_level: usize,
    pub coarse: Arc<TriMesh>,
    pub fine: Arc<TriMesh>,
    /// Fine triangles per coarse triangle (`4^(fine - coarse)`).
    pub children_per_element: usize,
    pub coarse_facet_fine_facets: Vec<Vec<usize>>,
    /// Coarse P1 -> fine P1: per fine vertex, `(coarse vertex, weight)`.
    pub prolongation: Vec<Vec<(usize, f64)>>,
}

impl LevelPair {
    pub fn new(hierarchy: &MeshHierarchy, coarse_level: usize, fine_level: usize) -> Result<Self> {
        if coarse_level > fine_level || fine_level > hierarchy.max_level() {
            return Err(LodError::Incompatible(format!(
                "levels {coarse_level} -> {fine_level} not available (max {})",
                hierarchy.max_level()
            )));
        }
        let coarse = Arc::new(hierarchy.level(coarse_level).clone());
        let fine = Arc::new(hierarchy.level(fine_level).clone());
        let children_per_element = 4usize.pow((fine_level - coarse_level) as u32);
        let coarse_facet_fine_facets = (0..coarse.n_facets())
            .map(|f| hierarchy.coarse_facet_to_fine_facets(coarse_level, fine_level, f))
            .collect();

        let mut prolongation: Vec<Vec<(usize, f64)>> = vec![Vec::new(); fine.n_vertices()];
        let mut done = vec![false; fine.n_vertices()];
        for t in 0..fine.n_triangles() {
            let parent = t / children_per_element;
            let tri = coarse.triangles[parent];
            for &v in &fine.triangles[t] {
                if done[v] {
                    continue;
                }
                done[v] = true;
                let lam = coarse.barycentric(parent, fine.vertices[v]);
                prolongation[v] = (0..3)
                    .filter(|&k| lam[k].abs() > 1e-14)
                    .map(|k| (tri[k], lam[k]))
                    .collect();
            }
        }

        Ok(LevelPair {
            coarse_level,
            fine_level,
            coarse,
            fine,
            children_per_element,
            coarse_facet_fine_facets,
            prolongation,
        })
    }

    pub fn fine_triangles_of(&self, coarse_t: usize) -> std::ops::Range<usize> {
        coarse_t * self.children_per_element..(coarse_t + 1) * self.children_per_element
    }

    pub fn parent_of(&self, fine_t: usize) -> usize {
        fine_t / self.children_per_element
    }

    /// Side length of the squares of the coarse level (`2^-coarse_level`).
    pub fn coarse_side(&self) -> f64 {
        0.5f64.powi(self.coarse_level as i32)
    }

    pub fn fine_side(&self) -> f64 {
        0.5f64.powi(self.fine_level as i32)
    }
}

/// Element patch `N^ℓ(T)` together with its facet bookkeeping.
#[derive(Clone, Debug)]
pub struct Patch {
    pub center: usize,
    pub order: usize,
    /// Sorted element indices.
    pub elements: Vec<usize>,
    /// Facets of the patch that do not lie on the artificial boundary
    /// `∂N^ℓ(T) \ ∂Ω`; facets on `∂Ω` stay active.
    pub active_facets: Vec<usize>,
    /// Facets on `∂N^ℓ(T)`, including those on `∂Ω`.
    pub boundary_facets: Vec<usize>,
    pub in_patch: Vec<bool>,
}

impl Patch {
    pub fn contains(&self, t: usize) -> bool {
        self.in_patch[t]
    }

    pub fn is_full(&self) -> bool {
        self.elements.len() == self.in_patch.len()
    }
}

/// One layer of node-neighbour closure: all elements sharing a vertex with
/// an element of `mask`.
pub fn node_closure(mesh: &TriMesh, mask: &[bool]) -> Vec<bool> {
    let mut out = mask.to_vec();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mask[t] {
            for &v in tri {
                for &s in &mesh.vertex_elements[v] {
                    out[s] = true;
                }
            }
        }
    }
    out
}

pub fn build_patch(mesh: &TriMesh, center: usize, order: usize) -> Result<Patch> {
    let nt = mesh.n_triangles();
    if center >= nt {
        return Err(LodError::InvalidElement(center, nt));
    }
    let mut mask = vec![false; nt];
    mask[center] = true;
    for _ in 0..order {
        let next = node_closure(mesh, &mask);
        if next == mask {
            break;
        }
        mask = next;
    }
    let elements = (0..nt).filter(|&t| mask[t]).collect();

    let mut active_facets = Vec::new();
    let mut boundary_facets = Vec::new();
    for (f, fe) in mesh.facet_elements.iter().enumerate() {
        let inside = fe.iter().filter(|&t| mask[t]).count();
        if inside == 0 {
            continue;
        }
        if inside == fe.count() {
            active_facets.push(f);
            if mesh.boundary_facet[f] {
                boundary_facets.push(f);
            }
        } else {
            boundary_facets.push(f);
        }
    }
    Ok(Patch {
        center,
        order,
        elements,
        active_facets,
        boundary_facets,
        in_patch: mask,
    })
}

/// Smallest `ℓ` with `N^ℓ(T) = 𝒯` for every element `T`.
pub fn saturation_order(mesh: &TriMesh) -> usize {
    let nt = mesh.n_triangles();
    let mut worst = 0;
    for start in 0..nt {
        let mut dist = vec![usize::MAX; nt];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            for &v in &mesh.triangles[t] {
                for &s in &mesh.vertex_elements[v] {
                    if dist[s] == usize::MAX {
                        dist[s] = dist[t] + 1;
                        queue.push_back(s);
                    }
                }
            }
        }
        worst = worst.max(dist.into_iter().max().unwrap_or(0));
    }
    worst
}
