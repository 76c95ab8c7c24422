//! Adaptive scattered point sets, support radii and ε-graph adjacency.

mod geometry;
mod kdtree;

pub use geometry::{colloid_gap, wall_gap, Geometry, Notch, NotchWall, OuterBoundary, RefinementSpec, WallSample};
pub use kdtree::KdTree;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Range;

use crate::colloid::{ColloidState, Vec2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Interior,
    OuterWall,
    Colloid(usize),
}

impl Region {
    pub fn is_boundary(&self) -> bool {
        !matches!(self, Region::Interior)
    }

    pub fn tag(&self) -> String {
        match self {
            Region::Interior => "interior".into(),
            Region::OuterWall => "outer-wall".into(),
            Region::Colloid(k) => format!("colloid-{k}"),
        }
    }
}

/// Symmetric ε-graph stored row-compressed; the point itself is excluded.
#[derive(Debug, Clone, Default)]
pub struct Adjacency {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl Adjacency {
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub positions: Vec<Vec2>,
    pub normals: Vec<Option<Vec2>>,
    pub regions: Vec<Region>,
    pub spacing: Vec<f64>,
    pub support: Vec<f64>,
    pub adjacency: Adjacency,
    /// Index range of each colloid's surface points, ordered along the surface.
    pub colloid_ranges: Vec<Range<usize>>,
}

impl PointCloud {
    /// Builds a cloud from raw arrays; supports and adjacency start empty.
    pub fn from_points(
        positions: Vec<Vec2>,
        normals: Vec<Option<Vec2>>,
        regions: Vec<Region>,
        spacing: Vec<f64>,
    ) -> Self {
        assert_eq!(positions.len(), normals.len());
        assert_eq!(positions.len(), regions.len());
        assert_eq!(positions.len(), spacing.len());
        PointCloud {
            positions,
            normals,
            regions,
            spacing,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.adjacency.neighbors(i)
    }

    /// Computes supports for order `m` and the matching adjacency.
    pub fn prepare(&mut self, m: usize) -> Result<()> {
        self.support = compute_supports(self, m)?;
        self.adjacency = build_neighbors(self);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,region,nx,ny,spacing,eps\n");
        for i in 0..self.len() {
            let p = self.positions[i];
            let n = self.normals[i].unwrap_or([0.0, 0.0]);
            let eps = self.support.get(i).copied().unwrap_or(0.0);
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                p[0],
                p[1],
                self.regions[i].tag(),
                n[0],
                n[1],
                self.spacing[i],
                eps
            );
        }
        s
    }
}

/// Dimension of the scalar polynomial space of degree ≤ m in 2D.
pub fn dim_poly(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Kernel W_ε(r) = (1 − r/ε)^4 on r < ε.
pub fn kernel(r: f64, eps: f64) -> f64 {
    if r >= eps {
        0.0
    } else {
        let t = 1.0 - r.abs() / eps;
        let t2 = t * t;
        t2 * t2
    }
}

/// Symmetric pair weight W_ij = W_εi(r) + W_εj(r).
pub fn pair_weight(r: f64, eps_i: f64, eps_j: f64) -> f64 {
    kernel(r, eps_i) + kernel(r, eps_j)
}

/// Support radius ε_i = 1.5 · (distance to the dim(π_m)-th nearest neighbour).
pub fn compute_supports(cloud: &PointCloud, m: usize) -> Result<Vec<f64>> {
    let need = dim_poly(m);
    let n = cloud.len();
    if n < need + 1 {
        return Err(Error::Unisolvency {
            have: n.saturating_sub(1),
            need,
        });
    }
    let tree = KdTree::new(&cloud.positions);
    let mut eps = Vec::with_capacity(n);
    for i in 0..n {
        let near = tree.nearest(cloud.positions[i], need + 1);
        let others: Vec<&(f64, usize)> = near.iter().filter(|(_, j)| *j != i).collect();
        let r_min = others[need - 1].0;
        if r_min <= 0.0 {
            return Err(Error::Geometry(format!("point {i} coincides with a neighbour")));
        }
        eps.push(1.5 * r_min);
    }
    Ok(eps)
}

/// Largest nearest-neighbour distance, sup_i min_{j≠i} ‖x_i − x_j‖.
pub fn coarsest_spacing(cloud: &PointCloud) -> f64 {
    let tree = KdTree::new(&cloud.positions);
    (0..cloud.len())
        .map(|i| {
            tree.nearest(cloud.positions[i], 2)
                .into_iter()
                .find(|(_, j)| *j != i)
                .map(|(d, _)| d)
                .unwrap_or(0.0)
        })
        .fold(0.0, f64::max)
}

/// Builds N(i) = { j ≠ i : W_ij > 0 } with pair weights.
pub fn build_neighbors(cloud: &PointCloud) -> Adjacency {
    let n = cloud.len();
    assert_eq!(cloud.support.len(), n, "supports must be computed first");
    let tree = KdTree::new(&cloud.positions);
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in tree.within(cloud.positions[i], cloud.support[i]) {
            if j != i {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
    }
    let mut adj = Adjacency {
        offsets: Vec::with_capacity(n + 1),
        indices: Vec::new(),
        weights: Vec::new(),
    };
    adj.offsets.push(0);
    for (i, list) in lists.iter_mut().enumerate() {
        list.sort_unstable();
        list.dedup();
        let xi = cloud.positions[i];
        for &j in list.iter() {
            let xj = cloud.positions[j];
            let r = (xi[0] - xj[0]).hypot(xi[1] - xj[1]);
            adj.indices.push(j);
            adj.weights.push(pair_weight(r, cloud.support[i], cloud.support[j]));
        }
        adj.offsets.push(adj.indices.len());
    }
    adj
}

struct Grid {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(cell: f64) -> Self {
        Grid {
            cell,
            map: HashMap::new(),
        }
    }

    fn key(&self, p: Vec2) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Vec2, id: usize) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(id);
    }

    /// Ids of stored points within `radius` (≤ cell) of `p`.
    fn ids_within<'a>(&'a self, p: Vec2, radius: f64, points: &'a [Vec2]) -> impl Iterator<Item = usize> + 'a {
        let (kx, ky) = self.key(p);
        let r2 = radius * radius;
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (kx + dx, ky + dy)))
            .filter_map(move |key| self.map.get(&key))
            .flatten()
            .copied()
            .filter(move |&id| {
                let q = points[id];
                let d = [q[0] - p[0], q[1] - p[1]];
                d[0] * d[0] + d[1] * d[1] < r2
            })
    }

    /// True when some stored point lies within `radius` (≤ cell) of `p`.
    fn any_within(&self, p: Vec2, radius: f64, points: &[Vec2]) -> bool {
        self.ids_within(p, radius, points).next().is_some()
    }
}

struct Builder {
    cloud: PointCloud,
    grids: Vec<Grid>,
}

impl Builder {
    fn push(&mut self, p: Vec2, normal: Option<Vec2>, region: Region, spacing: f64) {
        let id = self.cloud.positions.len();
        self.cloud.positions.push(p);
        self.cloud.normals.push(normal);
        self.cloud.regions.push(region);
        self.cloud.spacing.push(spacing);
        for g in &mut self.grids {
            g.insert(p, id);
        }
    }

    fn crowded(&self, p: Vec2, level: usize, spacing: f64) -> bool {
        self.grids[level].any_within(p, 0.5 * spacing, &self.cloud.positions)
    }
}

/// Generates the adaptive cloud for the given colloid configuration.
///
/// Colloid surfaces are sampled at Δx_0, then `layers` offset curves per level
/// march outward at spacing Δx_i. Layer points falling inside a finer zone of
/// another colloid, or closer than half their spacing to an existing point or
/// the wall, are skipped. A Cartesian grid at Δx∞ fills the rest and the wall
/// perimeter is sampled last.
pub fn generate_cloud(
    geometry: &Geometry,
    refinement: &RefinementSpec,
    colloids: &[ColloidState],
) -> Result<PointCloud> {
    refinement.validate()?;
    let dx0 = refinement.finest();
    geometry.validate_with(colloids, dx0)?;
    for (k, c) in colloids.iter().enumerate() {
        if dx0 > c.shape.feature_size() {
            return Err(Error::Resolution(format!(
                "surface spacing {dx0} exceeds the smallest feature {} of colloid {k}",
                c.shape.feature_size()
            )));
        }
    }
    let levels = refinement.levels as usize;
    let mut b = Builder {
        cloud: PointCloud::default(),
        grids: (0..=levels).map(|l| Grid::new(refinement.level_spacing(l as u32))).collect(),
    };
    let outer = &geometry.outer;

    for (k, c) in colloids.iter().enumerate() {
        let start = b.cloud.len();
        for s in c.sample_offset(0.0, dx0) {
            b.push(s.point, Some(s.normal), Region::Colloid(k), dx0);
        }
        b.cloud.colloid_ranges.push(start..b.cloud.len());
    }

    for level in 1..=levels {
        let h = refinement.level_spacing(level as u32);
        let inner = refinement.cumulative_thickness(level as u32 - 1);
        // candidates surviving the finer levels, per colloid
        let mut candidates: Vec<(usize, Vec2)> = Vec::new();
        for (k, c) in colloids.iter().enumerate() {
            for layer in 1..=refinement.layers {
                let offset = inner + layer as f64 * h;
                for s in c.sample_offset(offset, h) {
                    let p = s.point;
                    if !outer.contains(p) || outer.distance(p) < 0.5 * h {
                        continue;
                    }
                    let in_finer_zone = colloids
                        .iter()
                        .enumerate()
                        .any(|(o, other)| o != k && other.signed_distance(p) < inner + 0.5 * h);
                    if in_finer_zone || b.crowded(p, level, h) {
                        continue;
                    }
                    candidates.push((k, p));
                }
            }
        }
        // same-level clashes between different colloids are merged into the
        // centroid of each clash cluster, so the result does not depend on
        // colloid order and leaves no hole between the colloids
        let mut lookup = Grid::new(h);
        let pts: Vec<Vec2> = candidates.iter().map(|c| c.1).collect();
        for (id, p) in pts.iter().enumerate() {
            lookup.insert(*p, id);
        }
        let mut parent: Vec<usize> = (0..pts.len()).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for (id, &(k, p)) in candidates.iter().enumerate() {
            for other in lookup.ids_within(p, 0.5 * h, &pts).collect::<Vec<_>>() {
                if other != id && candidates[other].0 != k {
                    let (a, b) = (root(&mut parent, id), root(&mut parent, other));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); pts.len()];
        for id in 0..pts.len() {
            let r = root(&mut parent, id);
            clusters[r].push(id);
        }
        let merged: Vec<Vec2> = clusters
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| {
                let n = c.len() as f64;
                let sx = c.iter().map(|&i| pts[i][0]).sum::<f64>();
                let sy = c.iter().map(|&i| pts[i][1]).sum::<f64>();
                [sx / n, sy / n]
            })
            .filter(|&p| !b.crowded(p, level, h))
            .collect();
        for p in merged {
            b.push(p, None, Region::Interior, h);
        }
    }

    let h = refinement.dx_inf;
    let reach = refinement.total_thickness() + 0.5 * h;
    let (lo, hi) = outer.bounding_box();
    let nx = ((hi[0] - lo[0]) / h).round() as i64;
    let ny = ((hi[1] - lo[1]) / h).round() as i64;
    for iy in 0..=ny {
        for ix in 0..=nx {
            let p = [lo[0] + ix as f64 * h, lo[1] + iy as f64 * h];
            if !outer.contains(p) || outer.distance(p) < 0.5 * h {
                continue;
            }
            if colloids.iter().any(|c| c.signed_distance(p) < reach) {
                continue;
            }
            if b.crowded(p, levels, h) {
                continue;
            }
            b.push(p, None, Region::Interior, h);
        }
    }

    for w in outer.sample_perimeter(h) {
        b.push(w.point, Some(w.normal), Region::OuterWall, h);
    }
    Ok(b.cloud)
}

/// Jittered Cartesian cloud on [0,1]² used for randomized operator checks.
///
/// Interior points are perturbed by up to `jitter·h`; the unit-square
/// perimeter is sampled at `h` with outward normals.
pub fn jittered_unit_square(n: usize, jitter: f64, seed: u64) -> PointCloud {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / n as f64;
    let mut positions = Vec::new();
    for iy in 1..n {
        for ix in 1..n {
            let dx = rng.gen_range(-jitter..=jitter) * h;
            let dy = rng.gen_range(-jitter..=jitter) * h;
            positions.push([ix as f64 * h + dx, iy as f64 * h + dy]);
        }
    }
    let mut normals = vec![None; positions.len()];
    let mut regions = vec![Region::Interior; positions.len()];
    for w in OuterBoundary::unit_square().sample_perimeter(h) {
        positions.push(w.point);
        normals.push(Some(w.normal));
        regions.push(Region::OuterWall);
    }
    let spacing = vec![h; positions.len()];
    PointCloud::from_points(positions, normals, regions, spacing)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_cloud(n: usize, h: f64) -> PointCloud {
        let mut pos = Vec::new();
        for iy in 0..n {
            for ix in 0..n {
                pos.push([ix as f64 * h, iy as f64 * h]);
            }
        }
        let k = pos.len();
        PointCloud::from_points(pos, vec![None; k], vec![Region::Interior; k], vec![h; k])
    }

    #[test]
    fn unit_square_cloud_counts() {
        let g = Geometry::new(OuterBoundary::unit_square(), vec![]);
        let r = RefinementSpec::new(0.25, 1, 1).unwrap();
        let c = generate_cloud(&g, &r, &[]).unwrap();
        let wall = c.regions.iter().filter(|r| **r == Region::OuterWall).count();
        let interior = c.regions.iter().filter(|r| **r == Region::Interior).count();
        assert_eq!(wall, 16);
        assert_eq!(interior, 9);
        for i in 0..c.len() {
            match c.normals[i] {
                Some(n) => {
                    assert!(c.regions[i].is_boundary());
                    assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
                }
                None => assert_eq!(c.regions[i], Region::Interior),
            }
        }
    }

    #[test]
    fn disk_surface_is_exact() {
        let g = Geometry::new(
            OuterBoundary::Rectangle {
                lower: [-2.0, -2.0],
                upper: [2.0, 2.0],
                notch: None,
            },
            vec![],
        );
        let r = RefinementSpec::new(0.2, 2, 2).unwrap();
        let disk = ColloidState::disk(0.5, [0.1, 0.0]);
        let c = generate_cloud(&g, &r, &[disk]).unwrap();
        let range = c.colloid_ranges[0].clone();
        assert_eq!(range.len(), 64);
        for i in range {
            let p = c.positions[i];
            assert!(((p[0] - 0.1).hypot(p[1]) - 0.5).abs() < 1e-12);
            let n = c.normals[i].unwrap();
            assert!((n[0] - (p[0] - 0.1) / 0.5).abs() < 1e-12);
        }
        let mut min_d = f64::INFINITY;
        let tree = KdTree::new(&c.positions);
        for i in 0..c.len() {
            let nn = tree.nearest(c.positions[i], 2);
            min_d = min_d.min(nn[1].0);
        }
        assert!(min_d > 0.0);
    }

    #[test]
    fn mirrored_colloids_give_mirrored_cloud() {
        let outer = OuterBoundary::Rectangle {
            lower: [-5.0, -5.0],
            upper: [5.0, 5.0],
            notch: None,
        };
        let a = ColloidState::disk(1.0, [-1.2, 0.3]);
        let b = ColloidState::disk(1.0, [1.2, -0.3]);
        let geom = Geometry::new(outer, vec![a.clone(), b.clone()]);
        let spec = RefinementSpec::new(0.5, 3, 2).unwrap();
        let cloud = generate_cloud(&geom, &spec, &[a, b]).unwrap();
        let tree = KdTree::new(&cloud.positions);
        for (i, p) in cloud.positions.iter().enumerate() {
            let (d, j) = tree.nearest([-p[0], -p[1]], 1)[0];
            assert!(d < 1e-12, "point {i} at {p:?} has no mirror image");
            assert_eq!(cloud.regions[i].is_boundary(), cloud.regions[j].is_boundary());
        }
    }

    #[test]
    fn colloid_errors() {
        let g = Geometry::new(OuterBoundary::unit_square(), vec![]);
        let r = RefinementSpec::new(0.1, 1, 1).unwrap();
        let overlapping = ColloidState::disk(0.3, [0.1, 0.5]);
        assert!(matches!(generate_cloud(&g, &r, &[overlapping]), Err(Error::Geometry(_))));
        let tiny = ColloidState::disk(0.01, [0.5, 0.5]);
        assert!(matches!(generate_cloud(&g, &r, &[tiny]), Err(Error::Resolution(_))));
        let a = ColloidState::disk(0.2, [0.3, 0.5]);
        let b = ColloidState::disk(0.2, [0.6, 0.5]);
        assert!(matches!(generate_cloud(&g, &r, &[a, b]), Err(Error::Geometry(_))));
    }

    #[test]
    fn kernel_and_weights() {
        assert_eq!(pair_weight(0.0, 1.0, 1.0), 2.0);
        assert_eq!(pair_weight(1.0, 1.0, 1.0), 0.0);
        assert_eq!(pair_weight(2.5, 1.0, 2.0), 0.0);
        assert!((pair_weight(0.5, 1.0, 1.0) - 0.125).abs() < 1e-15);
        assert_eq!(pair_weight(0.3, 0.5, 2.0), pair_weight(0.3, 2.0, 0.5));
    }

    #[test]
    fn supports_on_grids() {
        let h = 0.1;
        let c = grid_cloud(12, h);
        let e1 = compute_supports(&c, 1).unwrap();
        let e2 = compute_supports(&c, 2).unwrap();
        // interior point (5,5)
        let i = 5 * 12 + 5;
        assert!((e1[i] - 1.5 * h).abs() < 1e-12);
        assert!((e2[i] - 1.5 * std::f64::consts::SQRT_2 * h).abs() < 1e-12);
        let two = grid_cloud(1, h);
        assert!(matches!(compute_supports(&two, 1), Err(Error::Unisolvency { .. })));
        let mut pair = PointCloud::from_points(
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![None; 2],
            vec![Region::Interior; 2],
            vec![1.0; 2],
        );
        assert!(compute_supports(&pair, 1).is_err());
        pair.support = vec![2.0, 2.0];
        let adj = build_neighbors(&pair);
        assert_eq!(adj.neighbors(0), &[1]);
        assert_eq!(adj.neighbors(1), &[0]);
        pair.support = vec![0.5, 0.5];
        let adj = build_neighbors(&pair);
        assert!(adj.neighbors(0).is_empty() && adj.neighbors(1).is_empty());
    }

    #[test]
    fn grid_neighbor_counts_and_symmetry() {
        let mut c = grid_cloud(10, 1.0);
        c.prepare(2).unwrap();
        for i in 0..c.len() {
            assert!(c.neighbors(i).len() >= 6);
            for (k, &j) in c.neighbors(i).iter().enumerate() {
                let back = c.neighbors(j).iter().position(|&q| q == i).expect("symmetric");
                assert_eq!(c.adjacency.weights(i)[k], c.adjacency.weights(j)[back]);
            }
        }
        assert!((coarsest_spacing(&c) - 1.0).abs() < 1e-15);
    }
}
