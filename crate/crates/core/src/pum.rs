//! Partition-of-unity interpolant: local RBF fits on circular patches blended
//! with Shepard-normalized Wendland weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    bounding_box, bounding_rect, convex_hull, point_in_hull, BoundingBox, ConvexHull, Point2,
    Rect,
};
use crate::rbf::{eval_local, Kernel, LocalInterpolant};
use crate::spatial::bench::Structure;
use crate::spatial::{
    block_count, build_pu_centers, BlockGrid, BruteForce, KdTree, PuCenters, RangeIndex,
    MIN_POINTS,
};

/// Duplicate-site threshold relative to the bounding-box edge.
pub const DUP_TOL: f64 = 1e-10;
/// Factor applied to the patch radius when the first cover misses a site.
pub const COVER_INFLATION: f64 = 1.5;
/// Default local shape parameter is `SHAPE_FACTOR / delta_PU`. A kernel much
/// wider than the patch keeps the local systems far from the identity, so
/// the local fits reproduce smooth data between sites instead of decaying
/// toward zero; with `1 / delta_PU` a constant is only matched to tens of
/// percent.
pub const SHAPE_FACTOR: f64 = 0.05;

const MODEL_FORMAT: &str = "pumi-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteredData {
    pub sites: Vec<Point2>,
    pub values: Vec<f64>,
}

impl ScatteredData {
    pub fn new(sites: Vec<Point2>, values: Vec<f64>) -> Result<Self> {
        if sites.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: sites.len(),
                got: values.len(),
            });
        }
        if let Some(i) = sites.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { sites, values })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct PumConfig {
    /// Local kernel shape parameter; `SHAPE_FACTOR / delta_PU` when unset.
    pub epsilon: Option<f64>,
    /// Fixed patch radius replacing `l_box * sqrt(2) / d_PU`.
    pub delta_pu: Option<f64>,
    /// Structure used to gather each patch's sites.
    pub structure: Structure,
    /// Solve patches on the rayon pool.
    pub parallel: bool,
}

impl Default for PumConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            delta_pu: None,
            structure: Structure::Block,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PumModel {
    data: ScatteredData,
    rect: Rect,
    bbox: BoundingBox,
    hull: ConvexHull,
    centers: PuCenters,
    q: usize,
    kernel: Kernel,
    weight_kernel: Kernel,
    locals: Vec<LocalInterpolant>,
    center_grid: BlockGrid,
}

/// Sites gathered by one patch query, before the local solve.
struct Cover {
    members: Vec<Vec<usize>>,
    uncovered: Vec<usize>,
}

fn gather(
    data: &ScatteredData,
    bbox: &BoundingBox,
    centers: &[Point2],
    delta: f64,
    structure: Structure,
) -> Result<Cover> {
    let q = block_count(bbox, delta)?;
    let block;
    let kd;
    let brute;
    let index: &dyn RangeIndex = match structure {
        Structure::Block => {
            block = BlockGrid::build(&data.sites, *bbox, q)?;
            &block
        }
        Structure::KdTree => {
            kd = KdTree::build(&data.sites);
            &kd
        }
        Structure::Brute => {
            brute = BruteForce { sites: &data.sites };
            &brute
        }
    };
    let mut covered = vec![false; data.len()];
    let mut members = Vec::with_capacity(centers.len());
    for &c in centers {
        let mut m = index.query(c, delta)?;
        m.sort_unstable();
        for &i in &m {
            // weights vanish on the patch boundary, so coverage is strict
            if data.sites[i].dist(c) < delta {
                covered[i] = true;
            }
        }
        members.push(m);
    }
    let uncovered = covered
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| i)
        .collect();
    Ok(Cover { members, uncovered })
}

pub fn build_pum(data: ScatteredData, config: &PumConfig) -> Result<PumModel> {
    let n = data.len();
    if n < MIN_POINTS {
        return Err(Error::TooFewPoints { got: n, min: MIN_POINTS });
    }
    let rect = bounding_rect(&data.sites)?;
    let bbox = bounding_box(&rect)?;
    let hull = convex_hull(&data.sites)?;
    let mut centers = build_pu_centers(&hull, &rect, &bbox, n)?;
    if let Some(d) = config.delta_pu {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidParameter(format!("patch radius {d}")));
        }
        centers.delta_pu = d;
    }

    let mut cover = gather(&data, &bbox, &centers.centers, centers.delta_pu, config.structure)?;
    if !cover.uncovered.is_empty() {
        log::info!(
            "{} site(s) uncovered at delta_PU = {}; inflating by {COVER_INFLATION}",
            cover.uncovered.len(),
            centers.delta_pu
        );
        centers.delta_pu *= COVER_INFLATION;
        cover = gather(&data, &bbox, &centers.centers, centers.delta_pu, config.structure)?;
        if !cover.uncovered.is_empty() {
            return Err(Error::UncoveredSites(cover.uncovered));
        }
    }

    // patches holding no site carry no interpolant and are dropped
    let (kept_centers, members): (Vec<Point2>, Vec<Vec<usize>>) = centers
        .centers
        .iter()
        .copied()
        .zip(cover.members)
        .filter(|(_, m)| !m.is_empty())
        .unzip();
    centers.centers = kept_centers;

    let delta = centers.delta_pu;
    let kernel = Kernel::wendland_c2(config.epsilon.unwrap_or(SHAPE_FACTOR / delta))?;
    let weight_kernel = Kernel::wendland_c2(1.0 / delta)?;
    let dup_tol = DUP_TOL * bbox.side;

    let fit = |(j, m): (usize, Vec<usize>)| {
        LocalInterpolant::fit(&data.sites, &data.values, m, kernel, dup_tol, j)
    };
    let locals: Vec<LocalInterpolant> = if config.parallel {
        members.into_par_iter().enumerate().map(fit).collect::<Result<_>>()?
    } else {
        members.into_iter().enumerate().map(fit).collect::<Result<_>>()?
    };

    let q = block_count(&bbox, delta)?;
    let center_grid = BlockGrid::build(&centers.centers, bbox, q)?;
    Ok(PumModel {
        data,
        rect,
        bbox,
        hull,
        centers,
        q,
        kernel,
        weight_kernel,
        locals,
        center_grid,
    })
}

/// Outcome of [`PumModel::eval_batch`]: one slot per input point, `None`
/// where evaluation failed, with the failures listed by input index.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchEval {
    pub values: Vec<Option<f64>>,
    pub failures: Vec<(usize, Error)>,
}

impl PumModel {
    pub fn data(&self) -> &ScatteredData {
        &self.data
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn hull(&self) -> &ConvexHull {
        &self.hull
    }

    pub fn centers(&self) -> &PuCenters {
        &self.centers
    }

    pub fn delta_pu(&self) -> f64 {
        self.centers.delta_pu
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn locals(&self) -> &[LocalInterpolant] {
        &self.locals
    }

    pub fn patch_count(&self) -> usize {
        self.locals.len()
    }

    /// Nonzero Shepard weights at `p`, ordered by patch id; they sum to one.
    pub fn weights(&self, p: Point2) -> Result<Vec<(usize, f64)>> {
        if !point_in_hull(p, &self.hull) {
            return Err(Error::OutsideHull { x: p.x, y: p.y });
        }
        let delta = self.centers.delta_pu;
        let mut near = self.center_grid.range_query(p, delta)?;
        near.sort_unstable();
        let mut w: Vec<(usize, f64)> = near
            .into_iter()
            .map(|j| (j, self.weight_kernel.phi(p.dist(self.centers.centers[j]))))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        let total: f64 = w.iter().map(|&(_, v)| v).sum();
        if !(total > 0.0) {
            return Err(Error::UncoveredPoint { x: p.x, y: p.y });
        }
        for (_, v) in &mut w {
            *v /= total;
        }
        Ok(w)
    }

    pub fn eval(&self, p: Point2) -> Result<f64> {
        Ok(self
            .weights(p)?
            .into_iter()
            .map(|(j, w)| eval_local(&self.locals[j], &self.data.sites, p) * w)
            .sum())
    }

    pub fn eval_batch(&self, points: &[Point2]) -> BatchEval {
        let results: Vec<Result<f64>> = points.par_iter().map(|&p| self.eval(p)).collect();
        let mut values = Vec::with_capacity(points.len());
        let mut failures = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => values.push(Some(v)),
                Err(e) => {
                    values.push(None);
                    failures.push((i, e));
                }
            }
        }
        BatchEval { values, failures }
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            sites: self.data.sites.clone(),
            values: self.data.values.clone(),
            rect: self.rect,
            bounding_box: self.bbox,
            hull: self.hull.vertices().to_vec(),
            d_pu: self.centers.d_pu,
            delta_pu: self.centers.delta_pu,
            q: self.q,
            kernel: self.kernel,
            weight_kernel: self.weight_kernel,
            patches: self
                .centers
                .centers
                .iter()
                .zip(&self.locals)
                .map(|(&center, l)| PatchDocument {
                    center,
                    site_indices: l.site_indices.clone(),
                    lambda: l.lambda.clone(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported format {} v{}",
                doc.format, doc.version
            )));
        }
        let data = ScatteredData::new(doc.sites, doc.values)?;
        let hull = ConvexHull::from_vertices(&doc.hull)?;
        let mut centers = Vec::with_capacity(doc.patches.len());
        let mut locals = Vec::with_capacity(doc.patches.len());
        for (j, p) in doc.patches.into_iter().enumerate() {
            if p.site_indices.len() != p.lambda.len() || p.site_indices.is_empty() {
                return Err(Error::Model(format!("patch {j} is malformed")));
            }
            if p.site_indices.iter().any(|&i| i >= data.len()) {
                return Err(Error::Model(format!("patch {j} references a missing site")));
            }
            centers.push(p.center);
            locals.push(LocalInterpolant {
                site_indices: p.site_indices,
                lambda: p.lambda,
                kernel: doc.kernel,
            });
        }
        let center_grid = BlockGrid::build(&centers, doc.bounding_box, doc.q)?;
        Ok(Self {
            data,
            rect: doc.rect,
            bbox: doc.bounding_box,
            hull,
            centers: PuCenters {
                centers,
                d_pu: doc.d_pu,
                delta_pu: doc.delta_pu,
            },
            q: doc.q,
            kernel: doc.kernel,
            weight_kernel: doc.weight_kernel,
            locals,
            center_grid,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s).map_err(|e| Error::Model(e.to_string()))?;
        Self::from_document(doc)
    }
}

/// Serialized form of a [`PumModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub sites: Vec<Point2>,
    pub values: Vec<f64>,
    pub rect: Rect,
    pub bounding_box: BoundingBox,
    pub hull: Vec<Point2>,
    pub d_pu: usize,
    pub delta_pu: f64,
    pub q: usize,
    pub kernel: Kernel,
    pub weight_kernel: Kernel,
    pub patches: Vec<PatchDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchDocument {
    pub center: Point2,
    pub site_indices: Vec<usize>,
    pub lambda: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{franke, halton_points};

    fn franke_data(n: usize) -> ScatteredData {
        let sites = halton_points(n);
        let values = sites.iter().map(|p| franke(p.x, p.y)).collect();
        ScatteredData::new(sites, values).unwrap()
    }

    #[test]
    fn data_validation() {
        assert!(ScatteredData::new(vec![Point2::new(0.0, 0.0)], vec![]).is_err());
        assert_eq!(
            ScatteredData::new(vec![Point2::new(0.0, 0.0)], vec![f64::NAN]),
            Err(Error::NonFinite(0))
        );
        let small = franke_data(15);
        assert_eq!(
            build_pum(small, &PumConfig::default()).err(),
            Some(Error::TooFewPoints { got: 15, min: 16 })
        );
    }

    #[test]
    fn halton_1024_builds_nonempty_patches() {
        let m = build_pum(franke_data(1024), &PumConfig::default()).unwrap();
        assert!(m.patch_count() <= 256 && m.patch_count() > 150, "{}", m.patch_count());
        assert!(m.locals().iter().all(|l| !l.is_empty()));
        assert_eq!(m.centers().d_pu, 16);
        for (i, (p, f)) in m.data().sites.iter().zip(&m.data().values).enumerate() {
            let v = m.eval(*p).unwrap();
            assert!((v - f).abs() < 1e-6 * 2.0, "site {i}: {v} vs {f}");
        }
    }

    #[test]
    fn minimal_grid_configuration() {
        let mut sites = Vec::new();
        for j in 0..4 {
            for i in 0..4 {
                sites.push(Point2::new(i as f64 / 3.0, j as f64 / 3.0));
            }
        }
        let values = sites.iter().map(|p| p.x + p.y).collect();
        let m = build_pum(ScatteredData::new(sites, values).unwrap(), &PumConfig::default())
            .unwrap();
        assert_eq!(m.centers().d_pu, 2);
        assert!(m.patch_count() <= 4);
        for p in &m.data().sites {
            assert!(m.weights(*p).is_ok());
        }
    }

    #[test]
    fn l_shaped_cloud_keeps_centers_in_hull() {
        let sites: Vec<Point2> = halton_points(2000)
            .into_iter()
            .filter(|p| p.x < 0.5 || p.y < 0.5)
            .collect();
        let values = sites.iter().map(|p| p.x * p.y).collect();
        let m = build_pum(ScatteredData::new(sites, values).unwrap(), &PumConfig::default())
            .unwrap();
        assert!(m.centers().centers.iter().all(|&c| point_in_hull(c, m.hull())));
    }

    #[test]
    fn weights_properties() {
        let m = build_pum(franke_data(400), &PumConfig::default()).unwrap();
        let delta = m.delta_pu();
        for p in halton_points(300).into_iter().skip(7) {
            if !point_in_hull(p, m.hull()) {
                continue;
            }
            let w = m.weights(p).unwrap();
            let s: f64 = w.iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() <= 1e-12);
            for &(j, v) in &w {
                assert!(v > 0.0);
                assert!(m.centers().centers[j].dist(p) < delta);
            }
        }
        assert!(matches!(
            m.weights(Point2::new(2.0, 2.0)),
            Err(Error::OutsideHull { .. })
        ));
    }

    #[test]
    fn single_patch_point_reproduces_local_exactly() {
        let m = build_pum(franke_data(1024), &PumConfig::default()).unwrap();
        let mut checked = 0;
        for p in halton_points(4000).into_iter().skip(1024) {
            if !point_in_hull(p, m.hull()) {
                continue;
            }
            let w = m.weights(p).unwrap();
            if w.len() == 1 {
                let j = w[0].0;
                assert_eq!(w[0].1, 1.0);
                assert_eq!(m.eval(p).unwrap(), eval_local(&m.locals()[j], &m.data().sites, p));
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn duplicate_sites_rejected() {
        let mut d = franke_data(100);
        d.sites[50] = d.sites[10];
        assert!(matches!(
            build_pum(d, &PumConfig::default()),
            Err(Error::DuplicateSites(..))
        ));
    }

    #[test]
    fn all_structures_give_the_same_model() {
        let base = build_pum(franke_data(500), &PumConfig::default()).unwrap();
        for s in [Structure::KdTree, Structure::Brute] {
            let cfg = PumConfig { structure: s, parallel: false, ..Default::default() };
            let other = build_pum(franke_data(500), &cfg).unwrap();
            assert_eq!(other.locals(), base.locals());
        }
    }

    #[test]
    fn batch_flags_outside_points() {
        let m = build_pum(franke_data(300), &PumConfig::default()).unwrap();
        assert_eq!(m.eval_batch(&[]), BatchEval { values: vec![], failures: vec![] });
        let pts = [Point2::new(0.5, 0.5), Point2::new(-1.0, 0.5), Point2::new(0.25, 0.75)];
        let b = m.eval_batch(&pts);
        assert!(b.values[0].is_some() && b.values[2].is_some());
        assert_eq!(b.values[1], None);
        assert_eq!(b.failures.len(), 1);
        assert_eq!(b.failures[0].0, 1);
        assert_eq!(b.values[0].unwrap(), m.eval(pts[0]).unwrap());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = build_pum(franke_data(300), &PumConfig::default()).unwrap();
        let back = PumModel::from_json(&m.to_json()).unwrap();
        for p in halton_points(150).into_iter().skip(20) {
            assert_eq!(back.eval(p).unwrap(), m.eval(p).unwrap());
        }
        assert!(PumModel::from_json("{\"format\": \"x\"}").is_err());
    }
}
