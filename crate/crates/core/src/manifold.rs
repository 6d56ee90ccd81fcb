//! Charts, atlases and bundle bookkeeping.
//!
//! Manifolds are products of circle and line factors, and charts are open
//! boxes in coordinates. On a circle factor the chart coordinate of a point is
//! the representative of its angle that falls inside the chart interval, so
//! overlaps carry a constant coordinate shift on each connected component.
//!
//! The fibre bundle over the circle whose fibre coordinate changes sign across
//! one overlap is the Möbius strip; [`moebius_bundle`] builds it over the
//! three-chart atlas of [`circle_atlas`].

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Default half-width of chart overlaps.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    Circle { period: f64 },
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Open-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub id: usize,
    pub name: String,
    pub ranges: Vec<Interval>,
}

/// Declared coordinate relation on one overlap component: `ℓ^to - ℓ^from = shift`
/// (componentwise), sampled at `witness`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub from: usize,
    pub to: usize,
    pub shift: Vec<f64>,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atlas {
    pub factors: Vec<Factor>,
    pub charts: Vec<Chart>,
    pub overlaps: Vec<Overlap>,
}

impl Atlas {
    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn chart(&self, id: usize) -> Option<&Chart> {
        self.charts.iter().find(|c| c.id == id)
    }

    /// Local coordinates of `point` in chart `id`, if the point lies in it.
    pub fn coordinates(&self, id: usize, point: &[f64]) -> Option<Vec<f64>> {
        let chart = self.chart(id)?;
        point
            .iter()
            .zip(&self.factors)
            .zip(&chart.ranges)
            .map(|((&x, factor), range)| local_coordinate(*factor, range, x))
            .collect()
    }

    pub fn contains(&self, id: usize, point: &[f64]) -> bool {
        self.coordinates(id, point).is_some()
    }

    /// Ids of every chart containing `point`, ascending.
    pub fn charts_at(&self, point: &[f64]) -> Vec<usize> {
        self.charts
            .iter()
            .filter(|c| self.contains(c.id, point))
            .map(|c| c.id)
            .collect()
    }

    /// Check the cover on a grid of `samples` points per factor (line factors
    /// sampled on `line_window`), and the declared overlap relations.
    pub fn validate(&self, samples: usize, line_window: Interval) -> Result<()> {
        let grids: Vec<Vec<f64>> = self
            .factors
            .iter()
            .map(|f| {
                let (lo, hi) = match f {
                    Factor::Circle { period } => (0.0, *period),
                    Factor::Line => (line_window.lo, line_window.hi),
                };
                (0..samples)
                    .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / samples as f64)
                    .collect()
            })
            .collect();
        let mut idx = vec![0usize; grids.len()];
        loop {
            let point: Vec<f64> = idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
            if self.charts_at(&point).is_empty() {
                return Err(Error::validation(format!("point {point:?} is not covered")));
            }
            let mut d = 0;
            while d < idx.len() {
                idx[d] += 1;
                if idx[d] < samples {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == idx.len() {
                break;
            }
        }
        for ov in &self.overlaps {
            let (Some(a), Some(b)) = (
                self.coordinates(ov.from, &ov.witness),
                self.coordinates(ov.to, &ov.witness),
            ) else {
                return Err(Error::validation(format!(
                    "overlap witness {:?} not in charts {} and {}",
                    ov.witness, ov.from, ov.to
                )));
            };
            for ((x, y), s) in a.iter().zip(&b).zip(&ov.shift) {
                if ((y - x) - s).abs() > 1e-9 {
                    return Err(Error::validation(format!(
                        "overlap {}->{}: coordinate shift {} != declared {}",
                        ov.from,
                        ov.to,
                        y - x,
                        s
                    )));
                }
            }
        }
        Ok(())
    }

    /// Points of the circle grid lying in three or more charts.
    pub fn triple_overlaps(&self, samples: usize) -> Vec<f64> {
        assert_eq!(self.dim(), 1, "triple overlap scan is for one-dimensional atlases");
        let period = match self.factors[0] {
            Factor::Circle { period } => period,
            Factor::Line => return Vec::new(),
        };
        (0..samples)
            .map(|k| period * k as f64 / samples as f64)
            .filter(|&x| self.charts_at(&[x]).len() >= 3)
            .collect()
    }
}

fn local_coordinate(factor: Factor, range: &Interval, x: f64) -> Option<f64> {
    match factor {
        Factor::Line => range.contains(x).then_some(x),
        Factor::Circle { period } => {
            // Smallest representative above the lower edge.
            let k = ((range.lo - x) / period).floor() + 1.0;
            let mut y = x + k * period;
            if y <= range.lo {
                y += period;
            }
            range.contains(y).then_some(y)
        }
    }
}

/// Three-chart atlas of the circle with overlaps of half-width `epsilon`.
pub fn circle_atlas(epsilon: f64) -> Result<Atlas> {
    if !(epsilon > 0.0 && epsilon < PI / 4.0) {
        return Err(Error::validation(format!(
            "epsilon must lie in (0, pi/4), got {epsilon}"
        )));
    }
    let circle = Factor::Circle { period: TAU };
    let chart = |id: usize, lo: f64, hi: f64| Chart {
        id,
        name: format!("U{id}"),
        ranges: vec![Interval::new(lo - epsilon, hi + epsilon)],
    };
    Ok(Atlas {
        factors: vec![circle],
        charts: vec![chart(1, 0.0, PI), chart(2, PI, 1.5 * PI), chart(3, 1.5 * PI, TAU)],
        overlaps: vec![
            Overlap {
                from: 1,
                to: 2,
                shift: vec![0.0],
                witness: vec![PI],
            },
            Overlap {
                from: 2,
                to: 3,
                shift: vec![0.0],
                witness: vec![1.5 * PI],
            },
            Overlap {
                from: 1,
                to: 3,
                shift: vec![TAU],
                witness: vec![0.0],
            },
        ],
    })
}

/// Fibre coordinate change `y ↦ scale * y + offset` on a one-dimensional fibre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FibreMap {
    pub scale: f64,
    pub offset: f64,
}

impl FibreMap {
    pub const IDENTITY: FibreMap = FibreMap {
        scale: 1.0,
        offset: 0.0,
    };
    pub const NEGATE: FibreMap = FibreMap {
        scale: -1.0,
        offset: 0.0,
    };

    pub fn apply(&self, y: f64) -> f64 {
        self.scale * y + self.offset
    }

    pub fn inverse(&self) -> Self {
        Self {
            scale: 1.0 / self.scale,
            offset: -self.offset / self.scale,
        }
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &FibreMap) -> Self {
        Self {
            scale: self.scale * other.scale,
            offset: self.scale * other.offset + self.offset,
        }
    }
}

/// Group-valued transition function `g^{αβ}` on an overlap.
#[derive(Clone)]
pub enum Transition {
    Identity,
    Constant(CMatrix),
    Function(Arc<dyn Fn(&[f64]) -> CMatrix + Send + Sync>),
}

impl Transition {
    pub fn eval(&self, point: &[f64], dim: usize) -> CMatrix {
        match self {
            Transition::Identity => CMatrix::identity(dim, dim),
            Transition::Constant(m) => m.clone(),
            Transition::Function(f) => f(point),
        }
    }

    fn inverse(&self) -> Transition {
        match self {
            Transition::Identity => Transition::Identity,
            Transition::Constant(m) => Transition::Constant(m.adjoint()),
            Transition::Function(f) => {
                let f = f.clone();
                Transition::Function(Arc::new(move |p| f(p).adjoint()))
            }
        }
    }
}

impl fmt::Debug for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Identity => write!(f, "Identity"),
            Transition::Constant(m) => write!(f, "Constant({m:?})"),
            Transition::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Bundle charts over an atlas: torsion functions on the fibre and group
/// transition functions, both keyed by ordered chart pairs `(α, β)`.
///
/// `torsion[(α, β)]` is `φ^{αβ} = χ^α⁻¹ ∘ χ^β`: it maps a fibre coordinate in
/// chart β to the coordinate of the same point in chart α. Only one ordering
/// of each pair needs to be declared; the reverse is the inverse map.
#[derive(Debug, Clone)]
pub struct BundleCharts {
    pub atlas: Atlas,
    pub group_dim: usize,
    torsion: BTreeMap<(usize, usize), FibreMap>,
    transitions: BTreeMap<(usize, usize), Transition>,
}

impl BundleCharts {
    pub fn new(atlas: Atlas, group_dim: usize) -> Self {
        let mut torsion = BTreeMap::new();
        let mut transitions = BTreeMap::new();
        for c in &atlas.charts {
            torsion.insert((c.id, c.id), FibreMap::IDENTITY);
            transitions.insert((c.id, c.id), Transition::Identity);
        }
        Self {
            atlas,
            group_dim,
            torsion,
            transitions,
        }
    }

    pub fn with_torsion(mut self, alpha: usize, beta: usize, map: FibreMap) -> Self {
        self.torsion.insert((beta, alpha), map.inverse());
        self.torsion.insert((alpha, beta), map);
        self
    }

    pub fn with_transition(mut self, alpha: usize, beta: usize, g: Transition) -> Self {
        self.transitions.insert((beta, alpha), g.inverse());
        self.transitions.insert((alpha, beta), g);
        self
    }

    pub fn torsion(&self, alpha: usize, beta: usize) -> Option<FibreMap> {
        self.torsion.get(&(alpha, beta)).copied()
    }

    pub fn transition(&self, alpha: usize, beta: usize) -> Option<&Transition> {
        self.transitions.get(&(alpha, beta))
    }

    /// Fibre coordinate after moving from chart `from` into chart `to`,
    /// i.e. `φ^{to,from}(y)`.
    pub fn cross_fibre(&self, from: usize, to: usize, y: f64) -> Result<f64> {
        self.torsion(to, from)
            .map(|m| m.apply(y))
            .ok_or_else(|| Error::Configuration(format!("no torsion function for {from}->{to}")))
    }

    /// Check `φ^{αβ} ∘ φ^{βγ} = φ^{αγ}` and `g^{αβ} g^{βγ} = g^{αγ}` on every
    /// sampled triple overlap. Returns the number of triple-overlap points checked.
    pub fn check_cocycles(&self, samples: usize) -> Result<usize> {
        let mut checked = 0;
        for x in self.atlas.triple_overlaps(samples) {
            let ids = self.atlas.charts_at(&[x]);
            for &a in &ids {
                for &b in &ids {
                    for &c in &ids {
                        let (Some(ab), Some(bc), Some(ac)) =
                            (self.torsion(a, b), self.torsion(b, c), self.torsion(a, c))
                        else {
                            continue;
                        };
                        let lhs = ab.compose(&bc);
                        if (lhs.scale - ac.scale).abs() > 1e-12 || (lhs.offset - ac.offset).abs() > 1e-12 {
                            return Err(Error::validation(format!("torsion cocycle fails on ({a},{b},{c})")));
                        }
                        if let (Some(gab), Some(gbc), Some(gac)) =
                            (self.transition(a, b), self.transition(b, c), self.transition(a, c))
                        {
                            let d = self.group_dim;
                            let diff = gab.eval(&[x], d) * gbc.eval(&[x], d) - gac.eval(&[x], d);
                            if crate::linalg::max_abs(&diff) > 1e-10 {
                                return Err(Error::validation(format!("transition cocycle fails on ({a},{b},{c})")));
                            }
                        }
                        checked += 1;
                    }
                }
            }
        }
        Ok(checked)
    }
}

/// Möbius strip over the three-chart circle atlas: the fibre coordinate keeps
/// its value across U1∩U2 and U2∩U3 and changes sign across U1∩U3. The
/// eigenframe bundle of the two-level model is trivial, so every group
/// transition is the identity.
pub fn moebius_bundle(atlas: &Atlas) -> Result<BundleCharts> {
    let ids: Vec<usize> = atlas.charts.iter().map(|c| c.id).collect();
    if atlas.factors != [Factor::Circle { period: TAU }] || ids != [1, 2, 3] {
        return Err(Error::validation(
            "moebius bundle requires the three-chart circle atlas",
        ));
    }
    Ok(BundleCharts::new(atlas.clone(), 1)
        .with_torsion(1, 2, FibreMap::IDENTITY)
        .with_torsion(2, 3, FibreMap::IDENTITY)
        .with_torsion(1, 3, FibreMap::NEGATE)
        .with_transition(1, 2, Transition::Identity)
        .with_transition(2, 3, Transition::Identity)
        .with_transition(1, 3, Transition::Identity))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartedSample {
    pub t: f64,
    pub chart: usize,
    /// Base point as supplied (unwrapped).
    pub point: Vec<f64>,
    /// Coordinates in `chart`.
    pub coords: Vec<f64>,
}

/// Chart change recorded between samples `index - 1` and `index`
/// (`index == samples.len()` for the closing change of a loop).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    pub index: usize,
    pub from: usize,
    pub to: usize,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartedPath {
    pub samples: Vec<ChartedSample>,
    pub crossings: Vec<Crossing>,
    pub closed: bool,
}

impl ChartedPath {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.point.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn same_base_point(atlas: &Atlas, a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).zip(&atlas.factors).all(|((x, y), f)| match f {
        Factor::Line => (x - y).abs() < 1e-9,
        Factor::Circle { period } => {
            let d = (x - y).rem_euclid(*period);
            d < 1e-9 || period - d < 1e-9
        }
    })
}

/// Assign a chart to every sample of `path`, staying in the current chart
/// until the path leaves it. A path that ends on its starting base point is
/// closed by a final crossing back into the starting chart when needed.
pub fn chart_route(path: &[(f64, Vec<f64>)], atlas: &Atlas) -> Result<ChartedPath> {
    let mut samples: Vec<ChartedSample> = Vec::with_capacity(path.len());
    let mut crossings = Vec::new();
    for (i, (t, point)) in path.iter().enumerate() {
        if point.len() != atlas.dim() {
            return Err(Error::validation("path point dimension does not match atlas"));
        }
        if let Some(prev) = samples.last() {
            if !(*t > prev.t) {
                return Err(Error::validation("path times must be strictly increasing"));
            }
        }
        let chart = match samples.last() {
            None => *atlas
                .charts_at(point)
                .first()
                .ok_or_else(|| Error::validation(format!("point {point:?} not covered")))?,
            Some(prev) if atlas.contains(prev.chart, point) => prev.chart,
            Some(prev) => {
                let next = atlas
                    .charts_at(point)
                    .into_iter()
                    .find(|&id| atlas.contains(id, &prev.point))
                    .ok_or_else(|| Error::StepTooCoarse {
                        step: i,
                        reason: "consecutive samples share no chart".into(),
                    })?;
                crossings.push(Crossing {
                    t: *t,
                    index: i,
                    from: prev.chart,
                    to: next,
                    point: point.clone(),
                });
                next
            }
        };
        let coords = atlas.coordinates(chart, point).expect("chart contains point");
        samples.push(ChartedSample {
            t: *t,
            chart,
            point: point.clone(),
            coords,
        });
    }

    let closed = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) if samples.len() > 1 => same_base_point(atlas, &a.point, &b.point),
        _ => false,
    };
    if closed {
        let (first, last) = (&samples[0], samples.last().expect("non-empty"));
        if first.chart != last.chart && atlas.contains(first.chart, &last.point) {
            crossings.push(Crossing {
                t: last.t,
                index: samples.len(),
                from: last.chart,
                to: first.chart,
                point: last.point.clone(),
            });
        }
    }
    Ok(ChartedPath {
        samples,
        crossings,
        closed,
    })
}

/// `θ(t) = 2π · turns · t / t_end` sampled at `steps + 1` equally spaced
/// times and routed through [`circle_atlas`] with the default overlap.
pub fn uniform_circle_path(t_end: f64, steps: usize, turns: f64) -> Result<ChartedPath> {
    if !(t_end > 0.0) || steps == 0 {
        return Err(Error::validation("circle path needs t_end > 0 and at least one step"));
    }
    let atlas = circle_atlas(DEFAULT_EPSILON)?;
    let path: Vec<(f64, Vec<f64>)> = (0..=steps)
        .map(|k| {
            let t = t_end * k as f64 / steps as f64;
            (t, vec![std::f64::consts::TAU * turns * k as f64 / steps as f64])
        })
        .collect();
    chart_route(&path, &atlas)
}

/// Transport a fibre coordinate around a closed loop by composing the torsion
/// functions at every recorded crossing.
pub fn fibre_monodromy(bundle: &BundleCharts, route: &ChartedPath, fibre_value: f64) -> Result<f64> {
    if !route.closed {
        return Err(Error::validation("fibre monodromy needs a closed loop"));
    }
    let end_chart = route
        .crossings
        .last()
        .map(|c| c.to)
        .or(route.samples.last().map(|s| s.chart));
    if end_chart != route.samples.first().map(|s| s.chart) {
        return Err(Error::validation("loop does not return to its starting chart"));
    }
    route
        .crossings
        .iter()
        .try_fold(fibre_value, |y, c| bundle.cross_fibre(c.from, c.to, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(from: f64, to: f64, n: usize) -> Vec<(f64, Vec<f64>)> {
        (0..=n)
            .map(|k| {
                let s = k as f64 / n as f64;
                (s, vec![from + (to - from) * s])
            })
            .collect()
    }

    #[test]
    fn epsilon_range_enforced() {
        assert!(circle_atlas(0.0).is_err());
        assert!(circle_atlas(PI / 4.0).is_err());
        assert!(circle_atlas(0.1).is_ok());
    }

    #[test]
    fn first_chart_span() {
        let atlas = circle_atlas(0.1).unwrap();
        let r = atlas.chart(1).unwrap().ranges[0];
        assert!((r.lo + 0.1).abs() < 1e-15 && (r.hi - (PI + 0.1)).abs() < 1e-15);
        assert_eq!(atlas.charts_at(&[PI]), vec![1, 2]);
        assert!(atlas.triple_overlaps(100_000).is_empty());
        atlas.validate(10_000, Interval::new(0.0, 1.0)).unwrap();
    }

    #[test]
    fn overlap_one_three_shift_is_full_turn() {
        let atlas = circle_atlas(0.1).unwrap();
        let a = atlas.coordinates(1, &[0.05]).unwrap()[0];
        let b = atlas.coordinates(3, &[0.05]).unwrap()[0];
        assert!((b - a - TAU).abs() < 1e-12);
    }

    #[test]
    fn torsion_examples() {
        let bundle = moebius_bundle(&circle_atlas(0.1).unwrap()).unwrap();
        assert_eq!(bundle.cross_fibre(2, 3, 0.7).unwrap(), 0.7);
        assert_eq!(bundle.cross_fibre(1, 3, 0.7).unwrap(), -0.7);
        assert_eq!(bundle.cross_fibre(3, 1, 0.7).unwrap(), -0.7);
        for (a, b) in [(1, 2), (2, 3), (1, 3), (3, 1)] {
            assert_eq!(bundle.cross_fibre(a, b, 0.0).unwrap(), 0.0);
        }
        // No triple overlaps: the cocycle conditions hold vacuously.
        assert_eq!(bundle.check_cocycles(10_000).unwrap(), 0);
    }

    #[test]
    fn quarter_turn_stays_in_first_chart() {
        let atlas = circle_atlas(0.1).unwrap();
        let route = chart_route(&sweep(0.0, PI / 2.0, 100), &atlas).unwrap();
        assert!(route.crossings.is_empty());
        assert!(route.samples.iter().all(|s| s.chart == 1));
    }

    #[test]
    fn full_turn_crossings() {
        let atlas = circle_atlas(0.1).unwrap();
        let route = chart_route(&sweep(0.0, TAU, 1000), &atlas).unwrap();
        let pairs: Vec<_> = route.crossings.iter().map(|c| (c.from, c.to)).collect();
        assert_eq!(pairs, vec![(1, 2), (2, 3), (3, 1)]);
        let at = |k: usize| route.crossings[k].point[0];
        assert!((at(0) - PI).abs() < 0.11);
        assert!((at(1) - 1.5 * PI).abs() < 0.11);
        assert!((at(2) - TAU).abs() < 0.11);
    }

    #[test]
    fn constant_path_has_no_crossings() {
        let atlas = circle_atlas(0.1).unwrap();
        let path: Vec<_> = (0..10).map(|k| (k as f64, vec![1.0])).collect();
        let route = chart_route(&path, &atlas).unwrap();
        assert!(route.crossings.is_empty());
    }

    #[test]
    fn large_jump_rejected() {
        let atlas = circle_atlas(0.1).unwrap();
        let path = vec![(0.0, vec![0.5]), (1.0, vec![4.0])];
        assert!(matches!(
            chart_route(&path, &atlas),
            Err(Error::StepTooCoarse { step: 1, .. })
        ));
    }

    #[test]
    fn monodromy_of_the_strip() {
        let atlas = circle_atlas(0.1).unwrap();
        let bundle = moebius_bundle(&atlas).unwrap();
        let one = chart_route(&sweep(0.0, TAU, 1000), &atlas).unwrap();
        assert_eq!(fibre_monodromy(&bundle, &one, 1.0).unwrap(), -1.0);
        let two = chart_route(&sweep(0.0, 2.0 * TAU, 2000), &atlas).unwrap();
        assert_eq!(fibre_monodromy(&bundle, &two, 1.0).unwrap(), 1.0);
        let mut small = sweep(0.5, 1.0, 50);
        small.extend(sweep(1.0, 0.5, 50).into_iter().skip(1).map(|(t, p)| (t + 1.0, p)));
        let contractible = chart_route(&small, &atlas).unwrap();
        assert_eq!(fibre_monodromy(&bundle, &contractible, 1.0).unwrap(), 1.0);
        let open = chart_route(&sweep(0.0, PI, 100), &atlas).unwrap();
        assert!(fibre_monodromy(&bundle, &open, 1.0).is_err());
    }

    #[test]
    fn refinement_moves_crossings_by_under_one_step() {
        let atlas = circle_atlas(0.1).unwrap();
        let coarse = chart_route(&sweep(0.0, TAU, 500), &atlas).unwrap();
        let fine = chart_route(&sweep(0.0, TAU, 5000), &atlas).unwrap();
        assert_eq!(coarse.crossings.len(), fine.crossings.len());
        for (a, b) in coarse.crossings.iter().zip(&fine.crossings) {
            assert_eq!((a.from, a.to), (b.from, b.to));
            assert!((a.t - b.t).abs() <= 1.0 / 500.0 + 1e-12);
        }
    }
}
