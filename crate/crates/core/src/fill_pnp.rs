//! Queue-driven advancing-front node placement for arbitrary dimension and
//! spatially variable spacing.
//!
//! Every dequeued node `p` with spacing `r = h(p)` proposes candidates on
//! the sphere of radius `r` around it. A candidate is kept if it lies in the
//! domain and no existing node is closer than `(1 - ε) r`; kept candidates
//! are appended to the node list, which doubles as the queue.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::points::Points;
use crate::spacing::SpacingField;
use crate::spatial::{BackgroundGrid, IndexKind, KdTree, SpatialIndex};

/// Draws used to find a random interior seed before giving up.
pub const SEED_DRAWS: usize = 1_000_000;

/// How candidates around an expanded node are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum CandidateStrategy {
    /// `n` independent uniform points on the sphere.
    Random { n: usize },
    /// The unit-sphere pattern with parameter `k`, unrotated.
    FixedPattern { k: usize },
    /// The same pattern under a fresh uniform rotation per expansion.
    RandomizedPattern { k: usize },
}

impl CandidateStrategy {
    /// Randomized pattern with about 15 candidates in 2-D and 30 in 3-D,
    /// doubling per extra dimension after that.
    pub fn default_for_dim(d: usize) -> Self {
        if d <= 1 {
            return CandidateStrategy::RandomizedPattern { k: 2 };
        }
        if d == 2 {
            return CandidateStrategy::RandomizedPattern { k: 15 };
        }
        let target = 15usize << (d - 2).min(20);
        let mut k = 2;
        while pattern_size(d, k) < target {
            k += 1;
        }
        CandidateStrategy::RandomizedPattern { k }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CandidateStrategy::Random { n } if n < 1 => {
                Err(Error::InvalidInput("random strategy needs n >= 1".into()))
            }
            CandidateStrategy::FixedPattern { k } | CandidateStrategy::RandomizedPattern { k }
                if k < 2 =>
            {
                Err(Error::InvalidInput("pattern strategies need k >= 2".into()))
            }
            _ => Ok(()),
        }
    }
}

fn pattern_size(d: usize, k: usize) -> usize {
    unit_sphere_pattern(d, k).map(|p| p.len()).unwrap_or(0)
}

/// Discretization of the unit sphere `S^(d-1)`.
///
/// In 2-D: `k` directions at angles `2πj/k`. In higher dimensions the
/// sphere is cut into latitudes at polar angles `mπ/⌈k/2⌉` (measured from the
/// last axis); the poles are single points and every other latitude is a
/// scaled copy of the `(d-1)`-dimensional pattern with `⌈k sin θ⌉` points.
pub fn unit_sphere_pattern(d: usize, k: usize) -> Result<Points> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "pattern parameter k must be >= 2, got {k}"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let mut out = Points::new(d);
    sphere_rec(d, k, &mut out);
    dedup_in_place(&mut out, 1e-12);
    Ok(out)
}

fn sphere_rec(d: usize, k: usize, out: &mut Points) {
    match d {
        1 => {
            out.push(&[1.0]);
            if k >= 2 {
                out.push(&[-1.0]);
            }
        }
        2 => {
            for j in 0..k {
                let phi = 2.0 * PI * j as f64 / k as f64;
                out.push(&[phi.cos(), phi.sin()]);
            }
        }
        _ => {
            let m_max = k.div_ceil(2);
            let mut p = vec![0.0; d];
            for m in 0..=m_max {
                let theta = PI * m as f64 / m_max as f64;
                let (s, c) = if m == 0 {
                    (0.0, 1.0)
                } else if m == m_max {
                    (0.0, -1.0)
                } else {
                    theta.sin_cos()
                };
                if m == 0 || m == m_max {
                    p.iter_mut().for_each(|x| *x = 0.0);
                    p[d - 1] = c;
                    out.push(&p);
                    continue;
                }
                let count = ((k as f64 * s - 1e-9).ceil() as usize).max(1);
                let mut ring = Points::new(d - 1);
                sphere_rec(d - 1, count, &mut ring);
                for q in ring.iter() {
                    for (x, y) in p.iter_mut().zip(q) {
                        *x = s * y;
                    }
                    p[d - 1] = c;
                    out.push(&p);
                }
            }
        }
    }
}

fn dedup_in_place(points: &mut Points, tol: f64) {
    let mut kept = Points::new(points.dim());
    for p in points.iter() {
        if !kept.iter().any(|q| crate::points::dist(p, q) <= tol) {
            kept.push(p);
        }
    }
    *points = kept;
}

/// Uniformly distributed rotation matrix (orthogonal, determinant +1).
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    if d == 1 {
        return DMatrix::identity(1, 1);
    }
    if d == 2 {
        let a: f64 = rng.random_range(0.0..2.0 * PI);
        let (s, c) = a.sin_cos();
        return DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    }
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Produces candidate sets for successive expansions.
pub struct CandidateGenerator {
    dim: usize,
    strategy: CandidateStrategy,
    pattern: Points,
    rotated: Vec<f64>,
}

impl CandidateGenerator {
    pub fn new(dim: usize, strategy: CandidateStrategy) -> Result<Self> {
        strategy.validate()?;
        let pattern = match strategy {
            CandidateStrategy::Random { .. } => Points::new(dim),
            CandidateStrategy::FixedPattern { k } | CandidateStrategy::RandomizedPattern { k } => {
                unit_sphere_pattern(dim, k)?
            }
        };
        Ok(CandidateGenerator {
            dim,
            strategy,
            rotated: vec![0.0; pattern.as_flat().len()],
            pattern,
        })
    }

    /// Number of candidates per expansion.
    pub fn count(&self) -> usize {
        match self.strategy {
            CandidateStrategy::Random { n } => n,
            _ => self.pattern.len(),
        }
    }

    /// Writes the candidates around `p` at radius `r` into `out` (flat).
    pub fn generate<R: Rng + ?Sized>(
        &mut self,
        p: &[f64],
        r: f64,
        rng: &mut R,
        out: &mut Vec<f64>,
    ) {
        let d = self.dim;
        out.clear();
        match self.strategy {
            CandidateStrategy::Random { n } => {
                let mut u = vec![0.0; d];
                for _ in 0..n {
                    loop {
                        for x in u.iter_mut() {
                            *x = rng.sample(StandardNormal);
                        }
                        let len = crate::points::norm(&u);
                        if len > 1e-12 {
                            u.iter_mut().for_each(|x| *x /= len);
                            break;
                        }
                    }
                    out.extend(p.iter().zip(&u).map(|(a, b)| a + r * b));
                }
            }
            CandidateStrategy::FixedPattern { .. } => {
                for u in self.pattern.iter() {
                    out.extend(p.iter().zip(u).map(|(a, b)| a + r * b));
                }
            }
            CandidateStrategy::RandomizedPattern { .. } if d == 2 => {
                let (sa, ca) = rng.random_range(0.0..2.0 * PI).sin_cos();
                for u in self.pattern.iter() {
                    out.push(p[0] + r * (ca * u[0] - sa * u[1]));
                    out.push(p[1] + r * (sa * u[0] + ca * u[1]));
                }
            }
            CandidateStrategy::RandomizedPattern { .. } => {
                let rot = random_rotation(d, rng);
                for (u, dst) in self.pattern.iter().zip(self.rotated.chunks_exact_mut(d)) {
                    for (i, x) in dst.iter_mut().enumerate() {
                        *x = (0..d).map(|j| rot[(i, j)] * u[j]).sum();
                    }
                }
                for u in self.rotated.chunks_exact(d) {
                    out.extend(p.iter().zip(u).map(|(a, b)| a + r * b));
                }
            }
        }
    }
}

/// Candidates around `p` at distance `r` for one expansion.
pub fn generate_candidates<R: Rng + ?Sized>(
    p: &[f64],
    r: f64,
    strategy: CandidateStrategy,
    rng: &mut R,
) -> Result<Points> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "candidate radius must be positive, got {r}"
        )));
    }
    let mut gen = CandidateGenerator::new(p.len(), strategy)?;
    let mut flat = Vec::new();
    gen.generate(p, r, rng, &mut flat);
    Points::from_flat(p.len(), flat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpConfig {
    /// `None` picks [`CandidateStrategy::default_for_dim`].
    pub strategy: Option<CandidateStrategy>,
    pub max_nodes: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub index: IndexKind,
}

impl Default for PnpConfig {
    fn default() -> Self {
        PnpConfig {
            strategy: None,
            max_nodes: 10_000_000,
            epsilon: 1e-10,
            seed: 0,
            index: IndexKind::KdTree,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FillStats {
    #[serde(with = "secs")]
    pub elapsed: Duration,
    pub candidates_generated: u64,
    pub candidates_accepted: u64,
}

mod secs {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
}

/// Output of a fill: seeds first, then generated nodes in acceptance order.
#[derive(Debug, Clone)]
pub struct FillResult {
    pub nodes: Points,
    /// Number of leading entries that are seed (boundary) nodes.
    pub seed_count: usize,
    /// Generating node of every non-seed node, when the algorithm tracks it.
    pub predecessors: Option<Vec<usize>>,
    /// Nodes whose expansion produced no accepted candidate.
    pub terminal: Vec<usize>,
    pub truncated: bool,
    pub stats: FillStats,
}

impl FillResult {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn predecessor(&self, j: usize) -> Option<usize> {
        let preds = self.predecessors.as_ref()?;
        j.checked_sub(self.seed_count)
            .and_then(|i| preds.get(i).copied())
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.nodes.len()).map(|i| i < self.seed_count).collect()
    }
}

/// Fills `domain` starting from `seeds` (or from one random interior node
/// when `seeds` is empty).
pub fn pnp_fill(
    domain: &Domain,
    h: &SpacingField,
    seeds: &Points,
    config: &PnpConfig,
) -> Result<FillResult> {
    let start = Instant::now();
    let d = domain.dim();
    if !seeds.is_empty() && seeds.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: seeds.dim(),
        });
    }
    if !(config.epsilon >= 0.0 && config.epsilon < 1.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be in [0, 1), got {}",
            config.epsilon
        )));
    }
    let strategy = config
        .strategy
        .unwrap_or_else(|| CandidateStrategy::default_for_dim(d));
    let generator = CandidateGenerator::new(d, strategy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let initial = if seeds.is_empty() {
        random_interior_point(domain, &mut rng)?
    } else {
        dedup_seeds(seeds, h, config.epsilon)?
    };

    let mut result = match config.index {
        IndexKind::KdTree => {
            let index = KdTree::build(&initial);
            expand(domain, h, initial, index, generator, &mut rng, config)?
        }
        IndexKind::Grid => {
            let spacing = match h.constant_value() {
                Some(c) => c,
                None => initial
                    .iter()
                    .map(|p| h.eval_checked(p))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min),
            };
            let (lo, hi) = domain.bbox();
            let mut index = BackgroundGrid::new(lo, hi, spacing)?;
            for p in initial.iter() {
                index.insert(p)?;
            }
            expand(domain, h, initial, index, generator, &mut rng, config)?
        }
    };
    result.stats.elapsed = start.elapsed();
    Ok(result)
}

fn random_interior_point(domain: &Domain, rng: &mut ChaCha8Rng) -> Result<Points> {
    let (lo, hi) = domain.bbox();
    let mut p = vec![0.0; lo.len()];
    for _ in 0..SEED_DRAWS {
        for (k, x) in p.iter_mut().enumerate() {
            *x = rng.random_range(lo[k]..hi[k]);
        }
        if domain.contains(&p) {
            return Points::from_flat(lo.len(), p);
        }
    }
    Err(Error::EmptyDomain { draws: SEED_DRAWS })
}

/// Drops seeds closer than `ε h` to an earlier seed.
fn dedup_seeds(seeds: &Points, h: &SpacingField, epsilon: f64) -> Result<Points> {
    let mut tree = KdTree::new(seeds.dim());
    let mut kept = Points::with_capacity(seeds.dim(), seeds.len());
    for p in seeds.iter() {
        let r = h.eval_checked(p)?;
        let dup = match tree.nearest(p) {
            Ok(n) => n.distance <= epsilon * r,
            Err(_) => false,
        };
        if !dup {
            tree.insert(p)?;
            kept.push(p);
        }
    }
    Ok(kept)
}

fn expand<I: SpatialIndex>(
    domain: &Domain,
    h: &SpacingField,
    mut nodes: Points,
    mut index: I,
    mut generator: CandidateGenerator,
    rng: &mut ChaCha8Rng,
    config: &PnpConfig,
) -> Result<FillResult> {
    let seed_count = nodes.len();
    let mut predecessors = Vec::new();
    let mut terminal = Vec::new();
    let mut stats = FillStats::default();
    let mut truncated = nodes.len() >= config.max_nodes;
    let mut candidates = Vec::with_capacity(generator.count() * domain.dim());
    let mut p = vec![0.0; domain.dim()];
    let d = domain.dim();

    let mut i = 0;
    'queue: while i < nodes.len() && !truncated {
        p.copy_from_slice(&nodes[i]);
        let r = h.eval_checked(&p)?;
        generator.generate(&p, r, rng, &mut candidates);
        let threshold = (1.0 - config.epsilon) * r;
        let mut accepted_any = false;
        for c in candidates.chunks_exact(d) {
            stats.candidates_generated += 1;
            if !domain.contains(c) {
                continue;
            }
            let nearest = index.nearest(c)?;
            if nearest.distance >= threshold {
                nodes.push(c);
                index.insert(c)?;
                predecessors.push(i);
                stats.candidates_accepted += 1;
                accepted_any = true;
                if nodes.len() >= config.max_nodes {
                    truncated = true;
                    break 'queue;
                }
            }
        }
        if !accepted_any {
            terminal.push(i);
        }
        i += 1;
    }

    Ok(FillResult {
        nodes,
        seed_count,
        predecessors: Some(predecessors),
        terminal,
        truncated,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::discretize_boundary;
    use crate::points::{dist, norm};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pattern_2d_quarter_turns() {
        let p = unit_sphere_pattern(2, 4).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        assert_eq!(p.len(), 4);
        for (a, b) in p.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-15);
            assert_abs_diff_eq!(a[1], b[1], epsilon = 1e-15);
        }
    }

    #[test]
    fn pattern_3d_counts() {
        assert_eq!(unit_sphere_pattern(3, 6).unwrap().len(), 14);
        assert_eq!(unit_sphere_pattern(3, 12).unwrap().len(), 48);
        for k in 2..20 {
            let p = unit_sphere_pattern(3, k).unwrap();
            for q in p.iter() {
                assert_abs_diff_eq!(norm(q), 1.0, epsilon = 1e-14);
            }
        }
        assert!(unit_sphere_pattern(3, 1).is_err());
    }

    #[test]
    fn default_counts_near_recommendation() {
        assert_eq!(
            CandidateStrategy::default_for_dim(2),
            CandidateStrategy::RandomizedPattern { k: 15 }
        );
        let CandidateStrategy::RandomizedPattern { k } = CandidateStrategy::default_for_dim(3)
        else {
            panic!()
        };
        assert_eq!(k, 9);
        assert_eq!(pattern_size(3, 9), 32);
        assert!(pattern_size(3, 8) < 30);
    }

    #[test]
    fn higher_dimensional_pattern_is_on_sphere() {
        let p = unit_sphere_pattern(4, 6).unwrap();
        assert!(p.len() > 14);
        for q in p.iter() {
            assert_abs_diff_eq!(norm(q), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rotations_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..=5 {
            for _ in 0..20 {
                let r = random_rotation(d, &mut rng);
                let rtr = r.transpose() * &r;
                assert!((rtr - DMatrix::identity(d, d)).amax() < 1e-12);
                assert!((r.determinant() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotations_preserve_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_rotation(3, &mut rng);
        let v = nalgebra::DVector::from_vec(vec![0.3, -1.2, 2.5]);
        assert_abs_diff_eq!((&r * &v).norm(), v.norm(), epsilon = 1e-12);
    }

    #[test]
    fn rotated_axis_has_zero_mean() {
        // Monte Carlo: R e1 is uniform on the sphere, so its mean vanishes.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2usize, 3] {
            let mut mean = vec![0.0; d];
            let n = 10_000;
            for _ in 0..n {
                let r = random_rotation(d, &mut rng);
                for i in 0..d {
                    mean[i] += r[(i, 0)] / n as f64;
                }
            }
            assert!(norm(&mean) < 0.05, "d={d}: {mean:?}");
        }
    }

    #[test]
    fn hexagon_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = generate_candidates(
            &[0.0, 0.0],
            1.0,
            CandidateStrategy::FixedPattern { k: 6 },
            &mut rng,
        )
        .unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(&c[0], &[1.0, 0.0]);
        for (j, q) in c.iter().enumerate() {
            let a = PI / 3.0 * j as f64;
            assert_abs_diff_eq!(q[0], a.cos(), epsilon = 1e-15);
            assert_abs_diff_eq!(q[1], a.sin(), epsilon = 1e-15);
        }
    }

    #[test]
    fn candidates_lie_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let strategies = [
            CandidateStrategy::Random { n: 20 },
            CandidateStrategy::FixedPattern { k: 7 },
            CandidateStrategy::RandomizedPattern { k: 9 },
        ];
        for d in 2..=4 {
            let p: Vec<f64> = (0..d).map(|i| 0.1 * i as f64 + 3.0).collect();
            for s in strategies {
                for r in [1e-3, 0.5, 40.0] {
                    let c = generate_candidates(&p, r, s, &mut rng).unwrap();
                    for q in c.iter() {
                        assert!((dist(q, &p) - r).abs() <= 1e-12 * r);
                    }
                }
            }
        }
    }

    #[test]
    fn randomized_pattern_changes_between_expansions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut gen =
            CandidateGenerator::new(2, CandidateStrategy::RandomizedPattern { k: 15 }).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        gen.generate(&[0.0, 0.0], 1.0, &mut rng, &mut a);
        gen.generate(&[0.0, 0.0], 1.0, &mut rng, &mut b);
        assert_eq!(a.len(), 30);
        assert_ne!(a, b);
    }

    #[test]
    fn single_seed_fill_stays_inside() {
        let domain = Domain::unit_cube(2).unwrap();
        let h = SpacingField::constant(0.25).unwrap();
        let seeds = Points::from_rows(2, &[[0.5, 0.5]]).unwrap();
        let res = pnp_fill(&domain, &h, &seeds, &PnpConfig::default()).unwrap();
        assert!(res.len() >= 1);
        assert!(res.nodes.iter().all(|p| domain.contains(p)));
        assert_eq!(&res.nodes[0], &[0.5, 0.5]);
    }

    #[test]
    fn empty_seed_draws_random_interior_node() {
        let domain = Domain::unit_cube(2).unwrap();
        let h = SpacingField::constant(0.1).unwrap();
        let res = pnp_fill(&domain, &h, &Points::new(2), &PnpConfig::default()).unwrap();
        assert_eq!(res.seed_count, 1);
        assert!(res.len() > 50);
    }

    #[test]
    fn empty_domain_is_an_error() {
        let domain = Domain::from_fn(&[0.0, 0.0], &[1.0, 1.0], |_| false).unwrap();
        let h = SpacingField::constant(0.1).unwrap();
        let err = pnp_fill(&domain, &h, &Points::new(2), &PnpConfig::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyDomain { .. }));
    }

    #[test]
    fn structural_invariants() {
        let domain = Domain::unit_cube(2).unwrap();
        let h = SpacingField::from_expr("0.02*(1+x)").unwrap();
        let seeds = discretize_boundary(&domain, &h).unwrap().points;
        let res = pnp_fill(&domain, &h, &seeds, &PnpConfig::default()).unwrap();
        assert_eq!(res.nodes.slice(0..seeds.len()), seeds);
        for j in res.seed_count..res.len() {
            let b = res.predecessor(j).unwrap();
            assert!(b < j);
            let hb = h.eval(&res.nodes[b]);
            let r = dist(&res.nodes[b], &res.nodes[j]);
            assert!((r - hb).abs() <= 1e-10 * hb);
        }
        assert!(res.nodes.iter().all(|p| domain.contains(p)));
        // every terminal node produced no successor
        let mut has_child = vec![false; res.len()];
        for j in res.seed_count..res.len() {
            has_child[res.predecessor(j).unwrap()] = true;
        }
        for &t in &res.terminal {
            assert!(!has_child[t]);
        }
        assert_eq!(
            res.terminal.len(),
            has_child.iter().filter(|c| !**c).count()
        );
    }

    #[test]
    fn duplicate_seeds_are_dropped() {
        let domain = Domain::unit_cube(2).unwrap();
        let h = SpacingField::constant(0.2).unwrap();
        let seeds = Points::from_rows(2, &[[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]).unwrap();
        let res = pnp_fill(&domain, &h, &seeds, &PnpConfig::default()).unwrap();
        assert_eq!(res.seed_count, 2);
    }

    #[test]
    fn deterministic_given_seed() {
        let domain = Domain::unit_cube(2).unwrap();
        let h = SpacingField::constant(0.05).unwrap();
        let seeds = discretize_boundary(&domain, &h).unwrap().points;
        let cfg = PnpConfig {
            seed: 77,
            ..PnpConfig::default()
        };
        let a = pnp_fill(&domain, &h, &seeds, &cfg).unwrap();
        let b = pnp_fill(&domain, &h, &seeds, &cfg).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.predecessors, b.predecessors);
        assert_eq!(a.terminal, b.terminal);
        let c = pnp_fill(&domain, &h, &seeds, &PnpConfig { seed: 78, ..cfg }).unwrap();
        assert_ne!(a.nodes, c.nodes);
    }

    #[test]
    fn grid_and_tree_agree() {
        let domain = Domain::unit_cube(2).unwrap();
        let h = SpacingField::constant(0.04).unwrap();
        let seeds = discretize_boundary(&domain, &h).unwrap().points;
        let tree = pnp_fill(
            &domain,
            &h,
            &seeds,
            &PnpConfig {
                seed: 9,
                ..PnpConfig::default()
            },
        )
        .unwrap();
        let grid = pnp_fill(
            &domain,
            &h,
            &seeds,
            &PnpConfig {
                seed: 9,
                index: IndexKind::Grid,
                ..PnpConfig::default()
            },
        )
        .unwrap();
        assert_eq!(tree.nodes, grid.nodes);
    }

    #[test]
    fn truncation_on_divergent_spacing() {
        // spacing shrinks linearly towards x = 0, so the node count integral diverges
        let domain = Domain::from_fn(&[0.0, 0.0], &[1.0, 1.0], |p| p[0] > 0.0).unwrap();
        let h = SpacingField::analytic(|p| 0.1 * p[0]);
        let cfg = PnpConfig {
            max_nodes: 10_000,
            ..PnpConfig::default()
        };
        let res = pnp_fill(&domain, &h, &Points::new(2), &cfg).unwrap();
        assert_eq!(res.len(), 10_000);
        assert!(res.truncated);
    }

    #[test]
    fn spacing_evaluated_only_inside() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        use std::sync::Arc;
        let outside = Arc::new(AtomicUsize::new(0));
        let domain = Domain::make_ball(&[0.0, 0.0], 1.0).unwrap();
        let guard_domain = domain.clone();
        let counter = outside.clone();
        let h = SpacingField::analytic(move |p| {
            if !guard_domain.contains(p) {
                counter.fetch_add(1, Ordering::Relaxed);
            }
            0.08 + 0.02 * p[0]
        });
        let res = pnp_fill(&domain, &h, &Points::new(2), &PnpConfig::default()).unwrap();
        assert!(res.len() > 100);
        assert_eq!(outside.load(Ordering::Relaxed), 0);
    }
}
