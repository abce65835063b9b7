//! Implicit domains and boundary discretizations of canonical shapes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fill_pnp::{pnp_fill, CandidateStrategy, PnpConfig};
use crate::points::{dist, Points};
use crate::spacing::SpacingField;

const VOLUME_SAMPLES: usize = 100_000;
const VOLUME_SEED: u64 = 0x5eed_0f_d0a1;

#[derive(Clone)]
enum Shape {
    Box,
    Ball { center: Vec<f64>, radius: f64 },
    Difference(Arc<Domain>, Arc<Domain>),
    Implicit(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>),
}

/// A closed region of `R^d` given by its characteristic function and an
/// axis-aligned bounding box. Immutable once built.
#[derive(Clone)]
pub struct Domain {
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Shape,
    volume_hint: Option<f64>,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Domain({})", self.describe())
    }
}

fn check_box(lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.is_empty() {
        return Err(Error::InvalidInput(
            "domain dimension must be at least 1".into(),
        ));
    }
    if lo.len() != hi.len() {
        return Err(Error::DimensionMismatch {
            expected: lo.len(),
            got: hi.len(),
        });
    }
    for (i, (a, b)) in lo.iter().zip(hi).enumerate() {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "degenerate box along axis {i}: [{a}, {b}]"
            )));
        }
    }
    Ok(())
}

impl Domain {
    /// Closed axis-aligned box `[lo, hi]`.
    pub fn make_box(lo: &[f64], hi: &[f64]) -> Result<Domain> {
        check_box(lo, hi)?;
        let volume = lo.iter().zip(hi).map(|(a, b)| b - a).product();
        Ok(Domain {
            dim: lo.len(),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            shape: Shape::Box,
            volume_hint: Some(volume),
        })
    }

    /// Unit cube `[0, 1]^dim`.
    pub fn unit_cube(dim: usize) -> Result<Domain> {
        Domain::make_box(&vec![0.0; dim], &vec![1.0; dim])
    }

    /// Closed ball `‖p − center‖ ≤ radius`.
    pub fn make_ball(center: &[f64], radius: f64) -> Result<Domain> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if center.is_empty() {
            return Err(Error::InvalidInput(
                "domain dimension must be at least 1".into(),
            ));
        }
        let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
        Ok(Domain {
            dim: center.len(),
            lo,
            hi,
            shape: Shape::Ball {
                center: center.to_vec(),
                radius,
            },
            volume_hint: Some(unit_ball_volume(center.len()) * radius.powi(center.len() as i32)),
        })
    }

    /// `a` with the interior of `b` removed; the result stays closed.
    pub fn difference(a: &Domain, b: &Domain) -> Result<Domain> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch {
                expected: a.dim,
                got: b.dim,
            });
        }
        let mut out = Domain {
            dim: a.dim,
            lo: a.lo.clone(),
            hi: a.hi.clone(),
            shape: Shape::Difference(Arc::new(a.clone()), Arc::new(b.clone())),
            volume_hint: None,
        };
        out.volume_hint = match (a.analytic_volume(), b.analytic_volume()) {
            (Some(va), Some(vb)) if matches!(a.shape, Shape::Box) && a.encloses_bbox_of(b) => {
                Some(va - vb)
            }
            _ => Some(out.estimate_volume(VOLUME_SAMPLES, VOLUME_SEED)),
        };
        Ok(out)
    }

    /// Arbitrary implicit region clipped to the box `[lo, hi]`.
    pub fn from_fn<F>(lo: &[f64], hi: &[f64], contains: F) -> Result<Domain>
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        check_box(lo, hi)?;
        let mut out = Domain {
            dim: lo.len(),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            shape: Shape::Implicit(Arc::new(contains)),
            volume_hint: None,
        };
        out.volume_hint = Some(out.estimate_volume(VOLUME_SAMPLES, VOLUME_SEED));
        Ok(out)
    }

    pub fn with_volume_hint(mut self, volume: f64) -> Domain {
        self.volume_hint = Some(volume);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bbox(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn bbox_volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Longest bounding box side.
    pub fn scale(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }

    pub fn volume_hint(&self) -> Option<f64> {
        self.volume_hint
    }

    /// Exact volume for boxes, balls and box-minus-enclosed-shape.
    pub fn analytic_volume(&self) -> Option<f64> {
        match &self.shape {
            Shape::Box | Shape::Ball { .. } => self.volume_hint,
            Shape::Difference(a, b) => match (a.analytic_volume(), b.analytic_volume()) {
                (Some(va), Some(vb)) if matches!(a.shape, Shape::Box) && a.encloses_bbox_of(b) => {
                    Some(va - vb)
                }
                _ => None,
            },
            Shape::Implicit(_) => None,
        }
    }

    fn encloses_bbox_of(&self, other: &Domain) -> bool {
        (0..self.dim).all(|k| self.lo[k] <= other.lo[k] && other.hi[k] <= self.hi[k])
    }

    #[inline]
    fn in_bbox(&self, p: &[f64]) -> bool {
        p.len() == self.dim && (0..self.dim).all(|k| self.lo[k] <= p[k] && p[k] <= self.hi[k])
    }

    /// Characteristic function of the closed domain.
    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        if !self.in_bbox(p) {
            return false;
        }
        match &self.shape {
            Shape::Box => true,
            Shape::Ball { center, radius } => crate::points::dist2(p, center) <= radius * radius,
            Shape::Difference(a, b) => a.contains(p) && !b.contains_interior(p),
            Shape::Implicit(f) => f(p),
        }
    }

    /// Characteristic function of the open interior.
    pub fn contains_interior(&self, p: &[f64]) -> bool {
        if !self.in_bbox(p) {
            return false;
        }
        match &self.shape {
            Shape::Box => (0..self.dim).all(|k| self.lo[k] < p[k] && p[k] < self.hi[k]),
            Shape::Ball { center, radius } => crate::points::dist2(p, center) < radius * radius,
            Shape::Difference(a, b) => a.contains_interior(p) && !b.contains(p),
            Shape::Implicit(f) => f(p),
        }
    }

    /// Monte Carlo volume estimate from uniform samples in the bounding box.
    pub fn estimate_volume(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = vec![0.0; self.dim];
        let mut inside = 0usize;
        for _ in 0..samples {
            for (k, x) in p.iter_mut().enumerate() {
                *x = rng.random_range(self.lo[k]..self.hi[k]);
            }
            if self.contains(&p) {
                inside += 1;
            }
        }
        self.bbox_volume() * inside as f64 / samples.max(1) as f64
    }

    /// Textual form accepted by [`Domain::parse`] where one exists.
    pub fn describe(&self) -> String {
        let nums = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        match &self.shape {
            Shape::Box => format!("box {} {}", nums(&self.lo), nums(&self.hi)),
            Shape::Ball { center, radius } => format!("ball {} {}", nums(center), radius),
            Shape::Difference(a, b) => format!("diff ({}) ({})", a.describe(), b.describe()),
            Shape::Implicit(_) => format!("implicit in box {} {}", nums(&self.lo), nums(&self.hi)),
        }
    }

    /// Parses `box lo.. hi..`, `ball c.. r` and `diff <a> <b>`.
    ///
    /// Operands of `diff` may be parenthesized; numbers are read greedily
    /// up to the next keyword, so `diff box 0 0 1 1 box .25 .25 .75 .75`
    /// also works.
    pub fn parse(src: &str) -> Result<Domain> {
        let spaced = src.replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let mut pos = 0;
        let d = parse_domain(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Parse(format!(
                "trailing tokens in domain {src:?}: {:?}",
                &tokens[pos..]
            )));
        }
        Ok(d)
    }
}

fn parse_domain(tokens: &[&str], pos: &mut usize) -> Result<Domain> {
    let head = *tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("unexpected end of domain description".into()))?;
    *pos += 1;
    match head {
        "(" => {
            let d = parse_domain(tokens, pos)?;
            if tokens.get(*pos) != Some(&")") {
                return Err(Error::Parse("missing ')' in domain description".into()));
            }
            *pos += 1;
            Ok(d)
        }
        "box" => {
            let nums = parse_numbers(tokens, pos)?;
            if nums.is_empty() || nums.len() % 2 != 0 {
                return Err(Error::Parse(format!(
                    "box needs 2d numbers (lo.. hi..), got {}",
                    nums.len()
                )));
            }
            let d = nums.len() / 2;
            Domain::make_box(&nums[..d], &nums[d..])
        }
        "ball" => {
            let nums = parse_numbers(tokens, pos)?;
            if nums.len() < 2 {
                return Err(Error::Parse("ball needs a center and a radius".into()));
            }
            let (c, r) = nums.split_at(nums.len() - 1);
            Domain::make_ball(c, r[0])
        }
        "diff" => {
            let a = parse_domain(tokens, pos)?;
            let b = parse_domain(tokens, pos)?;
            Domain::difference(&a, &b)
        }
        other => Err(Error::Parse(format!("unknown domain keyword {other:?}"))),
    }
}

fn parse_numbers(tokens: &[&str], pos: &mut usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    while let Some(t) = tokens.get(*pos) {
        match t.parse::<f64>() {
            Ok(v) => {
                out.push(v);
                *pos += 1;
            }
            Err(_) => break,
        }
    }
    Ok(out)
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Points on `∂Ω` with outward unit normals.
#[derive(Debug, Clone)]
pub struct BoundaryDiscretization {
    pub points: Points,
    pub normals: Points,
}

impl BoundaryDiscretization {
    pub fn new(points: Points, normals: Points) -> Result<Self> {
        if points.len() != normals.len() || points.dim() != normals.dim() {
            return Err(Error::InvalidInput(format!(
                "{} boundary points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        Ok(BoundaryDiscretization { points, normals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn empty(dim: usize) -> Self {
        BoundaryDiscretization {
            points: Points::new(dim),
            normals: Points::new(dim),
        }
    }

    fn push(&mut self, p: &[f64], n: &[f64]) {
        self.points.push(p);
        let len = crate::points::norm(n);
        let unit: Vec<f64> = n.iter().map(|x| x / len).collect();
        self.normals.push(&unit);
    }
}

/// Discretizes the boundary of a box (d ≤ 3), a ball (d ≤ 3) or a
/// difference of those, with neighbouring points about `h` apart.
pub fn discretize_boundary(domain: &Domain, h: &SpacingField) -> Result<BoundaryDiscretization> {
    match &domain.shape {
        Shape::Box => box_boundary(&domain.lo, &domain.hi, h),
        Shape::Ball { center, radius } => ball_boundary(center, *radius, h),
        Shape::Difference(a, b) => {
            let outer = discretize_boundary(a, h)?;
            let inner = discretize_boundary(b, h)?;
            let mut out = BoundaryDiscretization::empty(domain.dim);
            for (p, n) in outer.points.iter().zip(outer.normals.iter()) {
                if !b.contains_interior(p) {
                    out.push(p, n);
                }
            }
            for (p, n) in inner.points.iter().zip(inner.normals.iter()) {
                if a.contains(p) {
                    let flipped: Vec<f64> = n.iter().map(|x| -x).collect();
                    out.push(p, &flipped);
                }
            }
            Ok(out)
        }
        Shape::Implicit(_) => Err(Error::Unsupported(
            "boundary discretization of implicit domains; supply seed nodes instead".into(),
        )),
    }
}

/// Arc-length parameters along a curve of length `len` such that
/// consecutive parameters are about `h` apart. The endpoint `len` is
/// included for open curves and omitted for closed ones.
fn graded_params(len: f64, closed: bool, h_at: &dyn Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    let table = |m: usize| -> Result<Vec<f64>> {
        let mut cum = Vec::with_capacity(m + 1);
        cum.push(0.0);
        let dt = len / m as f64;
        let mut prev = 1.0 / h_at(0.0)?;
        for i in 1..=m {
            let cur = 1.0 / h_at(len * i as f64 / m as f64)?;
            let last = *cum.last().unwrap();
            cum.push(last + 0.5 * (prev + cur) * dt);
            prev = cur;
        }
        Ok(cum)
    };
    let coarse = table(256)?;
    let total = *coarse.last().unwrap();
    let m = (32.0 * total).ceil().max(256.0) as usize;
    let cum = if m > 256 { table(m)? } else { coarse };
    let total = *cum.last().unwrap();
    // Rounding down keeps neighbours at least h apart; the slack absorbs
    // quadrature error when the length is an exact multiple of h.
    let segments = (total * (1.0 + 1e-9)).floor() as usize;
    let n = if closed {
        segments.max(3)
    } else {
        segments.max(1)
    };
    let count = if closed { n } else { n + 1 };
    let step = len / (cum.len() - 1) as f64;
    let mut out = Vec::with_capacity(count);
    let mut j = 0;
    for k in 0..count {
        if !closed && k == n {
            out.push(len);
            break;
        }
        let target = total * k as f64 / n as f64;
        while j + 1 < cum.len() - 1 && cum[j + 1] < target {
            j += 1;
        }
        let (c0, c1) = (cum[j], cum[j + 1]);
        let frac = if c1 > c0 {
            (target - c0) / (c1 - c0)
        } else {
            0.0
        };
        out.push((j as f64 + frac.clamp(0.0, 1.0)) * step);
    }
    Ok(out)
}

fn box_boundary(lo: &[f64], hi: &[f64], h: &SpacingField) -> Result<BoundaryDiscretization> {
    let d = lo.len();
    let mut out = BoundaryDiscretization::empty(d);
    match d {
        1 => {
            h.eval_checked(lo)?;
            h.eval_checked(hi)?;
            out.push(lo, &[-1.0]);
            out.push(hi, &[1.0]);
        }
        2 => {
            // counter-clockwise from the lower-left corner
            let corners = [
                [lo[0], lo[1]],
                [hi[0], lo[1]],
                [hi[0], hi[1]],
                [lo[0], hi[1]],
            ];
            let side_normals = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
            for s in 0..4 {
                let a = corners[s];
                let b = corners[(s + 1) % 4];
                let len = dist(&a, &b);
                let at = |t: f64| -> [f64; 2] {
                    if t >= len {
                        return b;
                    }
                    let f = t / len;
                    [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
                };
                let params = graded_params(len, false, &|t| h.eval_checked(&at(t)))?;
                let prev = side_normals[(s + 3) % 4];
                let n = side_normals[s];
                out.push(&a, &[prev[0] + n[0], prev[1] + n[1]]);
                for &t in &params[1..params.len() - 1] {
                    out.push(&at(t), &n);
                }
            }
        }
        3 => box_boundary_3d(lo, hi, h, &mut out)?,
        _ => {
            return Err(Error::Unsupported(format!(
                "boundary discretization of {d}-D boxes"
            )))
        }
    }
    Ok(out)
}

fn box_boundary_3d(
    lo: &[f64],
    hi: &[f64],
    h: &SpacingField,
    out: &mut BoundaryDiscretization,
) -> Result<()> {
    let bound = |side: usize, k: usize| if side == 0 { lo[k] } else { hi[k] };
    let sign = |side: usize| if side == 0 { -1.0 } else { 1.0 };

    // corners
    for mask in 0..8usize {
        let sides = [mask & 1, (mask >> 1) & 1, (mask >> 2) & 1];
        let p: Vec<f64> = (0..3).map(|k| bound(sides[k], k)).collect();
        h.eval_checked(&p)?;
        let n: Vec<f64> = (0..3).map(|k| sign(sides[k])).collect();
        out.push(&p, &n);
    }
    // edges along axis `a`, interior points only
    for a in 0..3 {
        let (u, v) = ((a + 1) % 3, (a + 2) % 3);
        for su in 0..2 {
            for sv in 0..2 {
                let mut base = [0.0; 3];
                base[u] = bound(su, u);
                base[v] = bound(sv, v);
                let len = hi[a] - lo[a];
                let at = |t: f64| {
                    let mut p = base;
                    p[a] = (lo[a] + t).min(hi[a]);
                    p
                };
                let params = graded_params(len, false, &|t| h.eval_checked(&at(t)))?;
                let mut n = [0.0; 3];
                n[u] = sign(su);
                n[v] = sign(sv);
                for &t in &params[1..params.len() - 1] {
                    out.push(&at(t), &n);
                }
            }
        }
    }
    // faces: fill each open rectangle from its edge nodes
    let edge_nodes = out.points.clone();
    for a in 0..3 {
        let (u, v) = ((a + 1) % 3, (a + 2) % 3);
        for s in 0..2 {
            let w = bound(s, a);
            let mut seeds = Points::new(2);
            for p in edge_nodes.iter() {
                if p[a] == w {
                    seeds.push(&[p[u], p[v]]);
                }
            }
            let face = Domain::make_box(&[lo[u], lo[v]], &[hi[u], hi[v]])?;
            let embed = move |q: &[f64]| {
                let mut p = [0.0; 3];
                p[a] = w;
                p[u] = q[0];
                p[v] = q[1];
                p
            };
            let hf = h.clone();
            let face_h = SpacingField::analytic(move |q| hf.eval(&embed(q)));
            let config = PnpConfig {
                strategy: Some(CandidateStrategy::FixedPattern { k: 6 }),
                ..PnpConfig::default()
            };
            let fill = pnp_fill(&face, &face_h, &seeds, &config)?;
            let mut n = [0.0; 3];
            n[a] = sign(s);
            for q in fill.nodes.iter().skip(fill.seed_count) {
                if face.contains_interior(q) {
                    out.push(&embed(q), &n);
                }
            }
        }
    }
    Ok(())
}

fn ball_boundary(center: &[f64], radius: f64, h: &SpacingField) -> Result<BoundaryDiscretization> {
    let d = center.len();
    let mut out = BoundaryDiscretization::empty(d);
    match d {
        1 => {
            let (a, b) = ([center[0] - radius], [center[0] + radius]);
            h.eval_checked(&a)?;
            h.eval_checked(&b)?;
            out.push(&a, &[-1.0]);
            out.push(&b, &[1.0]);
        }
        2 => {
            let at = |t: f64| {
                let phi = t / radius;
                [
                    center[0] + radius * phi.cos(),
                    center[1] + radius * phi.sin(),
                ]
            };
            let params = graded_params(2.0 * PI * radius, true, &|t| h.eval_checked(&at(t)))?;
            for t in params {
                let p = at(t);
                out.push(&p, &[p[0] - center[0], p[1] - center[1]]);
            }
        }
        3 => {
            let on_sphere = |theta: f64, phi: f64| {
                [
                    center[0] + radius * theta.sin() * phi.cos(),
                    center[1] + radius * theta.sin() * phi.sin(),
                    center[2] + radius * theta.cos(),
                ]
            };
            let meridian = graded_params(PI * radius, false, &|t| {
                h.eval_checked(&on_sphere(t / radius, 0.0))
            })?;
            let last = meridian.len() - 1;
            for (i, &t) in meridian.iter().enumerate() {
                let theta = t / radius;
                if i == 0 || i == last {
                    let p = [
                        center[0],
                        center[1],
                        center[2] + if i == 0 { radius } else { -radius },
                    ];
                    h.eval_checked(&p)?;
                    out.push(&p, &[0.0, 0.0, p[2] - center[2]]);
                    continue;
                }
                let rho = radius * theta.sin();
                let ring = graded_params(2.0 * PI * rho, true, &|s| {
                    h.eval_checked(&on_sphere(theta, s / rho))
                })?;
                for s in ring {
                    let p = on_sphere(theta, s / rho);
                    out.push(&p, &[p[0] - center[0], p[1] - center[1], p[2] - center[2]]);
                }
            }
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "boundary discretization of {d}-D balls"
            )))
        }
    }
    Ok(out)
}
