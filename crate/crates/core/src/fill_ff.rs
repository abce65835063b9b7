//! Two-dimensional advancing-front box fill and its irregular-domain wrapper.
//!
//! The front is a list of candidate locations kept sorted by `x`. The lowest
//! candidate `p` is accepted, every candidate in the vertical strip
//! `|x - p_x| <= h(p)` is dropped (as in the original reference code) and `n`
//! fresh candidates are placed on the arc of radius `h(p)` between the
//! neighbouring survivors.

use std::f64::consts::PI;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fill_pnp::{FillResult, FillStats};
use crate::geometry::{BoundaryDiscretization, Domain};
use crate::points::Points;
use crate::spacing::SpacingField;
use crate::spatial::BoxTree;

pub const DEFAULT_ARC_POINTS: usize = 5;

/// Candidate front, sorted by `x`.
#[derive(Debug, Clone, Default)]
pub struct FrontState {
    pub candidates: Vec<[f64; 2]>,
    pub accepted: Vec<[f64; 2]>,
}

impl FrontState {
    fn lowest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, c) in self.candidates.iter().enumerate() {
            if best.is_none_or(|b| c[1] < self.candidates[b][1]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn is_sorted(&self) -> bool {
        self.candidates.windows(2).all(|w| w[0][0] <= w[1][0])
    }
}

fn eval(h: &SpacingField, p: [f64; 2]) -> Result<f64> {
    h.eval_checked(&p)
}

/// Fills `[xmin, xmax] × [ymin, ymax]` advancing upwards from the bottom edge.
pub fn ff_fill_box(
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
    h: &SpacingField,
    n: usize,
) -> Result<Points> {
    if n < 1 {
        return Err(Error::InvalidInput(
            "number of arc candidates must be at least 1".into(),
        ));
    }
    if !(xmin < xmax && ymin < ymax) {
        return Err(Error::InvalidInput(format!(
            "empty box [{xmin}, {xmax}] x [{ymin}, {ymax}]"
        )));
    }
    let mut front = FrontState::default();
    let mut x = xmin;
    while x <= xmax {
        front.candidates.push([x, ymin]);
        x += eval(h, [x, ymin])?;
    }

    let mut survivors = Vec::new();
    while let Some(i) = front.lowest() {
        let p = front.candidates[i];
        if p[1] > ymax {
            break;
        }
        front.accepted.push(p);
        let r = eval(h, p)?;

        survivors.clear();
        survivors.extend(
            front
                .candidates
                .iter()
                .filter(|c| (c[0] - p[0]).abs() > r)
                .copied(),
        );
        let at = survivors.partition_point(|c| c[0] < p[0]);
        let ang_left = match at.checked_sub(1) {
            Some(l) => (survivors[l][1] - p[1]).atan2(survivors[l][0] - p[0]),
            None => PI,
        };
        let ang_right = match survivors.get(at) {
            Some(c) => (c[1] - p[1]).atan2(c[0] - p[0]),
            None => 0.0,
        };
        let arc: Vec<[f64; 2]> = (1..=n)
            .map(|j| {
                let a = ang_left - (j as f64 - 0.5) / n as f64 * (ang_left - ang_right);
                [p[0] + r * a.cos(), p[1] + r * a.sin()]
            })
            .filter(|c| c[0] >= xmin && c[0] <= xmax)
            .collect();
        survivors.splice(at..at, arc);
        std::mem::swap(&mut front.candidates, &mut survivors);
        debug_assert!(front.is_sorted());
    }

    let mut out = Points::with_capacity(2, front.accepted.len());
    for p in &front.accepted {
        out.push(p);
    }
    Ok(out)
}

/// Box fill of the bounding box, cropped to `domain` and merged with the
/// boundary nodes. Interior nodes closer than `h(p) / 2` to their nearest
/// boundary node `p` are dropped. Boundary nodes come first in the result.
pub fn ff_fill_domain(
    domain: &Domain,
    h: &SpacingField,
    n: usize,
    boundary: &BoundaryDiscretization,
) -> Result<FillResult> {
    let start = Instant::now();
    if domain.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "advancing-front box fill is two-dimensional only, got dimension {}",
            domain.dim()
        )));
    }
    if !boundary.is_empty() && boundary.points.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: boundary.points.dim(),
        });
    }
    let (lo, hi) = domain.bbox();
    let raw = ff_fill_box(lo[0], hi[0], lo[1], hi[1], h, n)?;

    let tree = BoxTree::build(&boundary.points);
    let mut nodes = boundary.points.clone();
    for q in raw.iter() {
        if !domain.contains(q) {
            continue;
        }
        if !tree.is_empty() {
            let nb = tree.nearest(q)?;
            if nb.distance < 0.5 * h.eval_checked(&boundary.points[nb.index])? {
                continue;
            }
        }
        nodes.push(q);
    }
    Ok(FillResult {
        seed_count: boundary.len(),
        predecessors: None,
        terminal: Vec::new(),
        truncated: false,
        stats: FillStats {
            elapsed: start.elapsed(),
            candidates_generated: raw.len() as u64,
            candidates_accepted: (nodes.len() - boundary.len()) as u64,
        },
        nodes,
    })
}
