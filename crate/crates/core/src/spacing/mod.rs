//! Nodal spacing functions `h: Ω → (0, ∞)`.

mod expr;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use expr::Expr;

use crate::error::{Error, Result};
use crate::geometry::Domain;

/// Grey-level to spacing map used for image-driven densities.
pub fn grey_to_spacing(g: f64) -> f64 {
    0.002 + 0.006 * g + 0.012 * g.powi(8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacingKind {
    Constant,
    Analytic,
    Image,
}

#[derive(Clone)]
enum Repr {
    Constant(f64),
    Expr(Arc<Expr>),
    Closure(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
    Image { image: Arc<GrayImage>, h0: f64 },
}

/// A positive spacing function. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct SpacingField {
    repr: Repr,
}

impl fmt::Debug for SpacingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpacingField({})", self.describe())
    }
}

impl SpacingField {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "constant spacing must be positive and finite, got {c}"
            )));
        }
        Ok(SpacingField {
            repr: Repr::Constant(c),
        })
    }

    /// Wraps an arbitrary function. Positivity is checked where it is evaluated.
    pub fn analytic<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        SpacingField {
            repr: Repr::Closure(Arc::new(f)),
        }
    }

    /// Parses an expression in `x`, `y`, `z`, e.g. `"0.015*(1+x+y)"`.
    pub fn from_expr(src: &str) -> Result<Self> {
        let e = Expr::parse(src)?;
        if e.arity() == 0 {
            return SpacingField::constant(e.eval(&[]));
        }
        Ok(SpacingField {
            repr: Repr::Expr(Arc::new(e)),
        })
    }

    /// `h(x, y) = h0 * s(I[⌊w x⌋, ⌊w y⌋] / 255)` with row index from `x` and
    /// column index from `y`, both scaled by the image width and clamped
    /// into the raster.
    pub fn image(image: GrayImage, h0: f64) -> Result<Self> {
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "h0 must be positive, got {h0}"
            )));
        }
        if image.width == 0 || image.height == 0 {
            return Err(Error::InvalidInput("image is empty".into()));
        }
        Ok(SpacingField {
            repr: Repr::Image {
                image: Arc::new(image),
                h0,
            },
        })
    }

    pub fn kind(&self) -> SpacingKind {
        match self.repr {
            Repr::Constant(_) => SpacingKind::Constant,
            Repr::Expr(_) | Repr::Closure(_) => SpacingKind::Analytic,
            Repr::Image { .. } => SpacingKind::Image,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.repr {
            Repr::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant_value().is_some()
    }

    #[inline]
    pub fn eval(&self, p: &[f64]) -> f64 {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::Expr(e) => e.eval(p),
            Repr::Closure(f) => f(p),
            Repr::Image { image, h0 } => {
                let w = image.width as f64;
                let row = index_clamped(w * p[0], image.height);
                let col = index_clamped(w * p.get(1).copied().unwrap_or(0.0), image.width);
                h0 * grey_to_spacing(image.get(row, col) as f64 / 255.0)
            }
        }
    }

    /// Evaluates and rejects non-positive or non-finite values.
    #[inline]
    pub fn eval_checked(&self, p: &[f64]) -> Result<f64> {
        let v = self.eval(p);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonPositiveSpacing {
                point: p.to_vec(),
                value: v,
            })
        }
    }

    /// Short human-readable description, used in file headers.
    pub fn describe(&self) -> String {
        match &self.repr {
            Repr::Constant(c) => format!("{c}"),
            Repr::Expr(e) => e.to_string(),
            Repr::Closure(_) => "<function>".into(),
            Repr::Image { image, h0 } => {
                format!("image {}x{} h0={h0}", image.width, image.height)
            }
        }
    }
}

fn index_clamped(v: f64, len: usize) -> usize {
    if v.is_nan() || v <= 0.0 {
        0
    } else {
        (v.floor() as usize).min(len - 1)
    }
}

pub fn constant_spacing(c: f64) -> Result<SpacingField> {
    SpacingField::constant(c)
}

pub fn analytic_spacing<F>(f: F) -> SpacingField
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    SpacingField::analytic(f)
}

pub fn image_spacing(image: GrayImage, h0: f64) -> Result<SpacingField> {
    SpacingField::image(image, h0)
}

/// 8-bit greyscale raster, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }

    /// Reads a portable graymap (ASCII `P2` or binary `P5`).
    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_pgm_bytes(&bytes)
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        if !(bytes.starts_with(b"P2") || bytes.starts_with(b"P5")) {
            return Err(Error::Parse("not a P2/P5 graymap".into()));
        }
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Pnm)
            .map_err(|e| Error::Parse(format!("graymap: {e}")))?;
        let luma = img.into_luma8();
        let (w, h) = luma.dimensions();
        GrayImage::new(w as usize, h as usize, luma.into_raw())
    }
}

/// Monte Carlo estimate of `N(h) = ∫_Ω dΩ / h(p)^d`.
///
/// Constant `h` on a domain with a known volume takes the exact path
/// `|Ω| / h^d`. Otherwise `samples` uniform points are drawn in the bounding
/// box.
pub fn estimate_count(domain: &Domain, h: &SpacingField, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be at least 1".into()));
    }
    let d = domain.dim() as i32;
    if let (Some(c), Some(v)) = (h.constant_value(), domain.analytic_volume()) {
        return Ok(v / c.powi(d));
    }
    let (lo, hi) = domain.bbox();
    let bbox_volume: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![0.0; lo.len()];
    let mut sum = 0.0;
    for _ in 0..samples {
        for (k, x) in p.iter_mut().enumerate() {
            *x = rng.random_range(lo[k]..hi[k]);
        }
        if domain.contains(&p) {
            let v = h.eval_checked(&p)?;
            sum += v.powi(-d);
        }
    }
    Ok(bbox_volume * sum / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_values() {
        let h = SpacingField::constant(0.025).unwrap();
        assert_eq!(h.eval(&[0.3, 0.7]), 0.025);
        let h = SpacingField::constant(0.05).unwrap();
        assert_eq!(h.eval(&[0.0, 0.0, 0.0]), 0.05);
        assert!(SpacingField::constant(-1.0).is_err());
        assert!(SpacingField::constant(0.0).is_err());
        assert_eq!(h.kind(), SpacingKind::Constant);
    }

    #[test]
    fn analytic_linear_ramp() {
        let h = SpacingField::from_expr("0.015*(1+x+y)").unwrap();
        assert_eq!(h.kind(), SpacingKind::Analytic);
        assert_relative_eq!(h.eval(&[0.0, 0.0]), 0.015, max_relative = 1e-14);
        assert_relative_eq!(h.eval(&[1.0, 1.0]), 0.045, max_relative = 1e-14);
        assert_relative_eq!(h.eval(&[0.5, 0.5]), 0.030, max_relative = 1e-14);
        let closure = analytic_spacing(|p| 0.015 * (1.0 + p[0] + p[1]));
        assert_relative_eq!(closure.eval(&[1.0, 1.0]), 0.045, max_relative = 1e-14);
    }

    #[test]
    fn constant_expression_collapses() {
        let h = SpacingField::from_expr("0.1 * 0.5").unwrap();
        assert_eq!(h.constant_value(), Some(0.05));
    }

    #[test]
    fn grey_levels() {
        assert_relative_eq!(grey_to_spacing(0.0), 0.002);
        assert_relative_eq!(grey_to_spacing(1.0), 0.020, max_relative = 1e-14);
        let black = SpacingField::image(GrayImage::filled(4, 4, 0), 1.0).unwrap();
        assert_relative_eq!(black.eval(&[0.5, 0.5]), 0.002, max_relative = 1e-14);
        let white = SpacingField::image(GrayImage::filled(4, 4, 255), 1.0).unwrap();
        assert_relative_eq!(white.eval(&[0.5, 0.5]), 0.020, max_relative = 1e-14);
        let white = SpacingField::image(GrayImage::filled(4, 4, 255), 1.5).unwrap();
        assert_relative_eq!(white.eval(&[0.5, 0.5]), 0.030, max_relative = 1e-14);
    }

    #[test]
    fn image_indexing_is_row_from_x_and_clamped() {
        // 2x2 image: row 0 = [0, 255], row 1 = [255, 255]
        let img = GrayImage::new(2, 2, vec![0, 255, 255, 255]).unwrap();
        let h = SpacingField::image(img, 1.0).unwrap();
        // x in [0, 0.5) -> row 0, y in [0, 0.5) -> column 0
        assert_relative_eq!(h.eval(&[0.1, 0.1]), 0.002);
        assert_relative_eq!(h.eval(&[0.1, 0.9]), 0.020, max_relative = 1e-14);
        assert_relative_eq!(h.eval(&[0.9, 0.1]), 0.020, max_relative = 1e-14);
        // x = 1 and out-of-range coordinates clamp
        assert_relative_eq!(h.eval(&[1.0, 1.0]), 0.020, max_relative = 1e-14);
        assert_relative_eq!(h.eval(&[-3.0, -3.0]), 0.002);
        // same pixel -> identical value
        assert_eq!(h.eval(&[0.01, 0.02]), h.eval(&[0.49, 0.49]));
    }

    #[test]
    fn pgm_ascii_and_binary() {
        let ascii = b"P2\n# comment\n3 2\n255\n0 10 20\n30 40 255\n";
        let img = GrayImage::from_pgm_bytes(ascii).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.get(0, 2), 20);
        assert_eq!(img.get(1, 2), 255);

        let mut binary = b"P5\n3 2\n255\n".to_vec();
        binary.extend_from_slice(&[0, 10, 20, 30, 40, 255]);
        let img2 = GrayImage::from_pgm_bytes(&binary).unwrap();
        assert_eq!(img, img2);

        assert!(GrayImage::from_pgm_bytes(b"P6\n1 1\n255\n\0\0\0").is_err());
    }

    #[test]
    fn non_positive_spacing_is_reported() {
        let h = analytic_spacing(|p| p[0] - 0.5);
        let err = h.eval_checked(&[0.25]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveSpacing { .. }));
    }
}
