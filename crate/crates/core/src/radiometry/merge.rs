use crate::error::{Error, Result};
use crate::grid::{Grid, Rgb};

use super::response::{hat_weight, ResponseCurve};

/// Linear RGB radiance, exposure-normalized.
pub type RadianceMap = Grid<Rgb>;

#[derive(Debug, Clone)]
pub struct ExposureStack {
    pub images: Vec<Grid<[u8; 3]>>,
    /// Exposure time of each image in seconds.
    pub exposures: Vec<f64>,
}

impl ExposureStack {
    pub fn new(images: Vec<Grid<[u8; 3]>>, exposures: Vec<f64>) -> Result<Self> {
        let s = ExposureStack { images, exposures };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.is_empty() {
            return Err(Error::invalid("empty exposure stack"));
        }
        if self.images.len() != self.exposures.len() {
            return Err(Error::invalid(format!(
                "{} images but {} exposure times",
                self.images.len(),
                self.exposures.len()
            )));
        }
        if self.exposures.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::invalid("exposure times must be positive"));
        }
        for (i, a) in self.exposures.iter().enumerate() {
            if self.exposures[..i].contains(a) {
                return Err(Error::invalid(format!("duplicate exposure time {a}")));
            }
        }
        let first = &self.images[0];
        if self.images.iter().any(|im| !im.same_dims(first)) {
            return Err(Error::invalid("exposure stack images differ in size"));
        }
        Ok(())
    }
}

/// Fuse an aligned stack into one radiance map.
///
/// Pixels clipped high in every frame take the shortest exposure's estimate;
/// pixels clipped low in every frame take the longest exposure's.
pub fn merge_radiance(stack: &ExposureStack, curve: &ResponseCurve) -> Result<RadianceMap> {
    stack.validate()?;
    let (w, h) = stack.images[0].dims();
    let ln_t: Vec<f64> = stack.exposures.iter().map(|t| t.ln()).collect();
    let shortest = (0..ln_t.len()).min_by(|&a, &b| ln_t[a].total_cmp(&ln_t[b])).unwrap();
    let longest = (0..ln_t.len()).max_by(|&a, &b| ln_t[a].total_cmp(&ln_t[b])).unwrap();

    let mut out = Grid::filled(w, h, [0.0; 3]);
    for idx in 0..w * h {
        let mut px = [0.0; 3];
        for (c, v) in px.iter_mut().enumerate() {
            let zs = stack.images.iter().map(|im| im.as_slice()[idx][c]);
            let ln_l = if zs.clone().all(|z| z == 255) {
                curve.g(c, 255) - ln_t[shortest]
            } else if zs.clone().all(|z| z == 0) {
                curve.g(c, 0) - ln_t[longest]
            } else {
                let (mut num, mut den) = (0.0, 0.0);
                for (j, z) in zs.enumerate() {
                    let wz = hat_weight(z);
                    num += wz * (curve.g(c, z) - ln_t[j]);
                    den += wz;
                }
                num / den
            };
            *v = ln_l.exp();
        }
        out.as_mut_slice()[idx] = px;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Grid<[u8; 3]> {
        Grid::from_fn(16, 16, |r, c| {
            let v = (r * 16 + c) as u8;
            [v, v.saturating_add(1), 255 - v]
        })
    }

    #[test]
    fn single_linear_image_is_proportional() {
        let stack = ExposureStack::new(vec![ramp()], vec![1.0]).unwrap();
        let g = ResponseCurve::linear();
        let m = merge_radiance(&stack, &g).unwrap();
        for (z, l) in stack.images[0].iter().zip(m.iter()) {
            for c in 0..3 {
                let expect = (z[c] as f64).max(0.5) / 255.0;
                assert!((l[c] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halving_exposure_doubles_radiance() {
        let g = ResponseCurve::gamma(2.2);
        let a = merge_radiance(&ExposureStack::new(vec![ramp()], vec![0.02]).unwrap(), &g).unwrap();
        let b = merge_radiance(&ExposureStack::new(vec![ramp()], vec![0.01]).unwrap(), &g).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            for c in 0..3 {
                assert!((y[c] / x[c] - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn consistent_exposures_agree() {
        // Under a linear table, Z and 2Z at t and 2t describe the same radiance.
        let g = ResponseCurve::linear();
        let a = Grid::from_fn(8, 8, |r, c| [(r * 8 + c + 10) as u8; 3]);
        let b = a.map(|p| p.map(|v| v * 2));
        let both = merge_radiance(&ExposureStack::new(vec![a.clone(), b], vec![1.0, 2.0]).unwrap(), &g)
            .unwrap();
        let alone = merge_radiance(&ExposureStack::new(vec![a], vec![1.0]).unwrap(), &g).unwrap();
        for (x, y) in both.iter().zip(alone.iter()) {
            for c in 0..3 {
                assert!(((x[c] - y[c]) / y[c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn saturated_uses_shortest_exposure() {
        let g = ResponseCurve::linear();
        let sat = Grid::filled(2, 2, [255u8; 3]);
        let m = merge_radiance(
            &ExposureStack::new(vec![sat.clone(), sat], vec![0.5, 0.25]).unwrap(),
            &g,
        )
        .unwrap();
        assert!((m.get(0, 0)[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn stack_validation() {
        assert!(ExposureStack::new(vec![], vec![]).is_err());
        assert!(ExposureStack::new(vec![ramp()], vec![0.0]).is_err());
        assert!(ExposureStack::new(vec![ramp(), ramp()], vec![1.0, 1.0]).is_err());
        assert!(ExposureStack::new(vec![ramp()], vec![1.0, 2.0]).is_err());
    }
}
