use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, Rgb};

pub const CARD_ROWS: usize = 15;
pub const CARD_COLS: usize = 20;

/// A `cols x rows` card of uniformly colored square tiles, deterministic in `seed`.
pub fn generate_color_card(rows: usize, cols: usize, tile_px: usize, seed: u64) -> Grid<[u8; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let colors: Vec<[u8; 3]> = (0..rows * cols)
        .map(|_| [rng.random(), rng.random(), rng.random()])
        .collect();
    let tile = tile_px.max(1);
    Grid::from_fn(cols * tile, rows * tile, |r, c| colors[(r / tile) * cols + c / tile])
}

/// Block-average a photo of the card down to 20 x 15 samples.
pub fn downsample_card(photo: &Grid<[u8; 3]>) -> Result<Grid<Rgb>> {
    downsample_mean(photo, CARD_COLS, CARD_ROWS)
}

pub fn downsample_mean(photo: &Grid<[u8; 3]>, cols: usize, rows: usize) -> Result<Grid<Rgb>> {
    let (w, h) = photo.dims();
    if w < cols || h < rows {
        return Err(Error::invalid(format!(
            "photo {w}x{h} is smaller than the {cols}x{rows} sample grid"
        )));
    }
    Ok(Grid::from_fn(cols, rows, |r, c| {
        let (r0, r1) = (r * h / rows, (r + 1) * h / rows);
        let (c0, c1) = (c * w / cols, (c + 1) * w / cols);
        let mut acc = [0.0; 3];
        for row in r0..r1 {
            for col in c0..c1 {
                let p = photo.get(row, col);
                for k in 0..3 {
                    acc[k] += p[k] as f64;
                }
            }
        }
        let n = ((r1 - r0) * (c1 - c0)) as f64;
        acc.map(|v| v / n)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn card_is_deterministic() {
        assert_eq!(generate_color_card(15, 20, 4, 9), generate_color_card(15, 20, 4, 9));
        assert_ne!(generate_color_card(15, 20, 4, 9), generate_color_card(15, 20, 4, 10));
    }

    #[test]
    fn unit_tiles() {
        let card = generate_color_card(15, 20, 1, 3);
        assert_eq!(card.dims(), (20, 15));
    }

    #[test]
    fn tiles_are_uniform() {
        let card = generate_color_card(15, 20, 6, 1);
        assert_eq!(card.dims(), (120, 90));
        for tr in 0..15 {
            for tc in 0..20 {
                let first = *card.get(tr * 6, tc * 6);
                for r in 0..6 {
                    for c in 0..6 {
                        assert_eq!(*card.get(tr * 6 + r, tc * 6 + c), first);
                    }
                }
            }
        }
    }

    #[test]
    fn downsample_constant() {
        let img = Grid::filled(60, 45, [7u8, 80, 200]);
        let d = downsample_card(&img).unwrap();
        assert_eq!(d.dims(), (20, 15));
        assert!(d.iter().all(|v| *v == [7.0, 80.0, 200.0]));
    }

    #[test]
    fn downsample_checkerboard() {
        let img = Grid::from_fn(40, 30, |r, c| if (r + c) % 2 == 0 { [100u8; 3] } else { [200u8; 3] });
        let d = downsample_card(&img).unwrap();
        assert!(d.iter().all(|v| *v == [150.0; 3]));
    }

    #[test]
    fn downsample_preserves_mean() {
        let img = Grid::from_fn(80, 45, |r, c| [((r * 13 + c * 7) % 256) as u8, (r % 256) as u8, (c * 3 % 256) as u8]);
        let d = downsample_card(&img).unwrap();
        for k in 0..3 {
            let a: f64 = img.iter().map(|p| p[k] as f64).sum::<f64>() / img.len() as f64;
            let b: f64 = d.iter().map(|p| p[k]).sum::<f64>() / d.len() as f64;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn downsample_rejects_small() {
        let img = Grid::filled(19, 15, [0u8; 3]);
        assert!(downsample_card(&img).is_err());
    }
}
