//! Image file codecs: 8-bit and 16-bit PNG/JPEG through `image`, 32-bit float
//! OpenEXR through `exr`.

use std::path::Path;

use exr::prelude::traits::*;
use exr::prelude::SpecificChannels;
use image::{ImageBuffer, Luma, Rgb as PxRgb};

use crate::error::{Error, Result};
use crate::grid::{Grid, Rgb};

fn grid_dims<T>(g: &Grid<T>) -> (u32, u32) {
    (g.width() as u32, g.height() as u32)
}

/// Any 8-bit-per-channel or wider raster, reduced to 8-bit RGB.
pub fn read_rgb8(path: &Path) -> Result<Grid<[u8; 3]>> {
    let img = image::open(path).map_err(|e| Error::format(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0).collect();
    Grid::from_vec(w as usize, h as usize, data)
}

pub fn write_rgb8(path: &Path, grid: &Grid<[u8; 3]>) -> Result<()> {
    let (w, h) = grid_dims(grid);
    let raw: Vec<u8> = grid.iter().flatten().copied().collect();
    let buf: ImageBuffer<PxRgb<u8>, _> = ImageBuffer::from_raw(w, h, raw).expect("buffer size matches");
    buf.save(path).map_err(|e| Error::format(path, e))
}

pub fn write_gray16(path: &Path, grid: &Grid<u16>) -> Result<()> {
    let (w, h) = grid_dims(grid);
    let buf: ImageBuffer<Luma<u16>, _> =
        ImageBuffer::from_raw(w, h, grid.as_slice().to_vec()).expect("buffer size matches");
    buf.save(path).map_err(|e| Error::format(path, e))
}

pub fn read_gray16(path: &Path) -> Result<Grid<u16>> {
    let img = image::open(path).map_err(|e| Error::format(path, e))?;
    if !matches!(img.color(), image::ColorType::L16) {
        return Err(Error::format(path, format!("expected 16-bit gray, found {:?}", img.color())));
    }
    let img = img.to_luma16();
    let (w, h) = img.dimensions();
    Grid::from_vec(w as usize, h as usize, img.into_raw())
}

pub fn write_rgb16(path: &Path, grid: &Grid<[u16; 3]>) -> Result<()> {
    let (w, h) = grid_dims(grid);
    let raw: Vec<u16> = grid.iter().flatten().copied().collect();
    let buf: ImageBuffer<PxRgb<u16>, _> = ImageBuffer::from_raw(w, h, raw).expect("buffer size matches");
    buf.save(path).map_err(|e| Error::format(path, e))
}

pub fn read_rgb16(path: &Path) -> Result<Grid<[u16; 3]>> {
    let img = image::open(path).map_err(|e| Error::format(path, e))?;
    if !matches!(img.color(), image::ColorType::Rgb16) {
        return Err(Error::format(path, format!("expected 16-bit RGB, found {:?}", img.color())));
    }
    let img = img.to_rgb16();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0).collect();
    Grid::from_vec(w as usize, h as usize, data)
}

/// Unit-interval value to 16 bits, `round(x * 65535)`.
#[inline]
pub fn encode_unit(x: f64) -> u16 {
    (x.clamp(0.0, 1.0) * 65535.0).round() as u16
}

#[inline]
pub fn decode_unit(q: u16) -> f64 {
    q as f64 / 65535.0
}

/// Signed component in [-1, 1] stored as `(v + 1) / 2`.
#[inline]
pub fn encode_signed(v: f64) -> u16 {
    encode_unit((v + 1.0) * 0.5)
}

#[inline]
pub fn decode_signed(q: u16) -> f64 {
    decode_unit(q) * 2.0 - 1.0
}

pub fn write_exr_rgb(path: &Path, grid: &Grid<Rgb>) -> Result<()> {
    let w = grid.width();
    exr::prelude::write_rgb_file(path, w, grid.height(), |x, y| {
        let p = grid.as_slice()[y * w + x];
        (p[0] as f32, p[1] as f32, p[2] as f32)
    })
    .map_err(|e| Error::format(path, e))
}

pub fn read_exr_rgb(path: &Path) -> Result<Grid<Rgb>> {
    let image = exr::prelude::read_first_rgba_layer_from_file(
        path,
        |res, _| Grid::filled(res.width(), res.height(), [0.0; 3]),
        |g: &mut Grid<Rgb>, pos, (r, gr, b, _a): (f32, f32, f32, f32)| {
            g.set(pos.y(), pos.x(), [r as f64, gr as f64, b as f64]);
        },
    )
    .map_err(|e| Error::format(path, e))?;
    Ok(image.layer_data.channel_data.pixels)
}

/// Single-channel float image stored in a `Y` channel.
pub fn write_exr_gray(path: &Path, grid: &Grid<f64>) -> Result<()> {
    let w = grid.width();
    let channels = SpecificChannels::build()
        .with_channel("Y")
        .with_pixel_fn(|pos| (grid.as_slice()[pos.y() * w + pos.x()] as f32,));
    exr::prelude::Image::from_channels((w, grid.height()), channels)
        .write()
        .to_file(path)
        .map_err(|e| Error::format(path, e))
}

pub fn read_exr_gray(path: &Path) -> Result<Grid<f64>> {
    let image = read()
        .no_deep_data()
        .largest_resolution_level()
        .specific_channels()
        .required("Y")
        .collect_pixels(
            |res, _| Grid::filled(res.width(), res.height(), 0.0),
            |g: &mut Grid<f64>, pos, (y,): (f32,)| g.set(pos.y(), pos.x(), y as f64),
        )
        .first_valid_layer()
        .all_attributes()
        .from_file(path)
        .map_err(|e| Error::format(path, e))?;
    Ok(image.layer_data.channel_data.pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_codec() {
        assert_eq!(encode_unit(0.0), 0);
        assert_eq!(encode_unit(1.0), 65535);
        assert_eq!(encode_unit(2.0), 65535);
        for q in [0u16, 1, 17, 32768, 65534, 65535] {
            assert_eq!(encode_unit(decode_unit(q)), q);
            assert_eq!(encode_signed(decode_signed(q)), q);
        }
        let v = -0.123456789;
        assert!((decode_signed(encode_signed(v)) - v).abs() <= 1.0 / 65535.0);
    }
}
