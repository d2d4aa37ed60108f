//! PNG exports: similarity/association heatmaps, small-multiple heatmap
//! grids, and feature scatter plots.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::Error;
use crate::Result;

/// Light end of the heatmap ramp (value at the bottom of the range).
pub const RAMP_LOW: [u8; 3] = [222, 235, 247];
/// Dark end of the heatmap ramp (value at the top of the range).
pub const RAMP_HIGH: [u8; 3] = [8, 48, 107];

/// Linear light-blue-to-dark-blue ramp over `value_range`, clamped.
pub fn ramp_color(value: f64, value_range: (f64, f64)) -> [u8; 3] {
    let (lo, hi) = value_range;
    let t = if hi > lo {
        ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut out = [0u8; 3];
    for c in 0..3 {
        let a = f64::from(RAMP_LOW[c]);
        let b = f64::from(RAMP_HIGH[c]);
        out[c] = (a + (b - a) * t).round() as u8;
    }
    out
}

fn save_png(path: &Path, img: &RgbImage) -> Result<()> {
    img.save(path)
        .map_err(|e| Error::Io {
            path: path.into(),
            source: std::io::Error::other(e),
        })
}

/// Render a square matrix as a heatmap, one cell per matrix entry scaled up
/// by `scale` pixels (nearest neighbor). Row 0 is the top row of the image.
pub fn render_heatmap(
    matrix: &[f64],
    size: usize,
    path: &Path,
    value_range: (f64, f64),
    scale: u32,
) -> Result<()> {
    if size == 0 || matrix.len() != size * size {
        return Err(Error::Parameter(format!(
            "matrix length {} does not match size {size}",
            matrix.len()
        )));
    }
    let scale = scale.max(1);
    let px = size as u32 * scale;
    let mut img = RgbImage::new(px, px);
    for (row, chunk) in matrix.chunks_exact(size).enumerate() {
        for (col, &v) in chunk.iter().enumerate() {
            let color = Rgb(ramp_color(v, value_range));
            for dy in 0..scale {
                for dx in 0..scale {
                    img.put_pixel(col as u32 * scale + dx, row as u32 * scale + dy, color);
                }
            }
        }
    }
    save_png(path, &img)
}

/// Render a sequence of equally sized square matrices as a row-major grid of
/// small-multiple heatmaps with captions, e.g. one association heatmap per
/// time step.
pub fn render_heatmap_grid(
    tiles: &[(String, Vec<f64>)],
    size: usize,
    path: &Path,
    value_range: (f64, f64),
    scale: u32,
    columns: usize,
) -> Result<()> {
    if tiles.is_empty() {
        return Err(Error::Parameter("no heatmap tiles to render".into()));
    }
    let scale = scale.max(1);
    let columns = columns.max(1).min(tiles.len());
    let rows = tiles.len().div_ceil(columns);
    let tile_px = size as u32 * scale;
    let caption_h = GLYPH_H + 3;
    let gap = 4u32;
    let width = columns as u32 * (tile_px + gap) + gap;
    let height = rows as u32 * (tile_px + gap + caption_h) + gap;
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    for (i, (caption, matrix)) in tiles.iter().enumerate() {
        if matrix.len() != size * size {
            return Err(Error::Parameter(format!(
                "tile {i} has length {}, expected {}",
                matrix.len(),
                size * size
            )));
        }
        let gx = (i % columns) as u32;
        let gy = (i / columns) as u32;
        let x0 = gap + gx * (tile_px + gap);
        let y0 = gap + gy * (tile_px + gap + caption_h);
        for (row, chunk) in matrix.chunks_exact(size).enumerate() {
            for (col, &v) in chunk.iter().enumerate() {
                let color = Rgb(ramp_color(v, value_range));
                for dy in 0..scale {
                    for dx in 0..scale {
                        img.put_pixel(x0 + col as u32 * scale + dx, y0 + row as u32 * scale + dy, color);
                    }
                }
            }
        }
        draw_text(&mut img, caption, x0, y0 + tile_px + 2, Rgb([40, 40, 40]));
    }
    save_png(path, &img)
}

/// A dot in a scatter export.
#[derive(Debug, Clone)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub color: [u8; 3],
    pub label: Option<String>,
}

/// Color for the i-th feature (10-color palette, cycled).
pub fn palette_color(i: usize) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 10] = [
        [31, 119, 180],
        [255, 127, 14],
        [44, 160, 44],
        [214, 39, 40],
        [148, 103, 189],
        [140, 86, 75],
        [227, 119, 194],
        [127, 127, 127],
        [188, 189, 34],
        [23, 190, 207],
    ];
    PALETTE[i % PALETTE.len()]
}

pub const FILTERED_GRAY: [u8; 3] = [160, 160, 160];

/// Render filled discs (and optional labels) on a white canvas. Data
/// coordinates are fitted to the canvas preserving aspect ratio.
pub fn render_scatter(points: &[ScatterPoint], path: &Path, canvas: u32) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Parameter("no points to render".into()));
    }
    let canvas = canvas.max(64);
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for p in points {
        min_x = min_x.min(p.x - p.radius);
        max_x = max_x.max(p.x + p.radius);
        min_y = min_y.min(p.y - p.radius);
        max_y = max_y.max(p.y + p.radius);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1e-9);
    let margin = 0.05 * canvas as f64;
    let scale = (canvas as f64 - 2.0 * margin) / span;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            margin + (x - min_x) * scale,
            // Flip y so larger data y is higher on the image.
            canvas as f64 - margin - (y - min_y) * scale,
        )
    };

    let mut img = RgbImage::from_pixel(canvas, canvas, Rgb([255, 255, 255]));
    for p in points {
        let (cx, cy) = to_px(p.x, p.y);
        let r = (p.radius * scale).max(2.0);
        fill_disc(&mut img, cx, cy, r, Rgb(p.color));
    }
    // Labels drawn after all discs so they stay legible.
    for p in points {
        if let Some(label) = &p.label {
            let (cx, cy) = to_px(p.x, p.y);
            let r = (p.radius * scale).max(2.0);
            let w = text_width(label);
            let x = (cx - f64::from(w) / 2.0).max(0.0) as u32;
            let y = (cy + r + 2.0).min(f64::from(canvas - GLYPH_H - 1)) as u32;
            draw_text(&mut img, label, x, y, Rgb([30, 30, 30]));
        }
    }
    save_png(path, &img)
}

fn fill_disc(img: &mut RgbImage, cx: f64, cy: f64, r: f64, color: Rgb<u8>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = ((cx - r).floor() as i64).max(0);
    let x1 = ((cx + r).ceil() as i64).min(w - 1);
    let y0 = ((cy - r).floor() as i64).max(0);
    let y1 = ((cy + r).ceil() as i64).min(h - 1);
    let r2 = r * r;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            if dx * dx + dy * dy <= r2 {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

pub const GLYPH_W: u32 = 4;
pub const GLYPH_H: u32 = 6;

/// 4x6 bitmap glyphs for the characters used in captions and labels.
/// Each byte is one row, low 4 bits used, MSB-first.
fn glyph(c: char) -> Option<[u8; 6]> {
    Some(match c.to_ascii_uppercase() {
        '0' => [0b0110, 0b1001, 0b1001, 0b1001, 0b1001, 0b0110],
        '1' => [0b0010, 0b0110, 0b0010, 0b0010, 0b0010, 0b0111],
        '2' => [0b0110, 0b1001, 0b0001, 0b0010, 0b0100, 0b1111],
        '3' => [0b1110, 0b0001, 0b0110, 0b0001, 0b0001, 0b1110],
        '4' => [0b1001, 0b1001, 0b1111, 0b0001, 0b0001, 0b0001],
        '5' => [0b1111, 0b1000, 0b1110, 0b0001, 0b0001, 0b1110],
        '6' => [0b0110, 0b1000, 0b1110, 0b1001, 0b1001, 0b0110],
        '7' => [0b1111, 0b0001, 0b0010, 0b0010, 0b0100, 0b0100],
        '8' => [0b0110, 0b1001, 0b0110, 0b1001, 0b1001, 0b0110],
        '9' => [0b0110, 0b1001, 0b1001, 0b0111, 0b0001, 0b0110],
        'A' => [0b0110, 0b1001, 0b1001, 0b1111, 0b1001, 0b1001],
        'B' => [0b1110, 0b1001, 0b1110, 0b1001, 0b1001, 0b1110],
        'C' => [0b0110, 0b1001, 0b1000, 0b1000, 0b1001, 0b0110],
        'D' => [0b1110, 0b1001, 0b1001, 0b1001, 0b1001, 0b1110],
        'E' => [0b1111, 0b1000, 0b1110, 0b1000, 0b1000, 0b1111],
        'F' => [0b1111, 0b1000, 0b1110, 0b1000, 0b1000, 0b1000],
        'T' => [0b1111, 0b0110, 0b0110, 0b0110, 0b0110, 0b0110],
        'V' => [0b1001, 0b1001, 0b1001, 0b1001, 0b0110, 0b0110],
        'S' => [0b0111, 0b1000, 0b0110, 0b0001, 0b0001, 0b1110],
        '=' => [0b0000, 0b1111, 0b0000, 0b1111, 0b0000, 0b0000],
        '.' => [0b0000, 0b0000, 0b0000, 0b0000, 0b0110, 0b0110],
        ',' => [0b0000, 0b0000, 0b0000, 0b0110, 0b0010, 0b0100],
        '-' => [0b0000, 0b0000, 0b1111, 0b0000, 0b0000, 0b0000],
        '+' => [0b0000, 0b0110, 0b1111, 0b1111, 0b0110, 0b0000],
        '(' => [0b0010, 0b0100, 0b0100, 0b0100, 0b0100, 0b0010],
        ')' => [0b0100, 0b0010, 0b0010, 0b0010, 0b0010, 0b0100],
        '_' => [0b0000, 0b0000, 0b0000, 0b0000, 0b0000, 0b1111],
        ' ' => [0; 6],
        _ => return None,
    })
}

fn text_width(text: &str) -> u32 {
    text.chars().count() as u32 * (GLYPH_W + 1)
}

fn draw_text(img: &mut RgbImage, text: &str, x: u32, y: u32, color: Rgb<u8>) {
    let mut cursor = x;
    for c in text.chars() {
        if let Some(rows) = glyph(c) {
            for (dy, bits) in rows.iter().enumerate() {
                for dx in 0..GLYPH_W {
                    if (bits >> (GLYPH_W - 1 - dx)) & 1 == 1 {
                        let px = cursor + dx;
                        let py = y + dy as u32;
                        if px < img.width() && py < img.height() {
                            img.put_pixel(px, py, color);
                        }
                    }
                }
            }
        }
        cursor += GLYPH_W + 1;
    }
}
