//! Plain cover-image generators.
//!
//! Tables need a cover image to live in; these helpers produce minimal,
//! well-formed covers in every supported format when no photograph is at
//! hand. The pixel callback receives `(x, y)` in image coordinates.

/// Builds an uncompressed 24-bit BMP. Pixels are `[b, g, r]` triples.
pub fn bmp24(width: u32, height: u32, mut pixel: impl FnMut(u32, u32) -> [u8; 3]) -> Vec<u8> {
    let row_size = ((width as usize * 24).div_ceil(32)) * 4;
    let pixel_length = row_size * height as usize;
    let mut out = bmp_headers(width, height, 24, 54, pixel_length);
    for y in 0..height {
        let row_start = out.len();
        // BMP rows are stored bottom-up.
        for x in 0..width {
            out.extend_from_slice(&pixel(x, height - 1 - y));
        }
        out.resize(row_start + row_size, 0);
    }
    out
}

/// Builds a solid-color 24-bit BMP.
pub fn bmp24_solid(width: u32, height: u32, bgr: [u8; 3]) -> Vec<u8> {
    bmp24(width, height, |_, _| bgr)
}

/// Builds an uncompressed 8-bit grayscale BMP with a 256-entry palette.
pub fn bmp8_gray(width: u32, height: u32, mut pixel: impl FnMut(u32, u32) -> u8) -> Vec<u8> {
    let row_size = (width as usize).div_ceil(4) * 4;
    let pixel_length = row_size * height as usize;
    let offset = 54 + 256 * 4;
    let mut out = bmp_headers(width, height, 8, offset, pixel_length);
    for v in 0..=255u8 {
        out.extend_from_slice(&[v, v, v, 0]);
    }
    for y in 0..height {
        let row_start = out.len();
        for x in 0..width {
            out.push(pixel(x, height - 1 - y));
        }
        out.resize(row_start + row_size, 0);
    }
    out
}

fn bmp_headers(width: u32, height: u32, bpp: u16, offset: usize, pixel_length: usize) -> Vec<u8> {
    let file_size = offset + pixel_length;
    let mut out = Vec::with_capacity(file_size);
    out.extend_from_slice(b"BM");
    out.extend_from_slice(&(file_size as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]); // reserved
    out.extend_from_slice(&(offset as u32).to_le_bytes());
    out.extend_from_slice(&40u32.to_le_bytes()); // BITMAPINFOHEADER
    out.extend_from_slice(&(width as i32).to_le_bytes());
    out.extend_from_slice(&(height as i32).to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // planes
    out.extend_from_slice(&bpp.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes()); // BI_RGB
    out.extend_from_slice(&(pixel_length as u32).to_le_bytes());
    out.extend_from_slice(&2835i32.to_le_bytes()); // 72 dpi
    out.extend_from_slice(&2835i32.to_le_bytes());
    let palette_entries: u32 = if bpp == 8 { 256 } else { 0 };
    out.extend_from_slice(&palette_entries.to_le_bytes());
    out.extend_from_slice(&palette_entries.to_le_bytes());
    out
}

/// Builds a binary PPM (`P6`). Pixels are `[r, g, b]` triples.
pub fn ppm(width: u32, height: u32, mut pixel: impl FnMut(u32, u32) -> [u8; 3]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for y in 0..height {
        for x in 0..width {
            out.extend_from_slice(&pixel(x, y));
        }
    }
    out
}

/// Builds a binary PGM (`P5`).
pub fn pgm(width: u32, height: u32, mut pixel: impl FnMut(u32, u32) -> u8) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for y in 0..height {
        for x in 0..width {
            out.push(pixel(x, y));
        }
    }
    out
}
