//! Image containers and the two hidden-storage channels.
//!
//! A supported image file is split into a *primary part* (headers, palette)
//! and a *secondary part* (the pixel array). Two independent channels store
//! data without changing what the image looks like:
//!
//! * the **LSB channel** writes one payload bit per pixel byte by nudging the
//!   byte ±1 until its parity matches the bit, starting at the first pixel
//!   byte;
//! * the **trailer channel** appends a framed payload after the image's
//!   declared end, leaving every pixel byte untouched.
//!
//! Both channels wrap their payload in a `magic ‖ version ‖ u32-BE length ‖
//! payload ‖ u32-BE CRC-32` frame so that extraction is self-identifying and
//! corruption is detectable.
//!
//! Supported formats: uncompressed 8-bit and 24-bit BMP, binary PPM (`P6`)
//! and PGM (`P5`). Compressed or lossy formats have no stable least
//! significant bits and are rejected at parse time.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Channel, Error, Result};

/// Magic of the frame carried in the LSB channel.
pub const LSB_MAGIC: [u8; 4] = *b"HDBS";
/// Magic of the frame appended after the image (trailer channel).
pub const TRAILER_MAGIC: [u8; 4] = *b"HDBR";
/// Frame format version written by this crate.
pub const FRAME_VERSION: u8 = 0x01;
/// Bytes a frame adds around its payload: magic(4) + version(1) + length(4) + crc(4).
pub const FRAME_OVERHEAD: usize = 13;

/// Reflected CRC-32 (polynomial 0xEDB88320), the common zlib/PNG checksum.
///
/// Bitwise implementation; payloads here are small enough that a lookup
/// table would not pay for itself.
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

/// Pixel layout of a parsed container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Windows bitmap, 24 bits per pixel, uncompressed.
    Bmp24,
    /// Windows bitmap, 8 bits per pixel (palettized), uncompressed.
    Bmp8,
    /// Binary PPM (`P6`), 8-bit samples.
    Ppm,
    /// Binary PGM (`P5`), 8-bit samples.
    Pgm,
}

impl ImageFormat {
    /// Canonical file extension for the format.
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Bmp24 | ImageFormat::Bmp8 => "bmp",
            ImageFormat::Ppm => "ppm",
            ImageFormat::Pgm => "pgm",
        }
    }
}

impl std::fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ImageFormat::Bmp24 => f.write_str("bmp (24-bit)"),
            ImageFormat::Bmp8 => f.write_str("bmp (8-bit)"),
            ImageFormat::Ppm => f.write_str("ppm (binary)"),
            ImageFormat::Pgm => f.write_str("pgm (binary)"),
        }
    }
}

/// A parsed cover or stego image.
///
/// Holds the entire file verbatim plus the byte spans that matter: where the
/// pixel array starts, how long it is (row padding included), and where the
/// image proper ends. Anything past `image_end` is the trailer.
///
/// All operations are pure: embedding returns a new container and never
/// mutates the receiver, so containers can be shared freely between threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageContainer {
    bytes: Vec<u8>,
    format: ImageFormat,
    pixel_offset: usize,
    pixel_length: usize,
    image_end: usize,
}

impl ImageContainer {
    /// Parses a supported image file from its raw bytes.
    ///
    /// The pixel span and image end are computed from the format's own
    /// headers; any bytes past the declared end are captured as the trailer.
    pub fn parse(bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() >= 2 && &bytes[..2] == b"BM" {
            return Self::parse_bmp(bytes);
        }
        if bytes.len() >= 2 && (&bytes[..2] == b"P6" || &bytes[..2] == b"P5") {
            return Self::parse_pnm(bytes);
        }
        let magic: Vec<u8> = bytes.iter().take(2).copied().collect();
        Err(Error::UnsupportedFormat(format!(
            "magic {:?} is not BMP, PPM or PGM",
            String::from_utf8_lossy(&magic)
        )))
    }

    /// Reads and parses an image file.
    pub fn open(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(bytes)
    }

    fn parse_bmp(bytes: Vec<u8>) -> Result<Self> {
        // BITMAPFILEHEADER (14 bytes) + at least a BITMAPINFOHEADER (40 bytes).
        if bytes.len() < 54 {
            return Err(Error::MalformedHeader(format!(
                "file is {} bytes, smaller than the 54-byte BMP headers",
                bytes.len()
            )));
        }
        let le_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let le_u16 = |at: usize| u16::from_le_bytes(bytes[at..at + 2].try_into().unwrap());

        let pixel_offset = le_u32(10) as usize;
        let dib_size = le_u32(14) as usize;
        if dib_size < 40 {
            return Err(Error::UnsupportedFormat(format!(
                "BMP DIB header of {dib_size} bytes (BITMAPCOREHEADER era) is not supported"
            )));
        }
        let width = le_u32(18) as i32;
        let height = le_u32(22) as i32;
        let bpp = le_u16(28);
        let compression = le_u32(30);

        if compression != 0 {
            return Err(Error::CompressedImage(compression));
        }
        if bpp != 8 && bpp != 24 {
            return Err(Error::UnsupportedFormat(format!(
                "{bpp}-bit BMP; only 8-bit and 24-bit images are supported"
            )));
        }
        if width <= 0 || height == 0 {
            return Err(Error::MalformedHeader(format!(
                "image dimensions {width}x{height}"
            )));
        }
        let width = width as usize;
        let rows = height.unsigned_abs() as usize;
        // Rows are padded to a 4-byte boundary.
        let row_size = (width * bpp as usize).div_ceil(32) * 4;
        let pixel_length = match row_size.checked_mul(rows) {
            Some(n) => n,
            None => {
                return Err(Error::MalformedHeader(format!(
                    "pixel array size overflows ({width}x{rows} at {bpp} bpp)"
                )))
            }
        };
        if pixel_offset < 14 + dib_size {
            return Err(Error::MalformedHeader(format!(
                "pixel data offset {pixel_offset} lies inside the {}-byte headers",
                14 + dib_size
            )));
        }
        let image_end = pixel_offset + pixel_length;
        if image_end > bytes.len() {
            return Err(Error::MalformedHeader(format!(
                "headers declare {image_end} bytes of image but the file has {}",
                bytes.len()
            )));
        }
        Ok(ImageContainer {
            bytes,
            format: if bpp == 24 {
                ImageFormat::Bmp24
            } else {
                ImageFormat::Bmp8
            },
            pixel_offset,
            pixel_length,
            image_end,
        })
    }

    fn parse_pnm(bytes: Vec<u8>) -> Result<Self> {
        let format = if &bytes[..2] == b"P6" {
            ImageFormat::Ppm
        } else {
            ImageFormat::Pgm
        };
        // Header: magic, width, height, maxval as ASCII tokens. Tokens are
        // separated by whitespace; '#' starts a comment that runs to end of
        // line. Exactly one whitespace byte separates maxval from the pixel
        // data.
        let mut pos = 2usize;
        let mut fields = [0usize; 3];
        for field in fields.iter_mut() {
            // Skip whitespace and comments.
            loop {
                match bytes.get(pos) {
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(b'#') => {
                        while let Some(&b) = bytes.get(pos) {
                            pos += 1;
                            if b == b'\n' {
                                break;
                            }
                        }
                    }
                    _ => break,
                }
            }
            let start = pos;
            while let Some(b) = bytes.get(pos) {
                if b.is_ascii_digit() {
                    pos += 1;
                } else {
                    break;
                }
            }
            if pos == start {
                return Err(Error::MalformedHeader(
                    "missing numeric field in PNM header".into(),
                ));
            }
            let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
            *field = text.parse::<usize>().map_err(|_| {
                Error::MalformedHeader(format!("PNM header field {text:?} out of range"))
            })?;
        }
        let [width, height, maxval] = fields;
        // A single whitespace byte ends the header.
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => {
                return Err(Error::MalformedHeader(
                    "PNM header not terminated by whitespace".into(),
                ))
            }
        }
        if width == 0 || height == 0 {
            return Err(Error::MalformedHeader(format!(
                "image dimensions {width}x{height}"
            )));
        }
        if maxval == 0 || maxval > 255 {
            return Err(Error::UnsupportedFormat(format!(
                "PNM maxval {maxval}; only single-byte samples are supported"
            )));
        }
        let samples = if format == ImageFormat::Ppm { 3 } else { 1 };
        let overflow =
            || Error::MalformedHeader(format!("pixel array size overflows ({width}x{height})"));
        let pixel_length = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(samples))
            .ok_or_else(overflow)?;
        let image_end = pos.checked_add(pixel_length).ok_or_else(overflow)?;
        if image_end > bytes.len() {
            return Err(Error::MalformedHeader(format!(
                "headers declare {image_end} bytes of image but the file has {}",
                bytes.len()
            )));
        }
        Ok(ImageContainer {
            bytes,
            format,
            pixel_offset: pos,
            pixel_length,
            image_end,
        })
    }

    /// The whole file, byte for byte. Serializing a container is free.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Detected format.
    pub fn format(&self) -> ImageFormat {
        self.format
    }

    /// Byte index where the pixel array (secondary part) starts.
    pub fn pixel_offset(&self) -> usize {
        self.pixel_offset
    }

    /// Length of the pixel array in bytes, row padding included.
    pub fn pixel_length(&self) -> usize {
        self.pixel_length
    }

    /// End of the image as declared by its own headers. Trailer bytes, if
    /// any, start here.
    pub fn image_end(&self) -> usize {
        self.image_end
    }

    /// Raw bytes past the declared image end, if any.
    pub fn trailer_bytes(&self) -> Option<&[u8]> {
        if self.bytes.len() > self.image_end {
            Some(&self.bytes[self.image_end..])
        } else {
            None
        }
    }

    fn pixels(&self) -> &[u8] {
        &self.bytes[self.pixel_offset..self.pixel_offset + self.pixel_length]
    }

    /// Maximum framed bytes the LSB channel can carry: one bit per pixel byte.
    pub fn lsb_capacity(&self) -> usize {
        self.pixel_length / 8
    }

    /// Embeds a payload into the LSB channel.
    ///
    /// Each framed-payload bit (bytes in order, most significant bit first)
    /// is compared with the parity of the corresponding pixel byte; on a
    /// mismatch the byte moves by one, down for a 0 bit and up for a 1 bit.
    /// Pixel bytes whose parity already matches are left alone, so the
    /// distortion per byte is at most 1.
    ///
    /// Fails with [`Error::ChannelOccupied`] when a frame magic already
    /// decodes at the start of the channel, so re-targeting an image that is
    /// already a table requires an explicit decision by the caller.
    pub fn lsb_embed(&self, payload: &[u8]) -> Result<ImageContainer> {
        let frame = build_frame(LSB_MAGIC, payload);
        let needed = frame.len() * 8;
        if needed > self.pixel_length {
            return Err(Error::InsufficientCapacity {
                needed,
                available: self.pixel_length,
            });
        }
        if self.lsb_magic_present() {
            return Err(Error::ChannelOccupied);
        }
        let mut out = self.clone();
        let carriers = &mut out.bytes[self.pixel_offset..self.pixel_offset + needed];
        write_bits(carriers, &frame);
        Ok(out)
    }

    fn lsb_magic_present(&self) -> bool {
        self.pixel_length >= 32 && read_bits(self.pixels(), 0, 4) == LSB_MAGIC
    }

    /// Extracts and validates the LSB-channel payload.
    ///
    /// Returns `Ok(None)` when no frame magic is present (a pristine cover),
    /// the payload when the frame checks out, and [`Error::CorruptFrame`]
    /// when the magic is there but the frame does not validate.
    pub fn lsb_extract(&self) -> Result<Option<Vec<u8>>> {
        if !self.lsb_magic_present() {
            return Ok(None);
        }
        let pixels = self.pixels();
        let corrupt = |reason: String| Error::CorruptFrame {
            channel: Channel::Lsb,
            reason,
        };
        // The magic fits but a full header might not on a tiny pixel array.
        if self.pixel_length < FRAME_OVERHEAD * 8 {
            return Err(corrupt(format!(
                "{} pixel bytes cannot hold a frame",
                self.pixel_length
            )));
        }
        let header = read_bits(pixels, 0, 9);
        let version = header[4];
        if version != FRAME_VERSION {
            return Err(corrupt(format!("unknown frame version 0x{version:02x}")));
        }
        let len = u32::from_be_bytes(header[5..9].try_into().unwrap()) as usize;
        if FRAME_OVERHEAD + len > self.lsb_capacity() {
            return Err(corrupt(format!(
                "declared payload of {len} bytes exceeds the channel capacity of {}",
                self.lsb_capacity()
            )));
        }
        let body = read_bits(pixels, 9 * 8, len + 4);
        let payload = body[..len].to_vec();
        let stored = u32::from_be_bytes(body[len..].try_into().unwrap());
        let actual = crc32(&payload);
        if stored != actual {
            return Err(corrupt(format!(
                "CRC mismatch (stored {stored:08x}, computed {actual:08x})"
            )));
        }
        Ok(Some(payload))
    }

    /// Writes a framed payload after the image's declared end.
    ///
    /// The image bytes up to `image_end` are carried over verbatim; an
    /// existing trailer is replaced, never appended to.
    pub fn write_trailer(&self, payload: &[u8]) -> ImageContainer {
        let mut bytes = Vec::with_capacity(self.image_end + FRAME_OVERHEAD + payload.len());
        bytes.extend_from_slice(&self.bytes[..self.image_end]);
        bytes.extend_from_slice(&build_frame(TRAILER_MAGIC, payload));
        ImageContainer {
            bytes,
            format: self.format,
            pixel_offset: self.pixel_offset,
            pixel_length: self.pixel_length,
            image_end: self.image_end,
        }
    }

    /// Reads and validates the trailer payload.
    ///
    /// Returns `Ok(None)` when nothing follows the image or the frame magic
    /// does not match; [`Error::CorruptFrame`] when a frame starts but is
    /// truncated, mis-versioned, or fails its CRC.
    pub fn read_trailer(&self) -> Result<Option<Vec<u8>>> {
        let trailer = match self.trailer_bytes() {
            Some(t) => t,
            None => return Ok(None),
        };
        if trailer.len() < 4 || trailer[..4] != TRAILER_MAGIC {
            return Ok(None);
        }
        let corrupt = |reason: String| Error::CorruptFrame {
            channel: Channel::Trailer,
            reason,
        };
        if trailer.len() < FRAME_OVERHEAD {
            return Err(corrupt(format!(
                "frame truncated at {} bytes",
                trailer.len()
            )));
        }
        let version = trailer[4];
        if version != FRAME_VERSION {
            return Err(corrupt(format!("unknown frame version 0x{version:02x}")));
        }
        let len = u32::from_be_bytes(trailer[5..9].try_into().unwrap()) as usize;
        if FRAME_OVERHEAD + len > trailer.len() {
            return Err(corrupt(format!(
                "frame declares {len} payload bytes but only {} remain",
                trailer.len().saturating_sub(FRAME_OVERHEAD)
            )));
        }
        let payload = trailer[9..9 + len].to_vec();
        let stored = u32::from_be_bytes(trailer[9 + len..FRAME_OVERHEAD + len].try_into().unwrap());
        let actual = crc32(&payload);
        if stored != actual {
            return Err(corrupt(format!(
                "CRC mismatch (stored {stored:08x}, computed {actual:08x})"
            )));
        }
        Ok(Some(payload))
    }

    /// Saves the container to `path` via the temp-file-and-rename protocol.
    pub fn save_atomic(&self, path: &Path) -> Result<()> {
        save_atomic(path, &self.bytes)
    }
}

fn build_frame(magic: [u8; 4], payload: &[u8]) -> Vec<u8> {
    let mut frame = Vec::with_capacity(FRAME_OVERHEAD + payload.len());
    frame.extend_from_slice(&magic);
    frame.push(FRAME_VERSION);
    frame.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    frame.extend_from_slice(payload);
    frame.extend_from_slice(&crc32(payload).to_be_bytes());
    frame
}

/// Applies the ±1 parity rule: one bit per carrier byte, MSB first.
fn write_bits(carriers: &mut [u8], data: &[u8]) {
    debug_assert!(carriers.len() >= data.len() * 8);
    for (i, carrier) in carriers.iter_mut().take(data.len() * 8).enumerate() {
        let bit = (data[i / 8] >> (7 - i % 8)) & 1;
        if bit != *carrier & 1 {
            // Parity mismatch: odd bytes step down, even bytes step up, so
            // the result can never leave 0..=255.
            if bit == 0 {
                *carrier -= 1;
            } else {
                *carrier += 1;
            }
        }
    }
}

/// Recovers `count` bytes from carrier LSBs starting at `bit_offset`.
fn read_bits(carriers: &[u8], bit_offset: usize, count: usize) -> Vec<u8> {
    let mut out = vec![0u8; count];
    for i in 0..count * 8 {
        let bit = carriers[bit_offset + i] & 1;
        out[i / 8] |= bit << (7 - i % 8);
    }
    out
}

/// A staged atomic save: the temp file is fully written and synced, but the
/// destination is untouched until [`commit`](PendingSave::commit).
///
/// Splitting the write from the rename keeps both halves of the protocol on
/// the same code path whether the caller wants a one-shot
/// [`save_atomic`] or needs to hold the rename (crash-safety harnesses do).
#[derive(Debug)]
pub struct PendingSave {
    tmp: PathBuf,
    dest: PathBuf,
}

impl PendingSave {
    /// Writes `bytes` to `<dest>.tmp` and syncs it to stable storage.
    pub fn stage(dest: &Path, bytes: &[u8]) -> Result<PendingSave> {
        let tmp = tmp_path(dest);
        let mut file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        file.sync_all().map_err(|e| Error::io(&tmp, e))?;
        Ok(PendingSave {
            tmp,
            dest: dest.to_path_buf(),
        })
    }

    /// Renames the temp file over the destination. After this returns, the
    /// destination holds exactly the staged bytes.
    pub fn commit(self) -> Result<()> {
        std::fs::rename(&self.tmp, &self.dest).map_err(|e| Error::io(&self.dest, e))?;
        // Make the rename itself durable where the platform allows it.
        if let Some(parent) = self.dest.parent() {
            if let Ok(dir) = File::open(parent) {
                let _ = dir.sync_all();
            }
        }
        Ok(())
    }

    /// Walks away without renaming, leaving the temp file on disk exactly as
    /// a crash between write and rename would.
    pub fn abandon(self) -> PathBuf {
        self.tmp
    }
}

/// The staged temp path used for `dest`.
pub fn tmp_path(dest: &Path) -> PathBuf {
    let mut name = dest.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    dest.with_file_name(name)
}

/// Writes `bytes` to `path` so that no observable instant leaves a partial
/// file there: write `<path>.tmp`, sync, rename over `path`.
pub fn save_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    PendingSave::stage(path, bytes)?.commit()
}
