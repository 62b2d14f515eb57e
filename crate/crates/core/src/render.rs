//! Netpbm output for indicator grids and value tables.
//!
//! Headers are always `P<d>\n<width> <height>\n` followed by `255\n` for
//! graymaps and pixmaps. ASCII formats write one image row per line with
//! single spaces between samples. Row `a = 0` is the top line of the image
//! unless `flip` is set.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, IndicatorGrid, ValueTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ImageFormat {
    /// P1
    PbmAscii,
    /// P4
    PbmBinary,
    /// P2
    PgmAscii,
    /// P5
    PgmBinary,
    /// P6
    PpmBinary,
}

impl ImageFormat {
    pub fn magic(self) -> &'static str {
        match self {
            Self::PbmAscii => "P1",
            Self::PgmAscii => "P2",
            Self::PbmBinary => "P4",
            Self::PgmBinary => "P5",
            Self::PpmBinary => "P6",
        }
    }

    pub fn is_bitmap(self) -> bool {
        matches!(self, Self::PbmAscii | Self::PbmBinary)
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::PbmAscii | Self::PbmBinary => "pbm",
            Self::PgmAscii | Self::PgmBinary => "pgm",
            Self::PpmBinary => "ppm",
        }
    }
}

impl fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.magic())
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" | "pbm-ascii" => Ok(Self::PbmAscii),
            "p4" | "pbm" | "pbm-binary" => Ok(Self::PbmBinary),
            "p2" | "pgm-ascii" => Ok(Self::PgmAscii),
            "p5" | "pgm" | "pgm-binary" => Ok(Self::PgmBinary),
            "p6" | "ppm" | "ppm-binary" => Ok(Self::PpmBinary),
            other => Err(Error::InvalidArgument(format!(
                "unknown image format {other:?} (expected p1, p2, p4, p5 or p6)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Palette {
    /// Palette index `v mod m`.
    ValueModulo(u64),
    /// `round(255 * v / max)`, with `max` the largest table value (at least 1).
    GrayScaleLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ImageSpec {
    pub format: ImageFormat,
    pub cell_pixels: usize,
    pub palette: Palette,
    /// Put row `a = 0` at the bottom instead of the top.
    pub flip: bool,
}

impl ImageSpec {
    pub fn new(format: ImageFormat) -> Self {
        ImageSpec {
            format,
            cell_pixels: 1,
            palette: Palette::GrayScaleLinear,
            flip: false,
        }
    }

    pub fn cell_pixels(mut self, cell_pixels: usize) -> Self {
        self.cell_pixels = cell_pixels;
        self
    }

    pub fn palette(mut self, palette: Palette) -> Self {
        self.palette = palette;
        self
    }

    pub fn flip(mut self, flip: bool) -> Self {
        self.flip = flip;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.cell_pixels == 0 {
            return Err(Error::InvalidArgument("cell_pixels must be at least 1".into()));
        }
        if self.palette == Palette::ValueModulo(0) {
            return Err(Error::InvalidArgument("palette modulus must be at least 1".into()));
        }
        Ok(())
    }

    fn source_row(&self, y: usize, side: usize) -> usize {
        let a = y / self.cell_pixels;
        if self.flip {
            side - 1 - a
        } else {
            a
        }
    }
}

fn header(out: &mut Vec<u8>, format: ImageFormat, width: usize, maxval: bool) {
    write!(out, "{}\n{width} {width}\n", format.magic()).unwrap();
    if maxval {
        out.extend_from_slice(b"255\n");
    }
}

/// Set cells black (1), clear cells white (0).
pub fn render_indicator(grid: &IndicatorGrid, spec: &ImageSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    if !spec.format.is_bitmap() {
        return Err(Error::FormatMismatch(format!(
            "indicator grids render to P1 or P4, not {}",
            spec.format
        )));
    }
    let side = grid.side();
    let width = side
        .checked_mul(spec.cell_pixels)
        .ok_or(Error::RangeOverflow)?;
    let mut out = Vec::new();
    header(&mut out, spec.format, width, false);

    let pixel = |y: usize, x: usize| grid.get(spec.source_row(y, side), x / spec.cell_pixels);
    match spec.format {
        ImageFormat::PbmAscii => {
            for y in 0..width {
                for x in 0..width {
                    if x > 0 {
                        out.push(b' ');
                    }
                    out.push(if pixel(y, x) { b'1' } else { b'0' });
                }
                out.push(b'\n');
            }
        }
        _ => {
            let row_bytes = width.div_ceil(8);
            for y in 0..width {
                let mut row = vec![0u8; row_bytes];
                for x in 0..width {
                    if pixel(y, x) {
                        row[x / 8] |= 0x80 >> (x % 8);
                    }
                }
                out.extend_from_slice(&row);
            }
        }
    }
    Ok(out)
}

/// Maps table values to 8-bit samples under the spec's palette.
struct Shader {
    palette: Palette,
    max: u64,
}

impl Shader {
    fn gray(&self, v: u64) -> u8 {
        match self.palette {
            Palette::GrayScaleLinear => scale(v, self.max),
            Palette::ValueModulo(m) => scale(v % m, m - 1),
        }
    }

    fn rgb(&self, v: u64) -> [u8; 3] {
        match self.palette {
            Palette::GrayScaleLinear => {
                let g = self.gray(v);
                [g, g, g]
            }
            Palette::ValueModulo(m) => hue_entry(v % m, m),
        }
    }
}

/// `round(255 * v / max)`; a zero `max` maps everything to 0.
fn scale(v: u64, max: u64) -> u8 {
    if max == 0 {
        return 0;
    }
    let v = u128::from(v.min(max));
    let max = u128::from(max);
    ((510 * v + max) / (2 * max)) as u8
}

/// Index 0 is black; the rest are spread evenly around the hue circle at
/// full saturation and value.
fn hue_entry(index: u64, m: u64) -> [u8; 3] {
    if index == 0 {
        return [0, 0, 0];
    }
    // hue in units of 1/1536 of a turn: six sectors of 256 steps
    let h = ((u128::from(index - 1) * 1536) / u128::from(m - 1).max(1)) as u32;
    let (sector, f) = (h / 256, (h % 256) as u8);
    match sector {
        0 => [255, f, 0],
        1 => [255 - f, 255, 0],
        2 => [0, 255, f],
        3 => [0, 255 - f, 255],
        4 => [f, 0, 255],
        _ => [255, 0, 255 - f],
    }
}

pub fn render_table(table: &ValueTable, spec: &ImageSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    if spec.format.is_bitmap() {
        return Err(Error::FormatMismatch(format!(
            "value tables render to P2, P5 or P6, not {}",
            spec.format
        )));
    }
    let side = table.side();
    let width = side
        .checked_mul(spec.cell_pixels)
        .ok_or(Error::RangeOverflow)?;
    let shader = Shader {
        palette: spec.palette,
        max: table.max_value().max(1),
    };
    let mut out = Vec::new();
    header(&mut out, spec.format, width, true);
    for y in 0..width {
        let row = table.row(spec.source_row(y, side));
        for x in 0..width {
            let v = row[x / spec.cell_pixels];
            match spec.format {
                ImageFormat::PgmAscii => {
                    if x > 0 {
                        out.push(b' ');
                    }
                    write!(out, "{}", shader.gray(v)).unwrap();
                }
                ImageFormat::PgmBinary => out.push(shader.gray(v)),
                _ => out.extend_from_slice(&shader.rgb(v)),
            }
        }
        if spec.format == ImageFormat::PgmAscii {
            out.push(b'\n');
        }
    }
    Ok(out)
}

/// A decoded bitmap, `true` for black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<bool>,
}

impl Bitmap {
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.pixels[y * self.width + x]
    }
}

struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("expected a number at byte {start}")))
    }

    fn bit(&mut self) -> Result<bool> {
        self.skip_space();
        let bit = match self.data.get(self.pos) {
            Some(b'0') => false,
            Some(b'1') => true,
            _ => return Err(Error::Parse(format!("expected 0 or 1 at byte {}", self.pos))),
        };
        self.pos += 1;
        Ok(bit)
    }
}

/// Reads a P1 or P4 bitmap.
pub fn parse_pbm(data: &[u8]) -> Result<Bitmap> {
    let ascii = match data.get(..2) {
        Some(b"P1") => true,
        Some(b"P4") => false,
        _ => return Err(Error::Parse("not a P1 or P4 bitmap".into())),
    };
    let mut tokens = Tokens { data, pos: 2 };
    let width = tokens.number()?;
    let height = tokens.number()?;
    let total = width
        .checked_mul(height)
        .ok_or_else(|| Error::Parse("image too large".into()))?;
    let mut pixels = Vec::with_capacity(total);
    if ascii {
        for _ in 0..total {
            pixels.push(tokens.bit()?);
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        let start = tokens.pos + 1;
        let row_bytes = width.div_ceil(8);
        let raster = data
            .get(start..start + row_bytes * height)
            .ok_or_else(|| Error::Parse("truncated P4 raster".into()))?;
        for row in raster.chunks_exact(row_bytes.max(1)).take(height) {
            pixels.extend((0..width).map(|x| row[x / 8] & (0x80 >> (x % 8)) != 0));
        }
    }
    Ok(Bitmap {
        width,
        height,
        pixels,
    })
}

/// Recovers an indicator grid from a bitmap drawn with `cell_pixels`-wide
/// cells; every pixel of a cell must agree.
pub fn indicator_from_bitmap(
    bitmap: &Bitmap,
    spec: &GridSpec,
    cell_pixels: usize,
    flip: bool,
) -> Result<IndicatorGrid> {
    let side = spec.dense_side()?;
    let expected = side * cell_pixels;
    if bitmap.width != expected || bitmap.height != expected {
        return Err(Error::FormatMismatch(format!(
            "bitmap is {}x{}, expected {expected}x{expected}",
            bitmap.width, bitmap.height
        )));
    }
    let mut grid = IndicatorGrid::empty(spec)?;
    for y in 0..expected {
        for x in 0..expected {
            let (a, b) = (y / cell_pixels, x / cell_pixels);
            let a = if flip { side - 1 - a } else { a };
            let bit = bitmap.get(y, x);
            if y % cell_pixels == 0 && x % cell_pixels == 0 {
                grid.set(a, b, bit);
            } else if grid.get(a, b) != bit {
                return Err(Error::FormatMismatch(format!(
                    "cell ({a}, {b}) is not uniformly colored"
                )));
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::Base;
    use crate::grid::{build_table, ifs_generator, indicator, PatternQuery, TransformKind, ValueTable};
    use proptest::prelude::*;

    fn spec(n: u64, m: u32) -> GridSpec {
        GridSpec::new(Base::new(n).unwrap(), m).unwrap()
    }

    #[test]
    fn binary_generator_p1() {
        let g = ifs_generator(Base::BINARY, &PatternQuery::cvt_zero()).unwrap();
        let bytes = render_indicator(&g, &ImageSpec::new(ImageFormat::PbmAscii)).unwrap();
        assert_eq!(bytes, b"P1\n2 2\n1 1\n1 0\n");
        let flipped =
            render_indicator(&g, &ImageSpec::new(ImageFormat::PbmAscii).flip(true)).unwrap();
        assert_eq!(flipped, b"P1\n2 2\n1 0\n1 1\n");
    }

    #[test]
    fn binary_generator_p4_padding() {
        let g = ifs_generator(Base::BINARY, &PatternQuery::cvt_zero()).unwrap();
        let bytes =
            render_indicator(&g, &ImageSpec::new(ImageFormat::PbmBinary).cell_pixels(5)).unwrap();
        let mut expected = b"P4\n10 10\n".to_vec();
        for _ in 0..5 {
            expected.extend_from_slice(&[0xff, 0xc0]);
        }
        for _ in 0..5 {
            expected.extend_from_slice(&[0xf8, 0x00]);
        }
        assert_eq!(bytes, expected);
    }

    #[test]
    fn empty_grid_is_white() {
        let g = IndicatorGrid::empty(&spec(3, 2)).unwrap();
        let bytes = render_indicator(&g, &ImageSpec::new(ImageFormat::PbmBinary)).unwrap();
        assert_eq!(&bytes[..7], b"P4\n9 9\n");
        assert!(bytes[7..].iter().all(|&b| b == 0));
        assert_eq!(bytes.len(), 7 + 9 * 2);
    }

    #[test]
    fn evt_depth2_blocks() {
        let g = indicator(&spec(2, 2), &PatternQuery::evt_top()).unwrap();
        let spec4 = ImageSpec::new(ImageFormat::PbmAscii).cell_pixels(4);
        let bitmap = parse_pbm(&render_indicator(&g, &spec4).unwrap()).unwrap();
        assert_eq!((bitmap.width, bitmap.height), (16, 16));
        assert_eq!(bitmap.pixels.iter().filter(|&&p| p).count(), 9 * 16);
        for (a, b) in g.iter_ones() {
            for dy in 0..4 {
                for dx in 0..4 {
                    assert!(bitmap.get(4 * a + dy, 4 * b + dx));
                }
            }
        }
    }

    #[test]
    fn format_mismatch() {
        let g = ifs_generator(Base::BINARY, &PatternQuery::cvt_zero()).unwrap();
        assert!(matches!(
            render_indicator(&g, &ImageSpec::new(ImageFormat::PgmBinary)),
            Err(Error::FormatMismatch(_))
        ));
        let t = build_table(&spec(2, 1), TransformKind::Cvt).unwrap();
        assert!(matches!(
            render_table(&t, &ImageSpec::new(ImageFormat::PbmAscii)),
            Err(Error::FormatMismatch(_))
        ));
        assert!(render_indicator(&g, &ImageSpec::new(ImageFormat::PbmAscii).cell_pixels(0)).is_err());
    }

    #[test]
    fn grayscale_values() {
        let t = build_table(&spec(2, 2), TransformKind::EvtMax).unwrap();
        let bytes = render_table(&t, &ImageSpec::new(ImageFormat::PgmBinary)).unwrap();
        let head = b"P5\n4 4\n255\n";
        assert_eq!(&bytes[..head.len()], head);
        let px = &bytes[head.len()..];
        assert_eq!(px[3 * 4 + 3], 255);

        // the wider table: value 3 of max 15
        let t = build_table(&spec(2, 4), TransformKind::EvtMax).unwrap();
        let bytes = render_table(&t, &ImageSpec::new(ImageFormat::PgmBinary)).unwrap();
        let px = &bytes[b"P5\n16 16\n255\n".len()..];
        assert_eq!(px[3 * 16 + 3], 51);
        assert_eq!(px[15 * 16 + 15], 255);
        assert_eq!(px[0], 0);
    }

    #[test]
    fn grayscale_ascii_layout() {
        let t = build_table(&spec(2, 1), TransformKind::Cvt).unwrap();
        let bytes = render_table(&t, &ImageSpec::new(ImageFormat::PgmAscii)).unwrap();
        assert_eq!(bytes, b"P2\n2 2\n255\n0 0\n0 255\n");
    }

    #[test]
    fn constant_zero_table() {
        let s = spec(3, 2);
        let zeros = ValueTable::from_cells(s, TransformKind::Cvt, vec![0; 81]);
        let bytes = render_table(&zeros, &ImageSpec::new(ImageFormat::PgmBinary)).unwrap();
        assert_eq!(bytes.len(), b"P5\n9 9\n255\n".len() + 81);
        assert!(bytes[b"P5\n9 9\n255\n".len()..].iter().all(|&p| p == 0));
    }

    #[test]
    fn carries_are_even() {
        let cvt = build_table(&spec(2, 2), TransformKind::Cvt).unwrap();
        let img = ImageSpec::new(ImageFormat::PgmBinary).palette(Palette::ValueModulo(2));
        let bytes = render_table(&cvt, &img).unwrap();
        assert!(bytes[b"P5\n4 4\n255\n".len()..].iter().all(|&p| p == 0));
    }

    #[test]
    fn scale_rounding() {
        assert_eq!(scale(0, 0), 0);
        assert_eq!(scale(0, 1), 0);
        assert_eq!(scale(1, 1), 255);
        assert_eq!(scale(1, 2), 128);
        assert_eq!(scale(3, 15), 51);
    }

    #[test]
    fn ppm_palette() {
        let t = build_table(&spec(3, 1), TransformKind::EvtMax).unwrap();
        let bytes =
            render_table(&t, &ImageSpec::new(ImageFormat::PpmBinary).palette(Palette::ValueModulo(3)))
                .unwrap();
        let head = b"P6\n3 3\n255\n";
        assert_eq!(&bytes[..head.len()], head);
        let px = &bytes[head.len()..];
        assert_eq!(px.len(), 27);
        assert_eq!(&px[..3], &[0, 0, 0]);
        assert_eq!(&px[3..6], &[255, 0, 0]);
        assert_eq!(hue_entry(1, 1), [255, 0, 0]);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_pbm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pbm(b"P1\n2 2\n1 1 1").is_err());
        assert!(parse_pbm(b"P4\n16 2\n\x00").is_err());
        let bm = parse_pbm(b"P1\n# comment\n2 1\n10").unwrap();
        assert_eq!(bm.pixels, vec![true, false]);
    }

    proptest! {
        #[test]
        fn pbm_round_trip(
            n in 2u64..=5,
            depth in 1u32..=3,
            cell in 1usize..=3,
            flip in any::<bool>(),
            ascii in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let s = spec(n, depth);
            let g = IndicatorGrid::from_fn(&s, |a, b| {
                (seed.rotate_left((a * 31 + b * 7) as u32 % 64) ^ (a as u64 * 0x9e37)) & 1 == 1
            }).unwrap();
            let format = if ascii { ImageFormat::PbmAscii } else { ImageFormat::PbmBinary };
            let img = ImageSpec::new(format).cell_pixels(cell).flip(flip);
            let bytes = render_indicator(&g, &img).unwrap();
            let back = indicator_from_bitmap(&parse_pbm(&bytes).unwrap(), &s, cell, flip).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
