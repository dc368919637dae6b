//! Wall masks from PBM/PGM bitmaps. Black pixels are walls; the first image
//! row is the top of the domain (largest y).

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    /// Row-major from the top row; `true` = wall.
    pub walls: Vec<bool>,
}

impl Bitmap {
    /// Mask in grid order (x fastest, y upwards).
    pub fn grid_mask(&self) -> Vec<bool> {
        let mut m = Vec::with_capacity(self.walls.len());
        for j in 0..self.height {
            let row = self.height - 1 - j;
            m.extend_from_slice(&self.walls[row * self.width..(row + 1) * self.width]);
        }
        m
    }

    /// Plain (`P1`) PBM encoding.
    pub fn to_pbm(&self) -> String {
        let mut s = format!("P1\n{} {}\n", self.width, self.height);
        for r in self.walls.chunks(self.width) {
            let line: Vec<&str> = r.iter().map(|&w| if w { "1" } else { "0" }).collect();
            s += &line.join(" ");
            s.push('\n');
        }
        s
    }
}

struct Cursor<'a> {
    b: &'a [u8],
    i: usize,
}

impl Cursor<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.i as u64, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.i < self.b.len() {
            match self.b[self.i] {
                b'#' => {
                    while self.i < self.b.len() && self.b[self.i] != b'\n' {
                        self.i += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.i += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let s = self.i;
        while self.i < self.b.len() && self.b[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if s == self.i {
            return self.err("expected a number");
        }
        std::str::from_utf8(&self.b[s..self.i]).unwrap().parse().or_else(|_| self.err("number out of range"))
    }

    /// Single bit for plain PBM, where digits need not be separated.
    fn bit(&mut self) -> Result<bool> {
        self.skip_ws();
        match self.b.get(self.i) {
            Some(b'0') => {
                self.i += 1;
                Ok(false)
            }
            Some(b'1') => {
                self.i += 1;
                Ok(true)
            }
            _ => self.err("expected 0 or 1"),
        }
    }
}

/// Parses P1, P2, P4 or P5 data. Grey pixels darker than half the maximum
/// are walls.
pub fn parse_pnm(bytes: &[u8]) -> Result<Bitmap> {
    let mut c = Cursor { b: bytes, i: 0 };
    if bytes.len() < 2 || bytes[0] != b'P' {
        return c.err("not a PBM/PGM file");
    }
    let kind = bytes[1];
    c.i = 2;
    if !matches!(kind, b'1' | b'2' | b'4' | b'5') {
        return c.err(format!("unsupported format P{}", kind as char));
    }
    let width = c.number()?;
    let height = c.number()?;
    if width == 0 || height == 0 {
        return c.err("empty image");
    }
    let maxval = if matches!(kind, b'2' | b'5') { c.number()? } else { 1 };
    if maxval == 0 || maxval > 65535 {
        return c.err(format!("bad maxval {maxval}"));
    }
    let n = width * height;
    let mut walls = Vec::with_capacity(n);
    match kind {
        b'1' => {
            for _ in 0..n {
                walls.push(c.bit()?);
            }
        }
        b'2' => {
            for _ in 0..n {
                walls.push(2 * c.number()? < maxval);
            }
        }
        _ => {
            // Exactly one whitespace byte separates header and raster.
            c.i += 1;
            let bpp = if maxval > 255 { 2 } else { 1 };
            let need = if kind == b'4' { width.div_ceil(8) * height } else { n * bpp };
            if bytes.len() < c.i + need {
                c.i = bytes.len();
                return c.err(format!("raster needs {need} bytes, found {}", bytes.len().saturating_sub(c.i)));
            }
            let raster = &bytes[c.i..c.i + need];
            if kind == b'4' {
                let stride = width.div_ceil(8);
                for r in 0..height {
                    for x in 0..width {
                        walls.push(raster[r * stride + x / 8] & (0x80 >> (x % 8)) != 0);
                    }
                }
            } else {
                for k in 0..n {
                    let v = if bpp == 2 {
                        u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) as usize
                    } else {
                        raster[k] as usize
                    };
                    walls.push(2 * v < maxval);
                }
            }
        }
    }
    Ok(Bitmap { width, height, walls })
}

pub fn read_pnm(path: &std::path::Path) -> Result<Bitmap> {
    parse_pnm(&std::fs::read(path)?)
}

/// A stylized museum floor plan: an outer wall with exits on the left and
/// right, and interior partitions with doorways.
pub fn pompidou_mask(width: usize, height: usize) -> Bitmap {
    let (w, h) = (width.max(40), height.max(30));
    let t = (w.min(h) / 40).max(2);
    let mut walls = vec![false; w * h];
    let mut fill = |x0: usize, x1: usize, y0: usize, y1: usize| {
        for y in y0..y1.min(h) {
            for x in x0..x1.min(w) {
                walls[y * w + x] = true;
            }
        }
    };
    // Outer walls.
    fill(0, w, 0, t);
    fill(0, w, h - t, h);
    fill(0, t, 0, h);
    fill(w - t, w, 0, h);
    // Interior partitions: two vertical walls and one horizontal, each with a gap.
    let (x1, x2, ym) = (w / 3, 2 * w / 3, h / 2);
    fill(x1, x1 + t, 0, 3 * h / 4);
    fill(x2, x2 + t, h / 4, h);
    fill(x1 + t, x2, ym, ym + t);
    fill(x2 + t, w - t - h / 6, 3 * h / 8, 3 * h / 8 + t);
    // Exits.
    let mut clear = |x0: usize, x1: usize, y0: usize, y1: usize| {
        for y in y0..y1.min(h) {
            for x in x0..x1.min(w) {
                walls[y * w + x] = false;
            }
        }
    };
    clear(0, t, h / 5, h / 5 + h / 10);
    clear(w - t, w, 4 * h / 5 - h / 10, 4 * h / 5);
    // Doorway in the horizontal partition.
    clear(x1 + t + (x2 - x1) / 3, x1 + t + (x2 - x1) / 3 + h / 10, ym, ym + t);
    Bitmap { width: w, height: h, walls }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_raw_formats_agree() {
        let plain = b"P1\n# c\n3 2\n1 0 0\n011\n";
        let raw: Vec<u8> = [b"P4\n3 2\n".as_slice(), &[0b1000_0000, 0b0110_0000]].concat();
        let grey = b"P2 3 2 255 0 255 255 255 0 0";
        let a = parse_pnm(plain).unwrap();
        assert_eq!(a.walls, vec![true, false, false, false, true, true]);
        assert_eq!(parse_pnm(&raw).unwrap(), a);
        assert_eq!(parse_pnm(grey).unwrap(), a);
        assert_eq!(parse_pnm(a.to_pbm().as_bytes()).unwrap(), a);
        // Bottom image row comes first in grid order.
        assert_eq!(a.grid_mask(), vec![false, true, true, true, false, false]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_pnm(b"P3 1 1"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse_pnm(b"P1 2 2 1 0 2"), Err(Error::Parse { offset: 11, .. })));
        assert!(matches!(parse_pnm(b"P5 2 2 255\n\x00"), Err(Error::Parse { .. })));
    }

    #[test]
    fn plan_has_exits() {
        let b = pompidou_mask(80, 60);
        let m = b.grid_mask();
        let left_open = (0..60).any(|y| !m[y * 80]);
        let right_open = (0..60).any(|y| !m[y * 80 + 79]);
        assert!(left_open && right_open);
        assert!(m.iter().filter(|&&w| w).count() > 400);
    }
}
