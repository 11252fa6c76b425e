use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{EdgeList, GraphError};
use crate::Point;

/// Row-major binary image; every cell is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<u8>,
}

impl BinaryRaster {
    pub fn zeros(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![0; width as usize * height as usize] }
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> u8 {
        self.bits[row as usize * self.width as usize + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: i64, col: i64) {
        if row >= 0 && col >= 0 && (row as u32) < self.height && (col as u32) < self.width {
            self.bits[row as usize * self.width as usize + col as usize] = 1;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    /// Quarter turn matching a counter-clockwise point rotation about the
    /// square center with x = col and y = row: `(row, col) -> (col, H - 1 - row)`.
    pub fn rotate90(&self) -> BinaryRaster {
        let (w, h) = (self.width, self.height);
        let mut out = BinaryRaster::zeros(h, w);
        for r in 0..h {
            for c in 0..w {
                if self.get(r, c) != 0 {
                    out.bits[c as usize * h as usize + (h - 1 - r) as usize] = 1;
                }
            }
        }
        out
    }

    /// Mirror `col -> W - 1 - col`.
    pub fn mirror_cols(&self) -> BinaryRaster {
        let mut out = BinaryRaster::zeros(self.width, self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                if self.get(r, c) != 0 {
                    out.bits[r as usize * self.width as usize + (self.width - 1 - c) as usize] = 1;
                }
            }
        }
        out
    }

    /// Binary PGM: `P5`, maxval 1, one byte per pixel.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n1\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.bits);
        out
    }

    /// `width: u32le, height: u32le`, then the row-major bits packed
    /// MSB-first into a continuous stream (rows are not byte-aligned).
    pub fn to_packed(&self) -> Vec<u8> {
        let n = self.bits.len();
        let mut out = Vec::with_capacity(8 + n.div_ceil(8));
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend(self.bits.chunks(8).map(|chunk| {
            chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)))
        }));
        out
    }

    pub fn from_packed(bytes: &[u8]) -> Result<Self, GraphError> {
        if bytes.len() < 8 {
            return Err(GraphError::Format("packed raster shorter than its header".into()));
        }
        let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
        let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        let n = width as usize * height as usize;
        let payload = &bytes[8..];
        if payload.len() != n.div_ceil(8) {
            return Err(GraphError::Format(format!(
                "packed payload is {} bytes, expected {}",
                payload.len(),
                n.div_ceil(8)
            )));
        }
        let bits = (0..n).map(|i| (payload[i / 8] >> (7 - i % 8)) & 1).collect();
        Ok(Self { width, height, bits })
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.to_pgm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Stroke width in native pixels. Odd widths are exact; an even width
    /// `w` draws `w + 1` pixels so strokes stay centered.
    pub edge_width: u32,
    pub native: (u32, u32),
    pub out: (u32, u32),
    /// `[x0, y0, x1, y1]` mapped onto the native raster; defaults to the
    /// unit square.
    pub extent: [f64; 4],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { edge_width: 1, native: (448, 448), out: (224, 224), extent: [0.0, 0.0, 1.0, 1.0] }
    }
}

fn to_pixel(p: Point, extent: [f64; 4], w: u32, h: u32) -> (i64, i64) {
    let u = (p[0] - extent[0]) / (extent[2] - extent[0]);
    let v = (p[1] - extent[1]) / (extent[3] - extent[1]);
    let col = ((u * f64::from(w)).floor() as i64).clamp(0, i64::from(w) - 1);
    let row = ((v * f64::from(h)).floor() as i64).clamp(0, i64::from(h) - 1);
    (col, row)
}

/// Integer-pixel segment between two pixel centers, endpoints inclusive.
/// Minor-axis positions are rounded to the nearest pixel; exact half-way
/// positions set both pixels, which keeps the drawing invariant under the
/// symmetries of the square and under endpoint swap.
pub fn draw_segment(r: &mut BinaryRaster, (c0, r0): (i64, i64), (c1, r1): (i64, i64)) {
    let dc = c1 - c0;
    let dr = r1 - r0;
    if dc == 0 && dr == 0 {
        r.set(r0, c0);
        return;
    }
    // iterate over the major axis; `minor(t)` is exact rational arithmetic
    let x_major = dc.abs() >= dr.abs();
    let (major0, major1, minor0, dmaj, dmin) = if x_major { (c0, c1, r0, dc, dr) } else { (r0, r1, c0, dr, dc) };
    let (lo, hi) = (major0.min(major1), major0.max(major1));
    let den = dmaj.abs();
    let sign = dmaj.signum();
    for m in lo..=hi {
        // minor = minor0 + (m - major0) * dmin / dmaj
        let num = (m - major0) * sign * dmin;
        let q = num.div_euclid(den);
        let rem = num.rem_euclid(den);
        let mut put = |minor: i64| {
            if x_major {
                r.set(minor, m)
            } else {
                r.set(m, minor)
            }
        };
        match (2 * rem).cmp(&den) {
            std::cmp::Ordering::Less => put(minor0 + q),
            std::cmp::Ordering::Greater => put(minor0 + q + 1),
            std::cmp::Ordering::Equal => {
                put(minor0 + q);
                put(minor0 + q + 1);
            }
        }
    }
}

fn thicken(r: &BinaryRaster, half: i64) -> BinaryRaster {
    if half <= 0 {
        return r.clone();
    }
    let mut out = BinaryRaster::zeros(r.width, r.height);
    for row in 0..r.height {
        for col in 0..r.width {
            if r.get(row, col) == 0 {
                continue;
            }
            for dr in -half..=half {
                for dc in -half..=half {
                    out.set(i64::from(row) + dr, i64::from(col) + dc);
                }
            }
        }
    }
    out
}

/// Draw the edges on the native raster (before resizing).
pub fn render_native(points: &[Point], edges: &EdgeList, cfg: &RenderConfig) -> Result<BinaryRaster, GraphError> {
    let (w, h) = cfg.native;
    if w == 0 || h == 0 {
        return Err(GraphError::ZeroArea(w, h));
    }
    let e = cfg.extent;
    if !(e[2] > e[0] && e[3] > e[1]) {
        return Err(GraphError::InvalidParameter(format!("degenerate extent {e:?}")));
    }
    if edges.n_nodes > points.len() {
        return Err(GraphError::InvalidParameter(format!(
            "edge list has {} nodes but only {} points",
            edges.n_nodes,
            points.len()
        )));
    }
    let mut raster = BinaryRaster::zeros(w, h);
    for &(a, b) in edges.edges() {
        draw_segment(&mut raster, to_pixel(points[a], e, w, h), to_pixel(points[b], e, w, h));
    }
    Ok(thicken(&raster, i64::from(cfg.edge_width / 2)))
}

/// Bilinear resize (half-pixel centers, edge clamped) followed by
/// re-binarization at 0.5.
pub fn resize_bilinear_binary(src: &BinaryRaster, out: (u32, u32)) -> Result<BinaryRaster, GraphError> {
    let (ow, oh) = out;
    if ow == 0 || oh == 0 {
        return Err(GraphError::ZeroArea(ow, oh));
    }
    if src.width == 0 || src.height == 0 {
        return Err(GraphError::ZeroArea(src.width, src.height));
    }
    if (ow, oh) == (src.width, src.height) {
        return Ok(src.clone());
    }
    let axis = |dst: u32, n_dst: u32, n_src: u32| -> (usize, usize, f64) {
        let s = ((f64::from(dst) + 0.5) * f64::from(n_src) / f64::from(n_dst) - 0.5).clamp(0.0, f64::from(n_src - 1));
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n_src as usize - 1);
        (i0, i1, s - i0 as f64)
    };
    let cols: Vec<_> = (0..ow).map(|c| axis(c, ow, src.width)).collect();
    let mut dst = BinaryRaster::zeros(ow, oh);
    for r in 0..oh {
        let (r0, r1, fr) = axis(r, oh, src.height);
        for (c, &(c0, c1, fc)) in cols.iter().enumerate() {
            let px = |rr: usize, cc: usize| f64::from(src.bits[rr * src.width as usize + cc]);
            let top = px(r0, c0) * (1.0 - fc) + px(r0, c1) * fc;
            let bottom = px(r1, c0) * (1.0 - fc) + px(r1, c1) * fc;
            if top * (1.0 - fr) + bottom * fr >= 0.5 {
                dst.bits[r as usize * ow as usize + c] = 1;
            }
        }
    }
    Ok(dst)
}

/// Draw on the native raster, then resize to `cfg.out`.
pub fn render_edges(points: &[Point], edges: &EdgeList, cfg: &RenderConfig) -> Result<BinaryRaster, GraphError> {
    let native = render_native(points, edges, cfg)?;
    resize_bilinear_binary(&native, cfg.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointsynth::dihedral;
    use crate::rng::rng_from_seed;
    use crate::tissuegraph::knn_graph;
    use rand::Rng;

    fn cfg(n: u32) -> RenderConfig {
        RenderConfig { native: (n, n), out: (n, n), ..RenderConfig::default() }
    }

    #[test]
    fn empty_graph_renders_blank() {
        let e = EdgeList::new(2, []).unwrap();
        let r = render_edges(&[[0.1, 0.1], [0.9, 0.9]], &e, &RenderConfig::default()).unwrap();
        assert_eq!((r.width, r.height), (224, 224));
        assert_eq!(r.count_ones(), 0);
    }

    #[test]
    fn horizontal_edge_fills_one_row() {
        let e = EdgeList::new(2, [(0, 1)]).unwrap();
        let r = render_native(&[[0.0, 0.5], [1.0, 0.5]], &e, &cfg(32)).unwrap();
        assert_eq!(r.count_ones(), 32);
        assert!((0..32).all(|c| r.get(16, c) == 1));
    }

    #[test]
    fn zero_area_is_an_error() {
        let e = EdgeList::new(2, [(0, 1)]).unwrap();
        let bad = RenderConfig { native: (0, 10), ..RenderConfig::default() };
        assert!(matches!(render_native(&[[0.0, 0.0], [1.0, 1.0]], &e, &bad), Err(GraphError::ZeroArea(0, 10))));
    }

    #[test]
    fn segment_is_endpoint_symmetric() {
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let a = (rng.random_range(0..40), rng.random_range(0..40));
            let b = (rng.random_range(0..40), rng.random_range(0..40));
            let mut r1 = BinaryRaster::zeros(40, 40);
            let mut r2 = BinaryRaster::zeros(40, 40);
            draw_segment(&mut r1, a, b);
            draw_segment(&mut r2, b, a);
            assert_eq!(r1, r2);
            assert_eq!(r1.get(a.1 as u32, a.0 as u32), 1);
            assert_eq!(r1.get(b.1 as u32, b.0 as u32), 1);
        }
    }

    #[test]
    fn thick_strokes() {
        let e = EdgeList::new(2, [(0, 1)]).unwrap();
        let c = RenderConfig { edge_width: 3, ..cfg(32) };
        let r = render_native(&[[0.0, 0.5], [1.0, 0.5]], &e, &c).unwrap();
        assert_eq!(r.count_ones(), 3 * 32);
    }

    #[test]
    fn native_raster_commutes_with_dihedral_group() {
        let mut rng = rng_from_seed(11);
        for trial in 0..20 {
            let pts: Vec<Point> = (0..40).map(|_| [rng.random(), rng.random()]).collect();
            let e = knn_graph(&pts, 5).unwrap();
            let c = RenderConfig { edge_width: 1 + 2 * (trial % 2), ..cfg(97) };
            let base = render_native(&pts, &e, &c).unwrap();
            let rot: Vec<Point> = pts.iter().map(|&p| dihedral(p, 1)).collect();
            assert_eq!(render_native(&rot, &e, &c).unwrap(), base.rotate90());
            let flip: Vec<Point> = pts.iter().map(|&p| dihedral(p, 4)).collect();
            assert_eq!(render_native(&flip, &e, &c).unwrap(), base.mirror_cols());
        }
    }

    #[test]
    fn resize_keeps_binary_and_shape() {
        let e = EdgeList::new(2, [(0, 1)]).unwrap();
        let r = render_edges(&[[0.0, 0.5], [1.0, 0.5]], &e, &RenderConfig { edge_width: 3, ..RenderConfig::default() })
            .unwrap();
        assert_eq!(r.bits.len(), 224 * 224);
        assert!(r.bits.iter().all(|&b| b <= 1));
        assert!(r.count_ones() > 0);
    }

    #[test]
    fn packed_round_trip_and_header() {
        let mut r = BinaryRaster::zeros(5, 3);
        r.set(0, 0);
        r.set(2, 4);
        let bytes = r.to_packed();
        assert_eq!(&bytes[..8], &[5, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(bytes.len(), 8 + 2);
        assert_eq!(bytes[8], 0b1000_0000);
        assert_eq!(BinaryRaster::from_packed(&bytes).unwrap(), r);
        assert!(BinaryRaster::from_packed(&bytes[..9]).is_err());
        assert!(r.to_pgm().starts_with(b"P5\n5 3\n1\n"));
    }
}
