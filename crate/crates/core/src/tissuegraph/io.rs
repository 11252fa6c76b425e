use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BinnedPatch, GraphError, GridKind, SpotGrid};
use crate::harness::write_atomic;
use crate::pointsynth::{read_pattern, PointPattern};
use crate::textfmt::fmt_sig9;
use crate::Point;

fn parse_f64(s: &str, what: &str, row: usize) -> Result<f64, GraphError> {
    let v: f64 = s.trim().parse().map_err(|_| GraphError::Format(format!("row {row}: bad {what} {s:?}")))?;
    if !v.is_finite() {
        return Err(GraphError::Format(format!("row {row}: non-finite {what}")));
    }
    Ok(v)
}

/// Per-slide cell centroids: `cell_id,x_um,y_um` with a header row.
pub fn read_cells_csv(path: &Path) -> Result<(Vec<String>, Vec<Point>), GraphError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "cell_id" {
        return Err(GraphError::Format(format!("expected header cell_id,x_um,y_um, got {headers:?}")));
    }
    let mut ids = Vec::new();
    let mut pts = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        ids.push(rec[0].to_string());
        pts.push([parse_f64(&rec[1], "x_um", row)?, parse_f64(&rec[2], "y_um", row)?]);
    }
    Ok((ids, pts))
}

/// Spot grid: `spot_id,x_um,y_um,grid_kind,pixel_size_um`; kind and pixel
/// size must agree across rows.
pub fn read_spot_grid_csv(path: &Path) -> Result<SpotGrid, GraphError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 5 || &headers[0] != "spot_id" {
        return Err(GraphError::Format(format!(
            "expected header spot_id,x_um,y_um,grid_kind,pixel_size_um, got {headers:?}"
        )));
    }
    let mut ids = Vec::new();
    let mut centers = Vec::new();
    let mut kind: Option<GridKind> = None;
    let mut pixel: Option<f64> = None;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        ids.push(rec[0].to_string());
        centers.push([parse_f64(&rec[1], "x_um", row)?, parse_f64(&rec[2], "y_um", row)?]);
        let k = GridKind::parse(&rec[3]).ok_or_else(|| GraphError::Format(format!("row {row}: unknown grid kind {:?}", &rec[3])))?;
        let px = parse_f64(&rec[4], "pixel_size_um", row)?;
        if kind.is_some_and(|prev| prev != k) || pixel.is_some_and(|prev| prev != px) {
            return Err(GraphError::Format(format!("row {row}: grid kind / pixel size differ from earlier rows")));
        }
        kind = Some(k);
        pixel = Some(px);
    }
    let kind = kind.ok_or(GraphError::Empty)?;
    SpotGrid::new(ids, centers, kind, pixel.unwrap_or(1.0))
}

/// Either a synthetic pattern file or a cell-centroid CSV, by its first line.
pub fn read_points_file(path: &Path) -> Result<PointPattern, GraphError> {
    let text = fs::read_to_string(path)?;
    if text.starts_with("cell_id") {
        let (_, pts) = read_cells_csv(path)?;
        Ok(PointPattern::new(pts))
    } else {
        read_pattern(path).map_err(|e| GraphError::Format(e.to_string()))
    }
}

/// `anchor_spot_id,n_members,member_spot_ids,x0,y0,x1,y1[,n_cells]`, members
/// joined by `;`.
pub fn write_patches_csv(path: &Path, patches: &[BinnedPatch], cell_counts: Option<&[usize]>) -> Result<(), GraphError> {
    let mut s = String::from("anchor_spot_id,n_members,member_spot_ids,x0,y0,x1,y1");
    if cell_counts.is_some() {
        s.push_str(",n_cells");
    }
    s.push('\n');
    for (i, p) in patches.iter().enumerate() {
        let b = p.bounding_box;
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            p.anchor_spot_id,
            p.members.len(),
            p.member_spot_ids.join(";"),
            fmt_sig9(b[0]),
            fmt_sig9(b[1]),
            fmt_sig9(b[2]),
            fmt_sig9(b[3])
        );
        if let Some(c) = cell_counts {
            let _ = write!(s, ",{}", c[i]);
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_spot_grid_and_cells() {
        let dir = tempfile::tempdir().unwrap();
        let spots = dir.path().join("spots.csv");
        fs::write(&spots, "spot_id,x_um,y_um,grid_kind,pixel_size_um\na,0,0,hex,0.5\nb,100,0,hex,0.5\n").unwrap();
        let g = read_spot_grid_csv(&spots).unwrap();
        assert_eq!(g.kind, GridKind::Hex);
        assert_eq!(g.centers[1], [100.0, 0.0]);

        fs::write(&spots, "spot_id,x_um,y_um,grid_kind,pixel_size_um\na,0,0,hex,0.5\nb,100,0,square,0.5\n").unwrap();
        assert!(read_spot_grid_csv(&spots).is_err());

        let cells = dir.path().join("cells.csv");
        fs::write(&cells, "cell_id,x_um,y_um\nc1,1.5,2.5\nc2,3,4\n").unwrap();
        let (ids, pts) = read_cells_csv(&cells).unwrap();
        assert_eq!(ids, vec!["c1", "c2"]);
        assert_eq!(read_points_file(&cells).unwrap().points, pts);

        fs::write(&cells, "cell_id,x_um,y_um\nc1,nan,2.5\n").unwrap();
        assert!(read_cells_csv(&cells).is_err());
    }
}
