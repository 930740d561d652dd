//! CSV exports: paths, filter trajectories and jump times.

use std::io::{Read, Write};

use crate::blp::PosteriorState;
use crate::error::{GlpError, Result};
use crate::glp::{GlpPath, PathGrid};

/// Writes paths as `path_id,time,coord_1..coord_n,R`, one row per grid time.
/// Values use the shortest representation that round-trips exactly.
pub fn write_paths_csv<W: Write>(out: W, paths: &[GlpPath]) -> Result<()> {
    let n = paths.first().map_or(0, |p| p.n());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["path_id".to_string(), "time".to_string()];
    header.extend((1..=n).map(|i| format!("coord_{i}")));
    header.push("R".into());
    w.write_record(&header)?;
    for (id, p) in paths.iter().enumerate() {
        if p.n() != n {
            return Err(GlpError::InvalidGrid("paths have different dimensions".into()));
        }
        for (k, &t) in p.times().iter().enumerate() {
            let mut rec = vec![id.to_string(), t.to_string()];
            rec.extend(p.at(k).iter().map(|v| v.to_string()));
            rec.push(p.r()[k].to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse(field: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| GlpError::Io(format!("line {line}: `{field}` is not a number")))
}

/// Reads paths written by [`write_paths_csv`]. The `R` column must equal the
/// coordinate sum exactly.
pub fn read_paths_csv<R: Read>(input: R) -> Result<Vec<GlpPath>> {
    let mut r = csv::Reader::from_reader(input);
    let width = r.headers()?.len();
    if width < 4 {
        return Err(GlpError::Io("path CSV needs path_id, time, at least one coordinate and R".into()));
    }
    let mut paths = Vec::new();
    let mut current: Option<(u64, Vec<f64>, Vec<Vec<f64>>)> = None;
    let finish = |(_, times, rows): (u64, Vec<f64>, Vec<Vec<f64>>)| GlpPath::new(PathGrid::new(times)?, rows);
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| GlpError::Io(format!("line {line}: bad path id `{}`", &rec[0])))?;
        let t = parse(&rec[1], line)?;
        let row = (2..width - 1).map(|j| parse(&rec[j], line)).collect::<Result<Vec<_>>>()?;
        let sum = parse(&rec[width - 1], line)?;
        if row.iter().sum::<f64>() != sum {
            return Err(GlpError::Io(format!("line {line}: R differs from the coordinate sum")));
        }
        match &mut current {
            Some((cid, times, rows)) if *cid == id => {
                times.push(t);
                rows.push(row);
            }
            _ => {
                if let Some(done) = current.take() {
                    paths.push(finish(done)?);
                }
                current = Some((id, vec![t], vec![row]));
            }
        }
    }
    if let Some(done) = current {
        paths.push(finish(done)?);
    }
    Ok(paths)
}

/// Writes filter weights as `time,atom,weight`.
pub fn write_posterior_csv<W: Write>(out: W, states: &[PosteriorState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "atom", "weight"])?;
    for st in states {
        for (a, p) in st.atoms.iter().zip(&st.weights) {
            w.write_record([st.t.to_string(), a.to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes jump times as `path_id,coordinate,jump_time`, coordinates
/// numbered from 1.
pub fn write_jumps_csv<W: Write>(out: W, jumps: &[Vec<Vec<f64>>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "coordinate", "jump_time"])?;
    for (id, path) in jumps.iter().enumerate() {
        for (i, times) in path.iter().enumerate() {
            for t in times {
                w.write_record([id.to_string(), (i + 1).to_string(), t.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_round_trip_exactly() {
        let g = PathGrid::new(vec![0.0, 0.1, 0.7]).unwrap();
        let a = GlpPath::new(g.clone(), vec![vec![0.0, 0.0], vec![0.1 + 0.2, -1e-300], vec![1.0 / 3.0, 2.5]]).unwrap();
        let b = GlpPath::new(g, vec![vec![0.0, 0.0], vec![7.0, 8.0], vec![9.0, 10.0]]).unwrap();
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("path_id,time,coord_1,coord_2,R\n"));
        assert_eq!(text.lines().count(), 7);
        assert_eq!(read_paths_csv(&buf[..]).unwrap(), vec![a, b]);
    }

    #[test]
    fn rejects_inconsistent_sum() {
        let text = "path_id,time,coord_1,R\n0,0,0,0\n0,0.5,1,2\n";
        assert!(read_paths_csv(text.as_bytes()).is_err());
    }
}
