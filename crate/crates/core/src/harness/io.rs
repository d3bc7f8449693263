use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ErrorReport, HarnessError};
use crate::geometry::{Chart, SurfacePoint};
use crate::interpolant::{MultiIndex, SampleSite};

pub const REPORT_CSV_HEADER: [&str; 7] = ["n", "order", "mae", "rmse", "fill", "sep", "seconds"];
const SAMPLE_CSV_HEADER: [&str; 10] = ["id", "v1", "v2", "f", "f_v1", "f_v2", "f_v1v1", "f_v1v2", "f_v2v2", "mask"];
const POINT_CSV_HEADER: [&str; 6] = ["id", "v1", "v2", "x", "y", "z"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

/// One line per row with the columns of [`REPORT_CSV_HEADER`].
pub fn write_report_csv<W: Write>(report: &ErrorReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            r.order.to_string(),
            r.mae.to_string(),
            r.rmse.to_string(),
            r.fill.to_string(),
            r.sep.to_string(),
            r.seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json<W: Write>(report: &ErrorReport, out: W) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

pub fn read_report_json<R: Read>(input: R) -> Result<ErrorReport, HarnessError> {
    Ok(serde_json::from_reader(input)?)
}

pub fn emit(report: &ErrorReport, format: OutputFormat, path: &Path) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_report_csv(report, &mut out)?,
        OutputFormat::Json => write_report_json(report, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// Sample CSV: value and derivatives up to order two, with a presence mask
/// whose bit `i` marks the `i`-th multi-index in graded-lexicographic order.
/// Absent entries are left empty.
pub fn write_samples<W: Write>(samples: &[SampleSite], out: W) -> Result<(), HarnessError> {
    let betas = MultiIndex::up_to(2);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_CSV_HEADER)?;
    for s in samples {
        if let Some(b) = s.data.keys().find(|b| b.order() > 2) {
            return Err(HarnessError::Format(format!(
                "sample {} has order {} data; the CSV holds up to 2",
                s.id,
                b.order()
            )));
        }
        let mut record = vec![s.id.to_string(), s.v[0].to_string(), s.v[1].to_string()];
        let mut mask = 0u32;
        for b in &betas {
            match s.data.get(b) {
                Some(f) => {
                    mask |= 1 << b.position();
                    record.push(f.to_string());
                }
                None => record.push(String::new()),
            }
        }
        record.push(mask.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sample CSV; ambient positions are recomputed on `chart`.
pub fn read_samples<R: Read>(input: R, chart: &Chart) -> Result<Vec<SampleSite>, HarnessError> {
    let betas = MultiIndex::up_to(2);
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &SAMPLE_CSV_HEADER)?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let num = |i: usize| -> Result<f64, HarnessError> {
            field(i).parse().map_err(|_| {
                HarnessError::Format(format!("row {}: bad number '{}' in {}", line + 1, field(i), SAMPLE_CSV_HEADER[i]))
            })
        };
        let id: usize =
            field(0).parse().map_err(|_| HarnessError::Format(format!("row {}: bad id '{}'", line + 1, field(0))))?;
        let mask: u32 =
            field(9).parse().map_err(|_| HarnessError::Format(format!("row {}: bad mask '{}'", line + 1, field(9))))?;
        if mask >= 1 << betas.len() {
            return Err(HarnessError::Format(format!("row {}: mask {mask} uses more than 6 bits", line + 1)));
        }
        let v = [num(1)?, num(2)?];
        let mut data = BTreeMap::new();
        for b in &betas {
            if mask & (1 << b.position()) != 0 {
                data.insert(*b, num(3 + b.position())?);
            }
        }
        let x = chart.forward(v)?;
        out.push(SampleSite::new(id, v, x, data)?);
    }
    Ok(out)
}

pub fn write_points<W: Write>(points: &[SurfacePoint], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POINT_CSV_HEADER)?;
    for (id, p) in points.iter().enumerate() {
        let mut record = vec![id.to_string()];
        record.extend([p.v[0], p.v[1], p.x[0], p.x[1], p.x[2]].map(|f| f.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a point CSV; only `v1,v2` are used, positions are recomputed on
/// `chart` so that they are consistent with it.
pub fn read_points<R: Read>(input: R, chart: &Chart) -> Result<Vec<SurfacePoint>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &POINT_CSV_HEADER)?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, HarnessError> {
            let s = rec.get(i).unwrap_or("").trim();
            s.parse().map_err(|_| HarnessError::Format(format!("row {}: bad number '{s}'", line + 1)))
        };
        out.push(chart.point([num(1)?, num(2)?])?);
    }
    Ok(out)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), HarnessError> {
    if found.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(HarnessError::Format(format!(
            "unexpected header '{}', expected '{}'",
            found.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceKind;
    use crate::harness::{build_samples, Lacunary, TestFunction};
    use crate::pointsets::nodes_on_surface;

    #[test]
    fn samples_round_trip() {
        let kind = SurfaceKind::Cylinder;
        let chart = kind.experiment_chart();
        let nodes = nodes_on_surface(kind, 7);
        let samples = build_samples(&chart, &nodes, TestFunction::F2, 2, Lacunary::HalfSecondDerivatives).unwrap();
        let mut buf = Vec::new();
        write_samples(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,v1,v2,f,f_v1,f_v2,f_v1v1,f_v1v2,f_v2v2,mask\n"));
        let masks: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(masks[..2], ["7", "63"]);
        let back = read_samples(&buf[..], &chart).unwrap();
        assert_eq!(back, samples);
    }

    #[test]
    fn points_round_trip() {
        let kind = SurfaceKind::Sphere;
        let chart = kind.experiment_chart();
        let nodes = nodes_on_surface(kind, 5);
        let mut buf = Vec::new();
        write_points(&nodes, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("id,v1,v2,x,y,z\n"));
        assert_eq!(read_points(&buf[..], &chart).unwrap(), nodes);
    }

    #[test]
    fn rejects_bad_input() {
        let chart = SurfaceKind::Sphere.experiment_chart();
        assert!(read_points("a,b\n1,2\n".as_bytes(), &chart).is_err());
        let no_value = "id,v1,v2,f,f_v1,f_v2,f_v1v1,f_v1v2,f_v2v2,mask\n0,0.1,0.1,,1,2,,,,6\n";
        assert!(matches!(read_samples(no_value.as_bytes(), &chart), Err(HarnessError::Interpolant(_))));
        let outside = "id,v1,v2,f,f_v1,f_v2,f_v1v1,f_v1v2,f_v2v2,mask\n0,0.9,0.1,1,,,,,,1\n";
        assert!(matches!(read_samples(outside.as_bytes(), &chart), Err(HarnessError::Geometry(_))));
    }
}
