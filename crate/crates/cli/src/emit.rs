//! Writers for report files. Every file is written to a temporary sibling and
//! renamed into place, so readers never see a partial file.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use twisted_dirac::bounds::BoundReport;
use twisted_dirac::flow::FlowResult;
use twisted_dirac::operator::OperatorMatrix;
use twisted_dirac::spectrum::SpectrumResult;

use crate::config::Format;
use crate::error::CliError;
use crate::report::{ProductResult, RunReport, Timings};

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn spectrum_csv(spec: &SpectrumResult) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let chirality = spec.chirality.as_ref().map(|c| float(c[i])).unwrap_or_default();
            vec![i.to_string(), float(v), spec.multiplicity_of(i).to_string(), chirality]
        })
        .collect();
    csv_bytes(&strings(&["index", "eigenvalue", "multiplicity", "chirality"]), &rows)
}

/// Header only when no bound was evaluated.
pub fn bounds_csv(bounds: &[BoundReport]) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = bounds
        .iter()
        .map(|b| {
            vec![
                b.bound_name.clone(),
                float(b.bound_value),
                float(b.observed_min_lambda_sq),
                b.satisfied.to_string(),
                b.attained.to_string(),
            ]
        })
        .collect();
    csv_bytes(&strings(&["name", "value", "observed", "satisfied", "attained"]), &rows)
}

pub fn flow_csv(flow: &FlowResult) -> Result<Vec<u8>, CliError> {
    let k = flow.magnitudes.iter().map(Vec::len).max().unwrap_or(0);
    let mut header = strings(&["t", "lambda_min"]);
    header.extend((1..=k).map(|j| format!("lambda_{j}")));
    let rows: Vec<Vec<String>> = flow
        .t_grid
        .iter()
        .zip(&flow.magnitudes)
        .zip(&flow.lambda_min)
        .map(|((&t, m), &l)| {
            let mut row = vec![float(t), float(l)];
            row.extend(m.iter().map(|&x| float(x)));
            row.resize(k + 2, String::new());
            row
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn product_csv(product: &ProductResult) -> Result<Vec<u8>, CliError> {
    let direct = product.direct.as_ref().map(|d| {
        let mut m = d.magnitudes();
        m.sort_by(f64::total_cmp);
        m
    });
    let rows: Vec<Vec<String>> = product
        .combined
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let d = direct.as_ref().and_then(|m| m.get(i)).map(|&x| float(x)).unwrap_or_default();
            vec![i.to_string(), float(v), product.combined.multiplicity_of(i).to_string(), d]
        })
        .collect();
    csv_bytes(&strings(&["index", "combined", "multiplicity", "direct_magnitude"]), &rows)
}

#[derive(Serialize)]
struct OperatorDump<'a> {
    dimension: usize,
    provenance: &'a str,
    multiplicity_factor: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    chirality: Option<&'a [i8]>,
    /// `[row, col, re, im]`, row-major.
    triplets: Vec<(usize, usize, f64, f64)>,
}

pub fn operator_json(op: &OperatorMatrix) -> Result<Vec<u8>, CliError> {
    let mut triplets: Vec<_> = op.triplets().into_iter().map(|(r, c, v)| (r, c, v.re, v.im)).collect();
    triplets.sort_by_key(|a| (a.0, a.1));
    json_bytes(&OperatorDump {
        dimension: op.dimension(),
        provenance: op.provenance(),
        multiplicity_factor: op.multiplicity_factor(),
        chirality: op.chirality(),
        triplets,
    })
}

/// The tracked magnitudes against `t`, one polyline per index.
pub fn flow_svg(flow: &FlowResult) -> String {
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let top = flow.magnitudes.iter().flatten().copied().fold(0.0f64, f64::max).max(1e-12);
    let x = |t: f64| pad + t * (w - 2.0 * pad);
    let y = |v: f64| h - pad - v / top * (h - 2.0 * pad);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{pad}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{r}\" y=\"{tb}\" text-anchor=\"end\" font-size=\"12\">t</text>\n\
         <text x=\"{pad}\" y=\"{tt}\" font-size=\"12\">|λ| (max {top:.4})</text>\n",
        b = h - pad,
        r = w - pad,
        tb = h - pad / 3.0,
        tt = pad / 1.5,
    );
    let k = flow.magnitudes.iter().map(Vec::len).min().unwrap_or(0);
    for j in 0..k {
        let points: Vec<String> = flow
            .t_grid
            .iter()
            .zip(&flow.magnitudes)
            .map(|(&t, m)| format!("{:.2},{:.2}", x(t), y(m[j])))
            .collect();
        let stroke = if j == 0 { "#c0392b" } else { "#2c3e50" };
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the report files and returns their paths in write order.
pub fn emit(
    dir: &Path,
    report: &RunReport,
    timings: &Timings,
    format: Format,
    operator: Option<&OperatorMatrix>,
    plot: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    if format.json() {
        files.push((dir.join("report.json"), json_bytes(report)?));
    }
    if format.csv() {
        if let Some(spec) = &report.spectrum {
            files.push((dir.join("spectrum.csv"), spectrum_csv(spec)?));
        }
        if report.kind == crate::config::Kind::Bounds {
            files.push((dir.join("bounds.csv"), bounds_csv(&report.bounds)?));
        }
        if let Some(flow) = &report.flow {
            files.push((dir.join("flow.csv"), flow_csv(flow)?));
        }
        if let Some(product) = &report.product {
            files.push((dir.join("product.csv"), product_csv(product)?));
        }
    }
    if let Some(op) = operator {
        files.push((dir.join("operator.json"), operator_json(op)?));
    }
    if plot {
        if let Some(flow) = &report.flow {
            files.push((dir.join("flow.svg"), flow_svg(flow).into_bytes()));
        }
    }
    files.push((dir.join("timings.json"), json_bytes(timings)?));
    for (path, bytes) in &files {
        write_atomic(path, bytes)?;
        log::debug!("wrote {}", path.display());
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, std::f64::consts::PI, 1e-300, 6.02214076e23] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(-1.0), "-1.0000000000000000e0");
    }

    #[test]
    fn empty_bounds_csv_is_header_only() {
        let bytes = bounds_csv(&[]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "name,value,observed,satisfied,attained\n");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
