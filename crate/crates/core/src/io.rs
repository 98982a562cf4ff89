//! Interferogram CSV, its JSON sidecar, and report output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::{parse_json, RunConfig};
use crate::error::{QoctError, Result};
use crate::interferometer::Interferogram;
use crate::spdc::Spectrum;

pub const CSV_HEADER: [&str; 4] = ["ctau_um", "R_H", "R_V", "R_T"];
pub const SIDECAR_FORMAT: &str = "qoct-interferogram/1";

/// Spectral grid summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumInfo {
    pub omega0: f64,
    pub center_wavelength_nm: f64,
    pub points: usize,
    pub half_width: f64,
    pub step: f64,
    /// `max |w(Ω) − w(−Ω)| / max w`.
    pub asymmetry: f64,
    pub edge_ratio: f64,
}

impl SpectrumInfo {
    pub fn of(spectrum: &Spectrum) -> Self {
        Self {
            omega0: spectrum.omega0,
            center_wavelength_nm: crate::spdc::wavelength_of(spectrum.omega0) * 1e9,
            points: spectrum.len(),
            half_width: spectrum.half_width(),
            step: spectrum.step(),
            asymmetry: spectrum.asymmetry(),
            edge_ratio: spectrum.edge_ratio(),
        }
    }
}

/// Axis and sign conventions, recorded so files can be read without the
/// code at hand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub ctau_axis: String,
    /// `raw cτ = raw_axis_scale · ctau_um + axis_offset_um`.
    pub raw_axis_scale: f64,
    pub axis_offset_um: f64,
    pub lambda_argument: String,
    pub birefringence: String,
    pub h_arm: String,
    pub v_arm: String,
    pub normalization: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            ctau_axis: "x = c*tau/2, interface dips at x = c*beta1*z".into(),
            raw_axis_scale: 2.0,
            axis_offset_um: 0.0,
            lambda_argument: "t = 4x/c".into(),
            birefringence: "dn = n_o - n_e".into(),
            h_arm: "2theta = 0 deg, Lambda_H = cos^2(delta)".into(),
            v_arm: "2theta = 90 deg, Lambda_V = sin^2(delta)".into(),
            normalization: "R/Lambda0, R_T = R_H + R_V - 1".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Run description with the sample inlined; enough to rebuild the
    /// forward model.
    pub config: RunConfig,
    pub lambda0_h: f64,
    pub lambda0_v: f64,
    pub visibility: f64,
    pub beam_splitter_reflectance: f64,
    pub points: usize,
    pub spectrum: SpectrumInfo,
    pub conventions: Conventions,
    pub raw_ctau_um: Vec<f64>,
    pub clipped: usize,
    pub vanishing: bool,
    /// Layer pairs whose matrices do not commute.
    pub non_commuting_layers: Vec<(usize, usize)>,
    /// Sup-norm change of R_T when the spectrum is replaced by its
    /// symmetrized copy.
    pub symmetrized_rt_difference: f64,
    pub diagnostics: Vec<String>,
}

fn csv_error(path: &Path, e: csv::Error) -> QoctError {
    QoctError::Parse(format!("{}: {e}", path.display()))
}

pub fn format_ctau(x_m: f64) -> String {
    format!("{:.6}", x_m * 1e6)
}

/// Writes the interferogram as CSV into any writer.
pub fn write_csv_to<W: std::io::Write>(ig: &Interferogram, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for k in 0..ig.len() {
        w.write_record([
            format_ctau(ig.delays[k]),
            ig.r_h[k].to_string(),
            ig.r_v[k].to_string(),
            ig.r_t[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(ig: &Interferogram, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| QoctError::io(path, e))?;
    write_csv_to(ig, std::io::BufWriter::new(file)).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => QoctError::io(path, io),
        other => QoctError::Parse(format!("{}: {other:?}", path.display())),
    })
}

/// Columns of an interferogram CSV, delays in metres.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvColumns {
    pub delays: Vec<f64>,
    pub r_h: Vec<f64>,
    pub r_v: Vec<f64>,
    pub r_t: Vec<f64>,
}

pub fn parse_csv<R: std::io::Read>(input: R, path: &Path) -> Result<CsvColumns> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(QoctError::Parse(format!(
            "{}: expected header {}, found {}",
            path.display(),
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut cols = CsvColumns::default();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let field = |j: usize| -> Result<f64> {
            record[j].trim().parse::<f64>().map_err(|e| {
                QoctError::Parse(format!(
                    "{}: row {}: column {}: {e}",
                    path.display(),
                    line + 2,
                    CSV_HEADER[j]
                ))
            })
        };
        cols.delays.push(field(0)? * 1e-6);
        cols.r_h.push(field(1)?);
        cols.r_v.push(field(2)?);
        cols.r_t.push(field(3)?);
    }
    Ok(cols)
}

pub fn read_csv(path: &Path) -> Result<CsvColumns> {
    let file = fs::File::open(path).map_err(|e| QoctError::io(path, e))?;
    parse_csv(std::io::BufReader::new(file), path)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| QoctError::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_json(value)?).map_err(|e| QoctError::io(path, e))
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    crate::config::read_json(path)
}

/// `foo.csv` → `foo.json`.
pub fn default_sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Interferogram rebuilt from a CSV and its sidecar. The sidecar must
/// describe the same number of points.
pub fn load_interferogram(csv: &Path, sidecar: &Path) -> Result<(Interferogram, Sidecar)> {
    let cols = read_csv(csv)?;
    let text = fs::read_to_string(sidecar).map_err(|e| QoctError::io(sidecar, e))?;
    let meta: Sidecar = parse_json(&text, &sidecar.display().to_string())?;
    if meta.format != SIDECAR_FORMAT {
        return Err(QoctError::Parse(format!(
            "{}: unknown format '{}'",
            sidecar.display(),
            meta.format
        )));
    }
    if cols.delays.len() != meta.points {
        return Err(QoctError::Parse(format!(
            "{}: {} rows, sidecar expects {}",
            csv.display(),
            cols.delays.len(),
            meta.points
        )));
    }
    let ig = Interferogram {
        delays: cols.delays,
        r_h: cols.r_h,
        r_v: cols.r_v,
        r_t: cols.r_t,
        lambda0_h: meta.lambda0_h,
        lambda0_v: meta.lambda0_v,
        visibility: meta.visibility,
        clipped: meta.clipped,
        vanishing: meta.vanishing,
    };
    Ok((ig, meta))
}
