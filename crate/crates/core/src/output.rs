//! CSV, JSON and SVG artefacts for fields, spectra, predictions and studies.
//!
//! CSV numbers use a fixed 17-significant-digit exponent format and JSON
//! uses the shortest round-trip representation, so identical runs give
//! byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{DnlsError, Result};
use crate::lattice::LatticeField;
use crate::plot::{Plot, Point, Series};
use crate::spectrum::{EigenClass, Spectrum};
use crate::study::{Configuration, DecayStudy, ErrorSweep};
use crate::theory::TheoryPrediction;

/// The CSV rendering of a float.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV writer whose every failure names the file.
pub(crate) struct CsvOut {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub(crate) fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| DnlsError::io(path, e))?;
        let mut out = Self {
            path: path.to_path_buf(),
            w: csv::Writer::from_writer(BufWriter::new(file)),
        };
        out.row(header.iter().map(|h| h.to_string()))?;
        Ok(out)
    }

    pub(crate) fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<()> {
        let record: Vec<String> = fields.into_iter().collect();
        self.w
            .write_record(&record)
            .map_err(|e| DnlsError::io(&self.path, e.into()))
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| DnlsError::io(&self.path, e))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| DnlsError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| DnlsError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| DnlsError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| DnlsError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| DnlsError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| DnlsError::io(path, e))
}

/// Something that knows which files describe it.
pub trait Emit {
    /// Writes every artefact into `dir` (which exists) and returns the paths.
    fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>>;
}

/// Creates `out_dir` if needed and writes the artefacts of `item` there.
pub fn emit_outputs(item: &impl Emit, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| DnlsError::io(out_dir, e))?;
    item.emit(out_dir)
}

pub fn profile_plot(q: &LatticeField, title: &str) -> Plot {
    let points: Vec<Point> = q.iter().map(|(n, v)| Point::new(n as f64, v)).collect();
    Plot::new(title, "n", "q_n")
        .with(Series::line("profile", points.clone()))
        .with(Series::markers("sites", points))
}

pub fn spectrum_plot(s: &Spectrum, title: &str) -> Plot {
    let mut plot = Plot::new(title, "Re λ", "Im λ");
    for class in [EigenClass::Band, EigenClass::Other, EigenClass::ZeroMode, EigenClass::Interaction] {
        let points: Vec<Point> = s.of_class(class).map(|z| Point::new(z.re, z.im)).collect();
        plot = plot.with(Series::markers(class.as_str(), points));
    }
    plot
}

fn write_field(q: &LatticeField, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = CsvOut::create(&csv_path, &["n", "q"])?;
    for (n, v) in q.iter() {
        w.row([n.to_string(), num(v)])?;
    }
    w.finish()?;
    let json_path = dir.join(format!("{stem}.json"));
    write_json(&json_path, q)?;
    let svg_path = dir.join(format!("{stem}.svg"));
    let p = q.problem();
    write_text(
        &svg_path,
        &profile_plot(q, &format!("profile, ω = {}, d = {}", p.omega, p.d)).to_svg(),
    )?;
    Ok(vec![csv_path, json_path, svg_path])
}

fn write_spectrum(s: &Spectrum, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join(format!("{stem}.csv"));
    s.write_csv(&csv_path)?;
    let json_path = dir.join(format!("{stem}.json"));
    write_json(&json_path, s)?;
    let svg_path = dir.join(format!("{stem}.svg"));
    let title = format!("spectrum, ω = {}, d = {}", s.meta.omega, s.meta.d);
    write_text(&svg_path, &spectrum_plot(s, &title).to_svg())?;
    Ok(vec![csv_path, json_path, svg_path])
}

/// Profile and spectrum plots of a representative configuration; empty
/// plots when there is none, so the file set never changes.
fn write_representative(c: Option<&Configuration>, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let profile = dir.join(format!("{stem}_profile.svg"));
    let spectrum = dir.join(format!("{stem}_spectrum.svg"));
    match c {
        Some(c) => {
            write_text(&profile, &profile_plot(&c.field, "representative profile").to_svg())?;
            write_text(&spectrum, &spectrum_plot(&c.spectrum, "representative spectrum").to_svg())?;
        }
        None => {
            write_text(&profile, &Plot::new("representative profile", "n", "q_n").to_svg())?;
            write_text(&spectrum, &Plot::new("representative spectrum", "Re λ", "Im λ").to_svg())?;
        }
    }
    Ok(vec![profile, spectrum])
}

impl Emit for LatticeField {
    fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_field(self, dir, "solution")
    }
}

impl Emit for Spectrum {
    fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_spectrum(self, dir, "spectrum")
    }
}

impl Emit for Configuration {
    fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut paths = write_field(&self.field, dir, "solution")?;
        paths.extend(write_spectrum(&self.spectrum, dir, "spectrum")?);
        Ok(paths)
    }
}

impl Emit for TheoryPrediction {
    fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let csv_path = dir.join("prediction.csv");
        self.write_csv(&csv_path)?;
        let json_path = dir.join("prediction.json");
        write_json(&json_path, self)?;
        Ok(vec![csv_path, json_path])
    }
}

fn error_fields(e: Option<&crate::study::RowError>) -> [String; 2] {
    match e {
        Some(e) => [e.tag.clone(), e.message.clone()],
        None => [String::new(), String::new()],
    }
}

impl Emit for DecayStudy {
    fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let csv_path = dir.join("decay.csv");
        let mut w = CsvOut::create(
            &csv_path,
            &["distance", "half_distance", "pair", "axis", "magnitude", "log_magnitude", "error", "message"],
        )?;
        for row in &self.rows {
            let [tag, msg] = error_fields(row.error.as_ref());
            if row.pairs.is_empty() {
                w.row([row.distance.to_string(), num(row.half_distance), "".into(), "".into(), "".into(), "".into(), tag.clone(), msg.clone()])?;
            }
            for (j, p) in row.pairs.iter().enumerate() {
                w.row([
                    row.distance.to_string(),
                    num(row.half_distance),
                    j.to_string(),
                    p.axis.to_string(),
                    num(p.magnitude),
                    num(p.magnitude.ln()),
                    tag.clone(),
                    msg.clone(),
                ])?;
            }
        }
        w.finish()?;

        let fit_path = dir.join("decay_fit.csv");
        let mut w = CsvOut::create(
            &fit_path,
            &["pair", "axis", "slope", "intercept", "residual_norm", "target_slope", "rel_slope_error"],
        )?;
        for f in &self.fits {
            w.row([
                f.pair.to_string(),
                f.axis.to_string(),
                num(f.slope),
                num(f.intercept),
                num(f.residual_norm),
                num(self.target_slope),
                num(f.rel_slope_error),
            ])?;
        }
        w.finish()?;

        let json_path = dir.join("decay.json");
        write_json(&json_path, self)?;

        let title = format!(
            "{} pulses, ω = {}, d = {}: log|λ| vs N",
            self.config.pattern, self.config.omega, self.config.d
        );
        let mut plot = Plot::new(title, "N (half-distance)", "log |λ|");
        let xs: Vec<f64> = self.rows.iter().map(|r| r.half_distance).collect();
        let (lo, hi) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        for f in &self.fits {
            let points = self
                .rows
                .iter()
                .filter_map(|r| r.pairs.get(f.pair).map(|p| Point::new(r.half_distance, p.magnitude.ln())))
                .collect();
            plot = plot.with(Series::markers(format!("pair {} ({})", f.pair, f.axis), points));
            plot = plot.with(Series::line(
                format!("fit {} slope {:.5}", f.pair, f.slope),
                vec![
                    Point::new(lo, f.slope * lo + f.intercept),
                    Point::new(hi, f.slope * hi + f.intercept),
                ],
            ));
        }
        let svg_path = dir.join("decay_log_lambda.svg");
        write_text(&svg_path, &plot.to_svg())?;

        let mut paths = vec![csv_path, fit_path, json_path, svg_path];
        paths.extend(write_representative(self.representative.as_ref(), dir, "decay")?);
        Ok(paths)
    }
}

impl Emit for ErrorSweep {
    fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let csv_path = dir.join("sweep.csv");
        let mut w = CsvOut::create(
            &csv_path,
            &[
                "d", "pair", "axis", "predicted", "computed", "rel_error", "log10_rel_error", "b", "melnikov",
                "error", "message",
            ],
        )?;
        let b_text = |b: &[f64]| b.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
        for row in &self.rows {
            let [tag, msg] = error_fields(row.error.as_ref());
            let melnikov = if row.melnikov.is_finite() { num(row.melnikov) } else { String::new() };
            if row.rel_error.is_empty() {
                w.row([
                    num(row.d),
                    "".into(),
                    "".into(),
                    "".into(),
                    "".into(),
                    "".into(),
                    "".into(),
                    b_text(&row.b),
                    melnikov.clone(),
                    tag.clone(),
                    msg.clone(),
                ])?;
                continue;
            }
            for (j, ((p, c), e)) in row.predicted.iter().zip(&row.computed).zip(&row.rel_error).enumerate() {
                w.row([
                    num(row.d),
                    j.to_string(),
                    p.axis.to_string(),
                    num(p.magnitude),
                    num(c.magnitude),
                    num(*e),
                    num(e.log10()),
                    b_text(&row.b),
                    melnikov.clone(),
                    tag.clone(),
                    msg.clone(),
                ])?;
            }
        }
        w.finish()?;

        let json_path = dir.join("sweep.json");
        write_json(&json_path, self)?;

        let title = format!(
            "{}, ω = {}: log10 relative error vs d",
            self.config.spec, self.config.omega
        );
        let mut plot = Plot::new(title, "d", "log10 relative error");
        let pairs = self.rows.iter().map(|r| r.rel_error.len()).max().unwrap_or(0);
        for j in 0..pairs {
            let points = self
                .rows
                .iter()
                .filter_map(|r| r.rel_error.get(j).map(|e| Point::new(r.d, e.log10())))
                .collect();
            let axis = self
                .rows
                .iter()
                .find_map(|r| r.predicted.get(j).map(|p| p.axis.to_string()))
                .unwrap_or_default();
            plot = plot.with(Series::markers(format!("pair {j} ({axis})"), points));
        }
        let svg_path = dir.join("sweep_log_error.svg");
        write_text(&svg_path, &plot.to_svg())?;

        let mut paths = vec![csv_path, json_path, svg_path];
        paths.extend(write_representative(self.representative.as_ref().map(|r| &r.1), dir, "sweep")?);
        Ok(paths)
    }
}
