//! On-disk formats.
//!
//! * page images: PNG (8-bit gray or RGB) and binary PGM/PPM
//! * layout: one JSON object per page
//! * trace: JSONL, `{"t","u","v","w","h","conf"}` plus an optional `page`
//! * session log: JSONL, one event per line tagged by `kind`
//! * oracle: `{"pages": [{"page", "turn_t"}]}`

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use pageflip_core::filter::TrackerPrediction;
use pageflip_core::image::{GrayImage, RgbImage};
use pageflip_core::layout::PageLayout;
use pageflip_core::session::{SessionEvent, SessionLog, SourceItem};
use pageflip_core::sim::SyntheticSample;
use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone)]
pub enum PageRaster {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl PageRaster {
    pub fn as_page_image(&self) -> pageflip_core::layout::PageImage<'_> {
        match self {
            PageRaster::Gray(g) => g.into(),
            PageRaster::Rgb(c) => c.into(),
        }
    }
}

pub fn load_image(path: &Path) -> Result<PageRaster, Error> {
    let image_err = |source| Error::Image { path: path.to_owned(), source };
    let decoded = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(image_err)?;
    let bad = |message: String| Error::BadFile { path: path.to_owned(), message };
    let raster = match decoded {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            PageRaster::Gray(GrayImage::new(w as usize, h as usize, g.into_raw()).map_err(|e| bad(e.to_string()))?)
        }
        other if !other.color().has_color() => {
            let g = other.to_luma8();
            let (w, h) = g.dimensions();
            PageRaster::Gray(GrayImage::new(w as usize, h as usize, g.into_raw()).map_err(|e| bad(e.to_string()))?)
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = rgb.dimensions();
            PageRaster::Rgb(RgbImage::from_interleaved(w as usize, h as usize, rgb.as_raw()).map_err(|e| bad(e.to_string()))?)
        }
    };
    Ok(raster)
}

pub fn save_gray_png(path: &Path, img: &GrayImage) -> Result<(), Error> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.pixels().to_vec())
        .expect("buffer matches dimensions");
    buf.save(path).map_err(|source| Error::Image { path: path.to_owned(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn layout_to_json(layout: &PageLayout) -> String {
    serde_json::to_string_pretty(layout).expect("layout serializes")
}

pub fn write_layout(path: &Path, layout: &PageLayout) -> Result<(), Error> {
    let mut out = create(path)?;
    writeln!(out, "{}", layout_to_json(layout)).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_layout(path: &Path) -> Result<PageLayout, Error> {
    let bad = |message: String| Error::BadFile { path: path.to_owned(), message };
    let layout: PageLayout = serde_json::from_reader(open(path)?).map_err(|e| bad(e.to_string()))?;
    layout.check().map_err(bad)?;
    Ok(layout)
}

/// One line of a trace file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub h: f64,
    pub conf: f64,
    /// Page the prediction refers to, when known (synthetic traces).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<usize>,
}

impl TraceRecord {
    pub fn prediction(&self) -> TrackerPrediction {
        TrackerPrediction { t: self.t, u: self.u, v: self.v, w: self.w, h: self.h, conf: self.conf }
    }
}

impl From<TraceRecord> for SourceItem {
    fn from(r: TraceRecord) -> Self {
        SourceItem { page: r.page, prediction: r.prediction() }
    }
}

impl From<&SyntheticSample> for TraceRecord {
    fn from(s: &SyntheticSample) -> Self {
        let p = s.prediction;
        TraceRecord { t: p.t, u: p.u, v: p.v, w: p.w, h: p.h, conf: p.conf, page: Some(s.page) }
    }
}

/// Parses JSONL trace records; blank lines are ignored. Line numbers in
/// errors are 1-based.
pub fn parse_trace(reader: impl Read) -> Result<Vec<TraceRecord>, Error> {
    let mut records: Vec<TraceRecord> = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        let finite = [rec.t, rec.u, rec.v, rec.w, rec.h].iter().all(|x| x.is_finite());
        if !finite || rec.w < 0.0 || rec.h < 0.0 || !(0.0..=1.0).contains(&rec.conf) {
            return Err(Error::Parse { line: line_no, message: "values out of range".into() });
        }
        if records.last().is_some_and(|prev| rec.t <= prev.t) {
            return Err(Error::NonMonotonicTrace { line: line_no });
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>, Error> {
    parse_trace(open(path)?)
}

pub fn write_trace(path: &Path, records: impl IntoIterator<Item = TraceRecord>) -> Result<(), Error> {
    let mut out = create(path)?;
    for r in records {
        serde_json::to_writer(&mut out, &r).expect("record serializes");
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_log_to(mut out: impl Write, log: &SessionLog) -> std::io::Result<()> {
    for event in &log.events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_log(path: &Path, log: &SessionLog) -> Result<(), Error> {
    write_log_to(create(path)?, log).map_err(|e| Error::io(path, e))
}

pub fn read_log(path: &Path) -> Result<SessionLog, Error> {
    let mut events = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let event: SessionEvent =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        events.push(event);
    }
    Ok(SessionLog { events })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePage {
    pub page: usize,
    pub turn_t: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleFile {
    pub pages: Vec<OraclePage>,
}

impl OracleFile {
    pub fn from_times(times: &[f64]) -> Self {
        Self { pages: times.iter().enumerate().map(|(page, &turn_t)| OraclePage { page, turn_t }).collect() }
    }

    /// Turn times indexed by page; pages must be exactly `0..n`.
    pub fn times(&self) -> Result<Vec<f64>, String> {
        let mut pages = self.pages.clone();
        pages.sort_by_key(|p| p.page);
        for (i, p) in pages.iter().enumerate() {
            if p.page != i {
                return Err(format!("oracle pages must be 0..{} without gaps", pages.len()));
            }
        }
        Ok(pages.into_iter().map(|p| p.turn_t).collect())
    }
}

pub fn read_oracle(path: &Path) -> Result<Vec<f64>, Error> {
    let bad = |message: String| Error::BadFile { path: path.to_owned(), message };
    let file: OracleFile = serde_json::from_reader(open(path)?).map_err(|e| bad(e.to_string()))?;
    file.times().map_err(bad)
}

pub fn write_oracle(path: &Path, times: &[f64]) -> Result<(), Error> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &OracleFile::from_times(times)).expect("oracle serializes");
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}
