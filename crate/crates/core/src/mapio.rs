//! Binary PGM map images with a `key: value` metadata sidecar.
//!
//! The sidecar carries `image`, `resolution`, `origin` (x, y, yaw of the bottom-left
//! corner), `occupied_thresh`, `free_thresh` and `negate`. A pixel `p` maps to the
//! occupancy probability `(255 - p) / 255` (or `p / 255` when negated): above
//! `occupied_thresh` is occupied, below `free_thresh` is free, anything else unknown.
//! Image row 0 is the top of the map, so rows are flipped on load.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::WorldPoint;
use crate::gridmap::{GridError, GridGeometry, Occupancy, OccupancyGrid};

#[derive(Debug, Error)]
pub enum MapIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed PGM at byte offset {offset}: {message}")]
    Pgm {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    #[error("{path}: line {line}: {message}")]
    Metadata {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Contents of the metadata sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct MapMetadata {
    pub image: PathBuf,
    pub resolution: f64,
    pub origin: (f64, f64, f64),
    pub occupied_thresh: f64,
    pub free_thresh: f64,
    pub negate: bool,
}

impl MapMetadata {
    pub fn new(image: impl Into<PathBuf>, resolution: f64, origin: WorldPoint) -> Self {
        Self {
            image: image.into(),
            resolution,
            origin: (origin.x, origin.y, 0.0),
            occupied_thresh: 0.65,
            free_thresh: 0.196,
            negate: false,
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, MapIoError> {
        let err = |line: usize, message: String| MapIoError::Metadata {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut image = None;
        let mut resolution = None;
        let mut origin = None;
        let mut occupied_thresh = 0.65;
        let mut free_thresh = 0.196;
        let mut negate = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| err(line_no, format!("expected `key: value`, got `{line}`")))?;
            let value = value.trim();
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| err(line_no, format!("`{}` is not a number", v)))
            };
            match key.trim() {
                "image" => image = Some(PathBuf::from(value)),
                "resolution" => resolution = Some(num(value)?),
                "origin" => {
                    let parts: Vec<&str> = value
                        .trim_matches(|c| c == '[' || c == ']')
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .collect();
                    if parts.len() != 3 {
                        return Err(err(line_no, "origin needs x, y and yaw".into()));
                    }
                    origin = Some((num(parts[0])?, num(parts[1])?, num(parts[2])?));
                }
                "occupied_thresh" => occupied_thresh = num(value)?,
                "free_thresh" => free_thresh = num(value)?,
                "negate" => {
                    negate = match value {
                        "0" | "false" => false,
                        "1" | "true" => true,
                        other => return Err(err(line_no, format!("bad negate value `{other}`"))),
                    }
                }
                other => return Err(err(line_no, format!("unknown key `{other}`"))),
            }
        }
        let end = text.lines().count().max(1);
        Ok(Self {
            image: image.ok_or_else(|| err(end, "missing `image`".into()))?,
            resolution: resolution.ok_or_else(|| err(end, "missing `resolution`".into()))?,
            origin: origin.ok_or_else(|| err(end, "missing `origin`".into()))?,
            occupied_thresh,
            free_thresh,
            negate,
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "image: {}\nresolution: {}\norigin: [{}, {}, {}]\noccupied_thresh: {}\nfree_thresh: {}\nnegate: {}\n",
            self.image.display(),
            self.resolution,
            self.origin.0,
            self.origin.1,
            self.origin.2,
            self.occupied_thresh,
            self.free_thresh,
            u8::from(self.negate)
        )
    }

    fn classify(&self, pixel: u8) -> Occupancy {
        let p = f64::from(pixel) / 255.0;
        let occ = if self.negate { p } else { 1.0 - p };
        if occ > self.occupied_thresh {
            Occupancy::Occupied
        } else if occ < self.free_thresh {
            Occupancy::Free
        } else {
            Occupancy::Unknown
        }
    }
}

/// Raw 8-bit grayscale raster, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Parses a binary `P5` PGM with maxval 255. Comments in the header are skipped.
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage, MapIoError> {
    let err = |offset: usize, message: &str| MapIoError::Pgm {
        path: path.to_path_buf(),
        offset,
        message: message.to_string(),
    };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(err(0, "expected magic `P5`"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(err(start, "expected an unsigned integer header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(start, "header field out of range"))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(err(pos, "image dimensions must be positive"));
    }
    if maxval != 255 {
        return Err(err(pos, "only maxval 255 is supported"));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(err(pos, "expected a single whitespace before pixel data")),
    }
    let need = width * height;
    let have = bytes.len() - pos;
    if have < need {
        return Err(err(
            bytes.len(),
            &format!("pixel data truncated: need {need} bytes, found {have}"),
        ));
    }
    Ok(GrayImage {
        width,
        height,
        pixels: bytes[pos..pos + need].to_vec(),
    })
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

/// Converts a PGM raster into an occupancy grid using the sidecar thresholds.
pub fn grid_from_image(image: &GrayImage, meta: &MapMetadata) -> Result<OccupancyGrid, MapIoError> {
    let geometry = GridGeometry::new(
        image.width,
        image.height,
        meta.resolution,
        WorldPoint::new(meta.origin.0, meta.origin.1),
    )?;
    let mut cells = Vec::with_capacity(image.width * image.height);
    for iy in 0..image.height {
        let row = image.height - 1 - iy;
        for ix in 0..image.width {
            cells.push(meta.classify(image.pixels[row * image.width + ix]));
        }
    }
    Ok(OccupancyGrid::from_cells(geometry, cells)?)
}

/// Inverse of [`grid_from_image`] using the conventional 0 / 205 / 254 gray levels.
pub fn image_from_grid(grid: &OccupancyGrid) -> GrayImage {
    let g = grid.geometry();
    let (w, h) = (g.width(), g.height());
    let mut pixels = vec![0u8; w * h];
    for iy in 0..h {
        let row = h - 1 - iy;
        for ix in 0..w {
            pixels[row * w + ix] = match grid.get(ix, iy) {
                Occupancy::Free => 254,
                Occupancy::Occupied => 0,
                Occupancy::Unknown => 205,
            };
        }
    }
    GrayImage {
        width: w,
        height: h,
        pixels,
    }
}

/// Loads a map from its sidecar; the image path is relative to the sidecar's directory.
pub fn load_map(sidecar: &Path) -> Result<OccupancyGrid, MapIoError> {
    let text = fs::read_to_string(sidecar).map_err(|source| MapIoError::Io {
        path: sidecar.to_path_buf(),
        source,
    })?;
    let meta = MapMetadata::parse(&text, sidecar)?;
    let image_path = match sidecar.parent() {
        Some(dir) if meta.image.is_relative() => dir.join(&meta.image),
        _ => meta.image.clone(),
    };
    let bytes = fs::read(&image_path).map_err(|source| MapIoError::Io {
        path: image_path.clone(),
        source,
    })?;
    let image = parse_pgm(&bytes, &image_path)?;
    grid_from_image(&image, &meta)
}

/// Writes `<stem>.pgm` and `<stem>.yaml` next to each other; returns the sidecar path.
pub fn save_map(grid: &OccupancyGrid, dir: &Path, stem: &str) -> Result<PathBuf, MapIoError> {
    let g = grid.geometry();
    let image_name = format!("{stem}.pgm");
    let meta = MapMetadata::new(&image_name, g.resolution(), g.origin());
    let image_path = dir.join(&image_name);
    let sidecar = dir.join(format!("{stem}.yaml"));
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| MapIoError::Io { path, source }
    };
    fs::write(&image_path, encode_pgm(&image_from_grid(grid))).map_err(io(&image_path))?;
    fs::write(&sidecar, meta.to_text()).map_err(io(&sidecar))?;
    Ok(sidecar)
}
