//! On-disk formats: NPY v1.0 feature stacks (with a JSON metadata sidecar),
//! binary PPM colour images, binary PGM masks / heatmaps / trimaps and the
//! JSON annotation format.
//!
//! Every writer is deterministic: identical values always produce identical
//! bytes, and every reader accepts exactly what the matching writer emits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grabcut::SegmentationMask;
use crate::metrics::BoundingBox;
use crate::objectness::{ObjectnessHeatmap, Trimap, TrimapLabel};
use crate::pipeline::InstanceMap;

const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";
const NPY_ALIGN: usize = 64;

pub const UNKNOWN_LAYER: &str = "unknown";

/// Activations of one convolutional layer for one image: `channels` maps of
/// `height × width` values stored channel-major, row-major within a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapStack {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
    pub layer_name: String,
    pub source_image: String,
}

impl FeatureMapStack {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f32>,
        layer_name: impl Into<String>,
        source_image: impl Into<String>,
    ) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidData(format!(
                "feature stack dimensions must be positive, got ({channels}, {height}, {width})"
            )));
        }
        let expected = channels
            .checked_mul(height)
            .and_then(|v| v.checked_mul(width))
            .ok_or_else(|| Error::InvalidData("feature stack shape overflows".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidData(format!(
                "feature stack holds {} values, shape ({channels}, {height}, {width}) needs {expected}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite activation {} at flat index {pos}",
                data[pos]
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
            layer_name: layer_name.into(),
            source_image: source_image.into(),
        })
    }

    /// Stack with default metadata, mostly for tests and synthetic inputs.
    pub fn from_data(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(channels, height, width, data, UNKNOWN_LAYER, "")
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidData(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidData(format!(
                "image of {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, color: [u8; 3]) {
        self.pixels[y * self.width + x] = color;
    }

    /// Sub-image covered by `bbox`, which must lie inside the image.
    pub fn crop(&self, bbox: &BoundingBox) -> Result<RasterImage> {
        if !bbox.fits_within(self.width, self.height) {
            return Err(Error::InvalidAnnotation(format!(
                "box {bbox} outside {}x{} image",
                self.width, self.height
            )));
        }
        let (x0, y0) = (bbox.x0 as usize, bbox.y0 as usize);
        let (w, h) = (bbox.width() as usize, bbox.height() as usize);
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            pixels.extend_from_slice(&self.pixels[row + x0..row + x0 + w]);
        }
        RasterImage::new(w, h, pixels)
    }
}

/// One labelled box of an annotation or detection set.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub bbox: BoundingBox,
    pub label: String,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    pub image: String,
    pub boxes: Vec<Annotation>,
}

impl AnnotationSet {
    pub fn new(image: impl Into<String>) -> Self {
        Self {
            image: image.into(),
            boxes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Checks every box against the bounds of a `width × height` image.
    pub fn validate_within(&self, width: usize, height: usize) -> Result<()> {
        for (i, ann) in self.boxes.iter().enumerate() {
            if !ann.bbox.fits_within(width, height) {
                return Err(Error::InvalidAnnotation(format!(
                    "box #{i} {} lies outside the {width}x{height} image",
                    ann.bbox
                )));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct AnnotationFile {
    image: String,
    boxes: Vec<AnnotationRecord>,
}

#[derive(Serialize, Deserialize)]
struct AnnotationRecord {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

impl AnnotationRecord {
    fn into_annotation(self, index: usize) -> Result<Annotation> {
        let coords = [self.x0, self.y0, self.x1, self.y1];
        if coords.iter().any(|&c| c < 0 || c > u32::MAX as i64) {
            return Err(Error::InvalidAnnotation(format!(
                "box #{index} has out-of-range coordinates {coords:?}"
            )));
        }
        let bbox = BoundingBox::new(
            self.x0 as u32,
            self.y0 as u32,
            self.x1 as u32,
            self.y1 as u32,
        )
        .map_err(|e| Error::InvalidAnnotation(format!("box #{index}: {e}")))?;
        check_score(index, self.score)?;
        Ok(Annotation {
            bbox,
            label: self.label,
            score: self.score,
        })
    }
}

fn check_score(index: usize, score: Option<f64>) -> Result<()> {
    match score {
        Some(s) if !(0.0..=1.0).contains(&s) => Err(Error::InvalidAnnotation(format!(
            "box #{index} has score {s} outside [0, 1]"
        ))),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// NPY
// ---------------------------------------------------------------------------

/// `<stem>.meta.json` next to the array file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

#[derive(Serialize, Deserialize)]
struct StackMeta {
    layer_name: String,
    #[serde(default)]
    source_image: String,
}

pub fn read_feature_stack(path: impl AsRef<Path>) -> Result<FeatureMapStack> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (shape, data) = decode_npy_f32(&bytes)?;
    let (layer_name, source_image) = match fs::read(sidecar_path(path)) {
        Ok(raw) => {
            let meta: StackMeta = serde_json::from_slice(&raw)
                .map_err(|e| Error::Format(format!("metadata sidecar: {e}")))?;
            (meta.layer_name, meta.source_image)
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            (UNKNOWN_LAYER.to_string(), String::new())
        }
        Err(e) => return Err(Error::io(sidecar_path(path), e)),
    };
    FeatureMapStack::new(shape[0], shape[1], shape[2], data, layer_name, source_image)
}

/// Writes the array file and its metadata sidecar.
pub fn write_feature_stack(stack: &FeatureMapStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    // Stacks built through `new` are already finite; re-check so that a
    // NaN can never reach disk.
    if stack.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData(
            "feature stack contains NaN or Inf".into(),
        ));
    }
    let bytes = encode_npy_f32(&[stack.channels, stack.height, stack.width], &stack.data);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = StackMeta {
        layer_name: stack.layer_name.clone(),
        source_image: stack.source_image.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
    json.push(b'\n');
    let meta_path = sidecar_path(path);
    fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
}

/// Encodes a little-endian float32 C-order array as NPY v1.0.
pub fn encode_npy_f32(shape: &[usize], data: &[f32]) -> Vec<u8> {
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    let shape_repr = if dims.len() == 1 {
        format!("({},)", dims[0])
    } else {
        format!("({})", dims.join(", "))
    };
    let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {shape_repr}, }}");
    // magic(6) + version(2) + header length(2) + header, padded so the data
    // starts on an aligned offset, terminated by '\n'.
    let unpadded = 10 + header.len() + 1;
    let pad = (NPY_ALIGN - unpadded % NPY_ALIGN) % NPY_ALIGN;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + data.len() * 4);
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes an NPY v1.0 file holding a 3-D little-endian float32 C-order array.
pub fn decode_npy_f32(bytes: &[u8]) -> Result<([usize; 3], Vec<f32>)> {
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(Error::Format("missing NPY magic string".into()));
    }
    if bytes[6..8] != [1, 0] {
        return Err(Error::Format(format!(
            "unsupported NPY version {}.{}, expected 1.0",
            bytes[6], bytes[7]
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = 10 + header_len;
    if bytes.len() < data_start {
        return Err(Error::Format("truncated NPY header".into()));
    }
    let header = std::str::from_utf8(&bytes[10..data_start])
        .map_err(|_| Error::Format("NPY header is not valid text".into()))?;
    let header = NpyHeader::parse(header)?;

    if header.fortran_order {
        return Err(Error::UnsupportedLayout(
            "column-major (fortran_order=True) arrays are not supported".into(),
        ));
    }
    if header.descr != "<f4" {
        return Err(Error::Format(format!(
            "dtype {:?} not supported, expected '<f4'",
            header.descr
        )));
    }
    if header.shape.len() != 3 {
        return Err(Error::Format(format!(
            "expected a 3-D (C, H, W) array, got shape {:?}",
            header.shape
        )));
    }
    let count: usize = header.shape.iter().product();
    let payload = &bytes[data_start..];
    if payload.len() != count * 4 {
        return Err(Error::Format(format!(
            "shape {:?} needs {} data bytes, file has {}",
            header.shape,
            count * 4,
            payload.len()
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("array contains NaN or Inf".into()));
    }
    Ok(([header.shape[0], header.shape[1], header.shape[2]], data))
}

#[derive(Debug)]
struct NpyHeader {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

impl NpyHeader {
    /// Parses the Python dict literal of an NPY header. Only the subset of
    /// Python syntax that NPY writers emit is accepted.
    fn parse(text: &str) -> Result<Self> {
        let mut p = DictParser {
            s: text.trim_end().as_bytes(),
            pos: 0,
        };
        let mut descr = None;
        let mut fortran = None;
        let mut shape = None;

        p.expect(b'{')?;
        loop {
            p.skip_ws();
            if p.eat(b'}') {
                break;
            }
            let key = p.string()?;
            p.skip_ws();
            p.expect(b':')?;
            p.skip_ws();
            match key.as_str() {
                "descr" => descr = Some(p.string()?),
                "fortran_order" => fortran = Some(p.boolean()?),
                "shape" => shape = Some(p.tuple()?),
                other => {
                    return Err(Error::Format(format!(
                        "unexpected NPY header key {other:?}"
                    )))
                }
            }
            p.skip_ws();
            if !p.eat(b',') {
                p.skip_ws();
                p.expect(b'}')?;
                break;
            }
        }
        let missing = |k: &str| Error::Format(format!("NPY header lacks '{k}'"));
        Ok(Self {
            descr: descr.ok_or_else(|| missing("descr"))?,
            fortran_order: fortran.ok_or_else(|| missing("fortran_order"))?,
            shape: shape.ok_or_else(|| missing("shape"))?,
        })
    }
}

struct DictParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl DictParser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Format(format!("malformed NPY header: {what} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.s.get(self.pos) {
            Some(&q @ (b'\'' | b'"')) => q,
            _ => return Err(self.err("expected a quoted string")),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != quote {
            self.pos += 1;
        }
        if self.pos == self.s.len() {
            return Err(self.err("unterminated string"));
        }
        let out = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(out)
    }

    fn boolean(&mut self) -> Result<bool> {
        let rest = &self.s[self.pos..];
        if rest.starts_with(b"True") {
            self.pos += 4;
            Ok(true)
        } else if rest.starts_with(b"False") {
            self.pos += 5;
            Ok(false)
        } else {
            Err(self.err("expected True or False"))
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b')') {
                return Ok(dims);
            }
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a dimension"));
            }
            let digits = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
            dims.push(
                digits
                    .parse()
                    .map_err(|_| self.err("dimension overflows"))?,
            );
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// PPM / PGM
// ---------------------------------------------------------------------------

/// Single-channel netpbm raster. Samples are 8-bit when `maxval <= 255`,
/// big-endian 16-bit otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

struct NetpbmHeader {
    width: usize,
    height: usize,
    maxval: u16,
    data_start: usize,
}

fn parse_netpbm_header(bytes: &[u8], magic: &[u8; 2]) -> Result<NetpbmHeader> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::Format(format!(
            "expected netpbm magic {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments before each field
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
            return Err(Error::Format("malformed netpbm header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Format("netpbm header value overflows".into()))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::Format(
                "netpbm header must end with one whitespace byte".into(),
            ))
        }
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "netpbm dimensions {width}x{height} must be positive"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!(
            "netpbm maxval {maxval} out of range"
        )));
    }
    Ok(NetpbmHeader {
        width,
        height,
        maxval: maxval as u16,
        data_start: pos,
    })
}

pub fn decode_ppm(bytes: &[u8]) -> Result<RasterImage> {
    let h = parse_netpbm_header(bytes, b"P6")?;
    if h.maxval != 255 {
        return Err(Error::Format(format!(
            "PPM maxval {} not supported, expected 255",
            h.maxval
        )));
    }
    let payload = &bytes[h.data_start..];
    if payload.len() != h.width * h.height * 3 {
        return Err(Error::Format(format!(
            "PPM header declares {}x{} but payload has {} bytes",
            h.width,
            h.height,
            payload.len()
        )));
    }
    let pixels = payload
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    RasterImage::new(h.width, h.height, pixels)
}

pub fn encode_ppm(image: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.reserve(image.pixels.len() * 3);
    for p in &image.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn read_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    decode_ppm(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_image(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(image)).map_err(|e| Error::io(path, e))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_netpbm_header(bytes, b"P5")?;
    let payload = &bytes[h.data_start..];
    let n = h.width * h.height;
    let samples: Vec<u16> = if h.maxval <= 255 {
        if payload.len() != n {
            return Err(Error::Format(format!(
                "PGM header declares {}x{} but payload has {} bytes",
                h.width,
                h.height,
                payload.len()
            )));
        }
        payload.iter().map(|&b| b as u16).collect()
    } else {
        if payload.len() != 2 * n {
            return Err(Error::Format(format!(
                "16-bit PGM header declares {}x{} but payload has {} bytes",
                h.width,
                h.height,
                payload.len()
            )));
        }
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(v) = samples.iter().find(|&&v| v > h.maxval) {
        return Err(Error::Format(format!(
            "PGM sample {v} exceeds maxval {}",
            h.maxval
        )));
    }
    Ok(GrayImage {
        width: h.width,
        height: h.height,
        maxval: h.maxval,
        samples,
    })
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", image.width, image.height, image.maxval).into_bytes();
    if image.maxval <= 255 {
        out.extend(image.samples.iter().map(|&v| v as u8));
    } else {
        for v in &image.samples {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    decode_pgm(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_pgm(image))
        .map_err(|e| Error::io(path, e))
}

fn gray8(width: usize, height: usize, samples: impl Iterator<Item = u8>) -> GrayImage {
    GrayImage {
        width,
        height,
        maxval: 255,
        samples: samples.map(u16::from).collect(),
    }
}

/// Foreground is stored as 255, background as 0.
pub fn write_mask(mask: &SegmentationMask, path: impl AsRef<Path>) -> Result<()> {
    let img = gray8(
        mask.width(),
        mask.height(),
        mask.bits().iter().map(|&b| if b { 255 } else { 0 }),
    );
    write_pgm(&img, path)
}

/// Any non-zero sample counts as foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<SegmentationMask> {
    let img = read_pgm(path)?;
    SegmentationMask::new(
        img.width,
        img.height,
        img.samples.iter().map(|&v| v != 0).collect(),
    )
}

/// Heatmap values rounded half away from zero to 8 bits.
pub fn heatmap_to_gray(heatmap: &ObjectnessHeatmap) -> GrayImage {
    gray8(
        heatmap.width(),
        heatmap.height(),
        heatmap
            .values()
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8),
    )
}

pub fn write_heatmap(heatmap: &ObjectnessHeatmap, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(&heatmap_to_gray(heatmap), path)
}

pub fn read_heatmap(path: impl AsRef<Path>) -> Result<ObjectnessHeatmap> {
    let img = read_pgm(path)?;
    if img.maxval > 255 {
        return Err(Error::Format("heatmaps must be 8-bit PGM".into()));
    }
    ObjectnessHeatmap::new(
        img.width,
        img.height,
        img.samples.iter().map(|&v| v as f64).collect(),
    )
}

/// Trimap labels are stored raw, as the values 0..=3.
pub fn write_trimap(trimap: &Trimap, path: impl AsRef<Path>) -> Result<()> {
    let img = gray8(
        trimap.width(),
        trimap.height(),
        trimap.labels().iter().map(|&l| l as u8),
    );
    write_pgm(&img, path)
}

pub fn read_trimap(path: impl AsRef<Path>) -> Result<Trimap> {
    let img = read_pgm(path)?;
    let labels = img
        .samples
        .iter()
        .map(|&v| {
            TrimapLabel::from_value(v)
                .ok_or_else(|| Error::InvalidData(format!("trimap value {v} not in 0..=3")))
        })
        .collect::<Result<Vec<_>>>()?;
    Trimap::new(img.width, img.height, labels)
}

/// Instance ids as PGM: 8-bit while every id fits, 16-bit otherwise.
pub fn instance_map_to_gray(map: &InstanceMap) -> Result<GrayImage> {
    let max = map.ids().iter().copied().max().unwrap_or(0);
    if max > u16::MAX as u32 {
        return Err(Error::InvalidData(format!(
            "{max} instances do not fit a 16-bit PGM"
        )));
    }
    Ok(GrayImage {
        width: map.width(),
        height: map.height(),
        maxval: if max <= 255 { 255 } else { u16::MAX },
        samples: map.ids().iter().map(|&id| id as u16).collect(),
    })
}

#[derive(Serialize)]
struct InstanceRecord<'a> {
    id: u32,
    label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
    mask_area: usize,
    detection_index: usize,
}

#[derive(Serialize)]
struct InstanceTable<'a> {
    width: usize,
    height: usize,
    instances: Vec<InstanceRecord<'a>>,
}

pub fn instance_table_json(map: &InstanceMap) -> String {
    let table = InstanceTable {
        width: map.width(),
        height: map.height(),
        instances: map
            .instances
            .iter()
            .map(|i| InstanceRecord {
                id: i.id,
                label: &i.label,
                score: i.score.filter(|s| s.is_finite()),
                x0: i.bbox.x0,
                y0: i.bbox.y0,
                x1: i.bbox.x1,
                y1: i.bbox.y1,
                mask_area: i.mask_area,
                detection_index: i.detection_index,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&table).expect("instance table serializes");
    text.push('\n');
    text
}

/// Where the instance table of an id map written to `path` goes.
pub fn instance_table_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the id map to `path` and its table next to it.
pub fn write_instance_map(map: &InstanceMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_pgm(&instance_map_to_gray(map)?, path)?;
    let table = instance_table_path(path);
    fs::write(&table, instance_table_json(map)).map_err(|e| Error::io(&table, e))
}

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

pub fn parse_annotations(text: &str) -> Result<AnnotationSet> {
    let file: AnnotationFile =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("annotation JSON: {e}")))?;
    let boxes = file
        .boxes
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.into_annotation(i))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnotationSet {
        image: file.image,
        boxes,
    })
}

pub fn annotations_to_json(set: &AnnotationSet) -> Result<String> {
    for (i, ann) in set.boxes.iter().enumerate() {
        check_score(i, ann.score)?;
    }
    let file = AnnotationFile {
        image: set.image.clone(),
        boxes: set
            .boxes
            .iter()
            .map(|a| AnnotationRecord {
                x0: a.bbox.x0 as i64,
                y0: a.bbox.y0 as i64,
                x1: a.bbox.x1 as i64,
                y1: a.bbox.y1 as i64,
                label: a.label.clone(),
                score: a.score,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("annotations serialize");
    text.push('\n');
    Ok(text)
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text)
}

pub fn write_annotations(set: &AnnotationSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = annotations_to_json(set)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
