//! Plain-text model files.
//!
//! ```text
//! calibforge-model v1
//! layer_sizes=295,256,256,2
//! du_head=false
//! activation=relu
//! meta.<key>=<value>
//! input_norm.shift=<v>,<v>,...
//! input_norm.scale=<v>,<v>,...
//! layer.0.weight=<rows>x<cols>:<row-major values>
//! layer.0.bias=<len>:<values>
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every parameter bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{InputNorm, ModelParams};
use crate::error::{Error, Result};

pub const MODEL_HEADER: &str = "calibforge-model v1";

/// Model parameters plus free-form metadata (training settings, version).
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub meta: BTreeMap<String, String>,
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v}");
    }
    s
}

fn parse_values(s: &str, line: usize) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| {
            v.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("bad number {v:?}: {e}"),
            })
        })
        .collect()
}

impl SavedModel {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            meta: BTreeMap::new(),
        }
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_HEADER}");
        let sizes: Vec<String> = p.layer_sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "layer_sizes={}", sizes.join(","));
        let _ = writeln!(s, "du_head={}", p.du_head);
        let _ = writeln!(s, "activation=relu");
        for (k, v) in &self.meta {
            let _ = writeln!(s, "meta.{k}={v}");
        }
        if let Some(norm) = &p.input_norm {
            let _ = writeln!(s, "input_norm.shift={}", join(norm.shift.iter().copied()));
            let _ = writeln!(s, "input_norm.scale={}", join(norm.scale.iter().copied()));
        }
        for (i, l) in p.layers.iter().enumerate() {
            let _ = writeln!(
                s,
                "layer.{i}.weight={}x{}:{}",
                l.weight.nrows(),
                l.weight.ncols(),
                join(l.weight.iter().copied())
            );
            let _ = writeln!(
                s,
                "layer.{i}.bias={}:{}",
                l.bias.len(),
                join(l.bias.iter().copied())
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == MODEL_HEADER => {}
            Some((_, h)) => {
                return Err(Error::ModelFormat(format!(
                    "unsupported header {h:?}, expected {MODEL_HEADER:?}"
                )))
            }
            None => return Err(Error::ModelFormat("empty model file".into())),
        }

        let mut sizes: Option<Vec<usize>> = None;
        let mut du_head: Option<bool> = None;
        let mut meta = BTreeMap::new();
        let mut shift = None;
        let mut scale = None;
        let mut weights: BTreeMap<usize, Array2<f64>> = BTreeMap::new();
        let mut biases: BTreeMap<usize, Array1<f64>> = BTreeMap::new();

        for (idx, raw) in lines {
            let line = idx + 1;
            let raw = raw.trim_end();
            if raw.is_empty() {
                continue;
            }
            let (key, value) = raw.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: "expected key=value".into(),
            })?;
            let bad = |message: String| Error::Parse { line, message };
            match key {
                "layer_sizes" => {
                    sizes = Some(
                        value
                            .split(',')
                            .map(|v| v.parse::<usize>().map_err(|e| bad(e.to_string())))
                            .collect::<Result<_>>()?,
                    )
                }
                "du_head" => du_head = Some(value.parse::<bool>().map_err(|e| bad(e.to_string()))?),
                "activation" if value == "relu" => {}
                "activation" => return Err(bad(format!("unsupported activation {value:?}"))),
                "input_norm.shift" => shift = Some(parse_values(value, line)?),
                "input_norm.scale" => scale = Some(parse_values(value, line)?),
                _ if key.starts_with("meta.") => {
                    meta.insert(key["meta.".len()..].to_string(), value.to_string());
                }
                _ if key.starts_with("layer.") => {
                    let rest = &key["layer.".len()..];
                    let (index, kind) = rest
                        .split_once('.')
                        .ok_or_else(|| bad(format!("bad layer key {key:?}")))?;
                    let index: usize = index.parse().map_err(|_| bad(format!("bad layer key {key:?}")))?;
                    let (shape, data) = value
                        .split_once(':')
                        .ok_or_else(|| bad("missing shape prefix".into()))?;
                    let data = parse_values(data, line)?;
                    match kind {
                        "weight" => {
                            let (r, c) = shape
                                .split_once('x')
                                .ok_or_else(|| bad(format!("bad shape {shape:?}")))?;
                            let r: usize = r.parse().map_err(|_| bad(format!("bad shape {shape:?}")))?;
                            let c: usize = c.parse().map_err(|_| bad(format!("bad shape {shape:?}")))?;
                            let w = Array2::from_shape_vec((r, c), data)
                                .map_err(|e| bad(format!("weight shape: {e}")))?;
                            weights.insert(index, w);
                        }
                        "bias" => {
                            let n: usize = shape.parse().map_err(|_| bad(format!("bad shape {shape:?}")))?;
                            if data.len() != n {
                                return Err(bad(format!("bias declares {n} values, has {}", data.len())));
                            }
                            biases.insert(index, Array1::from(data));
                        }
                        _ => return Err(bad(format!("unknown layer field {kind:?}"))),
                    }
                }
                _ => return Err(bad(format!("unknown key {key:?}"))),
            }
        }

        let sizes = sizes.ok_or_else(|| Error::ModelFormat("missing layer_sizes".into()))?;
        let du_head = du_head.ok_or_else(|| Error::ModelFormat("missing du_head".into()))?;
        let mut params = ModelParams::zeros(&sizes, du_head)?;
        for (i, layer) in params.layers.iter_mut().enumerate() {
            let w = weights
                .remove(&i)
                .ok_or_else(|| Error::ModelFormat(format!("missing layer.{i}.weight")))?;
            let b = biases
                .remove(&i)
                .ok_or_else(|| Error::ModelFormat(format!("missing layer.{i}.bias")))?;
            if w.dim() != layer.weight.dim() || b.len() != layer.bias.len() {
                return Err(Error::ModelFormat(format!(
                    "layer {i} has shape {:?}/{}, expected {:?}/{}",
                    w.dim(),
                    b.len(),
                    layer.weight.dim(),
                    layer.bias.len()
                )));
            }
            layer.weight = w;
            layer.bias = b;
        }
        if !weights.is_empty() || !biases.is_empty() {
            return Err(Error::ModelFormat("extra layers beyond layer_sizes".into()));
        }
        params.input_norm = match (shift, scale) {
            (Some(shift), Some(scale)) => {
                if shift.len() != params.input_width() || scale.len() != params.input_width() {
                    return Err(Error::ModelFormat("input_norm width mismatch".into()));
                }
                Some(InputNorm { shift, scale })
            }
            (None, None) => None,
            _ => return Err(Error::ModelFormat("input_norm needs both shift and scale".into())),
        };
        if !params.is_finite() {
            return Err(Error::ModelFormat("non-finite parameter".into()));
        }
        Ok(Self { params, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
