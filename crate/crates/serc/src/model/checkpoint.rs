//! Binary checkpoint container.
//!
//! Layout: 8-byte magic `SERCCKP1`, a little-endian u32 JSON header length,
//! the JSON header, then one record per tensor in header-manifest order:
//! u32 name length, the UTF-8 name, u32 rows, u32 cols, then rows*cols
//! `f32` values little-endian in row-major order.
//!
//! Malformed structure (bad magic, bad JSON, manifest mismatch) is a
//! `Format` error; a file that parses but ends early or disagrees with its
//! own manifest is a `Corruption` error.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSet, TagInventory, TagKind};
use crate::error::{Result, SercError};
use crate::nn::{Matrix, ParamAccess, Scalar};

use super::joint::JointModel;
use super::serc::{SercConfig, SercModel};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SERCCKP1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    rows: u32,
    cols: u32,
}

/// Everything needed to rebuild one single-task model except the weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelMeta {
    config: SercConfig,
    labels: LabelSet,
    pos_tags: Vec<String>,
    dep_tags: Vec<String>,
    vocab_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ModelMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temporal: Option<ModelMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    causal: Option<ModelMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint_hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frozen: Option<bool>,
    provenance: serde_json::Value,
    tensors: Vec<TensorMeta>,
}

fn model_meta<F: Scalar>(m: &SercModel<F>) -> ModelMeta {
    ModelMeta {
        config: m.config.clone(),
        labels: m.labels.clone(),
        pos_tags: m.pos_inv.tags().to_vec(),
        dep_tags: m.dep_inv.tags().to_vec(),
        vocab_digest: m.vocab_digest.clone(),
    }
}

fn meta_to_model<F: Scalar>(meta: &ModelMeta) -> Result<SercModel<F>> {
    SercModel::zeros(
        meta.config.clone(),
        meta.labels.clone(),
        TagInventory::from_tags(TagKind::Pos, meta.pos_tags.clone()),
        TagInventory::from_tags(TagKind::Dep, meta.dep_tags.clone()),
        meta.vocab_digest.clone(),
    )
}

fn write_container<F: Scalar>(
    path: &Path,
    header: &Header,
    tensors: &[(String, &Matrix<F>)],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(CHECKPOINT_MAGIC)?;
    let header_json = serde_json::to_vec(header)?;
    out.write_all(&(header_json.len() as u32).to_le_bytes())?;
    out.write_all(&header_json)?;
    for (name, tensor) in tensors {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(tensor.rows() as u32).to_le_bytes())?;
        out.write_all(&(tensor.cols() as u32).to_le_bytes())?;
        for v in tensor.data() {
            out.write_all(&v.as_f32().to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| SercError::Corruption(format!("checkpoint truncated reading {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_container(path: &Path) -> Result<(Header, Vec<(String, Matrix<f32>)>)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)
        .map_err(|_| SercError::Format("file too short for checkpoint magic".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(SercError::Format(format!(
            "bad checkpoint magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let header_len = read_u32(&mut file, "header length")? as usize;
    let mut header_json = vec![0u8; header_len];
    file.read_exact(&mut header_json)
        .map_err(|_| SercError::Corruption("checkpoint truncated in header".into()))?;
    let header: Header = serde_json::from_slice(&header_json)
        .map_err(|e| SercError::Format(format!("bad checkpoint header: {e}")))?;

    let mut tensors = Vec::with_capacity(header.tensors.len());
    for meta in &header.tensors {
        let name_len = read_u32(&mut file, "tensor name length")? as usize;
        let mut name_buf = vec![0u8; name_len];
        file.read_exact(&mut name_buf)
            .map_err(|_| SercError::Corruption("checkpoint truncated in tensor name".into()))?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| SercError::Format("tensor name is not UTF-8".into()))?;
        let rows = read_u32(&mut file, "tensor rows")? as usize;
        let cols = read_u32(&mut file, "tensor cols")? as usize;
        if name != meta.name || rows != meta.rows as usize || cols != meta.cols as usize {
            return Err(SercError::Corruption(format!(
                "tensor record {name} ({rows}x{cols}) disagrees with manifest entry {} ({}x{})",
                meta.name, meta.rows, meta.cols
            )));
        }
        let mut data = vec![0f32; rows * cols];
        for v in &mut data {
            let mut buf = [0u8; 4];
            file.read_exact(&mut buf).map_err(|_| {
                SercError::Corruption(format!("checkpoint truncated in tensor {name}"))
            })?;
            *v = f32::from_le_bytes(buf);
        }
        tensors.push((name, Matrix::from_vec(rows, cols, data)?));
    }
    let mut trailing = [0u8; 1];
    if file.read(&mut trailing)? != 0 {
        return Err(SercError::Corruption(
            "checkpoint has trailing bytes after last tensor".into(),
        ));
    }
    Ok((header, tensors))
}

fn manifest<F: Scalar>(tensors: &[(String, &Matrix<F>)]) -> Vec<TensorMeta> {
    tensors
        .iter()
        .map(|(name, m)| TensorMeta {
            name: name.clone(),
            rows: m.rows() as u32,
            cols: m.cols() as u32,
        })
        .collect()
}

/// Assign loaded tensors into a freshly shaped model, by name.
fn fill_tensors<F: Scalar>(
    targets: Vec<(String, &mut Matrix<F>)>,
    loaded: Vec<(String, Matrix<f32>)>,
) -> Result<()> {
    let mut by_name: std::collections::HashMap<String, Matrix<f32>> =
        loaded.into_iter().collect();
    for (name, target) in targets {
        let src = by_name.remove(&name).ok_or_else(|| {
            SercError::Format(format!("checkpoint is missing tensor {name}"))
        })?;
        if src.rows() != target.rows() || src.cols() != target.cols() {
            return Err(SercError::Format(format!(
                "tensor {name} is {}x{}, model expects {}x{}",
                src.rows(),
                src.cols(),
                target.rows(),
                target.cols()
            )));
        }
        *target = src.cast();
    }
    if let Some(name) = by_name.keys().next() {
        return Err(SercError::Format(format!(
            "checkpoint has unexpected tensor {name}"
        )));
    }
    Ok(())
}

pub fn save_checkpoint<F: Scalar>(
    model: &SercModel<F>,
    path: impl AsRef<Path>,
    provenance: serde_json::Value,
) -> Result<()> {
    let tensors = model.tensors();
    let header = Header {
        kind: "serc".into(),
        model: Some(model_meta(model)),
        temporal: None,
        causal: None,
        joint_hidden: None,
        frozen: None,
        provenance,
        tensors: manifest(&tensors),
    };
    write_container(path.as_ref(), &header, &tensors)
}

pub fn load_checkpoint<F: Scalar>(path: impl AsRef<Path>) -> Result<SercModel<F>> {
    let (header, tensors) = read_container(path.as_ref())?;
    if header.kind != "serc" {
        return Err(SercError::Format(format!(
            "checkpoint kind {:?}, expected a single-task model",
            header.kind
        )));
    }
    let meta = header
        .model
        .as_ref()
        .ok_or_else(|| SercError::Format("single-task checkpoint without model metadata".into()))?;
    let mut model = meta_to_model::<F>(meta)?;
    fill_tensors(model.tensors_mut(), tensors)?;
    Ok(model)
}

pub fn save_joint_checkpoint<F: Scalar>(
    model: &JointModel<F>,
    path: impl AsRef<Path>,
    provenance: serde_json::Value,
) -> Result<()> {
    let tensors = model.all_tensors();
    let header = Header {
        kind: "joint".into(),
        model: None,
        temporal: Some(model_meta(&model.temporal)),
        causal: Some(model_meta(&model.causal)),
        joint_hidden: Some(model.head_hidden.out_dim()),
        frozen: Some(model.frozen),
        provenance,
        tensors: manifest(&tensors),
    };
    write_container(path.as_ref(), &header, &tensors)
}

pub fn load_joint_checkpoint<F: Scalar>(path: impl AsRef<Path>) -> Result<JointModel<F>> {
    let (header, tensors) = read_container(path.as_ref())?;
    if header.kind != "joint" {
        return Err(SercError::Format(format!(
            "checkpoint kind {:?}, expected a joint model",
            header.kind
        )));
    }
    let (temporal_meta, causal_meta) = match (&header.temporal, &header.causal) {
        (Some(t), Some(c)) => (t, c),
        _ => {
            return Err(SercError::Format(
                "joint checkpoint without encoder metadata".into(),
            ))
        }
    };
    let temporal = meta_to_model::<F>(temporal_meta)?;
    let causal = meta_to_model::<F>(causal_meta)?;
    let hidden = header
        .joint_hidden
        .ok_or_else(|| SercError::Format("joint checkpoint without head size".into()))?;
    let mut model = JointModel::init(
        temporal,
        causal,
        hidden,
        0,
        header.frozen.unwrap_or(true),
    )?;
    for (_, tensor) in model.all_tensors_mut() {
        tensor.scale(F::zero());
    }
    fill_tensors(model.all_tensors_mut(), tensors)?;
    Ok(model)
}
