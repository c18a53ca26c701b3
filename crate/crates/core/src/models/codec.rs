//! Binary model files.
//!
//! Layout (all integers and floats little-endian, floats as IEEE-754 bits):
//!
//! ```text
//! magic    8 bytes  "LCMLMDL\0"
//! version  u32      1
//! kind     u8       1 = logistic regression, 2 = knn, 3 = random forest
//! payload
//! ```
//!
//! Logistic regression: `width u64`, `width` x `f64` weights, `bias f64`,
//! `converged u8`, `iters_used u64`.
//!
//! KNN: `k u64`, `rows u64`, `width u64`, `rows` x `u8` labels, then the
//! training matrix row-major as `rows * width` x `f64`.
//!
//! Random forest: `width u64`, `trees u64`, then per tree `nodes u64` and per
//! node a tag `u8` followed by either `feature u32, threshold f64, left u32,
//! right u32` (tag 0, split) or `count0 u64, count1 u64` (tag 1, leaf).

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{DecisionTree, ForestModel, KnnModel, LogRegModel, Node, TrainedModel};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"LCMLMDL\0";
pub const VERSION: u32 = 1;

const KIND_LOGREG: u8 = 1;
const KIND_KNN: u8 = 2;
const KIND_FOREST: u8 = 3;

pub fn encode(model: &TrainedModel) -> Vec<u8> {
    let mut out = Vec::new();
    write_model(model, &mut out).expect("writing to a Vec cannot fail");
    out
}

fn write_model<W: Write>(model: &TrainedModel, w: &mut W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    match model {
        TrainedModel::LogReg(m) => {
            w.write_u8(KIND_LOGREG)?;
            w.write_u64::<LE>(m.weights.len() as u64)?;
            for &v in &m.weights {
                w.write_f64::<LE>(v)?;
            }
            w.write_f64::<LE>(m.bias)?;
            w.write_u8(u8::from(m.converged))?;
            w.write_u64::<LE>(m.iters_used as u64)?;
        }
        TrainedModel::Knn(m) => {
            w.write_u8(KIND_KNN)?;
            w.write_u64::<LE>(m.k() as u64)?;
            w.write_u64::<LE>(m.rows().len() as u64)?;
            w.write_u64::<LE>(m.width() as u64)?;
            w.write_all(m.labels())?;
            for row in m.rows() {
                for &v in row {
                    w.write_f64::<LE>(v)?;
                }
            }
        }
        TrainedModel::Forest(m) => {
            w.write_u8(KIND_FOREST)?;
            w.write_u64::<LE>(m.width() as u64)?;
            w.write_u64::<LE>(m.trees().len() as u64)?;
            for tree in m.trees() {
                w.write_u64::<LE>(tree.nodes().len() as u64)?;
                for node in tree.nodes() {
                    match *node {
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            w.write_u8(0)?;
                            w.write_u32::<LE>(feature)?;
                            w.write_f64::<LE>(threshold)?;
                            w.write_u32::<LE>(left)?;
                            w.write_u32::<LE>(right)?;
                        }
                        Node::Leaf { counts } => {
                            w.write_u8(1)?;
                            w.write_u64::<LE>(counts[0])?;
                            w.write_u64::<LE>(counts[1])?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn truncated(_: std::io::Error) -> Error {
    Error::Format("model file is truncated".into())
}

/// Bounds a length field by the bytes left, so corrupt headers cannot
/// trigger huge allocations.
fn read_len(r: &mut Cursor<&[u8]>, elem_size: usize) -> Result<usize> {
    let n = r.read_u64::<LE>().map_err(truncated)?;
    let left = (r.get_ref().len() as u64).saturating_sub(r.position());
    if n.saturating_mul(elem_size as u64) > left {
        return Err(Error::Format(format!("length field {n} exceeds file size")));
    }
    Ok(n as usize)
}

pub fn decode(bytes: &[u8]) -> Result<TrainedModel> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = r.read_u32::<LE>().map_err(truncated)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let kind = r.read_u8().map_err(truncated)?;
    let model = match kind {
        KIND_LOGREG => {
            let width = read_len(&mut r, 8)?;
            let mut weights = vec![0.0; width];
            r.read_f64_into::<LE>(&mut weights).map_err(truncated)?;
            let bias = r.read_f64::<LE>().map_err(truncated)?;
            let converged = r.read_u8().map_err(truncated)? != 0;
            let iters_used = r.read_u64::<LE>().map_err(truncated)? as usize;
            TrainedModel::LogReg(LogRegModel {
                weights,
                bias,
                converged,
                iters_used,
            })
        }
        KIND_KNN => {
            let k = r.read_u64::<LE>().map_err(truncated)? as usize;
            let n = read_len(&mut r, 1)?;
            let width = r.read_u64::<LE>().map_err(truncated)? as usize;
            let mut labels = vec![0u8; n];
            r.read_exact(&mut labels).map_err(truncated)?;
            let left = (bytes.len() as u64).saturating_sub(r.position());
            if (n as u64).saturating_mul(width as u64).saturating_mul(8) > left {
                return Err(Error::Format("knn matrix exceeds file size".into()));
            }
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let mut row = vec![0.0; width];
                r.read_f64_into::<LE>(&mut row).map_err(truncated)?;
                rows.push(row);
            }
            TrainedModel::Knn(KnnModel::from_parts(rows, labels, k)?)
        }
        KIND_FOREST => {
            let width = r.read_u64::<LE>().map_err(truncated)? as usize;
            let n_trees = read_len(&mut r, 8)?;
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let n_nodes = read_len(&mut r, 17)?;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    let node = match r.read_u8().map_err(truncated)? {
                        0 => {
                            let feature = r.read_u32::<LE>().map_err(truncated)?;
                            if feature as usize >= width {
                                return Err(Error::Format(format!("split feature {feature} >= width {width}")));
                            }
                            Node::Split {
                                feature,
                                threshold: r.read_f64::<LE>().map_err(truncated)?,
                                left: r.read_u32::<LE>().map_err(truncated)?,
                                right: r.read_u32::<LE>().map_err(truncated)?,
                            }
                        }
                        1 => Node::Leaf {
                            counts: [
                                r.read_u64::<LE>().map_err(truncated)?,
                                r.read_u64::<LE>().map_err(truncated)?,
                            ],
                        },
                        tag => return Err(Error::Format(format!("unknown node tag {tag}"))),
                    };
                    nodes.push(node);
                }
                trees.push(DecisionTree::from_nodes(nodes)?);
            }
            TrainedModel::Forest(ForestModel::from_trees(trees, width)?)
        }
        other => return Err(Error::Format(format!("unknown model kind {other}"))),
    };
    if r.position() != bytes.len() as u64 {
        return Err(Error::Format("trailing bytes after model".into()));
    }
    Ok(model)
}

pub fn save(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
