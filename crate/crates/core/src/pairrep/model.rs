use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use super::mlp::Mlp;
use super::{ModelError, Result};
use crate::corpus::{MentionKind, Role, Task};

pub const MODEL_MAGIC: &[u8; 6] = b"PRLM1\n";

/// Parameters of both scoring networks.
///
/// `mlp1` maps a `3d` role-pair vector to one argument feature and is shared
/// by all four roles. `mlp2` maps the pair representation (`3d + 4` for
/// events, `3d` for entities) to two logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    pub task: Task,
    pub mlp1: Mlp,
    pub mlp2: Mlp,
}

pub fn pair_input_width(dim: usize, task: Task) -> usize {
    match task {
        MentionKind::Event => 3 * dim + Role::ALL.len(),
        MentionKind::Entity => 3 * dim,
    }
}

impl ModelParams {
    pub fn init(dim: usize, h1: usize, h2: usize, task: Task, rng: &mut impl Rng) -> Self {
        let mlp1 = Mlp::xavier(3 * dim, h1, 1, rng);
        let mlp2 = Mlp::xavier(pair_input_width(dim, task), h2, 2, rng);
        ModelParams { dim, task, mlp1, mlp2 }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams { dim: self.dim, task: self.task, mlp1: self.mlp1.zeros_like(), mlp2: self.mlp2.zeros_like() }
    }

    pub fn h1(&self) -> usize {
        self.mlp1.hidden
    }

    pub fn h2(&self) -> usize {
        self.mlp2.hidden
    }

    /// All parameter buffers in declaration order.
    pub fn tensors(&self) -> [&Vec<f64>; 8] {
        let [a, b, c, d] = self.mlp1.tensors();
        let [e, f, g, h] = self.mlp2.tensors();
        [a, b, c, d, e, f, g, h]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        let [a, b, c, d] = self.mlp1.tensors_mut();
        let [e, f, g, h] = self.mlp2.tensors_mut();
        [a, b, c, d, e, f, g, h]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_shapes(&self) -> Result<()> {
        let ok = self.dim > 0
            && self.mlp1.input == 3 * self.dim
            && self.mlp1.output == 1
            && self.mlp2.input == pair_input_width(self.dim, self.task)
            && self.mlp2.output == 2
            && self.mlp1.w1.len() == self.mlp1.hidden * self.mlp1.input
            && self.mlp2.w1.len() == self.mlp2.hidden * self.mlp2.input
            && self.mlp1.w2.len() == self.mlp1.hidden
            && self.mlp2.w2.len() == 2 * self.mlp2.hidden;
        if ok {
            Ok(())
        } else {
            Err(ModelError::Shape("model parameters are inconsistent with d, h1, h2 and task".into()))
        }
    }

    /// L2 norm of the first-layer `mlp2` weights reading each argument feature,
    /// in role order. `None` for entity models.
    pub fn argument_weights(&self) -> Option<[f64; 4]> {
        if self.task != MentionKind::Event {
            return None;
        }
        let base = 3 * self.dim;
        let m = &self.mlp2;
        Some(Role::ALL.map(|r| {
            (0..m.hidden).map(|h| m.w1[h * m.input + base + r.index()].powi(2)).sum::<f64>().sqrt()
        }))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.h1() as u32).to_le_bytes())?;
        w.write_all(&(self.h2() as u32).to_le_bytes())?;
        w.write_all(&[match self.task {
            MentionKind::Event => 0u8,
            MentionKind::Entity => 1u8,
        }])?;
        for t in self.tensors() {
            for v in t {
                w.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let fmt = |m: &str| ModelError::Format(m.to_string());
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic).map_err(|_| fmt("truncated header"))?;
        if &magic != MODEL_MAGIC {
            return Err(fmt("bad magic"));
        }
        let mut u32buf = [0u8; 4];
        let mut next_u32 = |r: &mut dyn Read| -> Result<usize> {
            r.read_exact(&mut u32buf).map_err(|_| ModelError::Format("truncated header".into()))?;
            Ok(u32::from_le_bytes(u32buf) as usize)
        };
        let dim = next_u32(r)?;
        let h1 = next_u32(r)?;
        let h2 = next_u32(r)?;
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind).map_err(|_| fmt("truncated header"))?;
        let task = match kind[0] {
            0 => MentionKind::Event,
            1 => MentionKind::Entity,
            k => return Err(ModelError::Format(format!("unknown task kind {k}"))),
        };
        if dim == 0 || h1 == 0 || h2 == 0 {
            return Err(fmt("zero-sized layer"));
        }
        let mut p = ModelParams {
            dim,
            task,
            mlp1: Mlp::zeros(3 * dim, h1, 1),
            mlp2: Mlp::zeros(pair_input_width(dim, task), h2, 2),
        };
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                let mut b = [0u8; 4];
                r.read_exact(&mut b).map_err(|_| ModelError::Format("truncated weights".into()))?;
                *v = f32::from_le_bytes(b) as f64;
            }
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(fmt("trailing bytes after weights"));
        }
        if !p.is_finite() {
            return Err(fmt("non-finite weight"));
        }
        p.check_shapes()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
