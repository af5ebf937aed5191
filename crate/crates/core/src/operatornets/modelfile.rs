//! Model files.
//!
//! Layout (little-endian): magic `CSNETMOD` (8 bytes), version `u32`,
//! architecture tag `u8` (0 deeponet, 1 pod, 2 msdeeponet, 3 causality,
//! 4 causality_noconv), the architecture payload, and an FNV-1a 64 checksum
//! of all preceding bytes. Networks inside the payload are stored as
//! complete network checkpoint records.
//!
//! Payloads:
//!
//! * deeponet: `dt: f64`, `output_bias: f64`, `train_bias: u8`, branch, trunk
//! * pod: `p: u32`, `m: u32`, mean (`m` × f64), basis (`p·m` × f64, row-major),
//!   singular values (`p` × f64), branch
//! * msdeeponet: `dt`, `output_bias`, `train_bias`, `S: u32`, scales (`S` ×
//!   f64), combination weights (`S` × f64), branch, `S` subnets
//! * causality, causality_noconv: `dt`, `output_bias`, `train_bias`, branch,
//!   trunk

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};

use super::{
    Architecture, CausalityModel, DeepOnetModel, MsDeepOnetModel, MsTrunk, Operator, PodBasis,
    PodDeepOnetModel,
};
use crate::error::{Error, Result};
use crate::neuralcore::{read_mlp, write_mlp, Mlp};

pub const MODEL_MAGIC: &[u8; 8] = b"CSNETMOD";
pub const MODEL_VERSION: u32 = 1;

/// Any of the supported models.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    DeepOnet(DeepOnetModel),
    Pod(PodDeepOnetModel),
    MsDeepOnet(MsDeepOnetModel),
    Causality(CausalityModel),
}

impl AnyModel {
    pub fn architecture(&self) -> Architecture {
        match self {
            AnyModel::DeepOnet(m) => m.architecture(),
            AnyModel::Pod(m) => m.architecture(),
            AnyModel::MsDeepOnet(m) => m.architecture(),
            AnyModel::Causality(m) => m.architecture(),
        }
    }

    pub fn signal_len(&self) -> usize {
        match self {
            AnyModel::DeepOnet(m) => m.signal_len(),
            AnyModel::Pod(m) => m.signal_len(),
            AnyModel::MsDeepOnet(m) => m.signal_len(),
            AnyModel::Causality(m) => m.signal_len(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            AnyModel::DeepOnet(m) => m.params().len(),
            AnyModel::Pod(m) => m.params().len(),
            AnyModel::MsDeepOnet(m) => m.params().len(),
            AnyModel::Causality(m) => m.params().len(),
        }
    }

    pub fn predict(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        match self {
            AnyModel::DeepOnet(m) => m.predict(inputs),
            AnyModel::Pod(m) => m.predict(inputs),
            AnyModel::MsDeepOnet(m) => m.predict(inputs),
            AnyModel::Causality(m) => m.predict(inputs),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.push(self.architecture().tag());
        let f = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_le_bytes());
        let u = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
        match self {
            AnyModel::DeepOnet(m) => {
                f(&mut out, m.dt);
                f(&mut out, m.output_bias);
                out.push(m.train_bias as u8);
                write_mlp(&m.branch, &mut out);
                write_mlp(&m.trunk, &mut out);
            }
            AnyModel::Pod(m) => {
                let (p, len) = m.pod.basis.dim();
                u(&mut out, p);
                u(&mut out, len);
                m.pod.mean.iter().for_each(|&v| f(&mut out, v));
                m.pod.basis.iter().for_each(|&v| f(&mut out, v));
                m.pod.singular_values.iter().for_each(|&v| f(&mut out, v));
                write_mlp(&m.branch, &mut out);
            }
            AnyModel::MsDeepOnet(m) => {
                f(&mut out, m.dt);
                f(&mut out, m.output_bias);
                out.push(m.train_bias as u8);
                u(&mut out, m.trunk.scales.len());
                m.trunk.scales.iter().for_each(|&v| f(&mut out, v));
                m.trunk.combo_weights.iter().for_each(|&v| f(&mut out, v));
                write_mlp(&m.branch, &mut out);
                for s in &m.trunk.subnets {
                    write_mlp(s, &mut out);
                }
            }
            AnyModel::Causality(m) => {
                f(&mut out, m.dt);
                f(&mut out, m.output_bias);
                out.push(m.train_bias as u8);
                write_mlp(&m.branch, &mut out);
                write_mlp(&m.trunk, &mut out);
            }
        }
        let sum = crate::neuralcore::fnv1a_pub(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        if buf.len() < 8 + 4 + 1 + 8 || &buf[..8] != MODEL_MAGIC {
            return Err(Error::BadCheckpoint("not a model file".into()));
        }
        let body = &buf[..buf.len() - 8];
        let stored = u64::from_le_bytes(buf[buf.len() - 8..].try_into().unwrap());
        let computed = crate::neuralcore::fnv1a_pub(body);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let mut r = Cursor { buf: body, pos: 8 };
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::BadCheckpoint(format!("unsupported model version {version}")));
        }
        let tag = r.byte()?;
        let arch = Architecture::from_tag(tag).ok_or_else(|| Error::BadCheckpoint(format!("unknown architecture tag {tag}")))?;
        let model = match arch {
            Architecture::DeepOnet => {
                let (dt, bias, train_bias) = (r.f64()?, r.f64()?, r.byte()? != 0);
                let mut m = DeepOnetModel::from_parts(r.mlp()?, r.mlp()?, dt)?;
                m.output_bias = bias;
                m.train_bias = train_bias;
                AnyModel::DeepOnet(m)
            }
            Architecture::Pod => {
                let p = r.u32()? as usize;
                let len = r.u32()? as usize;
                let mean = Array1::from(r.f64s(len)?);
                let basis = Array2::from_shape_vec((p, len), r.f64s(p * len)?)
                    .map_err(|e| Error::BadCheckpoint(e.to_string()))?;
                let singular_values = r.f64s(p)?;
                AnyModel::Pod(PodDeepOnetModel::from_parts(r.mlp()?, PodBasis { mean, basis, singular_values })?)
            }
            Architecture::MsDeepOnet => {
                let (dt, bias, train_bias) = (r.f64()?, r.f64()?, r.byte()? != 0);
                let s = r.u32()? as usize;
                let scales = r.f64s(s)?;
                let combo = r.f64s(s)?;
                let branch = r.mlp()?;
                let subnets = (0..s).map(|_| r.mlp()).collect::<Result<Vec<_>>>()?;
                let mut m = MsDeepOnetModel::from_parts(branch, MsTrunk::from_parts(subnets, scales, combo)?, dt)?;
                m.output_bias = bias;
                m.train_bias = train_bias;
                AnyModel::MsDeepOnet(m)
            }
            Architecture::Causality | Architecture::CausalityNoConv => {
                let (dt, bias, train_bias) = (r.f64()?, r.f64()?, r.byte()? != 0);
                let conv = arch == Architecture::Causality;
                let mut m = CausalityModel::from_parts(r.mlp()?, r.mlp()?, conv, dt)?;
                m.output_bias = bias;
                m.train_bias = train_bias;
                AnyModel::Causality(m)
            }
        };
        if r.pos != body.len() {
            return Err(Error::BadCheckpoint(format!("{} trailing bytes", body.len() - r.pos)));
        }
        Ok(model)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::BadCheckpoint("unexpected end of model file".into()));
        }
        self.pos += n;
        Ok(&self.buf[self.pos - n..self.pos])
    }

    fn byte(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        if n > self.buf.len() {
            return Err(Error::BadCheckpoint("implausible array length".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn mlp(&mut self) -> Result<Mlp> {
        let (net, used) = read_mlp(&self.buf[self.pos..])?;
        self.pos += used;
        Ok(net)
    }
}

pub fn save_model(model: &AnyModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model.to_bytes())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AnyModel> {
    AnyModel::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralcore::Activation;
    use crate::operatornets::{default_scales, pod_basis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_architecture_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((4, 10), |_| rng.gen_range(-1.0..1.0));
        let mut deeponet = DeepOnetModel::new(&[10, 5, 4], &[1, 5, 4], Activation::Tanh, 0.1, &mut rng).unwrap();
        deeponet.train_bias = true;
        deeponet.output_bias = 0.25;
        let models = [AnyModel::DeepOnet(deeponet),
            AnyModel::Pod(
                PodDeepOnetModel::new(&[10, 5, 3], Activation::Sin, pod_basis(x.view(), 3).unwrap(), &mut rng).unwrap(),
            ),
            AnyModel::MsDeepOnet(
                MsDeepOnetModel::new(&[10, 5, 4], &[1, 3, 4], default_scales(3), Activation::Relu, 0.1, &mut rng)
                    .unwrap(),
            ),
            AnyModel::Causality(
                CausalityModel::new(&[10, 5, 4], &[1, 5, 4], Activation::ShiftedSigmoid, true, 0.1, &mut rng).unwrap(),
            ),
            AnyModel::Causality(
                CausalityModel::new(&[10, 5, 4], &[1, 5, 4], Activation::Sigmoid, false, 0.1, &mut rng).unwrap(),
            )];
        for (model, arch) in models.iter().zip(Architecture::ALL) {
            assert_eq!(model.architecture(), arch);
            let bytes = model.to_bytes();
            let back = AnyModel::from_bytes(&bytes).unwrap();
            assert_eq!(&back, model);
            assert_eq!(back.predict(x.view()).unwrap(), model.predict(x.view()).unwrap());
            let mut bad = bytes.clone();
            bad[20] ^= 0x10;
            assert!(AnyModel::from_bytes(&bad).is_err());
        }
    }
}
