use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{he_init, LayerParams, ModelParams, NetworkSpec, Tensor};
use crate::codec::{Standardizer, FEATURE_DIM};
use crate::vision::CropRegion;
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"V2SM";
pub const MODEL_VERSION: u32 = 1;

/// Layout, all little-endian:
/// magic, u32 version, string descriptor, string crop, 18 means, 18 stds,
/// f64 target_scale, u64 step, then per parameterized layer the weight,
/// bias, two first moments and two second moments as raw f64 runs.
/// Strings are a u32 byte length followed by UTF-8.
pub fn write_model(params: &ModelParams, out: &mut impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + params.param_count() * 24);
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    put_str(&mut buf, &params.spec.descriptor());
    put_str(&mut buf, params.crop.as_str());
    for v in params.standardizer.mean.iter().chain(&params.standardizer.std) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&params.target_scale.to_le_bytes());
    buf.extend_from_slice(&params.step.to_le_bytes());
    let groups = params
        .layers
        .iter()
        .zip(&params.first_moment)
        .zip(&params.second_moment);
    for ((p, m), v) in groups {
        match (p, m, v) {
            (Some(p), Some(m), Some(v)) => {
                for t in [&p.weight, &p.bias, &m.weight, &m.bias, &v.weight, &v.bias] {
                    for x in t.data() {
                        buf.extend_from_slice(&x.to_le_bytes());
                    }
                }
            }
            (None, None, None) => {}
            _ => return Err(Error::ModelFormat("moment layout does not match weights".into())),
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn save_model(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path.as_ref())?;
    write_model(params, &mut f)?;
    f.sync_all()?;
    Ok(())
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::ModelFormat(format!(
                "truncated model file: wanted {n} bytes at offset {}, {} left",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::ModelFormat("string field is not UTF-8".into()))
    }

    fn fill(&mut self, t: &mut Tensor) -> Result<()> {
        let raw = self.take(t.len() * 8)?;
        for (d, c) in t.data_mut().iter_mut().zip(raw.chunks_exact(8)) {
            *d = f64::from_le_bytes(c.try_into().expect("8 bytes"));
        }
        Ok(())
    }
}

pub fn read_model(input: &mut impl Read) -> Result<ModelParams> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(4).ok() != Some(&MODEL_MAGIC[..]) {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelVersion {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let spec = NetworkSpec::parse_descriptor(&c.string()?)?;
    let crop: CropRegion = c
        .string()?
        .parse()
        .map_err(|_| Error::ModelFormat("unknown crop region".into()))?;
    let mut standardizer = Standardizer::identity();
    for i in 0..FEATURE_DIM {
        standardizer.mean[i] = c.f64()?;
    }
    for i in 0..FEATURE_DIM {
        standardizer.std[i] = c.f64()?;
    }
    let target_scale = c.f64()?;
    let step = c.u64()?;

    // he_init supplies correctly shaped tensors; every value is overwritten
    let mut params = he_init(&spec, 0)?;
    params.crop = crop;
    params.standardizer = standardizer;
    params.target_scale = target_scale;
    params.step = step;
    let ModelParams {
        layers,
        first_moment,
        second_moment,
        ..
    } = &mut params;
    for ((p, m), v) in layers.iter_mut().zip(first_moment).zip(second_moment) {
        let (Some(p), Some(m), Some(v)) = (p, m, v) else { continue };
        let LayerParams { weight, bias } = p;
        c.fill(weight)?;
        c.fill(bias)?;
        c.fill(&mut m.weight)?;
        c.fill(&mut m.bias)?;
        c.fill(&mut v.weight)?;
        c.fill(&mut v.bias)?;
    }
    if c.pos != bytes.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - c.pos
        )));
    }
    Ok(params)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams> {
    let mut f = fs::File::open(path.as_ref())?;
    read_model(&mut f)
}
