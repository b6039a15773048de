//! Checkpoint files: `manifest.txt` (tensor table + metadata) plus
//! `weights.bin` (little-endian f32, manifest order). Bit-exact layout.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::nn::adam::AdamState;
use crate::nn::net::Params;
use crate::nn::NnError;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub params: Params<f32>,
    pub adam: AdamState<f32>,
    pub seed: u64,
    pub config_hash: u64,
}

const ADAM_M: &str = "adam.m.";
const ADAM_V: &str = "adam.v.";

impl ModelCheckpoint {
    pub fn new(params: Params<f32>, adam: AdamState<f32>, seed: u64, config_hash: u64) -> Self {
        ModelCheckpoint { params, adam, seed, config_hash }
    }

    pub fn save(&self, dir: &Path) -> Result<(), NnError> {
        fs::create_dir_all(dir)?;
        // Single ordered table: model params first, then optimizer tensors.
        let mut table: Vec<(String, &Tensor<f32>)> = Vec::new();
        for (k, v) in &self.params.tensors {
            table.push((k.clone(), v));
        }
        for (k, v) in &self.adam.m {
            table.push((format!("{ADAM_M}{k}"), v));
        }
        for (k, v) in &self.adam.v {
            table.push((format!("{ADAM_V}{k}"), v));
        }
        let mut manifest = String::new();
        manifest.push_str(&format!("seed={}\n", self.seed));
        manifest.push_str(&format!("config_hash={:016x}\n", self.config_hash));
        manifest.push_str(&format!("adam_step={}\n", self.adam.step));
        let mut bin: Vec<u8> = Vec::new();
        for (name, t) in &table {
            let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
            manifest.push_str(&format!("tensor {name} f32 {} {}\n", dims.join("x"), bin.len()));
            for &v in t.data() {
                bin.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(dir.join("manifest.txt"), manifest)?;
        let mut f = fs::File::create(dir.join("weights.bin"))?;
        f.write_all(&bin)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, NnError> {
        let manifest = fs::read_to_string(dir.join("manifest.txt"))?;
        let bin = fs::read(dir.join("weights.bin"))?;
        let mut seed = 0u64;
        let mut config_hash = 0u64;
        let mut step = 0u64;
        let mut tensors: BTreeMap<String, Tensor<f32>> = BTreeMap::new();
        let mut adam = AdamState::new();
        for line in manifest.lines() {
            if let Some(v) = line.strip_prefix("seed=") {
                seed = v.parse().map_err(|_| NnError::BadCheckpoint("bad seed".into()))?;
            } else if let Some(v) = line.strip_prefix("config_hash=") {
                config_hash =
                    u64::from_str_radix(v, 16).map_err(|_| NnError::BadCheckpoint("bad config_hash".into()))?;
            } else if let Some(v) = line.strip_prefix("adam_step=") {
                step = v.parse().map_err(|_| NnError::BadCheckpoint("bad adam_step".into()))?;
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "f32" {
                    return Err(NnError::BadCheckpoint(format!("bad tensor line: {line}")));
                }
                let name = parts[0];
                let shape: Vec<usize> = parts[2]
                    .split('x')
                    .map(|d| d.parse().map_err(|_| NnError::BadCheckpoint(format!("bad shape {line}"))))
                    .collect::<Result<_, _>>()?;
                let offset: usize =
                    parts[3].parse().map_err(|_| NnError::BadCheckpoint(format!("bad offset {line}")))?;
                let count: usize = shape.iter().product();
                let end = offset + 4 * count;
                if end > bin.len() {
                    return Err(NnError::BadCheckpoint(format!(
                        "tensor {name} spans bytes {offset}..{end}, file has {}",
                        bin.len()
                    )));
                }
                let data: Vec<f32> = bin[offset..end]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect();
                let t = Tensor::from_vec(&shape, data);
                if let Some(pname) = name.strip_prefix(ADAM_M) {
                    adam.m.insert(pname.to_string(), t);
                } else if let Some(pname) = name.strip_prefix(ADAM_V) {
                    adam.v.insert(pname.to_string(), t);
                } else {
                    tensors.insert(name.to_string(), t);
                }
            }
        }
        adam.step = step;
        Ok(ModelCheckpoint { params: Params { tensors }, adam, seed, config_hash })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = Params::new();
        params.tensors.insert("enc.0.weight".into(), Tensor::from_vec(&[2, 2], vec![1.0, -0.5, 0.25, 3.0]));
        params.tensors.insert("enc.0.bias".into(), Tensor::zeros(&[2]));
        let mut adam = AdamState::new();
        adam.step = 17;
        adam.m.insert("enc.0.weight".into(), Tensor::full(&[2, 2], 0.1));
        adam.v.insert("enc.0.weight".into(), Tensor::full(&[2, 2], 0.2));
        let ckpt = ModelCheckpoint::new(params, adam, 42, 0xdeadbeef);
        ckpt.save(dir.path()).unwrap();
        let loaded = ModelCheckpoint::load(dir.path()).unwrap();
        assert_eq!(ckpt, loaded);
    }

    #[test]
    fn save_is_bit_stable() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut params = Params::new();
        params.tensors.insert("net.0.weight".into(), Tensor::from_vec(&[3], vec![0.1, 0.2, 0.3]));
        let ckpt = ModelCheckpoint::new(params, AdamState::new(), 1, 2);
        ckpt.save(dir_a.path()).unwrap();
        ckpt.save(dir_b.path()).unwrap();
        assert_eq!(
            fs::read(dir_a.path().join("weights.bin")).unwrap(),
            fs::read(dir_b.path().join("weights.bin")).unwrap()
        );
        assert_eq!(
            fs::read(dir_a.path().join("manifest.txt")).unwrap(),
            fs::read(dir_b.path().join("manifest.txt")).unwrap()
        );
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = Params::new();
        params.tensors.insert("net.0.weight".into(), Tensor::from_vec(&[4], vec![1.0; 4]));
        let ckpt = ModelCheckpoint::new(params, AdamState::new(), 0, 0);
        ckpt.save(dir.path()).unwrap();
        let path = dir.path().join("weights.bin");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..8]).unwrap();
        assert!(ModelCheckpoint::load(dir.path()).is_err());
    }
}
