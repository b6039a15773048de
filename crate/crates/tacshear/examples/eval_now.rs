use tacshear::dataset::{Dataset, Split};
use tacshear::eval::image_tensor;
use tacshear::metrics::{ms_ssim, mse, SsimConfig};
use tacshear::models::{ArchConfig, UnshearModel, Variant};
use tacshear::nn::ModelCheckpoint;

fn main() {
    let ds = Dataset::open(std::path::Path::new("/root/artifacts/data/paired")).unwrap();
    let pairs = ds.paired_split(Split::Test);
    let em = UnshearModel::new(Variant::Entangled, ArchConfig::desk());
    let ec = ModelCheckpoint::load(std::path::Path::new("/root/artifacts/entangled")).unwrap();
    let cfg = SsimConfig::default();
    let (mut s_raw, mut s_out, mut m_out) = (0.0, 0.0, 0.0);
    let n = 40.min(pairs.len());
    for p in &pairs[..n] {
        let tap = image_tensor(&p.canonical.raster);
        let sheared = image_tensor(&p.sheared.raster);
        let out = em.unshear(&ec.params, &sheared).unwrap();
        s_raw += ms_ssim(&tap, &sheared, &cfg);
        s_out += ms_ssim(&tap, &out, &cfg);
        m_out += mse(&tap, &out);
    }
    println!("n {n} ssim sheared {:.3} ent {:.3} mse {:.4}", s_raw / n as f64, s_out / n as f64, m_out / n as f64);
    let tap = image_tensor(&pairs[0].canonical.raster);
    let lit: f32 = tap.data().iter().sum::<f32>() / tap.len() as f32;
    println!("lit fraction {lit:.3}");
}
