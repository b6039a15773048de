use std::collections::HashMap;
use std::path::Path;
use tacshear::dataset::{Dataset, Split};
use tacshear::eval::image_tensor;
use tacshear::metrics::{ms_ssim, SsimConfig};
use tacshear::tensor::Tensor;

fn main() {
    let ds = Dataset::open(Path::new("/root/artifacts/data2/paired")).unwrap();
    let cfg = SsimConfig::default();
    let test = ds.paired_split(Split::Test);

    // same-pose tap vs tap: group canonical rasters by (stimulus, pose bits)
    let mut groups: HashMap<(u16, [u64; 4]), Vec<Tensor<f32>>> = HashMap::new();
    for p in &test {
        let k = (
            p.stimulus_id,
            [
                p.pose.x_mm.to_bits(),
                p.pose.y_mm.to_bits(),
                p.pose.depth_mm.to_bits(),
                p.pose.yaw_deg.to_bits(),
            ],
        );
        groups.entry(k).or_default().push(image_tensor(&p.canonical.raster));
    }
    let (mut s_tt, mut n_tt) = (0.0, 0);
    for g in groups.values() {
        for i in 1..g.len() {
            if g[i].data() != g[0].data() {
                s_tt += ms_ssim(&g[0], &g[i], &cfg);
                n_tt += 1;
            }
        }
    }
    println!("tap-tap same pose (distinct instances): ssim {:.3} n {}", s_tt / n_tt.max(1) as f64, n_tt);

    // per-shape mean canonical template from TRAIN, scored on TEST
    let train = ds.paired_split(Split::Train);
    let mut mean: HashMap<u16, (Vec<f64>, usize)> = HashMap::new();
    for p in &train {
        let img = image_tensor(&p.canonical.raster);
        let e = mean.entry(p.stimulus_id).or_insert_with(|| (vec![0.0; img.data().len()], 0));
        for (a, &b) in e.0.iter_mut().zip(img.data()) {
            *a += b as f64;
        }
        e.1 += 1;
    }
    let tmpl: HashMap<u16, Tensor<f32>> = mean
        .into_iter()
        .map(|(k, (v, n))| {
            (k, Tensor::from_vec(&[64, 64], v.iter().map(|&x| (x / n as f64) as f32).collect::<Vec<f32>>()))
        })
        .collect();
    let (mut s_m, mut mse_m, mut n_m) = (0.0, 0.0, 0);
    for p in &test[..200.min(test.len())] {
        let canon = image_tensor(&p.canonical.raster);
        let t = &tmpl[&p.stimulus_id];
        s_m += ms_ssim(&canon, t, &cfg);
        mse_m += t
            .data()
            .iter()
            .zip(canon.data())
            .map(|(&a, &b)| ((a - b) as f64).powi(2))
            .sum::<f64>()
            / t.data().len() as f64;
        n_m += 1;
    }
    println!("per-shape mean template: ssim {:.3} mse {:.4} n {}", s_m / n_m as f64, mse_m / n_m as f64, n_m);

    // binarized template at 0.5, same scoring
    let (mut s_b, mut n_b) = (0.0, 0);
    for p in &test[..200.min(test.len())] {
        let canon = image_tensor(&p.canonical.raster);
        let t = &tmpl[&p.stimulus_id];
        let tb = Tensor::from_vec(&[64, 64], t.data().iter().map(|&v| if v > 0.5 { 1.0f32 } else { 0.0 }).collect::<Vec<f32>>());
        s_b += ms_ssim(&canon, &tb, &cfg);
        n_b += 1;
    }
    println!("binarized template: ssim {:.3}", s_b / n_b as f64);
}
