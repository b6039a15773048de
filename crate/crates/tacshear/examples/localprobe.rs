use tacshear::geometry::{surface_from_image, GridSpec};
use tacshear::geom::{Pose2, Vec2};
use tacshear::sim::*;

fn main() {
    let sensor = SensorConfig::default();
    let shape = StimulusShape::by_kind(ShapeKind::Disk).anchored_at(0.0);
    let pose = ContactPose::new(0.0, 0.0, 2.0, 0.0);
    let frame = sense_tap(&shape, &pose, 0, &sensor).unwrap();
    let grid = GridSpec::new(10.0, 21);
    let surf = surface_from_image(&frame.raster, &sensor, &grid, Pose2::new(0.0, 0.0, 0.0)).unwrap();
    // Profile along sensor x (outward normal direction at y rows near 0).
    for col in 0..grid.n {
        let mut vals = Vec::new();
        for row in 9..=11 {
            vals.push(surf.heights[row * grid.n + col]);
        }
        let p = grid.point(10, col);
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        println!("x={:+.1} h={:+.3}", p.x, m);
    }
    // Where does the anchor sit in the world?
    let a = shape.anchor_pose;
    println!("anchor pos ({:.2},{:.2}) yaw {:.1}", a.pos.x, a.pos.y, a.yaw_deg);
    println!("anchor +x dir maps to world {:?}", a.apply_dir(Vec2::new(1.0, 0.0)));
    println!("sdf at anchor+1 along x: {:.2}", StimulusShape::by_kind(ShapeKind::Disk).sdf(a.pos + a.apply_dir(Vec2::new(1.0,0.0))));
}
