fn main() {
    for k in [tacshear::sim::ShapeKind::Disk, tacshear::sim::ShapeKind::Clover, tacshear::sim::ShapeKind::Teardrop] {
        let s = tacshear::sim::StimulusShape::by_kind(k);
        let reach = s.boundary().iter().fold(0.0f64, |m,p| m.max(p.norm()));
        let rmin = s.boundary().iter().fold(f64::INFINITY, |m,p| m.min(p.norm()));
        println!("{k:?}: reach {reach:.2} rmin {rmin:.2} perimeter {:.1}", s.perimeter());
    }
}
