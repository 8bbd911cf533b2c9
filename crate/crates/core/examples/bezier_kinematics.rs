//! One trajectory segment: a planar shape curve and a monotone time scaling.
//! Prints sampled kinematics, the time/parameter round trip and arc length.

use handover_gcs::bezier::{arc_length, SegmentPair, ShapeCurve, TimingCurve};

fn main() -> handover_gcs::Result<()> {
    let shape = ShapeCurve::new(vec![
        [0.0, 0.0],
        [300.0, 150.0],
        [600.0, 450.0],
        [800.0, 300.0],
        [900.0, 0.0],
        [1000.0, -100.0],
    ])?;
    // h(xi) from 0 s to 40 s, faster in the middle
    let timing = TimingCurve::new(vec![[0.0], [10.0], [16.0], [22.0], [30.0], [40.0]])?;
    let seg = SegmentPair::new(shape, timing)?;
    println!("degree {}, duration {:.1} s, min h' {:.3}", seg.degree(), seg.duration(), seg.min_timing_derivative());

    println!("\n{:>6} {:>8} {:>10} {:>10} {:>9} {:>9}", "xi", "t", "x", "y", "speed", "|acc|");
    for i in 0..=10 {
        let xi = i as f64 / 10.0;
        let k = seg.kinematics(xi)?;
        println!(
            "{xi:6.2} {:8.3} {:10.3} {:10.3} {:9.4} {:9.4}",
            k.t,
            k.position[0],
            k.position[1],
            k.speed(),
            k.acceleration_norm()
        );
    }

    let mut worst = 0.0f64;
    for i in 0..=1000 {
        let xi = i as f64 / 1000.0;
        let t = seg.timing.eval(xi)[0];
        worst = worst.max((seg.time_sample(t)? - xi).abs());
    }
    println!("\ntime -> parameter round trip, worst error {worst:.2e}");

    let d1 = seg.shape.derivative(1)?;
    println!("hodograph control points: {:?}", d1.control_points());
    println!("arc length {:.6} m (chord {:.3} m)", arc_length(&seg.shape, 1e-10), 1000.0f64.hypot(100.0));
    Ok(())
}
