use threshold_dynamics_demo::{exact_radius, oracle_step, Simulation};

#[test]
fn disk_shrinks_and_stays_connected() {
    let mut sim = Simulation::new("disk", 64, 1e-3).unwrap();
    let a0 = sim.area();
    sim.step(5).unwrap();
    assert_eq!(sim.steps(), 5);
    assert!(sim.area() < a0);
    assert_eq!(sim.components().unwrap(), 1);
    assert_eq!(sim.pixels().len(), 4 * 64 * 64);
}

#[test]
fn painting_adds_and_erases() {
    let mut sim = Simulation::new("disk", 64, 1e-3).unwrap();
    let a0 = sim.area();
    sim.paint(0.9, 0.9, 0.05, true);
    assert!(sim.area() > a0);
    assert_eq!(sim.components().unwrap(), 2);
    sim.paint(0.9, 0.9, 0.05, false);
    assert_eq!(sim.area(), a0);
}

#[test]
fn oracle_matches_flow_to_second_order() {
    let (r0, h) = (0.3, 1e-4);
    let d = oracle_step(r0, h).unwrap() - exact_radius(r0, h).unwrap();
    assert!(d.abs() < 1e-5, "{d}");
    assert!(oracle_step(0.015, 1e-4).unwrap().is_nan());
    assert!(oracle_step(0.01, 1e-4).unwrap().is_nan());
}
