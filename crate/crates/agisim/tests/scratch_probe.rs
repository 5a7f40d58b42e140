// temporary probe, deleted before finalizing
use agisim::geodesy::{EulerAngles, GeodeticPosition};
use agisim::gimbal::GimbalConfig;
use agisim::imu::ImuErrorParams;
use agisim::ingest::{synth_maneuver, synth_stationary, ManeuverProfile, PoseSample};
use agisim::verifier::{run_closed_loop, ClosedLoopConfig, ResetMode};
use nalgebra::Vector3;

fn mission_200s() -> Vec<PoseSample> {
    synth_maneuver(
        &ManeuverProfile::CoordinatedTurn {
            speed: 50.0,
            radius: 600.0,
            heading: 0.3,
            left: true,
            climb_rate: 2.0,
        },
        GeodeticPosition::new(0.6108652381980153, 0.9075712110370514, 1200.0).unwrap(),
        200.0,
        50.0,
    )
    .unwrap()
}

#[test]
fn probe() {
    let loc = GeodeticPosition::new(0.6108652381980153, 0.9075712110370514, 1200.0).unwrap();
    let station = synth_stationary(loc, EulerAngles::default(), 60.0, 50.0);
    let unaided = ClosedLoopConfig { aiding_rate_hz: None, settle_s: 0.0, ..Default::default() };

    // criterion 1: stationary, gimbal off, zero error
    let t0 = std::time::Instant::now();
    let r1 = run_closed_loop(&station, &GimbalConfig::disabled(), &ImuErrorParams::zeroed(1), &unaided).unwrap();
    let last = r1.report.epochs.last().unwrap();
    println!("C1: pos drift {:.3e} m, vel {:.3e} m/s, heading {:.3e} rad, runtime {:?}",
        last.pos_ned.norm(), last.vel_ned.norm(), last.heading.abs(), t0.elapsed());

    // criterion 2: gimbal Table-3 on
    let r2 = run_closed_loop(&station, &GimbalConfig::default(), &ImuErrorParams::zeroed(1), &unaided).unwrap();
    let worst_pos = r2.report.epochs.iter().map(|e| e.pos_ned.norm()).fold(0.0f64, f64::max);
    let worst_vel = r2.report.epochs.iter().map(|e| e.vel_ned.norm()).fold(0.0f64, f64::max);
    let worst_head = r2.report.epochs.iter().map(|e| e.heading.abs()).fold(0.0f64, f64::max);
    println!("C2: worst pos {:.3e} m, vel {:.3e} m/s, heading {:.3e} rad", worst_pos, worst_vel, worst_head);

    // criterion 7: 200 s maneuver, Table-2 errors, 1 Hz hard aiding
    for seed in [1u64, 2, 3, 4, 5, 6, 7, 8, 9, 10] {
        let t0 = std::time::Instant::now();
        let r7 = run_closed_loop(
            &mission_200s(),
            &GimbalConfig::default(),
            &ImuErrorParams::default_params(seed),
            &ClosedLoopConfig {
                aiding_rate_hz: Some(1.0), sigma_pos: 2.0, sigma_vel: 0.1,
                mode: ResetMode::Hard, settle_s: 5.0, aiding_seed: seed ^ 0x5eed,
            },
        ).unwrap();
        let r = &r7.report.rmse;
        println!(
            "C7 seed {seed}: pos N/E/D = {:.3}/{:.3}/{:.3} m, vel {:.3}/{:.3}/{:.3} m/s, heading {:.2} mrad ({:?})",
            r.pos.x, r.pos.y, r.pos.z, r.vel.x, r.vel.y, r.vel.z, r.heading * 1e3, t0.elapsed()
        );
    }
    let _ = Vector3::<f64>::zeros();
}
