// Min-hop routes through a small mesh, and Monte-Carlo delivery over a
// three-hop line against 1 - (1 - p^(r+1))^h.

use std::error::Error;

use dtms::network::{build_topology, transmit, NodeSpec, RadioModel, Role};
use dtms::{NodeAddr, SimTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mesh = build_topology(
        &[
            NodeSpec::new(0x00, Role::Coordinator, 0.0, 0.0),
            NodeSpec::new(0xA2, Role::Router, 600.0, 400.0),
            NodeSpec::new(0xA1, Role::Router, 600.0, -400.0),
            NodeSpec::new(0x01, Role::EndDevice, 1200.0, 0.0),
            NodeSpec::new(0x02, Role::EndDevice, 300.0, 0.0),
        ],
        1000.0,
    )?;
    for (src, path) in mesh.route_table() {
        let hops: Vec<String> = path.iter().map(|a| format!("{:X}", a.0)).collect();
        println!("{:>4X}: {}", src.0, hops.join(" -> "));
    }

    let line = build_topology(
        &[
            NodeSpec::new(0x00, Role::Coordinator, 0.0, 0.0),
            NodeSpec::new(0xA1, Role::Router, 600.0, 0.0),
            NodeSpec::new(0xA2, Role::Router, 1200.0, 0.0),
            NodeSpec::new(0x01, Role::EndDevice, 1800.0, 0.0),
        ],
        700.0,
    )?;
    let radio = RadioModel::lossy(0.1, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let mut delivered = 0;
    for i in 0..n {
        if transmit(
            &line,
            &[],
            NodeAddr(0x01),
            &radio,
            &mut rng,
            SimTime(i * 1000),
        )?
        .is_delivered()
        {
            delivered += 1;
        }
    }
    let analytic = radio.hop_success_prob().powi(3);
    println!(
        "delivered {delivered}/{n} = {:.5}, analytic {analytic:.5}",
        delivered as f64 / n as f64
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
