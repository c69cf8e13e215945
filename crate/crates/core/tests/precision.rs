use rsgp::graph::DynamicDigraph;
use rsgp::objective::sample_instance;
use rsgp::protocol::{run_trial, ProtocolConfig};
use rsgp::rng::{seeded, Stream};
use rsgp::{Instance32, Instance64, Vector32, Vector64};

fn ring(n: usize) -> DynamicDigraph {
    let mut g = DynamicDigraph::empty(n);
    for i in 0..n {
        g.add_undirected(i, (i + 1) % n).unwrap();
    }
    g
}

// Samplers draw in f64 and cast, so both precisions see the same instance
// and the same gossip choices.
#[test]
fn single_precision_tracks_double() {
    let n = 6;
    let g = ring(n);
    let i64_: Instance64 =
        sample_instance(n, &Vector64::from_f64(&[0.3, -1.2]), 1.0, 0.5, &mut seeded(9, Stream::Instance)).unwrap();
    let i32_: Instance32 =
        sample_instance(n, &Vector32::from_f64(&[0.3, -1.2]), 1.0, 0.5, &mut seeded(9, Stream::Instance)).unwrap();

    let regular = i64_.regular();
    let star64 = i64_.closed_form_solution(&regular).unwrap().to_f64();
    let star32 = i32_.closed_form_solution(&regular).unwrap().to_f64();
    for (a, b) in star64.iter().zip(&star32) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }

    let cfg64 = ProtocolConfig::<f64> { rounds: 400, detection_enabled: false, ..Default::default() };
    let cfg32 = ProtocolConfig::<f32> { rounds: 400, detection_enabled: false, ..Default::default() };
    let r64 = run_trial(&g, &i64_, &cfg64, seeded(4, Stream::Protocol)).unwrap();
    let r32 = run_trial(&g, &i32_, &cfg32, seeded(4, Stream::Protocol)).unwrap();
    for (a, b) in r64.state.x().iter().zip(r32.state.x()) {
        for (u, v) in a.to_f64().iter().zip(b.to_f64()) {
            assert!((u - v).abs() < 1e-3, "{u} vs {v}");
        }
    }
}
