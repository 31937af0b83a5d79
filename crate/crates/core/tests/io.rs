use proptest::prelude::*;
use swarmwave::fv::{Diagnostics, FieldState};
use swarmwave::io::*;
use swarmwave::strip::StripProfile;

fn any_float() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>(),
        -1e3f64..1e3,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
    ]
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
}

fn state(nx1: usize, nx2: usize, seed: &[f64], lift: i64) -> FieldState {
    let mut s = FieldState::uniform(nx1, nx2, 0.0);
    for k in 0..nx1 * nx2 {
        let v = seed[k % seed.len()];
        s.rho[k] = v.abs() + 1e-3;
        s.u1[k] = v.sin();
        s.u2[k] = v.cos();
        s.psi[k] = 0.5 * v;
        s.lift[k] = lift * (k as i64 % 3 - 1);
    }
    s.time = seed[0].abs();
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn profile_table_round_trips_bitwise(cols in 1usize..7, rows in 0usize..40, vals in prop::collection::vec(any_float(), 280)) {
        let names: Vec<String> = (0..cols).map(|c| format!("c{c}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let data: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| vals[c * 40 + r]).collect()).collect();
        let t = ProfileTable::new(&refs, data).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ProfileTable::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back.columns, &t.columns);
        prop_assert_eq!(back.rows(), rows);
        for (a, b) in t.data.iter().zip(&back.data) {
            prop_assert!(same_bits(a, b));
        }
    }

    #[test]
    fn snapshot_round_trips(nx1 in 2usize..24, nx2 in 2usize..24, seed in prop::collection::vec(-3.0f64..3.0, 1..50), lift in -5i64..5) {
        let s = state(nx1, nx2, &seed, lift);
        let meta = serde_json::json!({ "note": "x", "b": -0.03 });
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s, meta.clone()).unwrap();
        let (h, back) = read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!((h.nx1, h.nx2), (nx1, nx2));
        prop_assert_eq!(h.params, meta);
        prop_assert_eq!(&back, &s);
        prop_assert!(same_bits(&back.psi, &s.psi));
    }

    #[test]
    fn truncated_snapshots_are_rejected(cut in 1usize..200, seed in prop::collection::vec(-3.0f64..3.0, 1..10)) {
        let s = state(4, 4, &seed, 1);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s, serde_json::Value::Null).unwrap();
        let keep = buf.len().saturating_sub(cut);
        prop_assert!(read_snapshot(&buf[..keep]).is_err());
    }

    #[test]
    fn diagnostics_round_trip(rows in prop::collection::vec((any_float(), -1e6f64..1e6, any::<i32>(), 0usize..1_000_000), 0..20)) {
        let ds: Vec<Diagnostics> = rows
            .iter()
            .map(|&(a, b, w, n)| Diagnostics {
                time: b.abs(),
                mass: a,
                drift: b * 1e-9,
                winding: w as i64,
                winding_raw: w as f64 + b * 1e-12,
                shock: b,
                l2: a,
                speed: -b,
                dt: 1e-3,
                steps: n,
            })
            .collect();
        let mut w = DiagnosticsWriter::new(Vec::new()).unwrap();
        for d in &ds {
            w.write(d).unwrap();
        }
        let back = read_diagnostics(w.into_inner().as_slice()).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (x, y) in ds.iter().zip(&back) {
            prop_assert!(same_bits(&[x.time, x.mass, x.drift, x.winding_raw, x.shock, x.l2, x.speed, x.dt],
                                   &[y.time, y.mass, y.drift, y.winding_raw, y.shock, y.l2, y.speed, y.dt]));
            prop_assert_eq!((x.winding, x.steps), (y.winding, y.steps));
        }
    }
}

#[test]
fn profile_files_carry_their_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let x: Vec<f64> = (0..=8).map(|i| -0.5 + i as f64 / 8.0).collect();
    let p = StripProfile {
        rho: x.iter().map(|v| 1.0 + v * v).collect(),
        u1: vec![0.0; 9],
        u2: vec![1.0; 9],
        beta: x.iter().map(|v| v * v).collect(),
        dbeta: x.iter().map(|v| 2.0 * v).collect(),
        x,
    };
    let meta = serde_json::json!({ "kind": "strip", "lambda": 0.25 });
    write_profile(dir.path(), "wave", &ProfileTable::from_strip(&p), &meta).unwrap();
    let (t, m) = read_profile(&dir.path().join("wave.csv")).unwrap();
    assert_eq!(m, meta);
    let back = t.to_strip().unwrap();
    assert!(same_bits(&back.rho, &p.rho));
    assert!(same_bits(&back.dbeta, &p.dbeta));
    assert!(t.to_annulus().is_err());
}

#[test]
fn snapshot_without_lift_plane_reads_as_zero_lift() {
    let s = state(3, 5, &[0.3, -1.2, 2.0], 2);
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &s, serde_json::Value::Null).unwrap();
    let nl = buf.iter().position(|&c| c == b'\n').unwrap();
    let mut header: serde_json::Value = serde_json::from_slice(&buf[..nl]).unwrap();
    header["planes"].as_array_mut().unwrap().pop();
    let mut four = serde_json::to_vec(&header).unwrap();
    four.push(b'\n');
    four.extend_from_slice(&buf[nl + 1..buf.len() - 15 * 8]);
    let (_, back) = read_snapshot(four.as_slice()).unwrap();
    assert_eq!(back.rho, s.rho);
    assert!(back.lift.iter().all(|&l| l == 0));
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(read_diagnostics("time,mass\n1,2\n".as_bytes()).is_err());
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &FieldState::uniform(4, 4, 0.0), serde_json::Value::Null).unwrap();
    let text = String::from_utf8_lossy(&buf).replace("swarmwave-snapshot-1", "swarmwave-snapshot-9");
    assert!(read_snapshot(text.as_bytes()).is_err());
}
