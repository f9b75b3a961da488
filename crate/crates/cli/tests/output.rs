use proptest::prelude::*;
use roadmetric::estimators::Cell;
use roadmetric::geom::Vector;
use roadmetric::metric::{DistanceField, GridSpec};
use roadmetric_cli::output::{
    format_real, meta_path, quantize, read_pgm, write_csv, write_field_pgm,
};

fn two_by_two(values: Vec<f64>) -> DistanceField {
    DistanceField {
        origin: Vector::zeros(2),
        grid: GridSpec::new([0.0, 0.0], [1.0, 1.0], 2, 2).unwrap(),
        values,
        epsilon: 0.5,
        seed: 42,
        max_reliable: 1.0,
    }
}

#[test]
fn pgm_quantizes_against_the_scale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.pgm");
    let v = 3.0;
    write_field_pgm(&two_by_two(vec![0.0, v, v / 2.0, v / 4.0]), &path, v, &[]).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P5\n2 2\n65535\n"));
    let (nx, ny, s) = read_pgm(&path).unwrap();
    assert_eq!((nx, ny), (2, 2));
    // File rows run from the top (largest y) down.
    let want = [32768u16, 16384, 0, 65535];
    for (got, want) in s.iter().zip(want) {
        assert!(got.abs_diff(want) <= 1, "{s:?}");
    }
    let meta = std::fs::read_to_string(meta_path(&path)).unwrap();
    for key in [
        "nx = 2",
        "ny = 2",
        "seed = 42",
        "v_max = 3.0000000000000000e0",
    ] {
        assert!(meta.contains(key), "{meta}");
    }
}

#[test]
fn pgm_round_trip_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    let field = two_by_two(vec![0.1, 0.7, f64::INFINITY, 0.33]);
    write_field_pgm(&field, &a, 1.0, &[]).unwrap();
    let (_, _, s) = read_pgm(&a).unwrap();
    let mut rows: Vec<f64> = s.iter().map(|&q| q as f64 / 65535.0).collect();
    // Back to grid order, bottom row first.
    rows.rotate_left(2);
    write_field_pgm(&two_by_two(rows), &b, 1.0, &[]).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn empty_csv_is_just_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qcp.csv");
    let cols: Vec<String> = ["t", "estimate_upper", "estimate_cert", "stderr", "n"]
        .map(String::from)
        .into();
    write_csv(&path, &cols, &[]).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "t,estimate_upper,estimate_cert,stderr,n\r\n"
    );
}

#[test]
fn csv_rows_keep_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let cols = vec!["a".to_string(), "b".to_string()];
    write_csv(&path, &cols, &[vec![Cell::Real(0.1), Cell::Int(7)]]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let row = text.lines().nth(1).unwrap();
    let (a, b) = row.split_once(',').unwrap();
    assert_eq!(a.parse::<f64>().unwrap(), 0.1);
    assert_eq!(b, "7");
    assert!(write_csv(&path, &cols, &[vec![Cell::Int(1)]]).is_err());
}

proptest! {
    #[test]
    fn reals_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn quantization_is_monotone_and_clamped(a in -1.0f64..3.0, b in -1.0f64..3.0, vmax in 0.01f64..2.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo, vmax) <= quantize(hi, vmax));
        prop_assert_eq!(quantize(vmax * 2.0, vmax), 65535);
        prop_assert_eq!(quantize(-vmax, vmax), 0);
        let q = quantize(lo.clamp(0.0, vmax), vmax);
        prop_assert_eq!(quantize(q as f64 / 65535.0 * vmax, vmax), q);
    }
}
