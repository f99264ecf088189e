use bayesinv::config::RunConfig;
use bayesinv::formats::{parse_pgm, read_csv, read_pgm, write_pgm, write_samples_csv, write_summary_csv};
use bayesinv_core::samplers::{SampleMeta, SampleSet};
use bayesinv_core::stats::summarize;

fn sample_set() -> SampleSet {
    let draws = vec![0.1, -2.5e-17, 1.0 / 3.0, 1e300, -0.0, 42.0];
    SampleSet::from_rows(2, draws, SampleMeta::default()).unwrap()
}

#[test]
fn samples_csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let s = sample_set();
    write_samples_csv(&path, &s).unwrap();
    let (header, values) = read_csv(&path).unwrap();
    assert_eq!(header, vec!["x0", "x1"]);
    assert_eq!(values.len(), s.data().len());
    for (a, b) in values.iter().zip(s.data()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn summary_csv_has_one_row_per_component() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.csv");
    let s = sample_set();
    write_summary_csv(&path, s.columns(), &summarize(&s, 0.9).unwrap()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let header: Vec<&str> = text.lines().collect();
    assert_eq!(header[0], "component,mean,std,ci_lo,ci_hi");
    assert_eq!(header.len(), 3);
    assert!(header[1].starts_with("x0,"));
}

#[test]
fn malformed_csv_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b\n1,2\n3\n").unwrap();
    assert!(read_csv(&path).is_err());
    std::fs::write(&path, "a\nnope\n").unwrap();
    assert!(read_csv(&path).is_err());
}

#[test]
fn pgm_round_trip_8_and_16_bit() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
    for maxval in [255u16, 65535] {
        let path = dir.path().join(format!("img{maxval}.pgm"));
        write_pgm(&path, 3, 4, &values, 0.0, 1.0, maxval).unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!((img.rows, img.cols), (3, 4));
        let q = 1.0 / maxval as f64;
        for (a, b) in img.pixels.iter().zip(&values) {
            assert!((a - b).abs() <= q, "{a} vs {b}");
        }
    }
}

#[test]
fn pgm_header_comments_and_clipping() {
    let mut bytes = b"P5\n# made by hand\n2 1\n# another\n255\n".to_vec();
    bytes.extend_from_slice(&[0, 255]);
    let img = parse_pgm(&bytes).unwrap();
    assert_eq!(img.pixels, vec![0.0, 1.0]);
    assert!(parse_pgm(b"P2\n2 1\n255\n0 1\n").is_err());
    assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clip.pgm");
    write_pgm(&path, 1, 3, &[-5.0, 0.5, 9.0], 0.0, 1.0, 255).unwrap();
    let img = read_pgm(&path).unwrap();
    assert_eq!(img.pixels[0], 0.0);
    assert_eq!(img.pixels[2], 1.0);
}

#[test]
fn config_rejects_unknown_keys_and_missing_problem() {
    assert!(RunConfig::parse("problem = inpainting\n[chain]\nsamples = 10\n").is_ok());
    let err = RunConfig::parse("problem = inpainting\n[chain]\nsampels = 10\n").unwrap_err();
    assert!(err.to_string().contains("chain.sampels"));
    assert!(RunConfig::parse("[chain]\nsamples = 10\n").is_err());
    assert!(RunConfig::parse("problem = x\n[chain]\nsamples = ten\n").is_err());
}
